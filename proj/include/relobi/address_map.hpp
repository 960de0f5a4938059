#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relobi {

struct Region {
  uint64_t base = 0;
  uint64_t size = 0;
  unsigned subordinate = 0;
  bool operator==(const Region&) const = default;
};

/// Address decoding for the demultiplexers. Unmapped addresses are answered
/// locally with an error response.
class AddressMap {
 public:
  AddressMap() = default;
  explicit AddressMap(std::vector<Region> regions) : regions_(std::move(regions)) {}

  /// `n` consecutive regions of `size` bytes starting at address 0.
  static AddressMap uniform(unsigned n, uint64_t size = 0x1000'0000) {
    std::vector<Region> rs;
    for (unsigned i = 0; i < n; ++i) rs.push_back({uint64_t{i} * size, size, i});
    return AddressMap(std::move(rs));
  }

  std::optional<unsigned> route(uint64_t addr) const {
    for (const auto& r : regions_)
      if (addr >= r.base && addr - r.base < r.size) return r.subordinate;
    return std::nullopt;
  }

  void validate(unsigned n_subordinates) const {
    auto sorted = regions_;
    std::sort(sorted.begin(), sorted.end(),
              [](const Region& a, const Region& b) { return a.base < b.base; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const auto& r = sorted[i];
      if (r.size == 0 || (r.size & (r.size - 1)) != 0)
        throw std::invalid_argument("region size must be a power of two");
      if (r.base % r.size != 0)
        throw std::invalid_argument("region base must be aligned to its size");
      if (r.subordinate >= n_subordinates)
        throw std::invalid_argument("region targets subordinate " +
                                    std::to_string(r.subordinate) + " which does not exist");
      if (i > 0 && sorted[i - 1].base + sorted[i - 1].size > r.base)
        throw std::invalid_argument("address regions overlap");
    }
  }

  const std::vector<Region>& regions() const { return regions_; }
  bool operator==(const AddressMap&) const = default;

 private:
  std::vector<Region> regions_;
};

}  // namespace relobi
