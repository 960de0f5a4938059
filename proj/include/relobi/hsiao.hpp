#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relobi/bits.hpp"

namespace relobi {

enum class DecodeStatus : uint8_t { ok, corrected, uncorrectable };

struct DecodeResult {
  Bits data = 0;
  DecodeStatus status = DecodeStatus::ok;
  int position = -1;  // corrected codeword bit, -1 otherwise
};

/// Hsiao SECDED code over k data bits.
///
/// Codeword layout is data bits first (bit 0 .. k-1) followed by the r check
/// bits. Every codeword position owns one r-bit column of the parity-check
/// matrix: data positions use distinct odd-weight columns of weight >= 3, check
/// position k+i uses the unit column e_i. The syndrome of a single-bit error is
/// the column of the flipped position.
///
/// An uncoded variant (r = 0) is used for the unprotected baseline bus.
class HsiaoCode {
 public:
  static constexpr unsigned kMaxCheckBits = 12;

  HsiaoCode() = default;

  /// Smallest r with 2^(r-1) >= k + r.
  static unsigned check_bits_for(unsigned k) {
    unsigned r = 1;
    while ((uint64_t{1} << (r - 1)) < uint64_t{k} + r) ++r;
    return r;
  }

  /// Data columns are the odd-weight columns of weight >= 3 in ascending order
  /// of weight, then value.
  static HsiaoCode build(unsigned k) {
    if (k == 0) throw std::invalid_argument("Hsiao code needs at least one data bit");
    const unsigned r = check_bits_for(k);
    if (k + r > kMaxCodewordBits)
      throw std::invalid_argument("codeword of " + std::to_string(k + r) +
                                  " bits exceeds the 128-bit limit");
    std::vector<uint32_t> candidates;
    for (uint32_t c = 0; c < (1u << r); ++c) {
      const int w = std::popcount(c);
      if (w >= 3 && (w & 1)) candidates.push_back(c);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](uint32_t a, uint32_t b) {
      return std::popcount(a) < std::popcount(b);
    });
    candidates.resize(k);
    return HsiaoCode(k, r, std::move(candidates));
  }

  static HsiaoCode uncoded(unsigned k) {
    if (k > kMaxCodewordBits) throw std::invalid_argument("group wider than 128 bits");
    return HsiaoCode(k, 0, {});
  }

  /// Arbitrary data columns. No SECDED property is checked here so that
  /// deliberately broken matrices can be fed to the conformance checks.
  static HsiaoCode from_columns(unsigned k, unsigned r, std::vector<uint32_t> data_columns) {
    if (data_columns.size() != k) throw std::invalid_argument("need one column per data bit");
    if (r > kMaxCheckBits || k + r > kMaxCodewordBits)
      throw std::invalid_argument("code dimensions out of range");
    return HsiaoCode(k, r, std::move(data_columns));
  }

  unsigned data_bits() const { return k_; }
  unsigned check_bits() const { return r_; }
  unsigned length() const { return k_ + r_; }

  uint32_t column(unsigned pos) const {
    return pos < k_ ? columns_[pos] : (1u << (pos - k_));
  }

  Bits check(Bits data) const {
    Bits out = 0;
    for (unsigned i = 0; i < r_; ++i)
      if (parity(data & rows_[i])) out |= Bits{1} << i;
    return out;
  }

  Bits encode(Bits data) const {
    data &= bit_mask(k_);
    return data | (check(data) << k_);
  }

  uint32_t syndrome(Bits word) const {
    const Bits data = word & bit_mask(k_);
    const Bits received = (word >> k_) & bit_mask(r_);
    return static_cast<uint32_t>(received ^ check(data));
  }

  DecodeResult decode(Bits word) const {
    DecodeResult res;
    res.data = word & bit_mask(k_);
    if (r_ == 0) return res;
    const uint32_t s = syndrome(word);
    if (s == 0) return res;
    const int pos = syndrome_to_position_[s];
    if (pos < 0) {
      res.status = DecodeStatus::uncorrectable;
      return res;
    }
    res.status = DecodeStatus::corrected;
    res.position = pos;
    if (static_cast<unsigned>(pos) < k_) res.data ^= Bits{1} << pos;
    return res;
  }

  bool operator==(const HsiaoCode& o) const {
    return k_ == o.k_ && r_ == o.r_ && columns_ == o.columns_;
  }

 private:
  HsiaoCode(unsigned k, unsigned r, std::vector<uint32_t> columns)
      : k_(k), r_(r), columns_(std::move(columns)) {
    rows_.fill(0);
    for (unsigned j = 0; j < k_; ++j)
      for (unsigned i = 0; i < r_; ++i)
        if ((columns_[j] >> i) & 1) rows_[i] |= Bits{1} << j;
    syndrome_to_position_.assign(std::size_t{1} << r_, -1);
    if (r_ == 0) return;
    // First matching position wins when a matrix has duplicate columns.
    for (unsigned pos = k_ + r_; pos-- > 0;) {
      const uint32_t c = column(pos);
      if (c < syndrome_to_position_.size()) syndrome_to_position_[c] = static_cast<int>(pos);
    }
    syndrome_to_position_[0] = -1;
  }

  unsigned k_ = 0;
  unsigned r_ = 0;
  std::vector<uint32_t> columns_;
  std::array<Bits, kMaxCheckBits> rows_{};
  std::vector<int> syndrome_to_position_;
};

/// Counterexample to the SECDED property of a code.
struct SecdedViolation {
  unsigned bit_a = 0;
  std::optional<unsigned> bit_b;  // set for double-error failures
  Bits data = 0;
  std::string what;
};

/// Flips every single bit and every bit pair of encode(data) for each word in
/// `samples`. Returns the first word/position combination that is not
/// corrected (single) or not flagged uncorrectable (double).
inline std::optional<SecdedViolation> check_secded(const HsiaoCode& code,
                                                   const std::vector<Bits>& single_samples,
                                                   const std::vector<Bits>& double_samples) {
  const unsigned n = code.length();
  for (Bits d : single_samples) {
    d &= bit_mask(code.data_bits());
    const Bits cw = code.encode(d);
    for (unsigned i = 0; i < n; ++i) {
      const auto res = code.decode(cw ^ (Bits{1} << i));
      if (res.status != DecodeStatus::corrected || res.data != d ||
          res.position != static_cast<int>(i))
        return SecdedViolation{i, std::nullopt, d, "single-bit error not corrected"};
    }
  }
  for (Bits d : double_samples) {
    d &= bit_mask(code.data_bits());
    const Bits cw = code.encode(d);
    for (unsigned i = 0; i < n; ++i)
      for (unsigned j = i + 1; j < n; ++j) {
        const auto res = code.decode(cw ^ (Bits{1} << i) ^ (Bits{1} << j));
        if (res.status != DecodeStatus::uncorrectable)
          return SecdedViolation{i, j, d, "double-bit error not detected"};
      }
  }
  return std::nullopt;
}

}  // namespace relobi
