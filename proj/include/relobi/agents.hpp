#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "relobi/address_map.hpp"
#include "relobi/bits.hpp"
#include "relobi/bus_config.hpp"
#include "relobi/transfer.hpp"

namespace relobi {

struct ScriptEntry {
  uint32_t gap = 0;  // idle cycles before the request is raised
  ATransfer xfer;
  bool operator==(const ScriptEntry&) const = default;
};

/// Stimulus for one manager port.
struct ManagerScript {
  std::vector<ScriptEntry> entries;
  uint64_t seed = 0;
  bool operator==(const ManagerScript&) const = default;
};

// With a map, 15 of 16 addresses fall into a mapped region and the rest are
// drawn from the whole address space (mostly hitting the error responder).
inline ManagerScript generate_script(const BusConfig& cfg, uint64_t seed, std::size_t n_txns,
                                     const AddressMap* map = nullptr) {
  ManagerScript script;
  script.seed = seed;
  script.entries.reserve(n_txns);
  std::mt19937_64 rng(seed);
  auto field = [&](unsigned width) {
    return width == 0 ? uint64_t{0} : (rng() & mask64(width));
  };
  std::uniform_int_distribution<uint32_t> gap(0, 3);
  for (std::size_t i = 0; i < n_txns; ++i) {
    ScriptEntry e;
    e.gap = gap(rng);
    auto& a = e.xfer;
    a.addr = field(cfg.addr_width);
    if (map && !map->regions().empty() && (rng() & 15) != 0) {
      const auto& rs = map->regions();
      const Region& r = rs[rng() % rs.size()];
      a.addr = (r.base + rng() % r.size) & mask64(cfg.addr_width);
    }
    a.we = rng() & 1;
    a.be = field(cfg.be_width());
    a.wdata = field(cfg.data_width);
    a.aid = field(cfg.id_width);
    a.atop = field(cfg.atop_width);
    a.memtype = field(cfg.memtype_width);
    a.prot = field(cfg.prot_width);
    a.dbg = field(cfg.dbg_width);
    a.auser = field(cfg.auser_width);
    a.wuser = field(cfg.wuser_width);
    script.entries.push_back(e);
  }
  return script;
}

/// Randomized OBI manager with at most one transaction in flight.
///
/// Transfer i is requested `gap` cycles after the response of transfer i-1 has
/// been accepted (after cycle 0 for the first). The request and its payload
/// stay asserted until granted.
class Manager {
 public:
  struct Outputs {
    bool req = false;
    ATransfer a;
    bool rready = false;
  };

  Manager() = default;
  Manager(std::shared_ptr<const ManagerScript> script, unsigned port)
      : script_(std::move(script)), port_(port) {
    if (!script_->entries.empty()) issue_at_ = script_->entries.front().gap;
  }

  Outputs drive(uint64_t cycle) const {
    Outputs o;
    const auto& es = script_->entries;
    if (next_ < es.size()) o.a = es[next_].xfer;
    o.req = !outstanding_ && next_ < es.size() && cycle >= issue_at_;
    o.rready = outstanding_;
    return o;
  }

  /// Samples the bus at the end of `cycle`. `rready` is what was driven.
  void commit(uint64_t cycle, bool gnt, bool rvalid, const RTransfer& r, bool has_rready,
              Trace* events) {
    const Outputs o = drive(cycle);
    const bool r_hs = rvalid && (has_rready ? o.rready : true);
    if (rvalid && !outstanding_) ++violations_;
    if (r_hs) {
      if (events) events->push_back({cycle, PortId::manager(port_), EventKind::r_accepted, r});
      if (outstanding_) {
        outstanding_ = false;
        if (next_ < script_->entries.size()) issue_at_ = cycle + 1 + script_->entries[next_].gap;
      }
    }
    if (o.req && gnt) {
      if (events)
        events->push_back({cycle, PortId::manager(port_), EventKind::a_accepted, o.a});
      outstanding_ = true;
      ++next_;
    }
  }

  bool done() const { return next_ >= script_->entries.size() && !outstanding_; }
  bool outstanding() const { return outstanding_; }
  std::size_t issued() const { return next_; }
  uint64_t violations() const { return violations_; }
  const ManagerScript& script() const { return *script_; }

  bool same_state(const Manager& o) const {
    return next_ == o.next_ && outstanding_ == o.outstanding_ && issue_at_ == o.issue_at_ &&
           violations_ == o.violations_;
  }

 private:
  std::shared_ptr<const ManagerScript> script_;
  unsigned port_ = 0;
  std::size_t next_ = 0;
  bool outstanding_ = false;
  uint64_t issue_at_ = 0;
  uint64_t violations_ = 0;
};

struct SubordinateOptions {
  unsigned gnt_latency = 0;  // 0: combinational grant (gnt = req)
  unsigned r_latency = 1;    // cycles from acceptance to rvalid
  bool operator==(const SubordinateOptions&) const = default;
};

/// Memory-less responder: rdata is a hash of the address, rid echoes aid.
inline RTransfer default_response(const BusConfig& cfg, const ATransfer& a) {
  RTransfer r;
  r.rdata = mix64(a.addr) & mask64(cfg.data_width);
  r.rid = a.aid;
  return r;
}

/// OBI subordinate answering in order after a fixed latency.
class Subordinate {
 public:
  Subordinate() = default;
  Subordinate(const BusConfig& cfg, SubordinateOptions opt, unsigned port)
      : cfg_(cfg), opt_(opt), port_(port) {}

  bool gnt(bool req) const { return req && held_ >= opt_.gnt_latency; }

  bool rvalid(uint64_t cycle) const {
    return count_ > 0 && queue_[head_].ready_at <= cycle;
  }
  RTransfer r_out() const { return count_ > 0 ? queue_[head_].r : RTransfer{}; }

  void commit(uint64_t cycle, bool req, const ATransfer& a, bool rready, bool has_rready,
              Trace* events) {
    const bool g = gnt(req);
    if (rvalid(cycle) && (has_rready ? rready : true)) {
      if (events)
        events->push_back({cycle, PortId::subordinate(port_), EventKind::r_accepted, r_out()});
      head_ = (head_ + 1) % kDepth;
      --count_;
    }
    if (req && g) {
      if (events)
        events->push_back({cycle, PortId::subordinate(port_), EventKind::a_accepted, a});
      if (count_ < kDepth) {
        queue_[(head_ + count_) % kDepth] = {cycle + opt_.r_latency, default_response(cfg_, a)};
        ++count_;
      } else {
        ++overflows_;
      }
      held_ = 0;
    } else {
      held_ = req ? held_ + 1 : 0;
    }
  }

  std::size_t pending() const { return count_; }

  bool same_state(const Subordinate& o) const {
    if (held_ != o.held_ || count_ != o.count_ || overflows_ != o.overflows_) return false;
    for (std::size_t i = 0; i < count_; ++i) {
      const auto& x = queue_[(head_ + i) % kDepth];
      const auto& y = o.queue_[(o.head_ + i) % kDepth];
      if (x.ready_at != y.ready_at || !(x.r == y.r)) return false;
    }
    return true;
  }

 private:
  static constexpr std::size_t kDepth = 32;
  struct Pending {
    uint64_t ready_at = 0;
    RTransfer r;
  };

  BusConfig cfg_;
  SubordinateOptions opt_;
  unsigned port_ = 0;
  unsigned held_ = 0;
  std::array<Pending, kDepth> queue_{};
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  uint64_t overflows_ = 0;
};

}  // namespace relobi
