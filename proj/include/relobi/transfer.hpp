#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <tuple>
#include <variant>
#include <vector>

#include "relobi/bus_config.hpp"

namespace relobi {

/// A-channel payload of one request.
struct ATransfer {
  uint64_t addr = 0;
  bool we = false;
  uint64_t be = 0;
  uint64_t wdata = 0;
  uint64_t aid = 0;
  uint64_t atop = 0;
  uint64_t memtype = 0;
  uint64_t prot = 0;
  uint64_t dbg = 0;
  uint64_t auser = 0;
  uint64_t wuser = 0;

  auto operator<=>(const ATransfer&) const = default;
};

/// R-channel payload of one response.
struct RTransfer {
  uint64_t rdata = 0;
  uint64_t rid = 0;
  bool err = false;
  bool exokay = false;
  uint64_t ruser = 0;

  auto operator<=>(const RTransfer&) const = default;
};

inline uint64_t get_field(const ATransfer& a, Signal s) {
  switch (s) {
    case Signal::addr: return a.addr;
    case Signal::we: return a.we;
    case Signal::be: return a.be;
    case Signal::wdata: return a.wdata;
    case Signal::aid: return a.aid;
    case Signal::atop: return a.atop;
    case Signal::memtype: return a.memtype;
    case Signal::prot: return a.prot;
    case Signal::dbg: return a.dbg;
    case Signal::auser: return a.auser;
    case Signal::wuser: return a.wuser;
    default: return 0;
  }
}

inline void set_field(ATransfer& a, Signal s, uint64_t v) {
  switch (s) {
    case Signal::addr: a.addr = v; break;
    case Signal::we: a.we = v & 1; break;
    case Signal::be: a.be = v; break;
    case Signal::wdata: a.wdata = v; break;
    case Signal::aid: a.aid = v; break;
    case Signal::atop: a.atop = v; break;
    case Signal::memtype: a.memtype = v; break;
    case Signal::prot: a.prot = v; break;
    case Signal::dbg: a.dbg = v; break;
    case Signal::auser: a.auser = v; break;
    case Signal::wuser: a.wuser = v; break;
    default: break;
  }
}

inline uint64_t get_field(const RTransfer& r, Signal s) {
  switch (s) {
    case Signal::rdata: return r.rdata;
    case Signal::rid: return r.rid;
    case Signal::err: return r.err;
    case Signal::exokay: return r.exokay;
    case Signal::ruser: return r.ruser;
    default: return 0;
  }
}

inline void set_field(RTransfer& r, Signal s, uint64_t v) {
  switch (s) {
    case Signal::rdata: r.rdata = v; break;
    case Signal::rid: r.rid = v; break;
    case Signal::err: r.err = v & 1; break;
    case Signal::exokay: r.exokay = v & 1; break;
    case Signal::ruser: r.ruser = v; break;
    default: break;
  }
}

// Interface trace

struct PortId {
  enum class Side : uint8_t { manager, subordinate };
  Side side = Side::manager;
  uint16_t index = 0;

  static PortId manager(unsigned i) { return {Side::manager, static_cast<uint16_t>(i)}; }
  static PortId subordinate(unsigned i) {
    return {Side::subordinate, static_cast<uint16_t>(i)};
  }
  auto operator<=>(const PortId&) const = default;
};

enum class EventKind : uint8_t { a_accepted, r_accepted };

struct TraceEvent {
  uint64_t cycle = 0;
  PortId port;
  EventKind kind = EventKind::a_accepted;
  std::variant<ATransfer, RTransfer> payload;

  bool operator==(const TraceEvent&) const = default;

  // Trace order. At most one event of each kind per port and cycle.
  friend bool operator<(const TraceEvent& l, const TraceEvent& r) {
    return std::tie(l.cycle, l.port, l.kind) < std::tie(r.cycle, r.port, r.kind);
  }
};

using Trace = std::vector<TraceEvent>;

inline std::ostream& operator<<(std::ostream& os, const TraceEvent& e) {
  os << "@" << e.cycle << (e.port.side == PortId::Side::manager ? " mgr" : " sub")
     << e.port.index << (e.kind == EventKind::a_accepted ? " A" : " R");
  if (auto* a = std::get_if<ATransfer>(&e.payload))
    os << " addr=" << std::hex << a->addr << " we=" << a->we << " aid=" << a->aid << std::dec;
  else if (auto* r = std::get_if<RTransfer>(&e.payload))
    os << " rdata=" << std::hex << r->rdata << " rid=" << r->rid << " err=" << r->err
       << std::dec;
  return os;
}

struct ScoreboardResult {
  bool equal = true;
  std::optional<std::size_t> first_divergence;
};

/// Cycle-exact comparison of two interface traces.
inline ScoreboardResult scoreboard_verify(const Trace& golden, const Trace& observed) {
  const std::size_t n = std::min(golden.size(), observed.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!(golden[i] == observed[i])) return {false, i};
  if (golden.size() != observed.size()) return {false, n};
  return {};
}

/// Timing-insensitive comparison: every manager port must see the same ordered
/// sequence of payloads, every subordinate port the same multiset. Used where a
/// recovery mechanism is allowed to shift transfers by a few cycles, which may
/// legally reorder requests from different managers at a subordinate.
inline bool untimed_equivalent(const Trace& golden, const Trace& observed) {
  using Key = std::tuple<PortId, EventKind>;
  auto project = [](const Trace& t) {
    std::map<Key, std::vector<std::variant<ATransfer, RTransfer>>> out;
    for (const auto& e : t) out[{e.port, e.kind}].push_back(e.payload);
    for (auto& [key, seq] : out)
      if (std::get<0>(key).side == PortId::Side::subordinate)
        std::sort(seq.begin(), seq.end());
    return out;
  };
  return project(golden) == project(observed);
}

}  // namespace relobi
