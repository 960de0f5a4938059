#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relobi {

// Every wire of an OBI bus. Zero-width optional signals are simply absent.
enum class Signal : uint8_t {
  req, gnt, rvalid, rready,
  addr, we, be, wdata, aid, atop, memtype, prot, dbg, auser, wuser,
  rdata, rid, err, exokay, ruser,
};

inline constexpr std::array kAllSignals = {
    Signal::req,   Signal::gnt,     Signal::rvalid, Signal::rready, Signal::addr,
    Signal::we,    Signal::be,      Signal::wdata,  Signal::aid,    Signal::atop,
    Signal::memtype, Signal::prot,  Signal::dbg,    Signal::auser,  Signal::wuser,
    Signal::rdata, Signal::rid,     Signal::err,    Signal::exokay, Signal::ruser,
};

enum class Channel : uint8_t { handshake, a, r };

constexpr Channel channel_of(Signal s) {
  switch (s) {
    case Signal::req:
    case Signal::gnt:
    case Signal::rvalid:
    case Signal::rready:
      return Channel::handshake;
    case Signal::rdata:
    case Signal::rid:
    case Signal::err:
    case Signal::exokay:
    case Signal::ruser:
      return Channel::r;
    default:
      return Channel::a;
  }
}

constexpr std::string_view to_string(Signal s) {
  switch (s) {
    case Signal::req: return "req";
    case Signal::gnt: return "gnt";
    case Signal::rvalid: return "rvalid";
    case Signal::rready: return "rready";
    case Signal::addr: return "addr";
    case Signal::we: return "we";
    case Signal::be: return "be";
    case Signal::wdata: return "wdata";
    case Signal::aid: return "aid";
    case Signal::atop: return "atop";
    case Signal::memtype: return "memtype";
    case Signal::prot: return "prot";
    case Signal::dbg: return "dbg";
    case Signal::auser: return "auser";
    case Signal::wuser: return "wuser";
    case Signal::rdata: return "rdata";
    case Signal::rid: return "rid";
    case Signal::err: return "err";
    case Signal::exokay: return "exokay";
    case Signal::ruser: return "ruser";
  }
  return "?";
}

inline std::optional<Signal> signal_from_string(std::string_view name) {
  for (Signal s : kAllSignals)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

/// Signal widths and optional features of one OBI bus.
///
/// The byte-enable width is derived from the data width, so `be_width() * 8 ==
/// data_width` holds by construction. Defaults reproduce the 137-bit bus.
struct BusConfig {
  unsigned addr_width = 32;
  unsigned data_width = 32;
  unsigned id_width = 4;
  unsigned atop_width = 6;
  unsigned memtype_width = 2;
  unsigned prot_width = 3;
  unsigned dbg_width = 1;
  unsigned auser_width = 6;
  unsigned wuser_width = 2;
  unsigned ruser_width = 2;
  bool has_rready = true;
  bool has_err = true;
  bool has_exokay = true;

  unsigned be_width() const { return data_width / 8; }

  unsigned width(Signal s) const {
    switch (s) {
      case Signal::req:
      case Signal::gnt:
      case Signal::rvalid:
      case Signal::we:
        return 1;
      case Signal::rready: return has_rready ? 1 : 0;
      case Signal::addr: return addr_width;
      case Signal::be: return be_width();
      case Signal::wdata:
      case Signal::rdata:
        return data_width;
      case Signal::aid:
      case Signal::rid:
        return id_width;
      case Signal::atop: return atop_width;
      case Signal::memtype: return memtype_width;
      case Signal::prot: return prot_width;
      case Signal::dbg: return dbg_width;
      case Signal::auser: return auser_width;
      case Signal::wuser: return wuser_width;
      case Signal::err: return has_err ? 1 : 0;
      case Signal::exokay: return has_exokay ? 1 : 0;
      case Signal::ruser: return ruser_width;
    }
    return 0;
  }

  void validate() const {
    if (addr_width == 0 || addr_width > 64)
      throw std::invalid_argument("addr_width must be in 1..64");
    if (data_width == 0 || data_width > 64 || data_width % 8 != 0)
      throw std::invalid_argument("data_width must be a multiple of 8 in 8..64");
    for (Signal s : kAllSignals)
      if (width(s) > 64)
        throw std::invalid_argument("signal '" + std::string(to_string(s)) +
                                    "' is wider than 64 bits");
  }

  /// No optional signals at all: the 104-bit bus.
  static BusConfig minimal() {
    BusConfig cfg;
    cfg.id_width = cfg.atop_width = cfg.memtype_width = cfg.prot_width = 0;
    cfg.dbg_width = cfg.auser_width = cfg.wuser_width = cfg.ruser_width = 0;
    cfg.has_rready = cfg.has_err = cfg.has_exokay = false;
    return cfg;
  }

  bool operator==(const BusConfig&) const = default;
};

inline unsigned total_width(const BusConfig& cfg) {
  unsigned sum = 0;
  for (Signal s : kAllSignals) sum += cfg.width(s);
  return sum;
}

}  // namespace relobi
