#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "relobi/bits.hpp"
#include "relobi/grouping_plan.hpp"
#include "relobi/transfer.hpp"

namespace relobi {

/// Replicas of one handshake wire, replica r in bit r. The unprotected bus
/// uses only bit 0.
struct TriSignal {
  uint8_t bits = 0;

  static constexpr TriSignal replicate(bool v, unsigned replicas) {
    return {static_cast<uint8_t>(v ? (replicas == 3 ? 0b111 : 0b1) : 0)};
  }
  constexpr bool replica(unsigned r) const { return (bits >> r) & 1; }
  constexpr void set(unsigned r, bool v) {
    bits = static_cast<uint8_t>(v ? (bits | (1u << r)) : (bits & ~(1u << r)));
  }
  constexpr bool consistent(unsigned replicas) const {
    return replicas == 1 || bits == 0 || bits == 0b111;
  }
  bool operator==(const TriSignal&) const = default;
};

constexpr bool vote3(TriSignal t) { return std::popcount(static_cast<unsigned>(t.bits & 7)) >= 2; }

constexpr bool vote(TriSignal t, unsigned replicas) {
  return replicas == 3 ? vote3(t) : (t.bits & 1);
}

/// Per-group codewords of one direction.
struct Packet {
  std::array<Bits, kMaxGroups> cw{};
  bool operator==(const Packet&) const = default;
};

struct GroupStatus {
  DecodeStatus status = DecodeStatus::ok;
  int position = -1;
};

/// Encoder/decoder pair between plain OBI payloads and grouped codewords.
class Codec {
 public:
  struct Member {
    Signal signal;
    unsigned offset;
    unsigned width;
  };
  struct Layout {
    std::string name;
    HsiaoCode code;
    std::vector<Member> members;
  };

  Codec() = default;
  explicit Codec(const GroupingPlan& plan) : bus_(plan.bus) {
    for (const auto& g : plan.groups) {
      Layout l{g.name, g.code, {}};
      unsigned off = 0;
      for (Signal s : g.members) {
        const unsigned w = plan.bus.width(s);
        l.members.push_back({s, off, w});
        off += w;
      }
      (group_channel(g) == Channel::a ? a_ : r_).push_back(std::move(l));
    }
    replicas_ = plan.triplicated() ? 3 : 1;
  }

  unsigned replicas() const { return replicas_; }
  const std::vector<Layout>& a_groups() const { return a_; }
  const std::vector<Layout>& r_groups() const { return r_; }
  const BusConfig& bus() const { return bus_; }

  /// Index of the A group carrying `s`, -1 if none.
  int a_group_of(Signal s) const { return group_of(a_, s); }
  int r_group_of(Signal s) const { return group_of(r_, s); }

  Packet encode(const ATransfer& a) const { return encode_impl(a_, a); }
  Packet encode(const RTransfer& r) const { return encode_impl(r_, r); }

  /// Decodes every group. Statuses are written per group when requested.
  ATransfer decode_a(const Packet& p, GroupStatus* statuses = nullptr) const {
    return decode_impl<ATransfer>(a_, p, statuses);
  }
  RTransfer decode_r(const Packet& p, GroupStatus* statuses = nullptr) const {
    return decode_impl<RTransfer>(r_, p, statuses);
  }

  /// Decodes a single A group and extracts one of its member signals.
  uint64_t decode_a_field(const Packet& p, int group, Signal s, DecodeStatus& status) const {
    const Layout& l = a_[group];
    const auto res = l.code.decode(p.cw[group]);
    status = res.status;
    for (const auto& m : l.members)
      if (m.signal == s) return static_cast<uint64_t>((res.data >> m.offset) & bit_mask(m.width));
    return 0;
  }

 private:
  static int group_of(const std::vector<Layout>& gs, Signal s) {
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (const auto& m : gs[i].members)
        if (m.signal == s) return static_cast<int>(i);
    return -1;
  }

  template <class T>
  static Packet encode_impl(const std::vector<Layout>& gs, const T& t) {
    Packet p;
    for (std::size_t i = 0; i < gs.size(); ++i) {
      Bits data = 0;
      for (const auto& m : gs[i].members)
        data |= (Bits{get_field(t, m.signal)} & bit_mask(m.width)) << m.offset;
      p.cw[i] = gs[i].code.encode(data);
    }
    return p;
  }

  template <class T>
  static T decode_impl(const std::vector<Layout>& gs, const Packet& p, GroupStatus* st) {
    T t{};
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const auto res = gs[i].code.decode(p.cw[i]);
      if (st) st[i] = {res.status, res.position};
      for (const auto& m : gs[i].members)
        set_field(t, m.signal, static_cast<uint64_t>((res.data >> m.offset) & bit_mask(m.width)));
    }
    return t;
  }

  BusConfig bus_;
  std::vector<Layout> a_;
  std::vector<Layout> r_;
  unsigned replicas_ = 1;
};

/// One direction of the relOBI wire: the forward and backward handshake of
/// the phase (req/gnt or rvalid/rready) plus the encoded payload.
struct RelPhase {
  TriSignal valid;
  TriSignal ready;
  Packet payload;
  bool operator==(const RelPhase&) const = default;
};

struct Handshakes {
  bool valid = false;
  bool ready = false;
  bool operator==(const Handshakes&) const = default;
};

template <class Transfer>
struct DecodedPhase {
  Transfer payload;
  Handshakes handshakes;
  std::vector<GroupStatus> statuses;
};

template <class Transfer>
RelPhase relobi_encode(const Codec& codec, const Transfer& t, Handshakes hs) {
  return {TriSignal::replicate(hs.valid, codec.replicas()),
          TriSignal::replicate(hs.ready, codec.replicas()), codec.encode(t)};
}

inline DecodedPhase<ATransfer> relobi_decode_a(const Codec& codec, const RelPhase& rel) {
  DecodedPhase<ATransfer> out;
  out.statuses.resize(codec.a_groups().size());
  out.payload = codec.decode_a(rel.payload, out.statuses.data());
  out.handshakes = {vote(rel.valid, codec.replicas()), vote(rel.ready, codec.replicas())};
  return out;
}

inline DecodedPhase<RTransfer> relobi_decode_r(const Codec& codec, const RelPhase& rel) {
  DecodedPhase<RTransfer> out;
  out.statuses.resize(codec.r_groups().size());
  out.payload = codec.decode_r(rel.payload, out.statuses.data());
  out.handshakes = {vote(rel.valid, codec.replicas()), vote(rel.ready, codec.replicas())};
  return out;
}

/// Wire count of one encoded direction: handshake replicas plus codewords.
inline unsigned encoded_width(const Codec& codec, Channel ch) {
  unsigned w = 0;
  for (const auto& g : ch == Channel::a ? codec.a_groups() : codec.r_groups())
    w += g.code.length();
  return w;
}

}  // namespace relobi
