#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "relobi/address_map.hpp"
#include "relobi/bits.hpp"
#include "relobi/codec.hpp"

namespace relobi {

// Settle phases of one cycle, evaluated in this order before the commit.
enum class Phase : uint8_t { a_fwd, a_bwd, r_fwd, r_bwd };
enum class PortDir : uint8_t { in, out };

inline constexpr const char* to_string(Phase p) {
  switch (p) {
    case Phase::a_fwd: return "a_fwd";
    case Phase::a_bwd: return "a_bwd";
    case Phase::r_fwd: return "r_fwd";
    case Phase::r_bwd: return "r_bwd";
  }
  return "?";
}

/// Type-erased reference to a register or port field, used by fault injection.
struct FieldRef {
  enum class Type : uint8_t { u8, u64, u128 };
  Type type = Type::u64;
  void* ptr = nullptr;
  unsigned width = 0;

  static FieldRef of(TriSignal& t, unsigned width) { return {Type::u8, &t.bits, width}; }
  static FieldRef of(uint64_t& v, unsigned width) { return {Type::u64, &v, width}; }
  static FieldRef of(Bits& v, unsigned width) { return {Type::u128, &v, width}; }

  void flip(unsigned bit) const {
    switch (type) {
      case Type::u8: *static_cast<uint8_t*>(ptr) ^= static_cast<uint8_t>(1u << bit); break;
      case Type::u64: *static_cast<uint64_t*>(ptr) ^= uint64_t{1} << bit; break;
      case Type::u128: *static_cast<Bits*>(ptr) ^= Bits{1} << bit; break;
    }
  }
};

/// Name of a field as seen by a visitor: `name[index][index2].sub`.
struct FieldInfo {
  const char* name = "";
  int index = -1;
  int index2 = -1;
  const char* sub = nullptr;
};

enum class DetectionKind : uint8_t { ecc_corrected, ecc_uncorrectable, voter_mismatch, abort_retry };

struct Detection {
  uint64_t cycle = 0;
  uint32_t source = 0;
  DetectionKind kind = DetectionKind::ecc_corrected;
};

/// Error-detection side channel: ECC decoder statuses, voter disagreements and
/// retry aborts. Everything except uncorrectable counts as a correction.
struct Detections {
  uint64_t corrected = 0;
  uint64_t uncorrectable = 0;
  uint64_t mismatches = 0;
  uint64_t aborts = 0;
  uint64_t cycle = 0;
  std::vector<Detection>* log = nullptr;

  void report(DetectionKind k, uint32_t source) {
    switch (k) {
      case DetectionKind::ecc_corrected: ++corrected; break;
      case DetectionKind::ecc_uncorrectable: ++uncorrectable; break;
      case DetectionKind::voter_mismatch: ++mismatches; break;
      case DetectionKind::abort_retry: ++aborts; break;
    }
    if (log) log->push_back({cycle, source, k});
  }
  void report(DecodeStatus s, uint32_t source) {
    if (s == DecodeStatus::corrected) report(DetectionKind::ecc_corrected, source);
    else if (s == DecodeStatus::uncorrectable) report(DetectionKind::ecc_uncorrectable, source);
  }
  uint64_t corrections() const { return corrected + mismatches + aborts; }
  uint64_t total() const { return corrections() + uncorrectable; }
  void clear_counts() { corrected = uncorrectable = mismatches = aborts = 0; }
};

/// Shared, immutable build parameters seen by every block.
struct BlockContext {
  const Codec* codec = nullptr;
  const AddressMap* map = nullptr;
  unsigned replicas = 1;
  bool has_rready = true;
  bool abort_retry = false;
  unsigned n_managers = 1;
  unsigned n_subordinates = 1;
  int addr_group = -1;
  int aid_group = -1;
};

using Replicated = std::array<uint64_t, 3>;

/// Re-alignment voter on a replicated next-state value.
inline void realign(Replicated& next, unsigned replicas, Detections& det, uint32_t source) {
  if (replicas == 1) return;
  const uint64_t m = majority(next[0], next[1], next[2]);
  if (next[0] != m || next[1] != m || next[2] != m) det.report(DetectionKind::voter_mismatch, source);
  next.fill(m);
}

inline uint64_t voted(const Replicated& v, unsigned replicas) {
  return replicas == 1 ? v[0] : majority(v[0], v[1], v[2]);
}

/// Vote on per-replica enables driving a single-copy register.
inline bool vote_enable(const std::array<bool, 3>& e, unsigned replicas, Detections& det,
                        uint32_t source) {
  if (replicas == 1) return e[0];
  const int n = e[0] + e[1] + e[2];
  if (n == 1 || n == 2) det.report(DetectionKind::voter_mismatch, source);
  return n >= 2;
}

template <class F>
void visit_packet(F&& f, const char* name, int index, Packet& p,
                  const std::vector<Codec::Layout>& groups) {
  for (std::size_t g = 0; g < groups.size(); ++g)
    f(FieldInfo{name, index, -1, groups[g].name.c_str()},
      FieldRef::of(p.cw[g], groups[g].code.length()));
}

template <class F>
void visit_replicated(F&& f, const char* name, Replicated& v, unsigned width, unsigned replicas) {
  if (width == 0) return;
  for (unsigned r = 0; r < replicas; ++r) f(FieldInfo{name, static_cast<int>(r)}, FieldRef::of(v[r], width));
}

// ---------------------------------------------------------------------------

/// One register slice on an interface, cutting both the A and the R channel.
/// Upstream is the manager side.
class PipeStage {
 public:
  struct State {
    Replicated a_valid{};
    Replicated r_valid{};
    Packet a_data;
    Packet r_data;
    bool operator==(const State&) const = default;
  };
  struct Ports {
    TriSignal req_in, req_out, gnt_in, gnt_out;
    TriSignal rvalid_in, rvalid_out, rready_in, rready_out;
    Packet a_in, a_out, r_in, r_out;
  };

  uint32_t id = 0;
  State state;
  Ports ports;

  void a_forward(const BlockContext& ctx) {
    ports.req_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r) ports.req_out.set(r, state.a_valid[r] & 1);
    ports.a_out = state.a_data;
  }

  void a_backward(const BlockContext& ctx) {
    ports.gnt_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r)
      ports.gnt_out.set(r, !(state.a_valid[r] & 1) || ports.gnt_in.replica(r));
  }

  void r_forward(const BlockContext& ctx) {
    ports.rvalid_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r) ports.rvalid_out.set(r, state.r_valid[r] & 1);
    ports.r_out = state.r_data;
  }

  void r_backward(const BlockContext& ctx) {
    ports.rready_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r)
      ports.rready_out.set(r, !(state.r_valid[r] & 1) || ports.rready_in.replica(r));
  }

  void commit(const BlockContext& ctx, Detections& det) {
    Replicated a_next{}, r_next{};
    std::array<bool, 3> a_load{}, r_load{};
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      const bool a_valid = state.a_valid[r] & 1;
      a_load[r] = ports.req_in.replica(r) && ports.gnt_out.replica(r);
      a_next[r] = a_load[r] || (a_valid && !ports.gnt_in.replica(r));

      const bool r_valid = state.r_valid[r] & 1;
      const bool up_ready = ctx.has_rready ? ports.rready_in.replica(r) : true;
      const bool down_ready = ctx.has_rready ? ports.rready_out.replica(r) : true;
      r_load[r] = ports.rvalid_in.replica(r) && down_ready;
      r_next[r] = r_load[r] || (r_valid && !up_ready);
    }
    if (vote_enable(a_load, ctx.replicas, det, id)) state.a_data = ports.a_in;
    if (vote_enable(r_load, ctx.replicas, det, id)) state.r_data = ports.r_in;
    realign(a_next, ctx.replicas, det, id);
    realign(r_next, ctx.replicas, det, id);
    state.a_valid = a_next;
    state.r_valid = r_next;
  }

  bool replicas_aligned(const BlockContext& ctx) const {
    if (ctx.replicas == 1) return true;
    auto same = [](const Replicated& v) { return v[0] == v[1] && v[1] == v[2]; };
    return same(state.a_valid) && same(state.r_valid);
  }

  template <class F>
  void visit_state(const BlockContext& ctx, F&& f) {
    visit_replicated(f, "a_valid", state.a_valid, 1, ctx.replicas);
    visit_packet(f, "a_data", -1, state.a_data, ctx.codec->a_groups());
    visit_replicated(f, "r_valid", state.r_valid, 1, ctx.replicas);
    visit_packet(f, "r_data", -1, state.r_data, ctx.codec->r_groups());
  }

  template <class F>
  void visit_ports(const BlockContext& ctx, Phase phase, PortDir dir, F&& f) {
    const unsigned n = ctx.replicas;
    const bool in = dir == PortDir::in;
    switch (phase) {
      case Phase::a_fwd:
        f(FieldInfo{in ? "req_in" : "req_out"}, FieldRef::of(in ? ports.req_in : ports.req_out, n));
        visit_packet(f, in ? "a_in" : "a_out", -1, in ? ports.a_in : ports.a_out,
                     ctx.codec->a_groups());
        break;
      case Phase::a_bwd:
        f(FieldInfo{in ? "gnt_in" : "gnt_out"}, FieldRef::of(in ? ports.gnt_in : ports.gnt_out, n));
        break;
      case Phase::r_fwd:
        f(FieldInfo{in ? "rvalid_in" : "rvalid_out"},
          FieldRef::of(in ? ports.rvalid_in : ports.rvalid_out, n));
        visit_packet(f, in ? "r_in" : "r_out", -1, in ? ports.r_in : ports.r_out,
                     ctx.codec->r_groups());
        break;
      case Phase::r_bwd:
        if (!ctx.has_rready) break;
        f(FieldInfo{in ? "rready_in" : "rready_out"},
          FieldRef::of(in ? ports.rready_in : ports.rready_out, n));
        break;
    }
  }
};

// ---------------------------------------------------------------------------

/// Demultiplexer of one manager port onto `n_subordinates` outputs, plus a
/// local error responder for unmapped addresses (internal port index M).
///
/// Every replica decodes the address codeword on its own, routes its own copy
/// of req and tracks its own outstanding counter and selected port. Replica
/// states are voted back into agreement at each commit. The payload codewords
/// pass through untouched; the response payload is selected with the voted
/// port index.
///
/// In abort-retry mode a request whose address codeword shows any error is not
/// forwarded in that cycle. The corrected route is captured in a register and
/// used on the following cycle.
class Demux {
 public:
  static constexpr unsigned kCounterBits = 2;

  struct State {
    Replicated cnt{};
    Replicated sel{};
    Replicated err_valid{};
    Replicated retry_valid{};
    Replicated retry_sel{};
    Packet err_data;
    bool operator==(const State&) const = default;
  };
  struct Ports {
    TriSignal req_in;
    Packet a_in;
    std::vector<TriSignal> req_out;
    std::vector<Packet> a_out;
    std::vector<TriSignal> gnt_in;
    TriSignal gnt_out;
    std::vector<TriSignal> rvalid_in;
    std::vector<Packet> r_in;
    TriSignal rvalid_out;
    Packet r_out;
    TriSignal rready_in;
    std::vector<TriSignal> rready_out;
  };

  uint32_t id = 0;
  State state;
  Ports ports;

  Demux() = default;
  Demux(uint32_t block_id, unsigned n_outputs) : id(block_id) {
    ports.req_out.resize(n_outputs);
    ports.a_out.resize(n_outputs);
    ports.gnt_in.resize(n_outputs);
    ports.rvalid_in.resize(n_outputs);
    ports.r_in.resize(n_outputs);
    ports.rready_out.resize(n_outputs);
  }

  unsigned n_outputs() const { return static_cast<unsigned>(ports.req_out.size()); }
  unsigned sel_width() const { return bits_for(n_outputs() + 1); }

  bool aborted() const { return aborted_; }

  void a_forward(const BlockContext& ctx, Detections& det) {
    const unsigned m = n_outputs();
    DecodeStatus status = DecodeStatus::ok;
    uint64_t addr = ctx.codec->decode_a_field(ports.a_in, ctx.addr_group, Signal::addr, status);
    // decoder error flags only count while a request is presented
    const bool any_req = ports.req_in.bits != 0;
    if (any_req) det.report(status, id);
    const auto target = ctx.map->route(addr);
    const unsigned decoded = target ? *target : m;

    if (ctx.aid_group >= 0) {
      DecodeStatus aid_status = DecodeStatus::ok;
      aid_ = ctx.codec->decode_a_field(ports.a_in, ctx.aid_group, Signal::aid, aid_status);
      if (any_req) det.report(aid_status, id);
    }

    std::array<bool, 3> abort{};
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      const bool req = ports.req_in.replica(r);
      const bool retry = ctx.abort_retry && (state.retry_valid[r] & 1);
      route_[r] = retry ? state.retry_sel[r] : decoded;
      abort[r] = ctx.abort_retry && req && !retry && status != DecodeStatus::ok;
      abort_[r] = abort[r];
      corrected_route_ = decoded;
      const uint64_t cnt = state.cnt[r];
      const bool busy = route_[r] > m || (cnt != 0 && state.sel[r] != route_[r]) ||
                        cnt >= (1u << kCounterBits) - 1 ||
                        (route_[r] == m && (state.err_valid[r] & 1));
      accept_[r] = !busy && !abort[r];
    }
    for (unsigned j = 0; j < m; ++j) {
      TriSignal t;
      for (unsigned r = 0; r < ctx.replicas; ++r)
        t.set(r, ports.req_in.replica(r) && accept_[r] && route_[r] == j);
      ports.req_out[j] = t;
      ports.a_out[j] = ports.a_in;
    }
    aborted_ = false;
    if (ctx.abort_retry) {
      const int n = abort[0] + abort[1] + abort[2];
      aborted_ = ctx.replicas == 1 ? abort[0] : n >= 2;
      if (aborted_) det.report(DetectionKind::abort_retry, id);
    }
  }

  void a_backward(const BlockContext& ctx) {
    const unsigned m = n_outputs();
    ports.gnt_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      const bool down = route_[r] == m ? true : (route_[r] < m && ports.gnt_in[route_[r]].replica(r));
      ports.gnt_out.set(r, ports.req_in.replica(r) && accept_[r] && down);
    }
  }

  void r_forward(const BlockContext& ctx, Detections& det) {
    const unsigned m = n_outputs();
    ports.rvalid_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      const uint64_t s = state.sel[r];
      bool v = false;
      if (state.cnt[r] != 0) {
        if (s == m) v = state.err_valid[r] & 1;
        else if (s < m) v = ports.rvalid_in[s].replica(r);
      }
      ports.rvalid_out.set(r, v);
    }
    Replicated sel = state.sel;
    if (ctx.replicas == 3 && !(sel[0] == sel[1] && sel[1] == sel[2]))
      det.report(DetectionKind::voter_mismatch, id);
    const uint64_t vs = voted(sel, ctx.replicas);
    if (vs == m) ports.r_out = state.err_data;
    else if (vs < m) ports.r_out = ports.r_in[vs];
    else ports.r_out = Packet{};
  }

  void r_backward(const BlockContext& ctx) {
    const unsigned m = n_outputs();
    for (unsigned j = 0; j < m; ++j) {
      TriSignal t;
      for (unsigned r = 0; r < ctx.replicas; ++r)
        t.set(r, state.sel[r] == j && state.cnt[r] != 0 && ports.rready_in.replica(r));
      ports.rready_out[j] = t;
    }
  }

  void commit(const BlockContext& ctx, Detections& det) {
    const unsigned m = n_outputs();
    Replicated cnt{}, sel{}, err_valid{}, retry_valid{}, retry_sel{};
    std::array<bool, 3> load_err{};
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      const bool a_hs = ports.req_in.replica(r) && ports.gnt_out.replica(r);
      const bool r_hs =
          ports.rvalid_out.replica(r) && (ctx.has_rready ? ports.rready_in.replica(r) : true);
      cnt[r] = (state.cnt[r] + a_hs - r_hs) & mask64(kCounterBits);
      sel[r] = a_hs ? route_[r] : state.sel[r];
      bool ev = state.err_valid[r] & 1;
      if (r_hs && state.sel[r] == m) ev = false;
      if (a_hs && route_[r] == m) ev = true;
      err_valid[r] = ev;
      load_err[r] = a_hs && route_[r] == m;
      if (ctx.abort_retry) {
        const bool rv = state.retry_valid[r] & 1;
        retry_valid[r] = abort_[r] || (rv && ports.req_in.replica(r) && !a_hs);
        retry_sel[r] = abort_[r] ? corrected_route_ : state.retry_sel[r];
      }
    }
    if (vote_enable(load_err, ctx.replicas, det, id)) {
      RTransfer resp;
      resp.rid = aid_;
      resp.err = ctx.codec->bus().has_err;
      state.err_data = ctx.codec->encode(resp);
    }
    realign(cnt, ctx.replicas, det, id);
    realign(sel, ctx.replicas, det, id);
    realign(err_valid, ctx.replicas, det, id);
    state.cnt = cnt;
    state.sel = sel;
    state.err_valid = err_valid;
    if (ctx.abort_retry) {
      realign(retry_valid, ctx.replicas, det, id);
      realign(retry_sel, ctx.replicas, det, id);
      state.retry_valid = retry_valid;
      state.retry_sel = retry_sel;
    }
  }

  bool replicas_aligned(const BlockContext& ctx) const {
    if (ctx.replicas == 1) return true;
    auto same = [](const Replicated& v) { return v[0] == v[1] && v[1] == v[2]; };
    return same(state.cnt) && same(state.sel) && same(state.err_valid) &&
           same(state.retry_valid) && same(state.retry_sel);
  }

  template <class F>
  void visit_state(const BlockContext& ctx, F&& f) {
    visit_replicated(f, "cnt", state.cnt, kCounterBits, ctx.replicas);
    visit_replicated(f, "sel", state.sel, sel_width(), ctx.replicas);
    visit_replicated(f, "err_valid", state.err_valid, 1, ctx.replicas);
    visit_packet(f, "err_data", -1, state.err_data, ctx.codec->r_groups());
    if (ctx.abort_retry) {
      visit_replicated(f, "retry_valid", state.retry_valid, 1, ctx.replicas);
      visit_replicated(f, "retry_sel", state.retry_sel, sel_width(), ctx.replicas);
    }
  }

  template <class F>
  void visit_ports(const BlockContext& ctx, Phase phase, PortDir dir, F&& f) {
    const unsigned n = ctx.replicas;
    const int m = static_cast<int>(n_outputs());
    const bool in = dir == PortDir::in;
    switch (phase) {
      case Phase::a_fwd:
        if (in) {
          f(FieldInfo{"req_in"}, FieldRef::of(ports.req_in, n));
          visit_packet(f, "a_in", -1, ports.a_in, ctx.codec->a_groups());
        } else {
          for (int j = 0; j < m; ++j) {
            f(FieldInfo{"req_out", j}, FieldRef::of(ports.req_out[j], n));
            visit_packet(f, "a_out", j, ports.a_out[j], ctx.codec->a_groups());
          }
        }
        break;
      case Phase::a_bwd:
        if (in)
          for (int j = 0; j < m; ++j) f(FieldInfo{"gnt_in", j}, FieldRef::of(ports.gnt_in[j], n));
        else
          f(FieldInfo{"gnt_out"}, FieldRef::of(ports.gnt_out, n));
        break;
      case Phase::r_fwd:
        if (in) {
          for (int j = 0; j < m; ++j) {
            f(FieldInfo{"rvalid_in", j}, FieldRef::of(ports.rvalid_in[j], n));
            visit_packet(f, "r_in", j, ports.r_in[j], ctx.codec->r_groups());
          }
        } else {
          f(FieldInfo{"rvalid_out"}, FieldRef::of(ports.rvalid_out, n));
          visit_packet(f, "r_out", -1, ports.r_out, ctx.codec->r_groups());
        }
        break;
      case Phase::r_bwd:
        if (!ctx.has_rready) break;
        if (in)
          f(FieldInfo{"rready_in"}, FieldRef::of(ports.rready_in, n));
        else
          for (int j = 0; j < m; ++j)
            f(FieldInfo{"rready_out", j}, FieldRef::of(ports.rready_out[j], n));
        break;
    }
  }

 private:
  // Per-cycle combinational values, recomputed in a_forward.
  std::array<uint64_t, 3> route_{};
  std::array<bool, 3> accept_{};
  std::array<bool, 3> abort_{};
  uint64_t corrected_route_ = 0;
  uint64_t aid_ = 0;
  bool aborted_ = false;
};

// ---------------------------------------------------------------------------

/// Round-robin multiplexer of `n_managers` inputs onto one subordinate port.
///
/// Each replica arbitrates on its own copy of the request wires and records the
/// granted input in its own in-flight queue, which routes responses back in
/// order. The forwarded payload is the one of the voted winner.
class Mux {
 public:
  struct State {
    Replicated ptr{};
    Replicated head{};
    Replicated count{};
    std::array<std::vector<uint64_t>, 3> queue;
    bool operator==(const State&) const = default;
  };
  struct Ports {
    std::vector<TriSignal> req_in;
    std::vector<Packet> a_in;
    TriSignal req_out;
    Packet a_out;
    TriSignal gnt_in;
    std::vector<TriSignal> gnt_out;
    TriSignal rvalid_in;
    Packet r_in;
    std::vector<TriSignal> rvalid_out;
    std::vector<Packet> r_out;
    std::vector<TriSignal> rready_in;
    TriSignal rready_out;
  };

  uint32_t id = 0;
  State state;
  Ports ports;

  Mux() = default;
  Mux(uint32_t block_id, unsigned n_inputs) : id(block_id) {
    ports.req_in.resize(n_inputs);
    ports.a_in.resize(n_inputs);
    ports.gnt_out.resize(n_inputs);
    ports.rvalid_out.resize(n_inputs);
    ports.r_out.resize(n_inputs);
    ports.rready_in.resize(n_inputs);
    for (auto& q : state.queue) q.assign(depth(), 0);
  }

  unsigned n_inputs() const { return static_cast<unsigned>(ports.req_in.size()); }
  // One outstanding transfer per manager bounds the in-flight queue.
  unsigned depth() const { return n_inputs(); }
  unsigned index_width() const { return bits_for(n_inputs()); }
  unsigned head_width() const { return bits_for(depth()); }
  unsigned count_width() const { return bits_for(depth() + 1); }

  /// Round-robin choice starting at `ptr`, n_inputs() if nobody requests.
  static unsigned arbitrate(uint64_t ptr, const std::vector<TriSignal>& req, unsigned replica) {
    const unsigned n = static_cast<unsigned>(req.size());
    const unsigned start = static_cast<unsigned>(ptr % n);
    for (unsigned k = 0; k < n; ++k) {
      const unsigned i = (start + k) % n;
      if (req[i].replica(replica)) return i;
    }
    return n;
  }

  void a_forward(const BlockContext& ctx, Detections& det) {
    const unsigned n = n_inputs();
    ports.req_out = {};
    Replicated w{};
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      const bool full = state.count[r] >= depth();
      winner_[r] = full ? n : arbitrate(state.ptr[r], ports.req_in, r);
      w[r] = winner_[r];
      ports.req_out.set(r, winner_[r] < n);
    }
    if (ctx.replicas == 3 && !(w[0] == w[1] && w[1] == w[2]))
      det.report(DetectionKind::voter_mismatch, id);
    const uint64_t vw = voted(w, ctx.replicas);
    ports.a_out = vw < n ? ports.a_in[vw] : Packet{};
  }

  void a_backward(const BlockContext& ctx) {
    for (unsigned i = 0; i < n_inputs(); ++i) {
      TriSignal t;
      for (unsigned r = 0; r < ctx.replicas; ++r)
        t.set(r, winner_[r] == i && ports.gnt_in.replica(r));
      ports.gnt_out[i] = t;
    }
  }

  void r_forward(const BlockContext& ctx) {
    const unsigned n = n_inputs();
    for (unsigned r = 0; r < ctx.replicas; ++r)
      source_[r] = state.count[r] != 0 ? state.queue[r][state.head[r] % depth()] : n;
    for (unsigned i = 0; i < n; ++i) {
      TriSignal t;
      for (unsigned r = 0; r < ctx.replicas; ++r)
        t.set(r, ports.rvalid_in.replica(r) && source_[r] == i);
      ports.rvalid_out[i] = t;
      ports.r_out[i] = ports.r_in;
    }
  }

  void r_backward(const BlockContext& ctx) {
    const unsigned n = n_inputs();
    ports.rready_out = {};
    for (unsigned r = 0; r < ctx.replicas; ++r)
      ports.rready_out.set(r, source_[r] < n && ports.rready_in[source_[r]].replica(r));
  }

  void commit(const BlockContext& ctx, Detections& det) {
    const unsigned n = n_inputs();
    const unsigned d = depth();
    Replicated ptr{}, head{}, count{};
    std::array<std::vector<uint64_t>, 3>& q = scratch_queue_;
    for (unsigned r = 0; r < ctx.replicas; ++r) {
      q[r] = state.queue[r];
      const bool a_hs = ports.req_out.replica(r) && ports.gnt_in.replica(r);
      const bool down_ready = ctx.has_rready ? ports.rready_out.replica(r) : source_[r] < n;
      const bool r_hs = ports.rvalid_in.replica(r) && down_ready;
      uint64_t h = state.head[r];
      uint64_t c = state.count[r];
      ptr[r] = state.ptr[r];
      if (r_hs && c != 0) {
        h = (h + 1) % d;
        --c;
      }
      if (a_hs && winner_[r] < n) {
        q[r][(state.head[r] + state.count[r]) % d] = winner_[r];
        ++c;
        ptr[r] = (winner_[r] + 1) % n;
      }
      head[r] = h & mask64(head_width());
      count[r] = c & mask64(count_width());
    }
    realign(ptr, ctx.replicas, det, id);
    realign(head, ctx.replicas, det, id);
    realign(count, ctx.replicas, det, id);
    state.ptr = ptr;
    state.head = head;
    state.count = count;
    if (ctx.replicas == 3) {
      bool mismatch = false;
      for (unsigned e = 0; e < d; ++e) {
        const uint64_t v = majority(q[0][e], q[1][e], q[2][e]);
        mismatch |= q[0][e] != v || q[1][e] != v || q[2][e] != v;
        q[0][e] = q[1][e] = q[2][e] = v;
      }
      if (mismatch) det.report(DetectionKind::voter_mismatch, id);
    }
    for (unsigned r = 0; r < ctx.replicas; ++r) state.queue[r].swap(q[r]);
  }

  bool replicas_aligned(const BlockContext& ctx) const {
    if (ctx.replicas == 1) return true;
    auto same = [](const Replicated& v) { return v[0] == v[1] && v[1] == v[2]; };
    return same(state.ptr) && same(state.head) && same(state.count) &&
           state.queue[0] == state.queue[1] && state.queue[1] == state.queue[2];
  }

  template <class F>
  void visit_state(const BlockContext& ctx, F&& f) {
    visit_replicated(f, "ptr", state.ptr, index_width(), ctx.replicas);
    visit_replicated(f, "head", state.head, head_width(), ctx.replicas);
    visit_replicated(f, "count", state.count, count_width(), ctx.replicas);
    if (index_width() == 0) return;
    for (unsigned r = 0; r < ctx.replicas; ++r)
      for (unsigned e = 0; e < depth(); ++e)
        f(FieldInfo{"queue", static_cast<int>(r), static_cast<int>(e)},
          FieldRef::of(state.queue[r][e], index_width()));
  }

  template <class F>
  void visit_ports(const BlockContext& ctx, Phase phase, PortDir dir, F&& f) {
    const unsigned nr = ctx.replicas;
    const int n = static_cast<int>(n_inputs());
    const bool in = dir == PortDir::in;
    switch (phase) {
      case Phase::a_fwd:
        if (in) {
          for (int i = 0; i < n; ++i) {
            f(FieldInfo{"req_in", i}, FieldRef::of(ports.req_in[i], nr));
            visit_packet(f, "a_in", i, ports.a_in[i], ctx.codec->a_groups());
          }
        } else {
          f(FieldInfo{"req_out"}, FieldRef::of(ports.req_out, nr));
          visit_packet(f, "a_out", -1, ports.a_out, ctx.codec->a_groups());
        }
        break;
      case Phase::a_bwd:
        if (in)
          f(FieldInfo{"gnt_in"}, FieldRef::of(ports.gnt_in, nr));
        else
          for (int i = 0; i < n; ++i) f(FieldInfo{"gnt_out", i}, FieldRef::of(ports.gnt_out[i], nr));
        break;
      case Phase::r_fwd:
        if (in) {
          f(FieldInfo{"rvalid_in"}, FieldRef::of(ports.rvalid_in, nr));
          visit_packet(f, "r_in", -1, ports.r_in, ctx.codec->r_groups());
        } else {
          for (int i = 0; i < n; ++i) {
            f(FieldInfo{"rvalid_out", i}, FieldRef::of(ports.rvalid_out[i], nr));
            visit_packet(f, "r_out", i, ports.r_out[i], ctx.codec->r_groups());
          }
        }
        break;
      case Phase::r_bwd:
        if (!ctx.has_rready) break;
        if (in)
          for (int i = 0; i < n; ++i)
            f(FieldInfo{"rready_in", i}, FieldRef::of(ports.rready_in[i], nr));
        else
          f(FieldInfo{"rready_out"}, FieldRef::of(ports.rready_out, nr));
        break;
    }
  }

 private:
  std::array<unsigned, 3> winner_{};
  std::array<uint64_t, 3> source_{};
  std::array<std::vector<uint64_t>, 3> scratch_queue_;
};

}  // namespace relobi
