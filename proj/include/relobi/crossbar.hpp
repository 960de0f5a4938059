#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relobi/address_map.hpp"
#include "relobi/agents.hpp"
#include "relobi/blocks.hpp"
#include "relobi/codec.hpp"
#include "relobi/grouping_plan.hpp"
#include "relobi/transfer.hpp"

namespace relobi {

enum class Design : uint8_t { obi, relobi };
enum class Recovery : uint8_t { inline_correction, abort_retry };

inline constexpr const char* to_string(Design d) { return d == Design::obi ? "obi" : "relobi"; }
inline constexpr const char* to_string(Recovery r) {
  return r == Recovery::inline_correction ? "inline" : "abort-retry";
}

struct CrossbarTopology {
  unsigned n_managers = 6;
  unsigned n_subordinates = 8;
  AddressMap map = AddressMap::uniform(8);
  unsigned pipeline_in = 1;
  unsigned pipeline_out = 1;

  void validate() const {
    if (n_managers == 0 || n_subordinates == 0)
      throw std::invalid_argument("crossbar needs at least one manager and one subordinate");
    if (n_managers > 16) throw std::invalid_argument("at most 16 managers are supported");
    map.validate(n_subordinates);
  }
};

/// Everything needed to build one crossbar instance.
struct SystemConfig {
  BusConfig bus;
  std::optional<GroupingPlan> plan;  // relOBI wire format, default_plan(bus) if unset
  CrossbarTopology topology;
  Design design = Design::relobi;
  Recovery recovery = Recovery::inline_correction;
  SubordinateOptions subordinate;
};

enum class FaultKind : uint8_t { flop, port };

inline constexpr const char* to_string(FaultKind k) { return k == FaultKind::flop ? "FLOP" : "PORT"; }

/// One bit of a register (FLOP) or block port (PORT) inside the crossbar.
struct FaultTarget {
  FaultKind kind = FaultKind::flop;
  uint32_t block = 0;
  uint32_t field = 0;  // index in the block's visit order (state or phase/dir ports)
  Phase phase = Phase::a_fwd;
  PortDir dir = PortDir::in;
  unsigned bit = 0;
  std::string path;  // hierarchical field name, without the bit
};

struct FaultSpec {
  FaultTarget target;
  uint64_t cycle = 0;
};

/// A demux withheld a request because of an address ECC error.
struct AbortRecord {
  uint64_t cycle = 0;
  unsigned manager = 0;
  std::size_t ordinal = 0;  // index of the transfer in the manager's script
};

class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string field_name(const std::string& block, const FieldInfo& fi) {
  std::string s = block + "." + fi.name;
  if (fi.index >= 0) s += "[" + std::to_string(fi.index) + "]";
  if (fi.index2 >= 0) s += "[" + std::to_string(fi.index2) + "]";
  if (fi.sub) s += std::string(".") + fi.sub;
  return s;
}

/// N x M crossbar with its managers and subordinates.
///
/// Each cycle settles the combinational network in four phases (A forward,
/// A backward, R forward, R backward) and then commits every register from
/// the settled port values only. The commit order of the blocks therefore
/// has no influence on the result.
class Crossbar {
 public:
  enum class BlockType : uint8_t { pipe_in, demux, mux, pipe_out };
  struct BlockRef {
    BlockType type;
    uint32_t index;
    std::string name;
  };

  Crossbar(const SystemConfig& cfg, const std::vector<ManagerScript>& scripts)
      : setup_(std::make_shared<Setup>(cfg)) {
    const auto& topo = setup_->cfg.topology;
    if (scripts.size() != topo.n_managers)
      throw std::invalid_argument("need exactly one script per manager");
    const BlockContext& ctx = setup_->ctx;
    const unsigned P = topo.pipeline_in, Q = topo.pipeline_out;
    const unsigned N = topo.n_managers, M = topo.n_subordinates;

    uint32_t id = 0;
    for (unsigned i = 0; i < N; ++i)
      for (unsigned k = 0; k < P; ++k) {
        pipe_in_.emplace_back().id = id++;
        setup_->blocks.push_back({BlockType::pipe_in, i * P + k,
                                  "xbar.pipe_in[" + std::to_string(i) + "][" + std::to_string(k) + "]"});
      }
    for (unsigned i = 0; i < N; ++i) {
      demux_.emplace_back(id++, M);
      setup_->blocks.push_back({BlockType::demux, i, "xbar.demux[" + std::to_string(i) + "]"});
    }
    for (unsigned j = 0; j < M; ++j) {
      mux_.emplace_back(id++, N);
      setup_->blocks.push_back({BlockType::mux, j, "xbar.mux[" + std::to_string(j) + "]"});
    }
    for (unsigned j = 0; j < M; ++j)
      for (unsigned k = 0; k < Q; ++k) {
        pipe_out_.emplace_back().id = id++;
        setup_->blocks.push_back({BlockType::pipe_out, j * Q + k,
                                  "xbar.pipe_out[" + std::to_string(j) + "][" + std::to_string(k) + "]"});
      }
    for (unsigned i = 0; i < N; ++i)
      managers_.emplace_back(std::make_shared<const ManagerScript>(scripts[i]), i);
    for (unsigned j = 0; j < M; ++j) subs_.emplace_back(setup_->cfg.bus, setup_->cfg.subordinate, j);
    mgr_.resize(N);
    sub_.resize(M);
    (void)ctx;
    update_done();
  }

  // -- simulation -----------------------------------------------------------

  void step() {
    det_.cycle = cycle_;
    cycle_events_.clear();
    settle_a_forward();
    settle_a_backward();
    settle_r_forward();
    if (setup_->cfg.bus.has_rready) settle_r_backward();
    commit();
    if (fault_ && fault_->target.kind == FaultKind::flop && fault_->cycle == cycle_)
      flip(fault_->target);
    if (!cycle_events_.empty()) {
      std::sort(cycle_events_.begin(), cycle_events_.end());
      last_event_cycle_ = cycle_;
      if (trace_) trace_->insert(trace_->end(), cycle_events_.begin(), cycle_events_.end());
    }
    ++cycle_;
    update_done();
  }

  uint64_t cycle() const { return cycle_; }
  bool done() const { return done_cycle_.has_value(); }
  uint64_t done_cycle() const { return done_cycle_.value_or(0); }
  uint64_t last_event_cycle() const { return last_event_cycle_; }
  const std::vector<TraceEvent>& cycle_events() const { return cycle_events_; }

  void set_trace(Trace* t) { trace_ = t; }
  void set_detection_log(std::vector<Detection>* log) { det_.log = log; }
  Detections& detections() { return det_; }
  const Detections& detections() const { return det_; }
  std::vector<AbortRecord>& aborts() { return aborts_; }
  void reverse_commit_order(bool r) { reverse_commit_ = r; }

  void arm(const FaultSpec& f) { fault_ = f; }
  void disarm() { fault_.reset(); }

  /// Functional state equality: registers, agents and the cycle counter.
  /// Observation channels (trace, detections, watchdog) are not compared.
  bool same_state(const Crossbar& o) const {
    if (cycle_ != o.cycle_ || done_cycle_ != o.done_cycle_) return false;
    for (std::size_t i = 0; i < pipe_in_.size(); ++i)
      if (!(pipe_in_[i].state == o.pipe_in_[i].state)) return false;
    for (std::size_t i = 0; i < demux_.size(); ++i)
      if (!(demux_[i].state == o.demux_[i].state)) return false;
    for (std::size_t i = 0; i < mux_.size(); ++i)
      if (!(mux_[i].state == o.mux_[i].state)) return false;
    for (std::size_t i = 0; i < pipe_out_.size(); ++i)
      if (!(pipe_out_[i].state == o.pipe_out_[i].state)) return false;
    for (std::size_t i = 0; i < managers_.size(); ++i)
      if (!managers_[i].same_state(o.managers_[i])) return false;
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (!subs_[i].same_state(o.subs_[i])) return false;
    return true;
  }

  bool replicas_aligned() const {
    const auto& ctx = setup_->ctx;
    for (const auto& b : pipe_in_) if (!b.replicas_aligned(ctx)) return false;
    for (const auto& b : demux_) if (!b.replicas_aligned(ctx)) return false;
    for (const auto& b : mux_) if (!b.replicas_aligned(ctx)) return false;
    for (const auto& b : pipe_out_) if (!b.replicas_aligned(ctx)) return false;
    return true;
  }

  // -- structure --------------------------------------------------------------

  const SystemConfig& config() const { return setup_->cfg; }
  const GroupingPlan& plan() const { return setup_->plan; }
  const Codec& codec() const { return setup_->codec; }
  const BlockContext& context() const { return setup_->ctx; }
  const std::vector<BlockRef>& blocks() const { return setup_->blocks; }

  Manager& manager(unsigned i) { return managers_[i]; }
  const Manager& manager(unsigned i) const { return managers_[i]; }
  Subordinate& subordinate(unsigned j) { return subs_[j]; }
  PipeStage& pipe_in(unsigned i, unsigned k) { return pipe_in_[i * setup_->cfg.topology.pipeline_in + k]; }
  PipeStage& pipe_out(unsigned j, unsigned k) {
    return pipe_out_[j * setup_->cfg.topology.pipeline_out + k];
  }
  Demux& demux(unsigned i) { return demux_[i]; }
  const Demux& demux(unsigned i) const { return demux_[i]; }
  Mux& mux(unsigned j) { return mux_[j]; }
  const Mux& mux(unsigned j) const { return mux_[j]; }

  bool all_managers_done() const {
    return std::all_of(managers_.begin(), managers_.end(), [](const Manager& m) { return m.done(); });
  }

  /// Calls f(block_name, FieldInfo, FieldRef) for every register field.
  template <class F>
  void visit_state(uint32_t block, F&& f) {
    with_block(block, [&](auto& b) { b.visit_state(setup_->ctx, f); });
  }

  template <class F>
  void visit_ports(uint32_t block, Phase phase, PortDir dir, F&& f) {
    with_block(block, [&](auto& b) { b.visit_ports(setup_->ctx, phase, dir, f); });
  }

  /// Inverts one bit of the addressed field right now.
  void flip(const FaultTarget& t) {
    uint32_t n = 0;
    auto visitor = [&](const FieldInfo&, FieldRef ref) {
      if (n++ == t.field && t.bit < ref.width) ref.flip(t.bit);
    };
    if (t.kind == FaultKind::flop) visit_state(t.block, visitor);
    else visit_ports(t.block, t.phase, t.dir, visitor);
  }

 private:
  struct Setup {
    explicit Setup(const SystemConfig& c) : cfg(c) {
      cfg.bus.validate();
      cfg.topology.validate();
      GroupingPlan rel = cfg.plan ? *cfg.plan : default_plan(cfg.bus);
      if (!(rel.bus == cfg.bus)) throw std::invalid_argument("plan was built for another bus");
      validate_plan(rel);
      if (!rel.triplicated()) throw std::invalid_argument("relOBI plan must triplicate handshakes");
      plan = cfg.design == Design::relobi ? rel : uncoded_variant(rel);
      codec = Codec(plan);
      ctx.codec = &codec;
      ctx.map = &cfg.topology.map;
      ctx.replicas = codec.replicas();
      ctx.has_rready = cfg.bus.has_rready;
      ctx.abort_retry = cfg.design == Design::relobi && cfg.recovery == Recovery::abort_retry;
      ctx.n_managers = cfg.topology.n_managers;
      ctx.n_subordinates = cfg.topology.n_subordinates;
      ctx.addr_group = codec.a_group_of(Signal::addr);
      ctx.aid_group = codec.a_group_of(Signal::aid);
    }
    Setup(const Setup&) = delete;
    Setup& operator=(const Setup&) = delete;

    SystemConfig cfg;
    GroupingPlan plan;
    Codec codec;
    BlockContext ctx;
    std::vector<BlockRef> blocks;
  };

  struct Boundary {
    TriSignal req, gnt, rvalid, rready;
    Packet a, r;
    // decoded, voted view of the agent
    bool v_req = false, v_gnt = false, v_rvalid = false, v_rready = false;
    ATransfer a_plain;
    RTransfer r_plain;
    Manager::Outputs drive;
  };

  template <class F>
  void with_block(uint32_t id, F&& f) {
    const auto& b = setup_->blocks.at(id);
    switch (b.type) {
      case BlockType::pipe_in: f(pipe_in_[b.index]); break;
      case BlockType::demux: f(demux_[b.index]); break;
      case BlockType::mux: f(mux_[b.index]); break;
      case BlockType::pipe_out: f(pipe_out_[b.index]); break;
    }
  }

  void hook(uint32_t block, Phase phase, PortDir dir) {
    if (!fault_ || fault_->target.kind != FaultKind::port || fault_->cycle != cycle_) return;
    const auto& t = fault_->target;
    if (t.block == block && t.phase == phase && t.dir == dir) flip(t);
  }

  uint32_t boundary_id(bool manager_side, unsigned idx) const {
    return static_cast<uint32_t>(setup_->blocks.size()) +
           (manager_side ? idx : setup_->cfg.topology.n_managers + idx);
  }

  bool boundary_vote(TriSignal t, uint32_t source) {
    const unsigned n = setup_->ctx.replicas;
    if (!t.consistent(n)) det_.report(DetectionKind::voter_mismatch, source);
    return vote(t, n);
  }

  void settle_a_forward() {
    const auto& ctx = setup_->ctx;
    const unsigned P = setup_->cfg.topology.pipeline_in, Q = setup_->cfg.topology.pipeline_out;
    for (unsigned i = 0; i < managers_.size(); ++i) {
      auto& w = mgr_[i];
      w.drive = managers_[i].drive(cycle_);
      w.req = TriSignal::replicate(w.drive.req, ctx.replicas);
      w.a = setup_->codec.encode(w.drive.a);
      TriSignal req = w.req;
      const Packet* a = &w.a;
      for (unsigned k = 0; k < P; ++k) {
        auto& st = pipe_in_[i * P + k];
        st.ports.req_in = req;
        st.ports.a_in = *a;
        hook(st.id, Phase::a_fwd, PortDir::in);
        st.a_forward(ctx);
        hook(st.id, Phase::a_fwd, PortDir::out);
        req = st.ports.req_out;
        a = &st.ports.a_out;
      }
      auto& d = demux_[i];
      d.ports.req_in = req;
      d.ports.a_in = *a;
      hook(d.id, Phase::a_fwd, PortDir::in);
      d.a_forward(ctx, det_);
      hook(d.id, Phase::a_fwd, PortDir::out);
    }
    for (unsigned j = 0; j < mux_.size(); ++j) {
      auto& mx = mux_[j];
      for (unsigned i = 0; i < demux_.size(); ++i) {
        mx.ports.req_in[i] = demux_[i].ports.req_out[j];
        mx.ports.a_in[i] = demux_[i].ports.a_out[j];
      }
      hook(mx.id, Phase::a_fwd, PortDir::in);
      mx.a_forward(ctx, det_);
      hook(mx.id, Phase::a_fwd, PortDir::out);
      TriSignal req = mx.ports.req_out;
      const Packet* a = &mx.ports.a_out;
      for (unsigned k = 0; k < Q; ++k) {
        auto& st = pipe_out_[j * Q + k];
        st.ports.req_in = req;
        st.ports.a_in = *a;
        hook(st.id, Phase::a_fwd, PortDir::in);
        st.a_forward(ctx);
        hook(st.id, Phase::a_fwd, PortDir::out);
        req = st.ports.req_out;
        a = &st.ports.a_out;
      }
      auto& w = sub_[j];
      w.req = req;
      w.a = *a;
      const uint32_t src = boundary_id(false, j);
      w.v_req = boundary_vote(w.req, src);
      std::array<GroupStatus, kMaxGroups> st{};
      w.a_plain = setup_->codec.decode_a(w.a, st.data());
      if (w.v_req)
        for (std::size_t g = 0; g < setup_->codec.a_groups().size(); ++g) det_.report(st[g].status, src);
    }
  }

  void settle_a_backward() {
    const auto& ctx = setup_->ctx;
    const unsigned P = setup_->cfg.topology.pipeline_in, Q = setup_->cfg.topology.pipeline_out;
    for (unsigned j = 0; j < mux_.size(); ++j) {
      auto& w = sub_[j];
      w.gnt = TriSignal::replicate(subs_[j].gnt(w.v_req), ctx.replicas);
      TriSignal gnt = w.gnt;
      for (unsigned k = Q; k-- > 0;) {
        auto& st = pipe_out_[j * Q + k];
        st.ports.gnt_in = gnt;
        hook(st.id, Phase::a_bwd, PortDir::in);
        st.a_backward(ctx);
        hook(st.id, Phase::a_bwd, PortDir::out);
        gnt = st.ports.gnt_out;
      }
      auto& mx = mux_[j];
      mx.ports.gnt_in = gnt;
      hook(mx.id, Phase::a_bwd, PortDir::in);
      mx.a_backward(ctx);
      hook(mx.id, Phase::a_bwd, PortDir::out);
    }
    for (unsigned i = 0; i < demux_.size(); ++i) {
      auto& d = demux_[i];
      for (unsigned j = 0; j < mux_.size(); ++j) d.ports.gnt_in[j] = mux_[j].ports.gnt_out[i];
      hook(d.id, Phase::a_bwd, PortDir::in);
      d.a_backward(ctx);
      hook(d.id, Phase::a_bwd, PortDir::out);
      TriSignal gnt = d.ports.gnt_out;
      for (unsigned k = P; k-- > 0;) {
        auto& st = pipe_in_[i * P + k];
        st.ports.gnt_in = gnt;
        hook(st.id, Phase::a_bwd, PortDir::in);
        st.a_backward(ctx);
        hook(st.id, Phase::a_bwd, PortDir::out);
        gnt = st.ports.gnt_out;
      }
      mgr_[i].gnt = gnt;
      mgr_[i].v_gnt = boundary_vote(gnt, boundary_id(true, i));
    }
  }

  void settle_r_forward() {
    const auto& ctx = setup_->ctx;
    const unsigned P = setup_->cfg.topology.pipeline_in, Q = setup_->cfg.topology.pipeline_out;
    for (unsigned j = 0; j < mux_.size(); ++j) {
      auto& w = sub_[j];
      w.rvalid = TriSignal::replicate(subs_[j].rvalid(cycle_), ctx.replicas);
      w.r = setup_->codec.encode(subs_[j].r_out());
      TriSignal v = w.rvalid;
      const Packet* r = &w.r;
      for (unsigned k = Q; k-- > 0;) {
        auto& st = pipe_out_[j * Q + k];
        st.ports.rvalid_in = v;
        st.ports.r_in = *r;
        hook(st.id, Phase::r_fwd, PortDir::in);
        st.r_forward(ctx);
        hook(st.id, Phase::r_fwd, PortDir::out);
        v = st.ports.rvalid_out;
        r = &st.ports.r_out;
      }
      auto& mx = mux_[j];
      mx.ports.rvalid_in = v;
      mx.ports.r_in = *r;
      hook(mx.id, Phase::r_fwd, PortDir::in);
      mx.r_forward(ctx);
      hook(mx.id, Phase::r_fwd, PortDir::out);
    }
    for (unsigned i = 0; i < demux_.size(); ++i) {
      auto& d = demux_[i];
      for (unsigned j = 0; j < mux_.size(); ++j) {
        d.ports.rvalid_in[j] = mux_[j].ports.rvalid_out[i];
        d.ports.r_in[j] = mux_[j].ports.r_out[i];
      }
      hook(d.id, Phase::r_fwd, PortDir::in);
      d.r_forward(ctx, det_);
      hook(d.id, Phase::r_fwd, PortDir::out);
      TriSignal v = d.ports.rvalid_out;
      const Packet* r = &d.ports.r_out;
      for (unsigned k = P; k-- > 0;) {
        auto& st = pipe_in_[i * P + k];
        st.ports.rvalid_in = v;
        st.ports.r_in = *r;
        hook(st.id, Phase::r_fwd, PortDir::in);
        st.r_forward(ctx);
        hook(st.id, Phase::r_fwd, PortDir::out);
        v = st.ports.rvalid_out;
        r = &st.ports.r_out;
      }
      auto& w = mgr_[i];
      w.rvalid = v;
      w.r = *r;
      const uint32_t src = boundary_id(true, i);
      w.v_rvalid = boundary_vote(v, src);
      std::array<GroupStatus, kMaxGroups> st{};
      w.r_plain = setup_->codec.decode_r(w.r, st.data());
      if (w.v_rvalid)
        for (std::size_t g = 0; g < setup_->codec.r_groups().size(); ++g) det_.report(st[g].status, src);
    }
  }

  void settle_r_backward() {
    const auto& ctx = setup_->ctx;
    const unsigned P = setup_->cfg.topology.pipeline_in, Q = setup_->cfg.topology.pipeline_out;
    for (unsigned i = 0; i < demux_.size(); ++i) {
      auto& w = mgr_[i];
      w.rready = TriSignal::replicate(w.drive.rready, ctx.replicas);
      TriSignal rr = w.rready;
      for (unsigned k = 0; k < P; ++k) {
        auto& st = pipe_in_[i * P + k];
        st.ports.rready_in = rr;
        hook(st.id, Phase::r_bwd, PortDir::in);
        st.r_backward(ctx);
        hook(st.id, Phase::r_bwd, PortDir::out);
        rr = st.ports.rready_out;
      }
      auto& d = demux_[i];
      d.ports.rready_in = rr;
      hook(d.id, Phase::r_bwd, PortDir::in);
      d.r_backward(ctx);
      hook(d.id, Phase::r_bwd, PortDir::out);
    }
    for (unsigned j = 0; j < mux_.size(); ++j) {
      auto& mx = mux_[j];
      for (unsigned i = 0; i < demux_.size(); ++i) mx.ports.rready_in[i] = demux_[i].ports.rready_out[j];
      hook(mx.id, Phase::r_bwd, PortDir::in);
      mx.r_backward(ctx);
      hook(mx.id, Phase::r_bwd, PortDir::out);
      TriSignal rr = mx.ports.rready_out;
      for (unsigned k = 0; k < Q; ++k) {
        auto& st = pipe_out_[j * Q + k];
        st.ports.rready_in = rr;
        hook(st.id, Phase::r_bwd, PortDir::in);
        st.r_backward(ctx);
        hook(st.id, Phase::r_bwd, PortDir::out);
        rr = st.ports.rready_out;
      }
      sub_[j].rready = rr;
      sub_[j].v_rready = boundary_vote(rr, boundary_id(false, j));
    }
  }

  void commit() {
    const auto& ctx = setup_->ctx;
    const bool has_rready = setup_->cfg.bus.has_rready;
    if (ctx.abort_retry) {
      for (unsigned i = 0; i < demux_.size(); ++i)
        if (demux_[i].aborted()) {
          const auto& m = managers_[i];
          aborts_.push_back({cycle_, i, m.outstanding() ? m.issued() - 1 : m.issued()});
        }
    }
    auto commit_blocks = [&](auto& blocks) {
      if (reverse_commit_)
        for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) it->commit(ctx, det_);
      else
        for (auto& b : blocks) b.commit(ctx, det_);
    };
    auto commit_agents = [&] {
      for (unsigned i = 0; i < managers_.size(); ++i) {
        auto& w = mgr_[i];
        managers_[i].commit(cycle_, w.v_gnt, w.v_rvalid, w.r_plain, has_rready, &cycle_events_);
      }
      for (unsigned j = 0; j < subs_.size(); ++j) {
        auto& w = sub_[j];
        subs_[j].commit(cycle_, w.v_req, w.a_plain, w.v_rready, has_rready, &cycle_events_);
      }
    };
    if (reverse_commit_) {
      commit_agents();
      commit_blocks(pipe_out_);
      commit_blocks(mux_);
      commit_blocks(demux_);
      commit_blocks(pipe_in_);
    } else {
      commit_blocks(pipe_in_);
      commit_blocks(demux_);
      commit_blocks(mux_);
      commit_blocks(pipe_out_);
      commit_agents();
    }
  }

  void update_done() {
    if (!done_cycle_ && all_managers_done()) done_cycle_ = cycle_;
  }

  std::shared_ptr<Setup> setup_;
  std::vector<PipeStage> pipe_in_;
  std::vector<Demux> demux_;
  std::vector<Mux> mux_;
  std::vector<PipeStage> pipe_out_;
  std::vector<Manager> managers_;
  std::vector<Subordinate> subs_;
  std::vector<Boundary> mgr_;
  std::vector<Boundary> sub_;

  uint64_t cycle_ = 0;
  std::optional<uint64_t> done_cycle_;
  uint64_t last_event_cycle_ = 0;
  std::vector<TraceEvent> cycle_events_;
  Trace* trace_ = nullptr;
  Detections det_;
  std::vector<AbortRecord> aborts_;
  std::optional<FaultSpec> fault_;
  bool reverse_commit_ = false;
};

struct RunLimits {
  uint64_t drain = 64;
  uint64_t watchdog = 1000;
};

/// Fault-free reference run until every manager is done plus the drain margin.
inline Trace golden_run(Crossbar sys, RunLimits limits = {}) {
  Trace trace;
  sys.set_trace(&trace);
  while (!(sys.done() && sys.cycle() >= sys.done_cycle() + limits.drain)) {
    sys.step();
    if (!sys.done() && sys.cycle() > sys.last_event_cycle() + limits.watchdog) {
      std::ostringstream os;
      os << "deadlock: no interface activity for " << limits.watchdog << " cycles at cycle "
         << sys.cycle() << ", outstanding managers:";
      for (unsigned i = 0; i < sys.config().topology.n_managers; ++i)
        if (!sys.manager(i).done()) os << " " << i << "(issued " << sys.manager(i).issued() << ")";
      throw DeadlockError(os.str());
    }
  }
  return trace;
}

inline uint64_t manager_seed(uint64_t seed, unsigned manager) {
  return mix64(seed ^ (uint64_t{manager} << 32)) ^ manager;
}

/// One random script per manager, deterministic in (bus, seed, n).
inline std::vector<ManagerScript> generate_scripts(const SystemConfig& cfg, uint64_t seed,
                                                   std::size_t n_txns) {
  std::vector<ManagerScript> out;
  for (unsigned i = 0; i < cfg.topology.n_managers; ++i)
    out.push_back(generate_script(cfg.bus, manager_seed(seed, i), n_txns, &cfg.topology.map));
  return out;
}

}  // namespace relobi
