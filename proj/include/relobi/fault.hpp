#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "relobi/crossbar.hpp"
#include "relobi/transfer.hpp"

namespace relobi {

enum class Outcome : uint8_t {
  masked,
  corrected,
  uncorrectable_correct,
  uncorrectable_incorrect,
  undetected_incorrect,
};

inline constexpr std::array<Outcome, 5> kAllOutcomes = {
    Outcome::masked, Outcome::corrected, Outcome::uncorrectable_correct,
    Outcome::uncorrectable_incorrect, Outcome::undetected_incorrect};

inline constexpr const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::masked: return "Masked";
    case Outcome::corrected: return "Corrected";
    case Outcome::uncorrectable_correct: return "UncorrectableCorrectBehavior";
    case Outcome::uncorrectable_incorrect: return "UncorrectableIncorrectBehavior";
    case Outcome::undetected_incorrect: return "UndetectedIncorrect";
  }
  return "?";
}

inline constexpr bool incorrect(Outcome o) {
  return o == Outcome::uncorrectable_incorrect || o == Outcome::undetected_incorrect;
}

inline Outcome classify(bool traces_equal, uint64_t corrections, uint64_t uncorrectables) {
  if (traces_equal) {
    if (uncorrectables > 0) return Outcome::uncorrectable_correct;
    return corrections > 0 ? Outcome::corrected : Outcome::masked;
  }
  return uncorrectables > 0 ? Outcome::uncorrectable_incorrect : Outcome::undetected_incorrect;
}

inline Outcome classify(const Trace& golden, const Trace& faulty, uint64_t corrections,
                        uint64_t uncorrectables) {
  return classify(golden == faulty, corrections, uncorrectables);
}

// -- target space -------------------------------------------------------------

inline std::vector<Phase> active_phases(const Crossbar& sys) {
  if (sys.config().bus.has_rready) return {Phase::a_fwd, Phase::a_bwd, Phase::r_fwd, Phase::r_bwd};
  return {Phase::a_fwd, Phase::a_bwd, Phase::r_fwd};
}

/// Every bit of every register (FLOP) or block port (PORT) of the crossbar
/// blocks, in block, phase, direction, field and bit order.
inline std::vector<FaultTarget> enumerate_targets(Crossbar& sys, FaultKind kind) {
  std::vector<FaultTarget> out;
  for (uint32_t b = 0; b < sys.blocks().size(); ++b) {
    const std::string& name = sys.blocks()[b].name;
    auto collect = [&](Phase ph, PortDir dir) {
      uint32_t field = 0;
      auto visitor = [&](const FieldInfo& fi, FieldRef ref) {
        const std::string path = field_name(name, fi);
        for (unsigned bit = 0; bit < ref.width; ++bit)
          out.push_back({kind, b, field, ph, dir, bit, path});
        ++field;
      };
      if (kind == FaultKind::flop) sys.visit_state(b, visitor);
      else sys.visit_ports(b, ph, dir, visitor);
    };
    if (kind == FaultKind::flop) {
      collect(Phase::a_fwd, PortDir::in);
    } else {
      for (Phase ph : active_phases(sys))
        for (PortDir dir : {PortDir::in, PortDir::out}) collect(ph, dir);
    }
  }
  return out;
}

/// `n` faults drawn uniformly from targets x [0, window). Without replacement
/// (Floyd's algorithm) the result is sorted by target, then cycle; with
/// replacement it is in draw order.
inline std::vector<FaultSpec> sample_faults(const std::vector<FaultTarget>& targets,
                                            uint64_t window, std::size_t n, uint64_t seed,
                                            bool with_replacement = false) {
  std::vector<FaultSpec> out;
  const uint64_t space = targets.size() * window;
  if (n == 0 || space == 0) return out;
  std::mt19937_64 rng(seed);
  std::vector<uint64_t> picks;
  if (with_replacement) {
    std::uniform_int_distribution<uint64_t> d(0, space - 1);
    for (std::size_t i = 0; i < n; ++i) picks.push_back(d(rng));
  } else {
    if (n > space) throw std::invalid_argument("more faults requested than the fault space holds");
    std::unordered_set<uint64_t> chosen;
    chosen.reserve(n * 2);
    for (uint64_t j = space - n; j < space; ++j) {
      const uint64_t t = std::uniform_int_distribution<uint64_t>(0, j)(rng);
      chosen.insert(chosen.count(t) ? j : t);
    }
    picks.assign(chosen.begin(), chosen.end());
    std::sort(picks.begin(), picks.end());
  }
  out.reserve(picks.size());
  for (uint64_t p : picks) out.push_back({targets[p / window], p % window});
  return out;
}

/// Every target at `per_target` cycles spread evenly over [0, window).
inline std::vector<FaultSpec> exhaustive_faults(const std::vector<FaultTarget>& targets,
                                                uint64_t window, unsigned per_target) {
  std::vector<uint64_t> cycles;
  if (window <= per_target) {
    for (uint64_t c = 0; c < window; ++c) cycles.push_back(c);
  } else {
    for (unsigned i = 0; i < per_target; ++i)
      cycles.push_back((2 * uint64_t{i} + 1) * window / (2 * uint64_t{per_target}));
  }
  std::vector<FaultSpec> out;
  out.reserve(targets.size() * cycles.size());
  for (const auto& t : targets)
    for (uint64_t c : cycles) out.push_back({t, c});
  return out;
}

// -- golden reference ---------------------------------------------------------

/// Golden trace plus periodic state snapshots so that a faulty run can start
/// close to its injection cycle instead of at reset.
class GoldenReference {
 public:
  GoldenReference(const Crossbar& initial, RunLimits limits = {}, unsigned interval = 32)
      : limits_(limits), interval_(interval) {
    Crossbar sys = initial;
    sys.set_trace(&trace_);
    sys.set_detection_log(nullptr);
    sys.aborts().clear();
    auto snapshot = [&] {
      Crossbar c = sys;
      c.set_trace(nullptr);
      checkpoints_.push_back(std::move(c));
    };
    while (!(sys.done() && sys.cycle() >= sys.done_cycle() + limits.drain)) {
      if (sys.cycle() % interval_ == 0) snapshot();
      sys.step();
      if (!sys.done() && sys.cycle() > sys.last_event_cycle() + limits.watchdog)
        throw DeadlockError("golden run deadlocked at cycle " + std::to_string(sys.cycle()));
    }
    if (checkpoints_.empty()) snapshot();
    end_cycle_ = sys.cycle();
    detections_ = sys.detections().total();
    n_managers_ = sys.config().topology.n_managers;
    r_cycles_.resize(n_managers_);
    for (const auto& e : trace_)
      if (e.port.side == PortId::Side::manager && e.kind == EventKind::r_accepted)
        r_cycles_[e.port.index].push_back(e.cycle);
  }

  const Trace& trace() const { return trace_; }
  uint64_t end_cycle() const { return end_cycle_; }
  const RunLimits& limits() const { return limits_; }
  const Crossbar& initial() const { return checkpoints_.front(); }
  uint64_t detections() const { return detections_; }

  /// Latest snapshot taken at or before `cycle`.
  const Crossbar& checkpoint(uint64_t cycle) const {
    const std::size_t i = std::min<std::size_t>(cycle / interval_, checkpoints_.size() - 1);
    return checkpoints_[i];
  }

  /// Index of the first event at or after `cycle`.
  std::size_t first_event_at(uint64_t cycle) const {
    return std::lower_bound(trace_.begin(), trace_.end(), cycle,
                            [](const TraceEvent& e, uint64_t c) { return e.cycle < c; }) -
           trace_.begin();
  }

  /// R acceptance cycles of each manager, in transfer order.
  const std::vector<uint64_t>& response_cycles(unsigned manager) const { return r_cycles_[manager]; }

 private:
  RunLimits limits_;
  unsigned interval_;
  Trace trace_;
  std::vector<Crossbar> checkpoints_;
  uint64_t end_cycle_ = 0;
  uint64_t detections_ = 0;
  unsigned n_managers_ = 0;
  std::vector<std::vector<uint64_t>> r_cycles_;
};

// -- faulty runs --------------------------------------------------------------

enum class Comparison : uint8_t {
  timed,    // cycle-exact event sequence
  untimed,  // per-port order at managers, multiset at subordinates
};

struct FaultRunOptions {
  Comparison comparison = Comparison::timed;
  // Stop once the outcome cannot change any more. Off: run to completion.
  bool early_exit = true;
  // Record the complete faulty trace in the result.
  bool keep_trace = false;
  // Log of individual detections.
  bool log_detections = false;
};

struct AbortDelay {
  AbortRecord abort;
  std::optional<uint64_t> golden_cycle;  // R acceptance of the transfer
  std::optional<uint64_t> faulty_cycle;
};

struct FaultRunResult {
  Outcome outcome = Outcome::masked;
  bool traces_equal = true;
  bool hang = false;
  bool converged = false;  // state rejoined the golden run
  uint64_t corrections = 0;
  uint64_t uncorrectables = 0;
  uint64_t end_cycle = 0;
  std::optional<Trace> trace;
  std::vector<Detection> detections;
  std::vector<AbortDelay> aborts;

  // Largest extra R latency among aborted transfers, nullopt if none.
  std::optional<int64_t> max_abort_delay() const {
    std::optional<int64_t> m;
    for (const auto& a : aborts) {
      const int64_t d = (a.golden_cycle && a.faulty_cycle)
                            ? static_cast<int64_t>(*a.faulty_cycle) - static_cast<int64_t>(*a.golden_cycle)
                            : INT64_MAX;
      m = std::max(m.value_or(d), d);
    }
    return m;
  }
};

/// Simulates the golden workload with one fault.
///
/// The run starts from the snapshot preceding the injection cycle. With
/// early exit enabled a fault-free shadow copy is stepped alongside and the
/// run stops once both are in the same state, the remainder of the faulty
/// trace being the golden one. A faulty run that produces no interface
/// event for the watchdog period while work is outstanding is a hang.
inline FaultRunResult run_with_fault(const GoldenReference& gold, const FaultSpec& spec,
                                     const FaultRunOptions& opt = {}) {
  FaultRunResult res;
  const Trace& golden = gold.trace();
  const auto& limits = gold.limits();
  Crossbar sys = gold.checkpoint(spec.cycle);
  sys.set_trace(nullptr);
  while (sys.cycle() < spec.cycle) sys.step();
  sys.detections().clear_counts();
  sys.aborts().clear();
  if (opt.log_detections) sys.set_detection_log(&res.detections);

  std::optional<Crossbar> shadow;
  if (opt.early_exit) shadow.emplace(sys);
  sys.arm(spec);

  const std::size_t start = gold.first_event_at(spec.cycle);
  std::size_t cursor = start;  // next golden event to match (timed mode)
  bool diverged = false;
  Trace middle;  // faulty events from the injection cycle on
  const bool need_middle = opt.keep_trace || opt.comparison == Comparison::untimed ||
                           sys.context().abort_retry;
  const uint64_t hard_stop = 2 * gold.end_cycle() + limits.watchdog;
  const bool can_detect = sys.context().replicas == 3;

  for (;;) {
    sys.step();
    const auto& evs = sys.cycle_events();
    if (need_middle) middle.insert(middle.end(), evs.begin(), evs.end());
    if (!diverged) {
      for (const auto& e : evs) {
        if (cursor >= golden.size() || !(golden[cursor] == e)) {
          diverged = true;
          break;
        }
        ++cursor;
      }
      // a golden event of this cycle that did not happen
      if (!diverged && cursor < golden.size() && golden[cursor].cycle < sys.cycle()) diverged = true;
    }
    if (shadow) {
      shadow->step();
      if (sys.same_state(*shadow)) {
        res.converged = true;
        break;
      }
    }
    if (sys.done() && sys.cycle() >= sys.done_cycle() + limits.drain) break;
    if ((!sys.done() && sys.cycle() > sys.last_event_cycle() + limits.watchdog) ||
        sys.cycle() > hard_stop) {
      res.hang = true;
      break;
    }
    // Without detectors the outcome is fixed at the first difference.
    if (opt.early_exit && diverged && !can_detect && opt.comparison == Comparison::timed) break;
  }
  res.end_cycle = sys.cycle();
  res.corrections = sys.detections().corrections();
  res.uncorrectables = sys.detections().uncorrectable;

  // Golden events of the faulty segment [spec.cycle, end).
  const std::size_t stop = res.converged ? gold.first_event_at(res.end_cycle) : golden.size();
  if (opt.comparison == Comparison::timed) {
    res.traces_equal = !diverged && !res.hang && cursor == stop;
  } else {
    const Trace seg(golden.begin() + start, golden.begin() + stop);
    res.traces_equal = !res.hang && untimed_equivalent(seg, middle);
  }
  res.outcome = classify(res.traces_equal, res.corrections, res.uncorrectables);

  if (!sys.aborts().empty()) {
    std::vector<std::size_t> prefix(sys.config().topology.n_managers, 0);
    std::vector<std::vector<uint64_t>> faulty_r(prefix.size());
    for (unsigned i = 0; i < prefix.size(); ++i) {
      const auto& rc = gold.response_cycles(i);
      prefix[i] = std::lower_bound(rc.begin(), rc.end(), spec.cycle) - rc.begin();
    }
    for (const auto& e : middle)
      if (e.port.side == PortId::Side::manager && e.kind == EventKind::r_accepted)
        faulty_r[e.port.index].push_back(e.cycle);
    for (const auto& a : sys.aborts()) {
      AbortDelay d{a, std::nullopt, std::nullopt};
      const auto& rc = gold.response_cycles(a.manager);
      if (a.ordinal < rc.size()) d.golden_cycle = rc[a.ordinal];
      const std::size_t p = prefix[a.manager];
      if (a.ordinal >= p) {
        const std::size_t k = a.ordinal - p;
        if (k < faulty_r[a.manager].size()) d.faulty_cycle = faulty_r[a.manager][k];
        else if (res.converged) d.faulty_cycle = d.golden_cycle;
      }
      res.aborts.push_back(d);
    }
  }

  if (opt.keep_trace) {
    Trace full(golden.begin(), golden.begin() + start);
    full.insert(full.end(), middle.begin(), middle.end());
    if (res.converged) full.insert(full.end(), golden.begin() + stop, golden.end());
    res.trace = std::move(full);
  }
  return res;
}

/// Reference implementation of a faulty run: simulates from reset without
/// snapshots or early exit and compares complete traces.
inline FaultRunResult run_with_fault_from_reset(const Crossbar& initial, const Trace& golden,
                                                const FaultSpec& spec, RunLimits limits = {},
                                                Comparison cmp = Comparison::timed) {
  FaultRunResult res;
  Crossbar sys = initial;
  Trace trace;
  sys.set_trace(&trace);
  sys.detections().clear_counts();
  sys.aborts().clear();
  sys.arm(spec);
  const uint64_t hard_stop = 2 * (golden.empty() ? 0 : golden.back().cycle) + 4 * limits.drain +
                             limits.watchdog;
  while (!(sys.done() && sys.cycle() >= sys.done_cycle() + limits.drain)) {
    sys.step();
    if ((!sys.done() && sys.cycle() > sys.last_event_cycle() + limits.watchdog) ||
        sys.cycle() > hard_stop) {
      res.hang = true;
      break;
    }
  }
  res.end_cycle = sys.cycle();
  res.corrections = sys.detections().corrections();
  res.uncorrectables = sys.detections().uncorrectable;
  res.traces_equal =
      !res.hang && (cmp == Comparison::timed ? trace == golden : untimed_equivalent(golden, trace));
  res.outcome = classify(res.traces_equal, res.corrections, res.uncorrectables);
  res.trace = std::move(trace);
  return res;
}

}  // namespace relobi
