#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "relobi/fault.hpp"
#include "test_util.hpp"

using namespace relobi;
using relobi::testing::small_system;

namespace {

std::size_t state_bits(Crossbar& sys) { return enumerate_targets(sys, FaultKind::flop).size(); }

// Index of the named field in a block's state or port visit order.
uint32_t field_index(Crossbar& sys, uint32_t block, const std::string& path, std::optional<Phase> phase = {},
                     PortDir dir = PortDir::in) {
  uint32_t n = 0, found = UINT32_MAX;
  auto v = [&](const FieldInfo& fi, FieldRef) {
    if (found == UINT32_MAX && field_name(sys.blocks()[block].name, fi) == path) found = n;
    ++n;
  };
  if (phase) sys.visit_ports(block, *phase, dir, v);
  else sys.visit_state(block, v);
  if (found == UINT32_MAX) throw std::runtime_error("no field " + path);
  return found;
}

uint32_t block_index(const Crossbar& sys, const std::string& name) {
  for (uint32_t b = 0; b < sys.blocks().size(); ++b)
    if (sys.blocks()[b].name == name) return b;
  throw std::runtime_error("no block " + name);
}

FaultTarget flop(Crossbar& sys, const std::string& block, const std::string& field, unsigned bit) {
  const uint32_t b = block_index(sys, block);
  return {FaultKind::flop, b, field_index(sys, b, block + "." + field), Phase::a_fwd, PortDir::in, bit,
          block + "." + field};
}

FaultTarget port(Crossbar& sys, const std::string& block, Phase ph, PortDir dir, const std::string& field,
                 unsigned bit) {
  const uint32_t b = block_index(sys, block);
  return {FaultKind::port, b, field_index(sys, b, block + "." + field, ph, dir), ph, dir, bit,
          block + "." + field};
}

Crossbar make(const SystemConfig& cfg, uint64_t seed, std::size_t txns) {
  return Crossbar(cfg, generate_scripts(cfg, seed, txns));
}

}  // namespace

TEST(Classify, PartitionsAllCombinations) {
  EXPECT_EQ(classify(true, 0, 0), Outcome::masked);
  EXPECT_EQ(classify(true, 3, 0), Outcome::corrected);
  EXPECT_EQ(classify(true, 0, 1), Outcome::uncorrectable_correct);
  EXPECT_EQ(classify(true, 2, 1), Outcome::uncorrectable_correct);
  EXPECT_EQ(classify(false, 0, 1), Outcome::uncorrectable_incorrect);
  EXPECT_EQ(classify(false, 4, 2), Outcome::uncorrectable_incorrect);
  EXPECT_EQ(classify(false, 0, 0), Outcome::undetected_incorrect);
  EXPECT_EQ(classify(false, 5, 0), Outcome::undetected_incorrect);
  std::set<std::string> names;
  for (Outcome o : kAllOutcomes) names.insert(to_string(o));
  EXPECT_EQ(names.size(), 5u);
  EXPECT_FALSE(incorrect(Outcome::uncorrectable_correct));
  EXPECT_TRUE(incorrect(Outcome::undetected_incorrect));
}

TEST(Targets, ObiOneByOneFlopCensus) {
  auto cfg = small_system(1, 1, Design::obi);
  cfg.topology.pipeline_in = cfg.topology.pipeline_out = 0;
  Crossbar sys = make(cfg, 1, 0);
  const BusConfig& b = cfg.bus;
  // demux: cnt, sel (2 values), err_valid, stored error response; mux: count (0..1)
  const std::size_t r_payload = b.data_width + b.id_width + 1 + 1 + b.ruser_width;
  EXPECT_EQ(r_payload, 40u);
  EXPECT_EQ(state_bits(sys), 2 + 1 + 1 + r_payload + 1);
}

TEST(Targets, RelobiOneByOneFlopCensus) {
  auto cfg = small_system(1, 1);
  cfg.topology.pipeline_in = cfg.topology.pipeline_out = 0;
  Crossbar sys = make(cfg, 1, 0);
  unsigned r_cw = 0;
  for (const auto& g : default_plan(cfg.bus).groups)
    if (g.name == "rdata" || g.name == "r_ctrl") r_cw += g.code.length();
  EXPECT_EQ(r_cw, 52u);
  EXPECT_EQ(state_bits(sys), 3 * (2 + 1 + 1) + r_cw + 3 * 1);
}

TEST(Targets, GrowWithProtectionAndPipelining) {
  auto obi = small_system(2, 2, Design::obi);
  auto rel = small_system(2, 2);
  Crossbar so = make(obi, 1, 0), sr = make(rel, 1, 0);
  EXPECT_GT(state_bits(sr), state_bits(so));
  EXPECT_GT(enumerate_targets(sr, FaultKind::port).size(), enumerate_targets(so, FaultKind::port).size());
  auto deeper = rel;
  deeper.topology.pipeline_in = 2;
  Crossbar sd = make(deeper, 1, 0);
  EXPECT_GT(state_bits(sd), state_bits(sr));
}

TEST(Targets, PathsAndBitsAreUnique) {
  Crossbar sys = make(small_system(2, 3), 1, 0);
  for (FaultKind k : {FaultKind::flop, FaultKind::port}) {
    std::set<std::tuple<uint32_t, uint32_t, int, int, unsigned>> keys;
    std::set<std::tuple<int, int, std::string, unsigned>> names;
    const auto ts = enumerate_targets(sys, k);
    for (const auto& t : ts) {
      EXPECT_EQ(t.kind, k);
      EXPECT_EQ(t.path.rfind("xbar.", 0), 0u);
      keys.insert({t.block, t.field, static_cast<int>(t.phase), static_cast<int>(t.dir), t.bit});
      names.insert({static_cast<int>(t.phase), static_cast<int>(t.dir), t.path, t.bit});
    }
    EXPECT_EQ(keys.size(), ts.size());
    EXPECT_EQ(names.size(), ts.size());
  }
}

TEST(Targets, NoRreadyMeansThreePhases) {
  auto cfg = small_system(2, 2);
  cfg.bus = BusConfig::minimal();
  Crossbar sys = make(cfg, 1, 0);
  EXPECT_EQ(active_phases(sys).size(), 3u);
  for (const auto& t : enumerate_targets(sys, FaultKind::port)) EXPECT_NE(t.phase, Phase::r_bwd);
}

TEST(Sampling, BasicProperties) {
  Crossbar sys = make(small_system(2, 2), 1, 0);
  const auto ts = enumerate_targets(sys, FaultKind::flop);
  EXPECT_TRUE(sample_faults(ts, 100, 0, 1).empty());
  const auto a = sample_faults(ts, 100, 500, 9);
  const auto b = sample_faults(ts, 100, 500, 9);
  const auto c = sample_faults(ts, 100, 500, 10);
  ASSERT_EQ(a.size(), 500u);
  std::set<std::pair<std::string, uint64_t>> distinct;
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LT(a[i].cycle, 100u);
    distinct.insert({a[i].target.path + "#" + std::to_string(a[i].target.bit), a[i].cycle});
    same = same && a[i].target.path == b[i].target.path && a[i].target.bit == b[i].target.bit &&
           a[i].cycle == b[i].cycle;
    differs = differs || a[i].cycle != c[i].cycle || a[i].target.path != c[i].target.path;
  }
  EXPECT_TRUE(same);
  EXPECT_TRUE(differs);
  EXPECT_EQ(distinct.size(), 500u);
}

TEST(Sampling, WholeSpaceAndOverflow) {
  Crossbar sys = make(small_system(1, 1), 1, 0);
  const auto ts = enumerate_targets(sys, FaultKind::flop);
  const std::size_t space = ts.size() * 3;
  const auto all = sample_faults(ts, 3, space, 4);
  std::set<std::pair<std::size_t, uint64_t>> seen;
  for (const auto& f : all) seen.insert({f.target.field * 1000 + f.target.block * 100000 + f.target.bit, f.cycle});
  EXPECT_EQ(seen.size(), space);
  EXPECT_THROW(sample_faults(ts, 3, space + 1, 4), std::invalid_argument);
  EXPECT_EQ(sample_faults(ts, 3, space + 1, 4, true).size(), space + 1);
}

TEST(Sampling, KindsDrawnInProportionToTheirSize) {
  Crossbar sys = make(small_system(2, 2), 1, 0);
  auto ts = enumerate_targets(sys, FaultKind::flop);
  const double n_flop = static_cast<double>(ts.size());
  const auto ports = enumerate_targets(sys, FaultKind::port);
  ts.insert(ts.end(), ports.begin(), ports.end());
  const double p = n_flop / static_cast<double>(ts.size());
  const std::size_t n = 20000;
  std::size_t flops = 0;
  for (const auto& f : sample_faults(ts, 400, n, 77)) flops += f.target.kind == FaultKind::flop;
  const double sigma = std::sqrt(n * p * (1 - p));
  EXPECT_LT(std::abs(static_cast<double>(flops) - n * p), 3 * sigma);
}

TEST(Sampling, ExhaustiveCyclesAreMidpoints) {
  const std::vector<FaultTarget> one(1);
  const auto f = exhaustive_faults(one, 160, 4);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0].cycle, 20u);
  EXPECT_EQ(f[1].cycle, 60u);
  EXPECT_EQ(f[2].cycle, 100u);
  EXPECT_EQ(f[3].cycle, 140u);
  EXPECT_EQ(exhaustive_faults(one, 3, 16).size(), 3u);
  EXPECT_EQ(exhaustive_faults(std::vector<FaultTarget>(5), 1000, 16).size(), 80u);
}

TEST(Golden, ReferenceMatchesGoldenRun) {
  Crossbar sys = make(small_system(2, 2), 3, 60);
  const GoldenReference gold(sys);
  EXPECT_EQ(gold.trace(), golden_run(sys));
  EXPECT_EQ(gold.detections(), 0u);
  EXPECT_GT(gold.end_cycle(), gold.trace().back().cycle);
  for (uint64_t c : {0ull, 31ull, 32ull, 100ull}) EXPECT_LE(gold.checkpoint(c).cycle(), c);
  EXPECT_EQ(gold.response_cycles(0).size(), 60u);
}

TEST(Directed, FaultOnIdleDataRegisterIsMasked) {
  const auto cfg = small_system(2, 2);
  Crossbar sys = make(cfg, 1, 0);
  const GoldenReference gold(sys);
  const auto t = flop(sys, "xbar.pipe_in[0][0]", "a_data.addr", 3);
  const auto r = run_with_fault(gold, {t, 10});
  EXPECT_EQ(r.outcome, Outcome::masked);
  EXPECT_FALSE(r.converged);  // the flipped bit is never overwritten
}

TEST(Directed, OneReqReplicaFlipIsOutvoted) {
  const auto cfg = small_system(2, 2);
  Crossbar sys = make(cfg, 1, 0);
  const GoldenReference gold(sys);
  const auto t = port(sys, "xbar.demux[0]", Phase::a_fwd, PortDir::in, "req_in", 1);
  const auto r = run_with_fault(gold, {t, 5});
  EXPECT_TRUE(r.traces_equal);
  EXPECT_EQ(r.outcome, Outcome::corrected);
  EXPECT_TRUE(r.converged);
}

TEST(Directed, PortFaultLastsOneCycleFlopFaultPersists) {
  const auto cfg = small_system(1, 2, Design::obi);
  Crossbar base = make(cfg, 1, 0);
  for (int i = 0; i < 4; ++i) base.step();

  Crossbar p = base, ref = base;
  p.arm({port(p, "xbar.demux[0]", Phase::a_fwd, PortDir::in, "req_in", 0), 4});
  p.step();
  ref.step();
  EXPECT_NE(p.demux(0).ports.req_in.bits, ref.demux(0).ports.req_in.bits);
  p.step();
  ref.step();
  EXPECT_EQ(p.demux(0).ports.req_in.bits, ref.demux(0).ports.req_in.bits);

  Crossbar f = base, ref2 = base;
  f.arm({flop(f, "xbar.demux[0]", "err_data.rdata", 7), 4});
  for (int i = 0; i < 5; ++i) {
    f.step();
    ref2.step();
    EXPECT_NE(f.demux(0).state.err_data, ref2.demux(0).state.err_data);
  }
}

TEST(Directed, ObiArbiterPointerFlipCanCorruptTheTrace) {
  auto cfg = small_system(3, 1, Design::obi);
  Crossbar sys = make(cfg, 2, 40);
  const GoldenReference gold(sys);
  const auto t = flop(sys, "xbar.mux[0]", "ptr[0]", 0);
  bool found = false;
  for (uint64_t c = 0; c < gold.end_cycle() && !found; ++c) {
    const auto r = run_with_fault(gold, {t, c});
    EXPECT_NE(r.outcome, Outcome::uncorrectable_incorrect);
    found = r.outcome == Outcome::undetected_incorrect;
  }
  EXPECT_TRUE(found);
}

TEST(Directed, RelobiArbiterPointerFlipIsCorrected) {
  auto cfg = small_system(3, 1);
  Crossbar sys = make(cfg, 2, 40);
  const GoldenReference gold(sys);
  const auto t = flop(sys, "xbar.mux[0]", "ptr[1]", 0);
  for (uint64_t c = 0; c < gold.end_cycle(); c += 3) {
    const auto r = run_with_fault(gold, {t, c});
    EXPECT_TRUE(r.traces_equal) << c;
    EXPECT_FALSE(incorrect(r.outcome)) << c;
  }
}

TEST(Directed, ObiCounterFlipCanHang) {
  auto cfg = small_system(1, 2, Design::obi);
  Crossbar sys = make(cfg, 4, 60);
  const GoldenReference gold(sys);
  const auto t = flop(sys, "xbar.demux[0]", "cnt[0]", 0);
  FaultRunOptions opt;
  opt.early_exit = false;  // run on until the watchdog fires
  bool hung = false;
  for (uint64_t c = 0; c < gold.end_cycle() && !hung; ++c) {
    const auto r = run_with_fault(gold, {t, c}, opt);
    if (r.hang) {
      hung = true;
      EXPECT_TRUE(incorrect(r.outcome));
      EXPECT_FALSE(r.traces_equal);
    }
  }
  EXPECT_TRUE(hung);
}

TEST(Directed, AddressErrorInAbortRetryModeCostsOneCycle) {
  auto cfg = small_system(1, 2);
  cfg.recovery = Recovery::abort_retry;
  cfg.topology.pipeline_in = cfg.topology.pipeline_out = 0;
  Crossbar sys = make(cfg, 5, 20);
  const GoldenReference gold(sys);
  const uint64_t first = gold.trace().front().cycle;  // first A handshake at manager 0
  const auto t = port(sys, "xbar.demux[0]", Phase::a_fwd, PortDir::in, "a_in.addr", 5);
  FaultRunOptions opt;
  opt.comparison = Comparison::untimed;
  opt.keep_trace = true;
  const auto r = run_with_fault(gold, {t, first}, opt);
  EXPECT_TRUE(r.traces_equal);
  EXPECT_EQ(r.outcome, Outcome::corrected);
  ASSERT_EQ(r.aborts.size(), 1u);
  EXPECT_EQ(r.max_abort_delay(), 1);
  EXPECT_NE(*r.trace, gold.trace());  // shifted, not identical

  // the same fault with inline correction leaves the timing untouched
  auto inl = cfg;
  inl.recovery = Recovery::inline_correction;
  Crossbar s2 = make(inl, 5, 20);
  const GoldenReference g2(s2);
  const auto r2 = run_with_fault(g2, {t, first});
  EXPECT_EQ(r2.outcome, Outcome::corrected);
  EXPECT_TRUE(r2.aborts.empty());
}

class Soundness : public ::testing::TestWithParam<int> {};

TEST_P(Soundness, EarlyExitAgreesWithFullRunFromReset) {
  SystemConfig cfg = small_system(2, 2);
  Comparison cmp = Comparison::timed;
  switch (GetParam()) {
    case 0: break;
    case 1: cfg.design = Design::obi; break;
    case 2:
      cfg.recovery = Recovery::abort_retry;
      cmp = Comparison::untimed;
      break;
    case 3:
      cfg.bus = BusConfig::minimal();
      cfg.topology.pipeline_in = 2;
      cfg.topology.pipeline_out = 0;
      break;
  }
  Crossbar sys = make(cfg, 11, 25);
  const GoldenReference gold(sys);
  auto ts = enumerate_targets(sys, FaultKind::flop);
  const auto ports = enumerate_targets(sys, FaultKind::port);
  ts.insert(ts.end(), ports.begin(), ports.end());
  FaultRunOptions opt;
  opt.comparison = cmp;
  opt.keep_trace = true;
  std::size_t incorrect_runs = 0;
  for (const auto& spec : sample_faults(ts, gold.end_cycle(), 400, 1234)) {
    const auto fast = run_with_fault(gold, spec, opt);
    const auto slow = run_with_fault_from_reset(gold.initial(), gold.trace(), spec, gold.limits(), cmp);
    ASSERT_EQ(fast.traces_equal, slow.traces_equal) << spec.target.path << " bit " << spec.target.bit
                                                    << " cycle " << spec.cycle;
    if (cfg.design == Design::relobi) {
      // obi runs stop at the first difference, before a hang could show
      ASSERT_EQ(fast.hang, slow.hang) << spec.target.path;
      ASSERT_EQ(fast.outcome, slow.outcome) << spec.target.path << " cycle " << spec.cycle;
    } else {
      ASSERT_EQ(incorrect(fast.outcome), incorrect(slow.outcome));
    }
    if (!fast.hang && (cfg.design == Design::relobi || fast.traces_equal)) {
      ASSERT_EQ(*fast.trace, *slow.trace) << spec.target.path << " cycle " << spec.cycle;
    }
    incorrect_runs += incorrect(fast.outcome);
  }
  if (cfg.design == Design::relobi) {
    EXPECT_EQ(incorrect_runs, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, Soundness, ::testing::Values(0, 1, 2, 3));
