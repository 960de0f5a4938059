#include <gtest/gtest.h>

#include <map>

#include "relobi/conformance.hpp"
#include "relobi/crossbar.hpp"
#include "relobi/fault.hpp"
#include "test_util.hpp"

using namespace relobi;
using relobi::testing::small_system;

namespace {

ManagerScript fixed_script(const std::vector<uint64_t>& addrs, uint32_t gap = 0) {
  ManagerScript s;
  uint64_t aid = 0;
  for (uint64_t a : addrs) {
    ScriptEntry e;
    e.gap = gap;
    e.xfer.addr = a;
    e.xfer.aid = aid++ & 0xf;
    e.xfer.wdata = a * 3;
    s.entries.push_back(e);
  }
  return s;
}

std::size_t count_events(const Trace& t, PortId::Side side, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : t) n += e.port.side == side && e.kind == kind;
  return n;
}

}  // namespace

TEST(AddressMap, UniformRouting) {
  const auto map = AddressMap::uniform(8);
  EXPECT_EQ(map.route(0x0000'0000), 0u);
  EXPECT_EQ(map.route(0x0fff'ffff), 0u);
  EXPECT_EQ(map.route(0x1000'0000), 1u);
  EXPECT_EQ(map.route(0x2000'0000), 2u);
  EXPECT_EQ(map.route(0x7fff'ffff), 7u);
  EXPECT_FALSE(map.route(0x8000'0000).has_value());
}

TEST(AddressMap, Validation) {
  EXPECT_NO_THROW(AddressMap::uniform(8).validate(8));
  EXPECT_THROW(AddressMap::uniform(8).validate(7), std::invalid_argument);
  EXPECT_THROW(AddressMap({{0, 0x3000, 0}}).validate(1), std::invalid_argument);
  EXPECT_THROW(AddressMap({{0x800, 0x1000, 0}}).validate(1), std::invalid_argument);
  EXPECT_THROW(AddressMap({{0, 0x2000, 0}, {0x1000, 0x1000, 1}}).validate(2), std::invalid_argument);
  EXPECT_NO_THROW(AddressMap({{0x2000, 0x1000, 1}, {0, 0x1000, 0}}).validate(2));
}

TEST(Topology, Validation) {
  CrossbarTopology t;
  EXPECT_NO_THROW(t.validate());
  t.n_managers = 17;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.n_managers = 0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

class DemuxTest : public ::testing::Test {
 protected:
  DemuxTest() : sys_(small_system(1, 2), generate_scripts(small_system(1, 2), 1, 0)), ctx_(sys_.context()) {}

  void drive(Demux& d, bool req, uint64_t addr) {
    ATransfer a;
    a.addr = addr;
    d.ports.req_in = TriSignal::replicate(req, 3);
    d.ports.a_in = ctx_.codec->encode(a);
  }

  Crossbar sys_;
  const BlockContext& ctx_;
};

TEST_F(DemuxTest, CleanRequestReachesOnlyItsOutput) {
  Demux d(0, 2);
  Detections det;
  drive(d, true, 0x1000'0010);
  d.a_forward(ctx_, det);
  EXPECT_EQ(d.ports.req_out[0].bits, 0);
  EXPECT_EQ(d.ports.req_out[1].bits, 0b111);
  EXPECT_EQ(det.total(), 0u);
}

TEST_F(DemuxTest, NoRequestNoActivity) {
  Demux d(0, 2);
  Detections det;
  drive(d, false, 0x1000'0010);
  d.a_forward(ctx_, det);
  for (const auto& r : d.ports.req_out) EXPECT_EQ(r.bits, 0);
}

TEST_F(DemuxTest, EveryAddressBitErrorStillRoutesCorrectly) {
  const int g = ctx_.addr_group;
  const unsigned n = ctx_.codec->a_groups()[g].code.length();
  for (uint64_t addr : {0x0000'0004ull, 0x1000'0010ull, 0x1fff'fffcull}) {
    const unsigned want = addr >> 28;
    for (unsigned bit = 0; bit < n; ++bit) {
      Demux d(0, 2);
      Detections det;
      drive(d, true, addr);
      d.ports.a_in.cw[g] ^= Bits{1} << bit;
      d.a_forward(ctx_, det);
      EXPECT_EQ(d.ports.req_out[want].bits, 0b111) << bit;
      EXPECT_EQ(d.ports.req_out[1 - want].bits, 0) << bit;
      EXPECT_EQ(det.corrected, 1u);
    }
  }
}

TEST_F(DemuxTest, UnmappedAddressGoesToErrorResponder) {
  Demux d(0, 2);
  Detections det;
  drive(d, true, 0x9000'0000);
  d.a_forward(ctx_, det);
  d.a_backward(ctx_);
  for (const auto& r : d.ports.req_out) EXPECT_EQ(r.bits, 0);
  EXPECT_EQ(d.ports.gnt_out.bits, 0b111);
}

TEST(Mux, ArbitrateIsRoundRobin) {
  const std::vector<TriSignal> req = {TriSignal{1}, TriSignal{0}, TriSignal{1}};
  EXPECT_EQ(Mux::arbitrate(0, req, 0), 0u);
  EXPECT_EQ(Mux::arbitrate(1, req, 0), 2u);
  EXPECT_EQ(Mux::arbitrate(2, req, 0), 2u);
  EXPECT_EQ(Mux::arbitrate(3, req, 0), 0u);
  EXPECT_EQ(Mux::arbitrate(0, req, 1), 3u);
}

TEST(Mux, GrantsRotateUnderFullLoad) {
  const auto cfg = small_system(3, 1);
  Crossbar sys(cfg, generate_scripts(cfg, 1, 0));
  const auto& ctx = sys.context();
  Mux mx(0, 3);
  Detections det;
  std::vector<unsigned> order;
  for (int c = 0; c < 9; ++c) {
    for (auto& r : mx.ports.req_in) r = TriSignal{0b111};
    for (auto& r : mx.ports.rready_in) r = TriSignal{0b111};
    mx.ports.gnt_in = TriSignal{0b111};
    mx.ports.rvalid_in = TriSignal::replicate(c > 0, 3);
    mx.a_forward(ctx, det);
    mx.a_backward(ctx);
    mx.r_forward(ctx);
    mx.r_backward(ctx);
    for (unsigned i = 0; i < 3; ++i)
      if (mx.ports.gnt_out[i].bits == 0b111) order.push_back(i);
    if (c > 0) {
      // the response goes back to the input granted one cycle earlier
      EXPECT_EQ(mx.ports.rvalid_out[order[order.size() - 2]].bits, 0b111);
    }
    mx.commit(ctx, det);
  }
  EXPECT_EQ(order, (std::vector<unsigned>{0, 1, 2, 0, 1, 2, 0, 1, 2}));
  EXPECT_EQ(det.total(), 0u);
}

TEST(Mux, NoInputWaitsMoreThanNMinusOneGrants) {
  SystemConfig cfg;  // 6 x 8
  auto scripts = generate_scripts(cfg, 3, 200);
  for (auto& s : scripts)
    for (auto& e : s.entries) e.xfer.addr &= 0x0fff'ffff;  // everyone hits subordinate 0
  Crossbar sys(cfg, scripts);
  std::vector<unsigned> waited(6, 0);
  unsigned worst = 0;
  Trace t;
  sys.set_trace(&t);
  while (!sys.done()) {
    sys.step();
    const Mux& mx = sys.mux(0);
    const bool granted_any = vote3(mx.ports.req_out) && vote3(mx.ports.gnt_in);
    for (unsigned i = 0; i < 6; ++i) {
      const bool req = vote3(mx.ports.req_in[i]);
      const bool gnt = vote3(mx.ports.gnt_out[i]);
      if (!req || gnt) waited[i] = 0;
      else if (granted_any) worst = std::max(worst, ++waited[i]);
    }
    ASSERT_LT(sys.cycle(), 200000u);
  }
  EXPECT_GT(worst, 0u);
  EXPECT_LE(worst, 5u);
  EXPECT_EQ(count_events(t, PortId::Side::manager, EventKind::a_accepted), 1200u);
}

TEST(Crossbar, OneByOneEchoesIds) {
  const auto cfg = small_system(1, 1);
  const Trace t = golden_run(Crossbar(cfg, generate_scripts(cfg, 9, 300)));
  std::vector<uint64_t> aids, rids;
  for (const auto& e : t) {
    if (e.port.side != PortId::Side::manager) continue;
    if (e.kind == EventKind::a_accepted) aids.push_back(std::get<ATransfer>(e.payload).aid);
    else rids.push_back(std::get<RTransfer>(e.payload).rid);
  }
  EXPECT_EQ(aids.size(), 300u);
  EXPECT_EQ(aids, rids);
}

TEST(Crossbar, AllManagersToOneSubordinate) {
  const auto cfg = small_system(4, 2);
  std::vector<ManagerScript> scripts;
  for (unsigned i = 0; i < 4; ++i) scripts.push_back(fixed_script(std::vector<uint64_t>(50, 0x100 * (i + 1))));
  const Trace t = golden_run(Crossbar(cfg, scripts));
  EXPECT_EQ(count_events(t, PortId::Side::manager, EventKind::r_accepted), 200u);
  std::size_t at_sub0 = 0;
  for (const auto& e : t)
    at_sub0 += e.port == PortId::subordinate(0) && e.kind == EventKind::a_accepted;
  EXPECT_EQ(at_sub0, 200u);
}

TEST(Crossbar, UnmappedAddressGetsErrorResponse) {
  const auto cfg = small_system(1, 2);
  ManagerScript s = fixed_script({0x9000'0000, 0x0000'0040});
  s.entries[0].xfer.aid = 5;
  const Trace t = golden_run(Crossbar(cfg, {s}));
  std::vector<RTransfer> rs;
  for (const auto& e : t)
    if (e.port.side == PortId::Side::manager && e.kind == EventKind::r_accepted)
      rs.push_back(std::get<RTransfer>(e.payload));
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_TRUE(rs[0].err);
  EXPECT_EQ(rs[0].rid, 5u);
  EXPECT_FALSE(rs[1].err);
  EXPECT_EQ(count_events(t, PortId::Side::subordinate, EventKind::a_accepted), 1u);
}

TEST(Crossbar, PipelineLatencyIsOneCyclePerStage) {
  for (auto [p, q] : {std::pair{0u, 0u}, {1u, 1u}, {2u, 0u}, {0u, 3u}, {2u, 3u}}) {
    auto cfg = small_system(1, 1);
    cfg.topology.pipeline_in = p;
    cfg.topology.pipeline_out = q;
    const Trace t = golden_run(Crossbar(cfg, generate_scripts(cfg, 2, 100)));
    std::vector<uint64_t> at_mgr, at_sub;
    for (const auto& e : t) {
      if (e.kind != EventKind::a_accepted) continue;
      if (e.port.side == PortId::Side::subordinate) at_sub.push_back(e.cycle);
      else if (cfg.topology.map.route(std::get<ATransfer>(e.payload).addr)) at_mgr.push_back(e.cycle);
    }
    ASSERT_EQ(at_mgr.size(), at_sub.size());
    ASSERT_FALSE(at_mgr.empty());
    for (std::size_t i = 0; i < at_mgr.size(); ++i) EXPECT_EQ(at_sub[i] - at_mgr[i], p + q) << p << q;
  }
}

TEST(Crossbar, CommitOrderDoesNotMatter) {
  for (Design d : {Design::obi, Design::relobi}) {
    SystemConfig cfg;
    cfg.design = d;
    const auto scripts = generate_scripts(cfg, 5, 200);
    Crossbar fwd(cfg, scripts), rev(cfg, scripts);
    rev.reverse_commit_order(true);
    EXPECT_EQ(golden_run(fwd), golden_run(rev));
  }
}

TEST(Crossbar, IdleSystemKeepsItsState) {
  const auto cfg = small_system(2, 3);
  Crossbar sys(cfg, generate_scripts(cfg, 1, 0));
  const Crossbar init = sys;
  for (int i = 0; i < 50; ++i) sys.step();
  for (unsigned i = 0; i < 2; ++i) {
    EXPECT_EQ(sys.demux(i).state, init.demux(i).state);
    EXPECT_EQ(sys.pipe_in(i, 0).state, const_cast<Crossbar&>(init).pipe_in(i, 0).state);
  }
  for (unsigned j = 0; j < 3; ++j) EXPECT_EQ(sys.mux(j).state, init.mux(j).state);
  EXPECT_EQ(sys.detections().total(), 0u);
}

TEST(Crossbar, ObiAndRelobiTracesMatch) {
  for (auto [n, m] : {std::pair{2u, 2u}, {6u, 8u}, {3u, 1u}}) {
    const auto r = equivalence_suite(small_system(n, m), 200, {1, 2, 3});
    EXPECT_TRUE(r.passed) << r.counterexample;
  }
  auto cfg = small_system(2, 2);
  cfg.bus = BusConfig::minimal();
  cfg.topology.pipeline_in = 2;
  cfg.topology.pipeline_out = 0;
  const auto r = equivalence_suite(cfg, 200, {4});
  EXPECT_TRUE(r.passed) << r.counterexample;
}

TEST(Crossbar, ReplicatedStateRealignsAfterOneCycle) {
  const auto r = realignment_suite(small_system(2, 2), 40, 1, 6);
  EXPECT_TRUE(r.passed) << r.counterexample;
  EXPECT_GT(r.checks, 100u);
}

TEST(Crossbar, FaultFreeRunReportsNoDetections) {
  SystemConfig cfg;
  Crossbar sys(cfg, generate_scripts(cfg, 1, 100));
  Trace t;
  sys.set_trace(&t);
  while (!sys.done()) sys.step();
  EXPECT_EQ(sys.detections().total(), 0u);
  EXPECT_TRUE(sys.replicas_aligned());
}

TEST(Crossbar, RejectsBadConfigurations) {
  auto cfg = small_system(2, 2);
  EXPECT_THROW(Crossbar(cfg, generate_scripts(small_system(3, 2), 1, 1)), std::invalid_argument);
  auto other = cfg;
  other.plan = default_plan(BusConfig::minimal());
  EXPECT_THROW(Crossbar(other, generate_scripts(other, 1, 1)), std::invalid_argument);
  auto plain = cfg;
  plain.plan = obi_plan(cfg.bus);
  EXPECT_THROW(Crossbar(plain, generate_scripts(plain, 1, 1)), std::invalid_argument);
  auto unmapped = cfg;
  unmapped.topology.map = AddressMap::uniform(3);
  EXPECT_THROW(Crossbar(unmapped, generate_scripts(unmapped, 1, 1)), std::invalid_argument);
}
