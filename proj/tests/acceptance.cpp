// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "relobi/campaign.hpp"
#include "relobi/conformance.hpp"
#include "relobi/config.hpp"

using namespace relobi;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

CampaignConfig two_by_two(Design d, Recovery rec = Recovery::inline_correction) {
  CampaignConfig c;
  c.system.design = d;
  c.system.recovery = rec;
  c.system.topology.n_managers = 2;
  c.system.topology.n_subordinates = 2;
  c.system.topology.map = AddressMap::uniform(2);
  c.txns_per_manager = 50;
  c.exhaustive = true;
  c.cycles_per_target = 16;
  c.fault_class = FaultClass::both;
  c.jobs = jobs();
  return c;
}

CampaignConfig six_by_eight(Design d) {
  CampaignConfig c;  // defaults are the 6 x 8 crossbar
  c.system.design = d;
  c.txns_per_manager = 1000;
  c.faults = 10000;
  c.fault_class = FaultClass::both;
  c.jobs = jobs();
  return c;
}

std::string summary(const CampaignReport& r) {
  std::ostringstream os;
  os << r.total_injected << " faults";
  for (Outcome o : kAllOutcomes) os << ", " << to_string(o) << "=" << r.count(o);
  os << ", " << std::fixed;
  os.precision(1);
  os << r.runtime_s << " s";
  return os.str();
}

bool zero_incorrect(const CampaignReport& r) {
  return r.total_injected > 0 && r.count(Outcome::undetected_incorrect) == 0 &&
         r.count(Outcome::uncorrectable_incorrect) == 0;
}

void criterion1() {
  const BusConfig bus;
  // hand sum of the default signal widths
  const unsigned a = 1 + 1 + 32 + 1 + 4 + 32 + 4 + 6 + 2 + 3 + 1 + 6 + 2;  // req gnt addr we be wdata aid atop memtype prot dbg auser wuser
  const unsigned r = 1 + 1 + 32 + 4 + 1 + 1 + 2;                          // rvalid rready rdata rid err exokay ruser
  const unsigned total = total_width(bus);
  const unsigned rel = plan_width(default_plan(bus));
  const double inc = 100.0 * (rel - total) / total;
  char buf[160];
  std::snprintf(buf, sizeof buf, "total %u, plan %u, increase %.0f%% (%.2f%%)", total, rel, std::round(inc), inc);
  report(1, total == a + r && total == 137 && rel == 177 && std::lround(inc) == 29, "width accounting", buf);
}

void criterion2_3_7() {
  const auto rel_a = run_campaign(two_by_two(Design::relobi));
  report(2, zero_incorrect(rel_a), "relobi 2x2 exhaustive, zero incorrect", summary(rel_a));

  const auto rel_b = run_campaign(six_by_eight(Design::relobi));
  report(2, zero_incorrect(rel_b), "relobi 6x8 sampled n=10000, zero incorrect", summary(rel_b));

  const auto obi_a = run_campaign(two_by_two(Design::obi));
  report(3, obi_a.count(Outcome::undetected_incorrect) >= 1, "obi 2x2 exhaustive has undetected faults",
         summary(obi_a));
  const auto obi_b = run_campaign(six_by_eight(Design::obi));
  char pct[64];
  std::snprintf(pct, sizeof pct, "undetected %.2f%%, ", obi_b.percentage(Outcome::undetected_incorrect));
  report(3, obi_b.percentage(Outcome::undetected_incorrect) > 0, "obi 6x8 sampled undetected > 0",
         pct + summary(obi_b));

  const auto abort_a = run_campaign(two_by_two(Design::relobi, Recovery::abort_retry));
  const bool delay_ok = !abort_a.max_abort_delay || *abort_a.max_abort_delay <= 2;
  std::string delay = abort_a.max_abort_delay ? std::to_string(*abort_a.max_abort_delay) : "none";
  report(7, zero_incorrect(abort_a) && delay_ok && abort_a.aborted_transfers > 0,
         "abort-retry 2x2 exhaustive, zero incorrect, aborted transfers within +2 cycles",
         summary(abort_a) + ", faults with aborts " + std::to_string(abort_a.aborted_transfers) +
             ", worst extra cycles " + delay);
}

void criterion4() {
  std::vector<std::pair<std::string, HsiaoCode>> codes;
  for (unsigned k : {8u, 29u, 32u}) codes.emplace_back("k" + std::to_string(k), HsiaoCode::build(k));
  for (const auto& g : default_plan(BusConfig{}).groups) codes.emplace_back(g.name, g.code);
  const auto res = secded_suite(codes, 100, 10, 2024);
  report(4, res.passed, "SECDED single correction and double detection",
         std::to_string(res.checks) + " checks" + (res.passed ? "" : ": " + res.counterexample));
}

void criterion5() {
  const auto v = voter_suite();
  SystemConfig sys;
  sys.topology.n_managers = 2;
  sys.topology.n_subordinates = 2;
  sys.topology.map = AddressMap::uniform(2);
  const auto r = realignment_suite(sys, 50, 1, 16);
  std::string detail = std::to_string(v.checks) + " voter rows, " + std::to_string(r.checks) +
                       " replica corruptions";
  if (!v.passed) detail += ": " + v.counterexample;
  if (!r.passed) detail += ": " + r.counterexample;
  report(5, v.passed && r.passed, "majority voter and replica re-alignment", detail);
}

void criterion6() {
  const auto r = equivalence_suite(SystemConfig{}, 1000, {1, 2, 3});
  report(6, r.passed, "fault-free obi/relobi 6x8 trace equivalence",
         "3 seeds x 1000 txns" + (r.passed ? std::string() : ": " + r.counterexample));
}

void criterion8() {
  auto c = two_by_two(Design::relobi);
  c.exhaustive = false;
  c.faults = 3000;
  c.jobs = 1;
  const auto a = report_to_string(run_campaign(c), false);
  c.jobs = jobs() + 1;
  const auto b = report_to_string(run_campaign(c), false);
  auto o = six_by_eight(Design::obi);
  o.faults = 2000;
  const auto x = report_to_string(run_campaign(o), false);
  const auto y = report_to_string(run_campaign(o), false);
  report(8, a == b && x == y, "re-runs give byte-identical reports",
         std::to_string(a.size()) + " and " + std::to_string(x.size()) + " byte reports compared");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    criterion1();
    criterion4();
    criterion5();
    criterion6();
    criterion2_3_7();
    criterion8();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    ++failures;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s, %.1f s\n", failures ? "acceptance FAILED" : "all criteria passed", s);
  return failures ? 1 : 0;
}
