#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relobi/campaign.hpp"
#include "relobi/codec.hpp"
#include "relobi/config.hpp"
#include "relobi/crossbar.hpp"
#include "relobi/hsiao.hpp"

namespace relobi {

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::size_t checks = 0;
  std::string counterexample;
};

/// Random data words for the SECDED sweeps, all-zero and all-one first.
inline std::vector<Bits> sample_words(unsigned k, std::size_t n, uint64_t seed) {
  std::vector<Bits> out{0, bit_mask(k)};
  std::mt19937_64 rng(seed);
  while (out.size() < n) out.push_back(((Bits{rng()} << 64) | rng()) & bit_mask(k));
  out.resize(n);
  return out;
}

/// Test hook: the column of data bit 0 becomes the XOR of those of bits 1
/// and 2, so the double error on bits 0 and 1 aliases a single error.
inline HsiaoCode corrupt_hmatrix(const HsiaoCode& code) {
  std::vector<uint32_t> cols;
  for (unsigned i = 0; i < code.data_bits(); ++i) cols.push_back(code.column(i));
  if (cols.size() >= 3) cols[0] = cols[1] ^ cols[2];
  return HsiaoCode::from_columns(code.data_bits(), code.check_bits(), cols);
}

/// Every single error over `singles` words and every double error over
/// `doubles` words, for each code.
inline SuiteResult secded_suite(const std::vector<std::pair<std::string, HsiaoCode>>& codes,
                                std::size_t singles = 100, std::size_t doubles = 10,
                                uint64_t seed = 1) {
  SuiteResult res;
  res.name = "SECDED single correction / double detection";
  for (const auto& [name, code] : codes) {
    const unsigned n = code.length();
    const auto v = check_secded(code, sample_words(code.data_bits(), singles, seed),
                                sample_words(code.data_bits(), doubles, seed + 1));
    res.checks += singles * n + doubles * n * (n - 1) / 2;
    if (v) {
      std::ostringstream os;
      os << name << " (k=" << code.data_bits() << ", r=" << code.check_bits() << "): " << v->what
         << ", bit " << v->bit_a;
      if (v->bit_b) os << " and bit " << *v->bit_b;
      os << ", data " << to_hex(v->data);
      res.passed = false;
      res.counterexample = os.str();
      return res;
    }
  }
  return res;
}

inline SuiteResult voter_suite() {
  SuiteResult res;
  res.name = "TMR majority voter truth table";
  for (unsigned bits = 0; bits < 8; ++bits) {
    const bool expect = ((bits & 1) + ((bits >> 1) & 1) + ((bits >> 2) & 1)) >= 2;
    ++res.checks;
    if (vote3(TriSignal{static_cast<uint8_t>(bits)}) != expect) {
      res.passed = false;
      res.counterexample = "replicas " + std::to_string(bits & 1) + std::to_string((bits >> 1) & 1) +
                           std::to_string((bits >> 2) & 1) + " voted wrongly";
      return res;
    }
  }
  return res;
}

/// Register fields held in three copies (all state except codeword registers).
inline std::vector<FaultTarget> replicated_state_bits(Crossbar& sys) {
  std::vector<FaultTarget> out;
  for (uint32_t b = 0; b < sys.blocks().size(); ++b) {
    uint32_t field = 0;
    sys.visit_state(b, [&](const FieldInfo& fi, FieldRef ref) {
      if (!fi.sub)
        for (unsigned bit = 0; bit < ref.width; ++bit)
          out.push_back({FaultKind::flop, b, field, Phase::a_fwd, PortDir::in, bit,
                         field_name(sys.blocks()[b].name, fi)});
      ++field;
    });
  }
  return out;
}

/// Corrupts one replica of each replicated register bit in turn and checks
/// the replicas agree again after one fault-free cycle.
inline SuiteResult realignment_suite(const SystemConfig& base, std::size_t txns, uint64_t seed,
                                     unsigned sample_cycles = 8) {
  SuiteResult res;
  res.name = "replicated state re-alignment";
  SystemConfig cfg = base;
  cfg.design = Design::relobi;
  Crossbar sys(cfg, generate_scripts(cfg, seed, txns));
  const GoldenReference gold(sys);
  const auto targets = replicated_state_bits(sys);
  for (const auto& at_cycle : exhaustive_faults({FaultTarget{}}, gold.end_cycle(), sample_cycles)) {
    Crossbar at = gold.checkpoint(at_cycle.cycle);
    while (at.cycle() < at_cycle.cycle) at.step();
    for (const auto& t : targets) {
      Crossbar x = at;
      x.flip(t);
      x.step();
      ++res.checks;
      if (!x.replicas_aligned()) {
        res.passed = false;
        res.counterexample = t.path + " bit " + std::to_string(t.bit) + " at cycle " +
                             std::to_string(at_cycle.cycle) + " still misaligned after one cycle";
        return res;
      }
    }
  }
  return res;
}

/// Fault-free obi and relobi builds of the same topology produce the same
/// interface trace.
inline SuiteResult equivalence_suite(const SystemConfig& base, std::size_t txns,
                                     const std::vector<uint64_t>& seeds) {
  SuiteResult res;
  res.name = "fault-free obi/relobi trace equivalence";
  for (uint64_t seed : seeds) {
    SystemConfig o = base, r = base;
    o.design = Design::obi;
    r.design = Design::relobi;
    const auto scripts = generate_scripts(base, seed, txns);
    const Trace to = golden_run(Crossbar(o, scripts));
    const Trace tr = golden_run(Crossbar(r, scripts));
    ++res.checks;
    const auto cmp = scoreboard_verify(to, tr);
    if (!cmp.equal) {
      std::ostringstream os;
      os << "seed " << seed << ": traces differ";
      if (cmp.first_divergence) os << " at event " << *cmp.first_divergence;
      res.passed = false;
      res.counterexample = os.str();
      return res;
    }
  }
  return res;
}

struct ConformanceOptions {
  bool corrupt_hmatrix = false;  // test hook
  std::size_t txns = 1000;
  std::vector<uint64_t> seeds = {1};
};

inline std::vector<SuiteResult> run_conformance(const CampaignConfig& cfg,
                                                const ConformanceOptions& opt = {}) {
  std::vector<std::pair<std::string, HsiaoCode>> codes;
  const GroupingPlan plan = cfg.system.plan ? *cfg.system.plan : default_plan(cfg.system.bus);
  for (const auto& g : plan.groups)
    codes.emplace_back(g.name, opt.corrupt_hmatrix ? corrupt_hmatrix(g.code) : g.code);
  for (unsigned k : {8u, 29u, 32u}) codes.emplace_back("k" + std::to_string(k), HsiaoCode::build(k));

  std::vector<SuiteResult> out;
  out.push_back(secded_suite(codes));
  out.push_back(voter_suite());
  SystemConfig small = cfg.system;
  small.topology.n_managers = 2;
  small.topology.n_subordinates = 2;
  small.topology.map = AddressMap::uniform(2);
  out.push_back(realignment_suite(small, 50, opt.seeds.front()));
  out.push_back(equivalence_suite(cfg.system, opt.txns, opt.seeds));
  return out;
}

}  // namespace relobi
