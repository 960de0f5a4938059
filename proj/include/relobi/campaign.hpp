#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "relobi/config.hpp"
#include "relobi/crossbar.hpp"
#include "relobi/fault.hpp"

namespace relobi {

struct FaultRecord {
  FaultSpec spec;
  Outcome outcome = Outcome::masked;
  bool hang = false;
  uint64_t corrections = 0;
  uint64_t uncorrectables = 0;
  std::optional<int64_t> abort_delay;  // worst extra R latency of aborted transfers
};

struct CampaignReport {
  std::string config_hash;
  uint64_t seed = 0;
  Design design = Design::relobi;
  Recovery recovery = Recovery::inline_correction;
  FaultClass fault_class = FaultClass::both;
  bool exhaustive = false;
  std::array<uint64_t, 5> buckets{};
  uint64_t total_injected = 0;
  uint64_t flop_bits = 0;
  uint64_t port_bits = 0;
  uint64_t window = 0;  // golden run length in cycles
  uint64_t golden_events = 0;
  uint64_t hangs = 0;
  uint64_t aborted_transfers = 0;
  std::optional<int64_t> max_abort_delay;
  double runtime_s = 0;
  std::vector<FaultRecord> records;

  uint64_t target_bits() const {
    return (fault_class != FaultClass::port ? flop_bits : 0) +
           (fault_class != FaultClass::flop ? port_bits : 0);
  }
  uint64_t total_possible() const { return target_bits() * window; }
  uint64_t count(Outcome o) const { return buckets[static_cast<int>(o)]; }
  uint64_t incorrect_total() const {
    return count(Outcome::uncorrectable_incorrect) + count(Outcome::undetected_incorrect);
  }
  double percentage(Outcome o) const {
    return total_injected ? 100.0 * static_cast<double>(count(o)) / static_cast<double>(total_injected)
                          : 0.0;
  }
  bool watchdog_dominated() const { return total_injected > 0 && 2 * hangs > total_injected; }
};

inline Crossbar build_crossbar(const CampaignConfig& cfg) {
  return Crossbar(cfg.system, generate_scripts(cfg.system, cfg.seed, cfg.txns_per_manager));
}

inline FaultRunOptions campaign_run_options(const CampaignConfig& cfg) {
  FaultRunOptions o;
  const bool abort = cfg.system.design == Design::relobi && cfg.system.recovery == Recovery::abort_retry;
  o.comparison = abort ? Comparison::untimed : Comparison::timed;
  return o;
}

/// Fault list of a campaign, in fault-index order.
inline std::vector<FaultSpec> campaign_faults(const CampaignConfig& cfg, Crossbar& sys,
                                              uint64_t window, uint64_t* flop_bits = nullptr,
                                              uint64_t* port_bits = nullptr) {
  auto flops = enumerate_targets(sys, FaultKind::flop);
  auto ports = enumerate_targets(sys, FaultKind::port);
  if (flop_bits) *flop_bits = flops.size();
  if (port_bits) *port_bits = ports.size();
  std::vector<FaultTarget> targets;
  if (cfg.fault_class != FaultClass::port) targets = std::move(flops);
  if (cfg.fault_class != FaultClass::flop)
    targets.insert(targets.end(), ports.begin(), ports.end());
  if (cfg.exhaustive) return exhaustive_faults(targets, window, cfg.cycles_per_target);
  return sample_faults(targets, window, cfg.faults, mix64(cfg.seed ^ 0x6661756c74ull),
                       cfg.with_replacement);
}

inline FaultRecord to_record(const FaultSpec& spec, const FaultRunResult& r) {
  return {spec, r.outcome, r.hang, r.corrections, r.uncorrectables, r.max_abort_delay()};
}

/// Runs the golden simulation once, then every fault of the campaign on
/// `cfg.jobs` threads. Results are stored by fault index, so the report does
/// not depend on scheduling.
inline CampaignReport run_campaign(const CampaignConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  CampaignReport rep;
  rep.config_hash = config_hash(cfg);
  rep.seed = cfg.seed;
  rep.design = cfg.system.design;
  rep.recovery = cfg.system.recovery;
  rep.fault_class = cfg.fault_class;
  rep.exhaustive = cfg.exhaustive;

  Crossbar sys = build_crossbar(cfg);
  const GoldenReference gold(sys);
  rep.window = gold.end_cycle();
  rep.golden_events = gold.trace().size();
  const auto faults = campaign_faults(cfg, sys, rep.window, &rep.flop_bits, &rep.port_bits);
  const FaultRunOptions opt = campaign_run_options(cfg);

  rep.records.resize(faults.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < faults.size();)
      rep.records[i] = to_record(faults[i], run_with_fault(gold, faults[i], opt));
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(faults.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : rep.records) {
    ++rep.buckets[static_cast<int>(r.outcome)];
    rep.hangs += r.hang;
    if (r.abort_delay) {
      rep.aborted_transfers += 1;
      rep.max_abort_delay = std::max(rep.max_abort_delay.value_or(*r.abort_delay), *r.abort_delay);
    }
  }
  rep.total_injected = rep.records.size();
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// Report document. `runtime_s` is the only field that varies between
/// identical runs and is written last.
inline nlohmann::ordered_json report_to_json(const CampaignReport& r, bool with_runtime = true) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["design"] = to_string(r.design);
  j["recovery"] = to_string(r.recovery);
  j["fault_class"] = to_string(r.fault_class);
  j["mode"] = r.exhaustive ? "exhaustive" : "sampled";
  for (Outcome o : kAllOutcomes) j["buckets"][to_string(o)] = r.count(o);
  for (Outcome o : kAllOutcomes) j["percentages"][to_string(o)] = round2(r.percentage(o));
  j["totals"]["injected"] = r.total_injected;
  j["totals"]["possible"] = r.total_possible();
  j["totals"]["target_bits"] = r.target_bits();
  j["totals"]["flop_bits"] = r.flop_bits;
  j["totals"]["port_bits"] = r.port_bits;
  j["totals"]["window_cycles"] = r.window;
  j["golden_events"] = r.golden_events;
  j["hangs"] = r.hangs;
  j["watchdog_dominated"] = r.watchdog_dominated();
  if (r.design == Design::relobi && r.recovery == Recovery::abort_retry) {
    j["abort_retry"]["faults_with_aborts"] = r.aborted_transfers;
    if (r.max_abort_delay) j["abort_retry"]["max_extra_cycles"] = *r.max_abort_delay;
    else j["abort_retry"]["max_extra_cycles"] = nullptr;
  }
  if (with_runtime) j["runtime_s"] = r.runtime_s;
  return j;
}

inline std::string report_to_string(const CampaignReport& r, bool with_runtime = true) {
  return report_to_json(r, with_runtime).dump(2) + "\n";
}

inline void write_csv(std::ostream& os, const CampaignReport& r) {
  os << "fault_index,kind,path,bit,cycle,outcome\n";
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    os << i << ',' << to_string(rec.spec.target.kind) << ',' << rec.spec.target.path << ','
       << rec.spec.target.bit << ',' << rec.spec.cycle << ',' << to_string(rec.outcome) << '\n';
  }
}

/// Human-readable bucket table, percentages with two decimals.
inline std::string format_table(const CampaignReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-6s %12s %10s %10s %12s | %12s %10s\n", "design", "class",
                "injected", "masked", "corrected", "uncorr-ok", "uncorr-bad", "undetected");
  os << line;
  std::snprintf(line, sizeof line, "%-8s %-6s %12llu %9.2f%% %9.2f%% %11.2f%% | %11.2f%% %9.2f%%\n",
                to_string(r.design), to_string(r.fault_class),
                static_cast<unsigned long long>(r.total_injected), r.percentage(Outcome::masked),
                r.percentage(Outcome::corrected), r.percentage(Outcome::uncorrectable_correct),
                r.percentage(Outcome::uncorrectable_incorrect),
                r.percentage(Outcome::undetected_incorrect));
  os << line;
  std::snprintf(line, sizeof line, "possible faults: %llu (%llu target bits x %llu cycles)\n",
                static_cast<unsigned long long>(r.total_possible()),
                static_cast<unsigned long long>(r.target_bits()),
                static_cast<unsigned long long>(r.window));
  os << line;
  if (r.watchdog_dominated()) os << "warning: most faulty runs ended on the watchdog\n";
  return os.str();
}

}  // namespace relobi
