// relobi: width report, conformance suites and fault-injection campaigns for
// the OBI / relOBI crossbar model.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "relobi/campaign.hpp"
#include "relobi/conformance.hpp"
#include "relobi/config.hpp"

namespace {

using namespace relobi;

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Overrides {
  std::string config;
  std::string output;
  std::optional<uint64_t> seed;
  std::optional<std::size_t> txns;
  std::optional<std::size_t> faults;
  std::optional<std::string> design;
  std::optional<std::string> fault_class;
  std::optional<std::string> recovery;
  std::optional<unsigned> jobs;
  std::optional<unsigned> cycles_per_target;
  bool exhaustive = false;
  std::string csv;
  bool json = false;
  bool corrupt_hmatrix = false;
};

CampaignConfig resolve(const Overrides& o) {
  CampaignConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.txns) c.txns_per_manager = *o.txns;
  if (o.faults) c.faults = *o.faults;
  if (o.design) c.system.design = parse_design(*o.design);
  if (o.fault_class) c.fault_class = parse_fault_class(*o.fault_class);
  if (o.recovery) c.system.recovery = parse_recovery(*o.recovery);
  if (o.jobs) c.jobs = *o.jobs;
  if (o.cycles_per_target) c.cycles_per_target = *o.cycles_per_target;
  if (o.exhaustive) c.exhaustive = true;
  return c;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

nlohmann::ordered_json widths_json(const CampaignConfig& c) {
  const BusConfig& bus = c.system.bus;
  const GroupingPlan plan = c.system.plan ? *c.system.plan : default_plan(bus);
  const unsigned total = total_width(bus);
  const unsigned rel = plan_width(plan);
  unsigned tmr = 0, check = 0;
  for (Signal s : plan.tmr_signals) tmr += 2 * bus.width(s);
  for (const auto& g : plan.groups) check += g.code.check_bits();
  nlohmann::ordered_json j;
  j["total_width"] = total;
  j["plan_width"] = rel;
  j["tmr_overhead"] = tmr;
  j["ecc_overhead"] = check;
  j["increase_percent"] = round2(100.0 * (rel - total) / total);
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : plan.groups) {
    nlohmann::ordered_json jg;
    jg["name"] = g.name;
    jg["k"] = g.code.data_bits();
    jg["r"] = g.code.check_bits();
    jg["members"] = nlohmann::ordered_json::array();
    for (Signal s : g.members) jg["members"].push_back(to_string(s));
    j["groups"].push_back(jg);
  }
  return j;
}

int cmd_widths(const Overrides& o) {
  const CampaignConfig c = resolve(o);
  const auto j = widths_json(c);
  if (!o.output.empty() && !write_file(o.output, j.dump(2) + "\n")) return kExitIo;
  if (o.json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  const double inc = j["increase_percent"].get<double>();
  std::printf("total_width   %u\n", j["total_width"].get<unsigned>());
  std::printf("plan_width    %u\n", j["plan_width"].get<unsigned>());
  std::printf("tmr_overhead  %u\n", j["tmr_overhead"].get<unsigned>());
  std::printf("ecc_overhead  %u\n", j["ecc_overhead"].get<unsigned>());
  std::printf("increase      %.0f%% (%.2f%%)\n", std::round(inc), inc);
  std::printf("\n%-8s %4s %4s  members\n", "group", "k", "r");
  for (const auto& g : j["groups"]) {
    std::string members;
    for (const auto& m : g["members"]) members += (members.empty() ? "" : ",") + m.get<std::string>();
    std::printf("%-8s %4u %4u  %s\n", g["name"].get<std::string>().c_str(), g["k"].get<unsigned>(),
                g["r"].get<unsigned>(), members.c_str());
  }
  return 0;
}

int cmd_conformance(const Overrides& o) {
  const CampaignConfig c = resolve(o);
  ConformanceOptions opt;
  opt.corrupt_hmatrix = o.corrupt_hmatrix;
  opt.txns = c.txns_per_manager;
  opt.seeds = {c.seed};
  const auto results = run_conformance(c, opt);
  bool ok = true;
  std::printf("%-46s %10s  %s\n", "suite", "checks", "result");
  for (const auto& r : results) {
    std::printf("%-46s %10zu  %s\n", r.name.c_str(), r.checks, r.passed ? "pass" : "FAIL");
    ok = ok && r.passed;
  }
  for (const auto& r : results)
    if (!r.passed) {
      std::cout << "\nfirst counterexample (" << r.name << "): " << r.counterexample << "\n";
      break;
    }
  return ok ? 0 : kExitFail;
}

int cmd_campaign(const Overrides& o) {
  const CampaignConfig c = resolve(o);
  const CampaignReport rep = run_campaign(c);
  const std::string path = o.output.empty() ? "report.json" : o.output;
  if (!write_file(path, report_to_string(rep))) return kExitIo;
  if (!o.csv.empty()) {
    std::ostringstream os;
    write_csv(os, rep);
    if (!write_file(o.csv, os.str())) return kExitIo;
  }
  std::cout << format_table(rep);
  std::cout << "report written to " << path << "\n";
  if (c.system.design == Design::relobi && rep.incorrect_total() > 0) return kExitFail;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OBI / relOBI crossbar fault-injection harness"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "JSON configuration file");
    sub->add_option("-o,--output", o.output, "output file");
    sub->add_option("--seed", o.seed, "workload and sampling seed");
    sub->add_option("--txns", o.txns, "transactions per manager");
    sub->add_option("--design", o.design, "obi or relobi")->check(CLI::IsMember({"obi", "relobi"}));
    sub->add_option("--recovery", o.recovery, "inline or abort-retry")
        ->check(CLI::IsMember({"inline", "abort-retry"}));
  };

  auto* widths = app.add_subcommand("widths", "print the wire budget of the bus and the relOBI plan");
  common(widths);
  widths->add_flag("--json", o.json, "print JSON instead of text");

  auto* conf = app.add_subcommand("conformance", "run the SECDED, voter and equivalence suites");
  common(conf);
  conf->add_flag("--corrupt-hmatrix", o.corrupt_hmatrix, "break one parity-check column (self test)");

  auto* camp = app.add_subcommand("campaign", "run a fault-injection campaign");
  common(camp);
  camp->add_option("--faults", o.faults, "number of sampled faults");
  camp->add_option("--fault-class", o.fault_class, "flop, port or both")
      ->check(CLI::IsMember({"flop", "port", "both"}));
  camp->add_option("--jobs", o.jobs, "parallel faulty runs")->check(CLI::PositiveNumber);
  camp->add_option("--csv", o.csv, "per-fault CSV log");
  camp->add_flag("--exhaustive", o.exhaustive, "every target at evenly spaced cycles");
  camp->add_option("--cycles-per-target", o.cycles_per_target, "cycles per target when exhaustive")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;  // usage errors share the configuration exit code
  }

  try {
    if (widths->parsed()) return cmd_widths(o);
    if (conf->parsed()) return cmd_conformance(o);
    if (camp->parsed()) return cmd_campaign(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DeadlockError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return 0;
}
