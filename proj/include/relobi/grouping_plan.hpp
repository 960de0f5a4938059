#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "relobi/bus_config.hpp"
#include "relobi/hsiao.hpp"

namespace relobi {

/// Maximum number of ECC groups per direction (A or R).
inline constexpr unsigned kMaxGroups = 8;

struct EccGroup {
  std::string name;
  std::vector<Signal> members;  // concatenated LSB first in this order
  HsiaoCode code;
};

/// The relOBI wire format: which handshakes are triplicated and how the
/// remaining signals are partitioned into SECDED-protected groups.
struct GroupingPlan {
  BusConfig bus;
  std::vector<Signal> tmr_signals;
  std::vector<EccGroup> groups;

  bool triplicated() const { return !tmr_signals.empty(); }
};

inline unsigned group_data_bits(const BusConfig& cfg, const std::vector<Signal>& members) {
  unsigned k = 0;
  for (Signal s : members) k += cfg.width(s);
  return k;
}

struct GroupSpec {
  std::string name;
  std::vector<Signal> members;
};

/// Builds a plan with Hsiao codes sized to each group. Members of zero width
/// are dropped and groups left empty are removed. With `coded == false` every
/// group gets the uncoded r = 0 code, giving the plain OBI wire format.
inline GroupingPlan make_plan(const BusConfig& cfg, const std::vector<Signal>& tmr,
                              const std::vector<GroupSpec>& groups, bool coded = true) {
  GroupingPlan plan;
  plan.bus = cfg;
  for (Signal s : tmr)
    if (cfg.width(s) > 0) plan.tmr_signals.push_back(s);
  for (const auto& g : groups) {
    EccGroup eg;
    eg.name = g.name;
    for (Signal s : g.members)
      if (cfg.width(s) > 0) eg.members.push_back(s);
    const unsigned k = group_data_bits(cfg, eg.members);
    if (k == 0) continue;
    eg.code = coded ? HsiaoCode::build(k) : HsiaoCode::uncoded(k);
    plan.groups.push_back(std::move(eg));
  }
  return plan;
}

inline std::vector<GroupSpec> default_group_specs() {
  return {
      {"addr", {Signal::addr, Signal::we}},
      {"wdata", {Signal::wdata, Signal::be}},
      {"a_ctrl",
       {Signal::aid, Signal::atop, Signal::memtype, Signal::prot, Signal::dbg, Signal::auser,
        Signal::wuser}},
      {"rdata", {Signal::rdata}},
      {"r_ctrl", {Signal::rid, Signal::err, Signal::exokay, Signal::ruser}},
  };
}

inline std::vector<Signal> handshake_signals() {
  return {Signal::req, Signal::gnt, Signal::rvalid, Signal::rready};
}

/// Default relOBI plan: handshakes triplicated, payload in five SECDED groups.
/// Over the default bus this is 40+43+30+39+13 codeword bits plus 12 handshake
/// wires, 177 in total.
inline GroupingPlan default_plan(const BusConfig& cfg) {
  return make_plan(cfg, handshake_signals(), default_group_specs());
}

/// Same grouping without TMR and without check bits.
inline GroupingPlan obi_plan(const BusConfig& cfg) {
  return make_plan(cfg, {}, default_group_specs(), false);
}

/// Same grouping, uncoded, for a plan read from a file.
inline GroupingPlan uncoded_variant(const GroupingPlan& plan) {
  std::vector<GroupSpec> specs;
  for (const auto& g : plan.groups) specs.push_back({g.name, g.members});
  return make_plan(plan.bus, {}, specs, false);
}

inline unsigned plan_width(const GroupingPlan& plan) {
  unsigned w = total_width(plan.bus);
  for (Signal s : plan.tmr_signals) w += 2 * plan.bus.width(s);
  for (const auto& g : plan.groups) w += g.code.check_bits();
  return w;
}

inline Channel group_channel(const EccGroup& g) {
  return g.members.empty() ? Channel::a : channel_of(g.members.front());
}

/// Structural checks: every signal of the bus is triplicated or in exactly one
/// group, groups never mix directions, and either all handshakes are
/// triplicated or none are.
inline void validate_plan(const GroupingPlan& plan) {
  const BusConfig& cfg = plan.bus;
  std::multiset<Signal> seen;
  for (Signal s : plan.tmr_signals) {
    if (channel_of(s) != Channel::handshake)
      throw std::invalid_argument("only handshake signals may be triplicated, got '" +
                                  std::string(to_string(s)) + "'");
    seen.insert(s);
  }
  unsigned per_dir[3] = {0, 0, 0};
  for (const auto& g : plan.groups) {
    if (g.members.empty()) throw std::invalid_argument("group '" + g.name + "' is empty");
    const Channel ch = channel_of(g.members.front());
    if (ch == Channel::handshake)
      throw std::invalid_argument("handshake signals cannot be ECC-protected");
    for (Signal s : g.members) {
      if (channel_of(s) != ch)
        throw std::invalid_argument("group '" + g.name + "' mixes A and R signals");
      if (cfg.width(s) == 0)
        throw std::invalid_argument("group '" + g.name + "' contains absent signal '" +
                                    std::string(to_string(s)) + "'");
      seen.insert(s);
    }
    if (g.code.data_bits() != group_data_bits(cfg, g.members))
      throw std::invalid_argument("group '" + g.name + "' code size does not match members");
    if (++per_dir[static_cast<int>(ch)] > kMaxGroups)
      throw std::invalid_argument("too many groups in one direction");
  }
  for (Signal s : kAllSignals) {
    if (cfg.width(s) == 0) continue;
    const auto n = seen.count(s);
    if (channel_of(s) == Channel::handshake && plan.tmr_signals.empty()) continue;
    if (n == 0)
      throw std::invalid_argument("signal '" + std::string(to_string(s)) + "' is not covered");
    if (n > 1)
      throw std::invalid_argument("signal '" + std::string(to_string(s)) +
                                  "' is covered more than once");
  }
}

// JSON description: {"tmr": [...], "groups": [{"name": ..., "members": [...]}]}.
// The codes are derived from the bus widths, k and r are informative only.

inline nlohmann::json plan_to_json(const GroupingPlan& plan) {
  nlohmann::json j;
  j["tmr"] = nlohmann::json::array();
  for (Signal s : plan.tmr_signals) j["tmr"].push_back(std::string(to_string(s)));
  j["groups"] = nlohmann::json::array();
  for (const auto& g : plan.groups) {
    nlohmann::json jg;
    jg["name"] = g.name;
    jg["members"] = nlohmann::json::array();
    for (Signal s : g.members) jg["members"].push_back(std::string(to_string(s)));
    jg["k"] = g.code.data_bits();
    jg["r"] = g.code.check_bits();
    j["groups"].push_back(jg);
  }
  return j;
}

inline Signal parse_signal(const nlohmann::json& v) {
  const auto s = signal_from_string(v.get<std::string>());
  if (!s) throw std::invalid_argument("unknown signal '" + v.get<std::string>() + "'");
  return *s;
}

inline GroupingPlan plan_from_json(const nlohmann::json& j, const BusConfig& cfg) {
  std::vector<Signal> tmr;
  for (const auto& v : j.at("tmr")) tmr.push_back(parse_signal(v));
  std::vector<GroupSpec> groups;
  for (const auto& jg : j.at("groups")) {
    GroupSpec g;
    g.name = jg.at("name").get<std::string>();
    for (const auto& v : jg.at("members")) g.members.push_back(parse_signal(v));
    groups.push_back(std::move(g));
  }
  GroupingPlan plan = make_plan(cfg, tmr, groups);
  validate_plan(plan);
  return plan;
}

}  // namespace relobi
