#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "relobi/crossbar.hpp"
#include "relobi/grouping_plan.hpp"

namespace relobi {

enum class FaultClass : uint8_t { flop, port, both };

inline constexpr const char* to_string(FaultClass f) {
  switch (f) {
    case FaultClass::flop: return "flop";
    case FaultClass::port: return "port";
    case FaultClass::both: return "both";
  }
  return "?";
}

/// Campaign parameters. `jobs` only affects scheduling and is not part of
/// the configuration hash.
struct CampaignConfig {
  SystemConfig system;
  std::size_t txns_per_manager = 1000;
  uint64_t seed = 1;
  FaultClass fault_class = FaultClass::both;
  std::size_t faults = 10000;
  bool exhaustive = false;
  unsigned cycles_per_target = 16;
  bool with_replacement = false;
  unsigned jobs = 1;
};

/// Malformed or inconsistent configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Design parse_design(const std::string& s) {
  if (s == "obi") return Design::obi;
  if (s == "relobi") return Design::relobi;
  throw ConfigError("design must be 'obi' or 'relobi', got '" + s + "'");
}

inline Recovery parse_recovery(const std::string& s) {
  if (s == "inline") return Recovery::inline_correction;
  if (s == "abort-retry") return Recovery::abort_retry;
  throw ConfigError("recovery must be 'inline' or 'abort-retry', got '" + s + "'");
}

inline FaultClass parse_fault_class(const std::string& s) {
  if (s == "flop") return FaultClass::flop;
  if (s == "port") return FaultClass::port;
  if (s == "both") return FaultClass::both;
  throw ConfigError("fault class must be 'flop', 'port' or 'both', got '" + s + "'");
}

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

// Addresses are given as numbers or as "0x..." strings.
inline uint64_t read_address(const nlohmann::json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::size_t pos = 0;
    try {
      const uint64_t x = std::stoull(s, &pos, 0);
      if (pos == s.size()) return x;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("bad address value for " + what);
}

inline std::string hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

inline BusConfig bus_from_json(const nlohmann::json& j) {
  using detail::read;
  const std::string w = "'bus'";
  detail::check_keys(j,
                     {"addr_width", "data_width", "id_width", "atop_width", "memtype_width",
                      "prot_width", "dbg_width", "auser_width", "wuser_width", "ruser_width",
                      "has_rready", "has_err", "has_exokay"},
                     w);
  BusConfig b;
  read(j, "addr_width", b.addr_width, w);
  read(j, "data_width", b.data_width, w);
  read(j, "id_width", b.id_width, w);
  read(j, "atop_width", b.atop_width, w);
  read(j, "memtype_width", b.memtype_width, w);
  read(j, "prot_width", b.prot_width, w);
  read(j, "dbg_width", b.dbg_width, w);
  read(j, "auser_width", b.auser_width, w);
  read(j, "wuser_width", b.wuser_width, w);
  read(j, "ruser_width", b.ruser_width, w);
  read(j, "has_rready", b.has_rready, w);
  read(j, "has_err", b.has_err, w);
  read(j, "has_exokay", b.has_exokay, w);
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return b;
}

inline nlohmann::json bus_to_json(const BusConfig& b) {
  return {{"addr_width", b.addr_width},       {"data_width", b.data_width},
          {"id_width", b.id_width},           {"atop_width", b.atop_width},
          {"memtype_width", b.memtype_width}, {"prot_width", b.prot_width},
          {"dbg_width", b.dbg_width},         {"auser_width", b.auser_width},
          {"wuser_width", b.wuser_width},     {"ruser_width", b.ruser_width},
          {"has_rready", b.has_rready},       {"has_err", b.has_err},
          {"has_exokay", b.has_exokay}};
}

/// Reads a campaign configuration. Absent keys keep their defaults.
inline CampaignConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  CampaignConfig c;
  detail::check_keys(j, {"design", "recovery", "bus", "plan", "topology", "subordinate", "campaign"},
                     "configuration");
  if (j.contains("design")) c.system.design = parse_design(j["design"].get<std::string>());
  if (j.contains("recovery")) c.system.recovery = parse_recovery(j["recovery"].get<std::string>());
  if (j.contains("bus")) c.system.bus = bus_from_json(j["bus"]);

  if (j.contains("plan")) {
    try {
      c.system.plan = plan_from_json(j["plan"], c.system.bus);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad 'plan': ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bad 'plan': ") + e.what());
    }
  }

  auto& topo = c.system.topology;
  bool explicit_regions = false;
  if (j.contains("topology")) {
    const auto& t = j["topology"];
    const std::string w = "'topology'";
    detail::check_keys(t, {"managers", "subordinates", "pipeline_in", "pipeline_out", "regions"}, w);
    read(t, "managers", topo.n_managers, w);
    read(t, "subordinates", topo.n_subordinates, w);
    read(t, "pipeline_in", topo.pipeline_in, w);
    read(t, "pipeline_out", topo.pipeline_out, w);
    if (t.contains("regions")) {
      if (!t["regions"].is_array()) throw ConfigError("'regions' must be an array");
      std::vector<Region> rs;
      for (const auto& r : t["regions"]) {
        detail::check_keys(r, {"base", "size", "subordinate"}, "region");
        if (!r.contains("base") || !r.contains("size") || !r.contains("subordinate"))
          throw ConfigError("region needs 'base', 'size' and 'subordinate'");
        Region reg;
        reg.base = detail::read_address(r["base"], "region base");
        reg.size = detail::read_address(r["size"], "region size");
        read(r, "subordinate", reg.subordinate, "region");
        rs.push_back(reg);
      }
      topo.map = AddressMap(std::move(rs));
      explicit_regions = true;
    }
  }
  if (!explicit_regions) topo.map = AddressMap::uniform(topo.n_subordinates);
  try {
    topo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("subordinate")) {
    const auto& s = j["subordinate"];
    detail::check_keys(s, {"gnt_latency", "r_latency"}, "'subordinate'");
    read(s, "gnt_latency", c.system.subordinate.gnt_latency, "'subordinate'");
    read(s, "r_latency", c.system.subordinate.r_latency, "'subordinate'");
    if (c.system.subordinate.r_latency == 0) throw ConfigError("r_latency must be at least 1");
  }

  if (j.contains("campaign")) {
    const auto& k = j["campaign"];
    const std::string w = "'campaign'";
    detail::check_keys(k,
                       {"txns_per_manager", "seed", "fault_class", "faults", "exhaustive",
                        "cycles_per_target", "with_replacement", "jobs"},
                       w);
    read(k, "txns_per_manager", c.txns_per_manager, w);
    read(k, "seed", c.seed, w);
    if (k.contains("fault_class")) c.fault_class = parse_fault_class(k["fault_class"].get<std::string>());
    read(k, "faults", c.faults, w);
    read(k, "exhaustive", c.exhaustive, w);
    read(k, "cycles_per_target", c.cycles_per_target, w);
    read(k, "with_replacement", c.with_replacement, w);
    read(k, "jobs", c.jobs, w);
    if (c.cycles_per_target == 0) throw ConfigError("cycles_per_target must be positive");
  }
  return c;
}

/// Parses a configuration file. An empty path yields the defaults.
inline CampaignConfig load_config(const std::string& path) {
  if (path.empty()) return CampaignConfig{};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

/// Canonical form with every value spelled out, including the plan in use.
inline nlohmann::json config_to_json(const CampaignConfig& c) {
  nlohmann::json j;
  j["design"] = to_string(c.system.design);
  j["recovery"] = to_string(c.system.recovery);
  j["bus"] = bus_to_json(c.system.bus);
  j["plan"] = plan_to_json(c.system.plan ? *c.system.plan : default_plan(c.system.bus));
  const auto& t = c.system.topology;
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : t.map.regions())
    regions.push_back({{"base", detail::hex(r.base)}, {"size", detail::hex(r.size)},
                       {"subordinate", r.subordinate}});
  j["topology"] = {{"managers", t.n_managers},
                   {"subordinates", t.n_subordinates},
                   {"pipeline_in", t.pipeline_in},
                   {"pipeline_out", t.pipeline_out},
                   {"regions", regions}};
  j["subordinate"] = {{"gnt_latency", c.system.subordinate.gnt_latency},
                      {"r_latency", c.system.subordinate.r_latency}};
  j["campaign"] = {{"txns_per_manager", c.txns_per_manager},
                   {"seed", c.seed},
                   {"fault_class", to_string(c.fault_class)},
                   {"faults", c.faults},
                   {"exhaustive", c.exhaustive},
                   {"cycles_per_target", c.cycles_per_target},
                   {"with_replacement", c.with_replacement}};
  return j;
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const CampaignConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(c).dump())));
  return buf;
}

}  // namespace relobi
