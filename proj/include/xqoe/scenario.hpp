#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contract.hpp"
#include "core_types.hpp"
#include "mimo_kpi.hpp"
#include "qoe.hpp"

namespace xqoe {

using json = nlohmann::json;

/// Scenario file contents. Link fields take a plain key for linear values or a
/// suffixed key (_db for ratios, _dbw / _dbm for powers) that is converted on load.
struct Scenario {
  std::vector<LinkParams> links;
  std::vector<ModulationScheme> modulations;
  std::vector<std::vector<double>> attention;  // per user, K per object; may be empty
  std::vector<double> render_floor;
  UnitPrices prices;
  MarketConstants market;
  KpiBounds bounds;
  ResourceBundle box_lower;  // render entries are per object
  ResourceBundle box_upper;
  ContractGrid grid;
  std::int64_t zeta_samples = kDefaultZetaSamples;
  std::uint64_t zeta_seed = kDefaultZetaSeed;
};

namespace detail {

inline const std::array<const char*, 14>& link_field_names() {
  static const std::array<const char*, 14> names = {
      "antennas_cbs",      "antennas_rs",        "interference_paths",  "distance_m",
      "path_loss_exp",     "tx_power_down",      "interference_power_down", "chan_coeff_data",
      "chan_coeff_intf",   "tx_power_up",        "interference_power_up",   "chan_coeff_data_up",
      "chan_coeff_intf_up", "bandwidth_hz"};
  return names;
}

inline double* link_field(LinkParams& p, const std::string& name) {
  if (name == "distance_m") return &p.distance_m;
  if (name == "path_loss_exp") return &p.path_loss_exp;
  if (name == "tx_power_down") return &p.tx_power_down;
  if (name == "interference_power_down") return &p.interference_power_down;
  if (name == "chan_coeff_data") return &p.chan_coeff_data;
  if (name == "chan_coeff_intf") return &p.chan_coeff_intf;
  if (name == "tx_power_up") return &p.tx_power_up;
  if (name == "interference_power_up") return &p.interference_power_up;
  if (name == "chan_coeff_data_up") return &p.chan_coeff_data_up;
  if (name == "chan_coeff_intf_up") return &p.chan_coeff_intf_up;
  if (name == "bandwidth_hz") return &p.bandwidth_hz;
  return nullptr;
}

/// Unit-suffixed spellings a link field accepts: powers in dBW or dBm, coefficients in dB.
inline std::vector<const char*> unit_suffixes(const std::string& name) {
  if (name.find("power") != std::string::npos) return {"_dbw", "_dbm"};
  if (name.find("chan_coeff") != std::string::npos) return {"_db"};
  return {};
}

inline double number_at(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::vector<double> numbers_at(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::array<double, 2> range_at(const json& j, const std::string& key, const std::string& where) {
  const auto v = numbers_at(j, key, where);
  if (v.size() != 2) throw ConfigError(where + ": '" + key + "' must be [lower, upper]");
  return {v[0], v[1]};
}

}  // namespace detail

inline LinkParams link_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": must be an object");
  LinkParams p;
  for (const char* raw : detail::link_field_names()) {
    const std::string name = raw;
    const bool is_count = name == "antennas_cbs" || name == "antennas_rs" || name == "interference_paths";
    int given = 0;
    if (j.contains(name)) {
      ++given;
      if (is_count) {
        if (!j.at(name).is_number_integer()) throw ConfigError(where + ": '" + name + "' must be an integer");
        const auto v = j.at(name).get<long long>();
        int& dst = name == "antennas_cbs" ? p.antennas_cbs : name == "antennas_rs" ? p.antennas_rs : p.interference_paths;
        dst = static_cast<int>(v);
      } else {
        *detail::link_field(p, name) = detail::number_at(j, name, where);
      }
    }
    if (is_count) {
      if (!given) throw ConfigError(where + ": missing '" + name + "'");
      continue;
    }
    for (const char* suffix : detail::unit_suffixes(name)) {
      const std::string key = name + suffix;
      if (!j.contains(key)) continue;
      ++given;
      const double v = detail::number_at(j, key, where);
      *detail::link_field(p, name) = std::string(suffix) == "_dbm" ? dbm_to_watts(v) : db_to_linear(v);
    }
    if (given == 0) throw ConfigError(where + ": missing '" + name + "'");
    if (given > 1) throw ConfigError(where + ": '" + name + "' given more than once");
  }
  return p;
}

inline json link_to_json(const LinkParams& p) {
  json j;
  j["antennas_cbs"] = p.antennas_cbs;
  j["antennas_rs"] = p.antennas_rs;
  j["interference_paths"] = p.interference_paths;
  LinkParams copy = p;
  for (const char* raw : detail::link_field_names()) {
    const std::string name = raw;
    if (double* f = detail::link_field(copy, name)) j[name] = *f;
  }
  return j;
}

inline Scenario parse_scenario(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario: top level must be an object");
  Scenario s;
  if (!j.contains("users") || !j.at("users").is_array() || j.at("users").empty())
    throw ConfigError("scenario: 'users' must be a non-empty array");
  const std::set<std::string> user_extras = {"modulation", "attention", "render_floor_k", "name"};
  std::size_t k = 0;
  for (const auto& u : j.at("users")) {
    ++k;
    const std::string where = "scenario users[" + std::to_string(k - 1) + "]";
    if (!u.is_object()) throw ConfigError(where + ": must be an object");
    json link = u;
    for (const auto& e : user_extras) link.erase(e);
    const auto p = link_from_json(link, where);
    for (auto it = link.begin(); it != link.end(); ++it) {
      const std::string key = it.key();
      bool known = false;
      for (const char* raw : detail::link_field_names()) {
        if (key == raw) known = true;
        for (const char* suffix : detail::unit_suffixes(raw))
          if (key == std::string(raw) + suffix) known = true;
      }
      if (!known) throw ConfigError(where + ": unknown field '" + key + "'");
    }
    const auto errors = validate(p);
    if (!errors.empty()) throw ConfigError(where + ": " + errors.front().message);
    s.links.push_back(p);
    s.modulations.push_back(ModulationScheme::from_name(u.value("modulation", std::string("DPSK"))));
    s.attention.push_back(u.contains("attention") ? detail::numbers_at(u, "attention", where) : std::vector<double>{});
    for (double v : s.attention.back())
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + ": attention values must be finite and >0");
    s.render_floor.push_back(u.contains("render_floor_k") ? detail::number_at(u, "render_floor_k", where) : 15.0);
  }
  const std::size_t n = s.links.size();

  if (j.contains("prices")) {
    const auto& p = j.at("prices");
    s.prices.power_down = detail::number_at(p, "power_down_per_kw", "scenario prices");
    s.prices.bandwidth = detail::number_at(p, "bandwidth_per_mhz", "scenario prices");
    s.prices.power_up = detail::number_at(p, "power_up_per_kw", "scenario prices");
    s.prices.render = detail::number_at(p, "render_per_k", "scenario prices");
  }
  if (j.contains("market")) {
    const auto& m = j.at("market");
    s.market.base_fee_per_user = detail::numbers_at(m, "base_fee_per_user", "scenario market");
    s.market.qoe_fee_per_user = detail::numbers_at(m, "qoe_fee_per_user", "scenario market");
    s.market.rra = detail::number_at(m, "rra", "scenario market");
    s.market.inp_utility_floor = detail::number_at(m, "inp_utility_floor", "scenario market");
    require_valid(s.market, n);
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    s.bounds.rate_min = detail::number_at(b, "rate_min_bps", "scenario bounds");
    s.bounds.rate_max = detail::number_at(b, "rate_max_bps", "scenario bounds");
    s.bounds.bep_min = detail::number_at(b, "bep_min", "scenario bounds");
    s.bounds.bep_max = detail::number_at(b, "bep_max", "scenario bounds");
    require_valid(s.bounds);
  }
  if (j.contains("boxes")) {
    const auto& b = j.at("boxes");
    const auto pd = detail::range_at(b, "power_down_w", "scenario boxes");
    const auto bw = detail::range_at(b, "bandwidth_hz", "scenario boxes");
    const auto pu = detail::range_at(b, "power_up_w", "scenario boxes");
    const auto rk = detail::range_at(b, "render_per_object_k", "scenario boxes");
    s.box_lower = {pd[0], bw[0], pu[0], rk[0]};
    s.box_upper = {pd[1], bw[1], pu[1], rk[1]};
  }
  if (j.contains("contract_grid")) {
    const auto& g = j.at("contract_grid");
    const auto fs = detail::range_at(g, "fixed_fee", "scenario contract_grid");
    const auto um = detail::range_at(g, "per_qoe_fee", "scenario contract_grid");
    s.grid.fs_min = fs[0];
    s.grid.fs_max = fs[1];
    s.grid.um_min = um[0];
    s.grid.um_max = um[1];
    s.grid.fs_points = static_cast<int>(detail::number_at(g, "fixed_fee_points", "scenario contract_grid"));
    s.grid.um_points = static_cast<int>(detail::number_at(g, "per_qoe_fee_points", "scenario contract_grid"));
    require_valid(s.grid);
  }
  if (j.contains("zeta")) {
    const auto& z = j.at("zeta");
    s.zeta_samples = static_cast<std::int64_t>(detail::number_at(z, "samples", "scenario zeta"));
    if (!z.contains("seed") || !z.at("seed").is_number_unsigned())
      throw ConfigError("scenario zeta: 'seed' must be a nonnegative integer");
    s.zeta_seed = z.at("seed").get<std::uint64_t>();
    if (s.zeta_samples < 1) throw ConfigError("scenario zeta: samples must be >=1");
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open scenario '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  return parse_scenario(j);
}

inline double scenario_zeta(const Scenario& s, const LinkParams& p) {
  return zeta(p.antennas_cbs, p.antennas_rs, s.zeta_samples, s.zeta_seed);
}

/// Users with link, zeta, modulation and attention, ready for MI evaluation.
inline std::vector<QoeUser> qoe_users(const Scenario& s) {
  std::vector<QoeUser> out;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    QoeUser u;
    u.link = s.links[i];
    u.zeta_down = scenario_zeta(s, u.link);
    u.zeta_up = u.zeta_down;
    u.modulation = s.modulations[i];
    u.attention = s.attention[i];
    u.render_floor = s.render_floor[i];
    out.push_back(std::move(u));
  }
  return out;
}

inline ContractScenario contract_scenario(const Scenario& s) {
  ContractScenario c;
  c.users = qoe_users(s);
  for (std::size_t i = 0; i < c.users.size(); ++i) {
    if (c.users[i].attention.empty())
      throw ConfigError("scenario users[" + std::to_string(i) + "]: contract needs an 'attention' list");
    const double n = static_cast<double>(c.users[i].attention.size());
    ResourceBox b{s.box_lower, s.box_upper};
    b.lower.render_total *= n;
    b.upper.render_total *= n;
    c.boxes.push_back(b);
  }
  c.prices = s.prices;
  c.market = s.market;
  c.bounds = s.bounds;
  return c;
}

}  // namespace xqoe
