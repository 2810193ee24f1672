#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "reference_users.hpp"
#include "xqoe/scenario.hpp"

using namespace xqoe;

namespace {

json user_json() {
  return json::parse(R"({
    "antennas_cbs": 6, "antennas_rs": 3, "interference_paths": 3,
    "distance_m": 10, "path_loss_exp": 2,
    "tx_power_down_dbw": 30, "interference_power_down_dbw": 5,
    "chan_coeff_data_db": -1, "chan_coeff_intf_db": -3,
    "tx_power_up_dbw": 20, "interference_power_up_dbw": 5,
    "chan_coeff_data_up_db": -21, "chan_coeff_intf_up_db": -3,
    "bandwidth_hz": 5000000
  })");
}

std::string error_of(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

void expect_link_near(const LinkParams& a, const LinkParams& b) {
  EXPECT_EQ(a.antennas_cbs, b.antennas_cbs);
  EXPECT_EQ(a.antennas_rs, b.antennas_rs);
  EXPECT_EQ(a.interference_paths, b.interference_paths);
  LinkParams x = a, y = b;
  for (const char* name : detail::link_field_names())
    if (double* f = detail::link_field(x, name)) EXPECT_NEAR(*f / *detail::link_field(y, name), 1.0, 1e-12) << name;
}

}  // namespace

TEST(Scenario, BundledFileMatchesReferenceUsers) {
  const auto s = load_scenario(XQOE_SCENARIO_DIR "/reference_users.json");
  ASSERT_EQ(s.links.size(), 3u);
  for (int k = 1; k <= 3; ++k) expect_link_near(s.links[static_cast<std::size_t>(k - 1)], reference_users::user(k));
  EXPECT_EQ(s.attention[0].size(), 40u);
  EXPECT_EQ(s.attention[1].size(), 48u);
  EXPECT_EQ(s.attention[2].size(), 56u);
  EXPECT_EQ(s.zeta_seed, kDefaultZetaSeed);
  EXPECT_EQ(s.zeta_samples, kDefaultZetaSamples);
  EXPECT_EQ(s.modulations[0].kind, Modulation::dpsk);
  EXPECT_EQ(s.grid.fs_points, 50);
  EXPECT_EQ(s.grid.um_points, 50);
  EXPECT_DOUBLE_EQ(s.market.rra, 0.8);
}

TEST(Scenario, ContractBoxesScaleRenderByObjects) {
  const auto s = load_scenario(XQOE_SCENARIO_DIR "/reference_users.json");
  const auto c = contract_scenario(s);
  EXPECT_DOUBLE_EQ(c.boxes[2].lower.render_total, 56 * s.box_lower.render_total);
  EXPECT_DOUBLE_EQ(c.boxes[0].upper.render_total, 40 * s.box_upper.render_total);
  EXPECT_DOUBLE_EQ(c.boxes[1].upper.power_down, s.box_upper.power_down);
  EXPECT_DOUBLE_EQ(c.users[2].zeta_down, zeta(6, 7));
}

TEST(Scenario, LinearAndDecibelSpellingsAgree) {
  auto lin = user_json();
  lin.erase("tx_power_down_dbw");
  lin["tx_power_down"] = 1000.0;
  lin.erase("chan_coeff_data_db");
  lin["chan_coeff_data"] = db_to_linear(-1.0);
  auto dbm = user_json();
  dbm.erase("tx_power_down_dbw");
  dbm["tx_power_down_dbm"] = 60.0;
  expect_link_near(link_from_json(lin, "u"), link_from_json(user_json(), "u"));
  expect_link_near(link_from_json(dbm, "u"), link_from_json(user_json(), "u"));
}

TEST(Scenario, LinkJsonRoundTrip) {
  const auto p = reference_users::user(2);
  const auto q = link_from_json(link_to_json(p), "u");
  expect_link_near(q, p);
}

TEST(Scenario, MinimalFileUsesDefaults) {
  json j;
  j["users"] = json::array({user_json()});
  const auto s = parse_scenario(j);
  EXPECT_EQ(s.render_floor[0], 15.0);
  EXPECT_TRUE(s.attention[0].empty());
  EXPECT_EQ(s.bounds.rate_max, 42e6);
  EXPECT_THROW(contract_scenario(s), ConfigError);
}

TEST(Scenario, FieldErrors) {
  auto wrap = [](json u) {
    json j;
    j["users"] = json::array({u});
    return j;
  };
  auto u = user_json();
  u.erase("distance_m");
  EXPECT_EQ(error_of(wrap(u)), "scenario users[0]: missing 'distance_m'");

  u = user_json();
  u["tx_power_down"] = 1000.0;
  EXPECT_EQ(error_of(wrap(u)), "scenario users[0]: 'tx_power_down' given more than once");

  u = user_json();
  u["distance_m_db"] = 10.0;
  EXPECT_EQ(error_of(wrap(u)), "scenario users[0]: unknown field 'distance_m_db'");

  u = user_json();
  u["antennas_rs"] = 2.5;
  EXPECT_EQ(error_of(wrap(u)), "scenario users[0]: 'antennas_rs' must be an integer");

  u = user_json();
  u["antennas_rs"] = 0;
  EXPECT_EQ(error_of(wrap(u)), "scenario users[0]: antennas_rs must be >=1");

  u = user_json();
  u["modulation"] = "QAM";
  EXPECT_EQ(error_of(wrap(u)), "unknown modulation scheme 'QAM'");

  u = user_json();
  u["attention"] = {1, 0, 3};
  EXPECT_EQ(error_of(wrap(u)), "scenario users[0]: attention values must be finite and >0");

  EXPECT_EQ(error_of(json::object()), "scenario: 'users' must be a non-empty array");
}

TEST(Scenario, SectionErrors) {
  json j;
  j["users"] = json::array({user_json()});
  j["market"] = json::parse(R"({"base_fee_per_user": [1, 2], "qoe_fee_per_user": [1], "rra": 0.5, "inp_utility_floor": 1})");
  EXPECT_EQ(error_of(j), "market: fee sequences must have one entry per user");
  j.erase("market");
  j["boxes"] = json::parse(R"({"power_down_w": [1], "bandwidth_hz": [1, 2], "power_up_w": [1, 2], "render_per_object_k": [15, 20]})");
  EXPECT_EQ(error_of(j), "scenario boxes: 'power_down_w' must be [lower, upper]");
  j.erase("boxes");
  j["zeta"] = json::parse(R"({"samples": 1000, "seed": -3})");
  EXPECT_EQ(error_of(j), "scenario zeta: 'seed' must be a nonnegative integer");
  j.erase("zeta");
  j["bounds"] = json::parse(R"({"rate_min_bps": 5, "rate_max_bps": 4, "bep_min": 1e-8, "bep_max": 1e-2})");
  EXPECT_EQ(error_of(j), "bounds: rate_max must exceed rate_min");
}

TEST(Scenario, FileErrors) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
  const std::string path = ::testing::TempDir() + "broken.json";
  {
    std::ofstream f(path);
    f << "{\"users\": [";
  }
  EXPECT_THROW(load_scenario(path), ConfigError);
}
