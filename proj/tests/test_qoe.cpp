#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "reference_users.hpp"
#include "xqoe/qoe.hpp"

using namespace xqoe;

namespace {

std::vector<double> random_attention(std::uint64_t seed, int n) {
  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<int> lv(1, 5);
  std::vector<double> k(static_cast<std::size_t>(n));
  for (auto& v : k) v = lv(eng);
  return k;
}

QoeUser user3() {
  QoeUser u;
  u.link = reference_users::user(3);
  u.zeta_down = zeta(6, 7);
  u.zeta_up = u.zeta_down;
  u.attention = random_attention(3, 56);
  u.render_floor = 15.0;
  return u;
}

ResourceBundle base_bundle(const QoeUser& u) {
  return {u.link.tx_power_down, u.link.bandwidth_hz, u.link.tx_power_up, 20.0 * static_cast<double>(u.attention.size())};
}

}  // namespace

TEST(Normalize, Endpoints) {
  EXPECT_EQ(normalize(3.0, 3.0, 7.0).value, 0.0);
  EXPECT_EQ(normalize(7.0, 3.0, 7.0).value, 1.0);
  EXPECT_FALSE(normalize(5.0, 3.0, 7.0).out_of_range);
}

TEST(Normalize, RateMidpointIsHalf) {
  const KpiBounds b;
  EXPECT_DOUBLE_EQ(normalize_rate(26e6, b).value, 0.5);
}

TEST(Normalize, OutOfRangeIsFlaggedNotClamped) {
  const auto lo = normalize(1.0, 3.0, 7.0);
  EXPECT_DOUBLE_EQ(lo.value, -0.5);
  EXPECT_TRUE(lo.out_of_range);
  const auto hi = normalize(9.0, 3.0, 7.0);
  EXPECT_DOUBLE_EQ(hi.value, 1.5);
  EXPECT_TRUE(hi.out_of_range);
  EXPECT_THROW(normalize(1.0, 2.0, 2.0), ConfigError);
}

TEST(Normalize, ReliabilityUsesOneMinusBep) {
  const KpiBounds b;
  EXPECT_NEAR(normalize_reliability(1e-2, b).value, 0.0, 1e-15);
  EXPECT_NEAR(normalize_reliability(1e-8, b).value, 1.0, 1e-12);
  EXPECT_TRUE(normalize_reliability(0.2, b).out_of_range);
}

TEST(MetaImmersion, AllFloorIsZero) {
  const std::vector<double> k = {5, 2, 1};
  EXPECT_EQ(meta_immersion(30e6, 1e-4, KpiBounds{}, k, {15, 15, 15}, 15), 0.0);
}

TEST(MetaImmersion, RateAtMinimumIsZero) {
  const std::vector<double> k = {5, 2, 1};
  EXPECT_EQ(meta_immersion(10e6, 1e-4, KpiBounds{}, k, {40, 20, 30}, 15), 0.0);
}

TEST(MetaImmersion, ProductOfFactors) {
  const std::vector<double> k = {5, 2};
  const std::vector<double> p = {30, 20};
  const double render = 5 * std::log(2.0) + 2 * std::log(20.0 / 15.0);
  const double tr = (26e6 - 10e6) / 32e6;
  const double te = ((1 - 1e-3) - (1 - 1e-2)) / (1e-2 - 1e-8);
  EXPECT_NEAR(meta_immersion(26e6, 1e-3, KpiBounds{}, k, p, 15), tr * te * render, 1e-12);
}

TEST(MetaImmersion, MarginalMatchesWeberFechner) {
  // At fixed KPIs, dM/dP_n = C K_n / P_n with C the product of the two normalized KPIs.
  const KpiBounds b;
  const std::vector<double> k = random_attention(11, 8);
  std::vector<double> p = {22, 31, 17, 40, 25, 19, 28, 35};
  const double c = normalize_rate(30e6, b).value * normalize_reliability(2e-4, b).value;
  for (std::size_t n = 0; n < p.size(); ++n) {
    const double h = 1e-4 * p[n];
    auto up = p, dn = p;
    up[n] += h;
    dn[n] -= h;
    const double fd = (meta_immersion(30e6, 2e-4, b, k, up, 15) - meta_immersion(30e6, 2e-4, b, k, dn, 15)) / (2 * h);
    EXPECT_NEAR(fd / (c * k[n] / p[n]), 1.0, 1e-4) << "object " << n;
  }
}

TEST(MetaImmersion, AttentionBeatsUniformForThirdUser) {
  const auto u = user3();
  const double total = 56 * 20.0;
  const std::vector<double> uniform(56, total / 56);
  const auto aware = water_fill({u.attention, total, 15.0});
  const double mu = meta_immersion(31.5e6, 7e-4, KpiBounds{}, u.attention, uniform, 15.0);
  const double ma = meta_immersion(31.5e6, 7e-4, KpiBounds{}, u.attention, aware, 15.0);
  EXPECT_GT(ma, mu);
}

TEST(LatencyHook, LinearMultiplier) {
  EXPECT_EQ(latency_hook(8.0, 0.0, 10.0).multiplier, 1.0);
  EXPECT_EQ(latency_hook(8.0, 10.0, 10.0).mi, 0.0);
  EXPECT_DOUBLE_EQ(latency_hook(8.0, 5.0, 10.0).multiplier, 0.5);
  const auto over = latency_hook(8.0, 11.0, 10.0);
  EXPECT_TRUE(over.over_budget);
  EXPECT_EQ(over.mi, 0.0);
}

TEST(EvaluateMi, ConsistentWithComponents) {
  const auto u = user3();
  const auto theta = base_bundle(u);
  const auto r = evaluate_mi(u, KpiBounds{}, theta);
  const double sum = std::accumulate(r.per_object_render.begin(), r.per_object_render.end(), 0.0);
  EXPECT_NEAR(sum, theta.render_total, 1e-9 * theta.render_total);
  for (double v : r.per_object_render) EXPECT_GE(v, 15.0);
  EXPECT_NEAR(r.rate_bps, downlink_rate(u.link, u.zeta_down).value, 1e-6);
  EXPECT_NEAR(r.bep, uplink_bep(u.link, u.zeta_up, u.modulation).value, 1e-18);
  EXPECT_FALSE(r.kpi_out_of_range);
  EXPECT_GT(r.mi, 0.0);
}

TEST(EvaluateMi, InfeasibleRenderBudgetThrows) {
  auto u = user3();
  auto theta = base_bundle(u);
  theta.render_total = 56 * 14.0;
  EXPECT_THROW(evaluate_mi(u, KpiBounds{}, theta), InfeasibleError);
}

TEST(EvaluateMi, NondecreasingInEachResource) {
  const auto u = user3();
  const auto base = base_bundle(u);
  for (std::size_t d = 0; d < 4; ++d) {
    double prev = -1.0;
    for (double f : {0.6, 0.8, 1.0, 1.25, 1.5}) {
      auto t = base;
      t[d] *= f;
      if (d == 3) t[d] = std::max(t[d], 56 * 15.0);
      const double m = evaluate_mi(u, KpiBounds{}, t).mi;
      EXPECT_GE(m, prev) << "dimension " << d << " factor " << f;
      prev = m;
    }
  }
}

class Concavity : public ::testing::TestWithParam<Resource> {};

TEST_P(Concavity, SecondDerivativeNotPositive) {
  const auto u = user3();
  const auto base = base_bundle(u);
  const double x0 = base[resource_index(GetParam())];
  const auto rep = concavity_probe(GetParam(), u, KpiBounds{}, base, linear_grid(0.8 * x0, 1.6 * x0, 9));
  EXPECT_LE(rep.max_second_derivative, 1e-6 * rep.scale);
  if (GetParam() == Resource::bandwidth) {
    for (double d2 : rep.second_derivatives) EXPECT_LE(std::abs(d2), 1e-6 * rep.scale);
  } else {
    // Strict curvature well above the noise floor, so the probe is not vacuous.
    for (double d2 : rep.second_derivatives) EXPECT_LT(d2, -1e-6 * rep.scale);
  }
}

INSTANTIATE_TEST_SUITE_P(Resources, Concavity,
                         ::testing::Values(Resource::power_down, Resource::bandwidth, Resource::power_up,
                                           Resource::render_total));

TEST(ConcavityProbe, RejectsShortOrUnevenGrids) {
  const auto u = user3();
  EXPECT_THROW(concavity_probe(Resource::bandwidth, u, KpiBounds{}, base_bundle(u), {1e6, 2e6, 3e6}), ConfigError);
  EXPECT_THROW(concavity_probe(Resource::bandwidth, u, KpiBounds{}, base_bundle(u), {1e6, 2e6, 3e6, 5e6, 6e6}),
               ConfigError);
}

TEST(Resource, NamesRoundTrip) {
  EXPECT_EQ(resource_from_name("render_total"), Resource::render_total);
  EXPECT_THROW(resource_from_name("latency"), ConfigError);
}
