#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "xqoe/contract.hpp"
#include "xqoe/scenario.hpp"

using namespace xqoe;

namespace {

const Scenario& bundled() {
  static const Scenario s = load_scenario(XQOE_SCENARIO_DIR "/reference_users.json");
  return s;
}

const ContractScenario& market() {
  static const ContractScenario c = contract_scenario(bundled());
  return c;
}

InnerCache& shared_cache() {
  static InnerCache cache(market());
  return cache;
}

// One user, one resource free: rendering over two objects with the KPI factor frozen at 1.
ContractScenario render_only_toy() {
  ContractScenario s;
  QoeUser u;
  u.attention = {2.0, 3.0};
  u.render_floor = 15.0;
  s.users = {u};
  ResourceBox b;
  b.lower = {1000, 4e6, 500, 30};
  b.upper = {1000, 4e6, 500, 2000};
  s.boxes = {b};
  s.prices = {3, 2, 4, 5};
  s.market = {{0.0}, {0.0}, 0.0, 0.0};
  s.frozen_kpi_factor = 1.0;
  return s;
}

// Golden-section maximum of a unimodal function on [a, b].
template <typename F>
double golden_max(F f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < 200 && b - a > 1e-12 * b; ++k) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST(Revenue, FixedPlusPerQoe) {
  EXPECT_EQ(inp_revenue({250.0, 0.0}, {1, 2, 3}), 250.0);
  EXPECT_EQ(inp_revenue({0.0, 1.0}, {1, 2, 3}), 6.0);
  EXPECT_EQ(inp_revenue({10.0, 2.0}, {1, 2, 3}), 22.0);
}

TEST(Crra, KnownValues) {
  EXPECT_EQ(crra(123.0, 0.0), 123.0);
  EXPECT_EQ(crra(-4.0, 0.0), -4.0);
  EXPECT_DOUBLE_EQ(crra(1.0, 0.8), 5.0);
  EXPECT_NEAR(crra(248832.0, 0.8), 60.0, 1e-9);
  EXPECT_EQ(crra(0.0, 0.8), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(crra(-1.0, 0.5), -std::numeric_limits<double>::infinity());
  EXPECT_THROW(crra(1.0, 1.0), ConfigError);
}

TEST(MspUtility, KnownValues) {
  const MarketConstants m{{10, 20}, {3, 4}, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(msp_utility({5.0, 1.0}, m, {2, 3}), 10 + 2 * 2 + 20 + 3 * 3 - 5.0);
  EXPECT_THROW(msp_utility({0, 0}, m, {1}), ConfigError);
}

TEST(Inner, FreeMiPricesEverythingToLowerCorner) {
  const auto sol = optimize_inner({0.0, 0.0}, market());
  for (std::size_t i = 0; i < sol.users.size(); ++i)
    for (std::size_t d = 0; d < 4; ++d)
      EXPECT_DOUBLE_EQ(sol.users[i].theta[d], market().boxes[i].lower[d]) << "user " << i << " dim " << d;
}

TEST(Inner, FixedFeeDoesNotMoveBundles) {
  const auto base = optimize_inner({0.0, 1e5}, market());
  for (double fs : {50.0, 100.0}) {
    const auto other = optimize_inner({fs, 1e5}, market());
    for (std::size_t i = 0; i < base.users.size(); ++i)
      for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(other.users[i].theta[d], base.users[i].theta[d]);
  }
}

TEST(Inner, RenderOnlyMatchesGoldenSection) {
  const auto s = render_only_toy();
  for (double um : {2e4, 1e5, 4e5}) {
    const auto sol = optimize_inner({0.0, um}, s);
    // Both objects stay above the floor here, so allocations are proportional to K.
    auto f = [&](double r) {
      double m = 0.0;
      for (double k : {2.0, 3.0}) m += k * std::log(k * r / 5.0 / 15.0);
      return um * m - 5.0 * r * r;
    };
    const double r_star = golden_max(f, 30.0, 2000.0);
    EXPECT_NEAR(sol.users[0].theta.render_total / r_star, 1.0, 1e-4) << "u_M " << um;
    EXPECT_NEAR(r_star, std::sqrt(um * 5.0 / 10.0), 1e-6 * r_star);
    EXPECT_TRUE(sol.converged());
  }
}

TEST(Inner, IncentiveCompatibleUnderPerturbation) {
  for (double um : {6e4, 1e5, 2e5}) {
    const auto inner = shared_cache().get(um);
    const auto rep = ic_check(market(), *inner, 100, 0.05, 7);
    EXPECT_EQ(rep.draws, 100);
    EXPECT_TRUE(rep.ok()) << "u_M " << um << " gain " << rep.max_gain << " tol " << rep.tolerance;
  }
}

TEST(Inner, ArgmaxIndependentOfRiskAversion) {
  // Check at the CRRA level: with the fixed fee keeping wealth positive, no perturbed
  // bundle reaches a higher CRRA utility than the optimum for either rra.
  const double um = 1e5;
  const auto inner = shared_cache().get(um);
  const auto& s = market();
  const double fs = 2e6;
  auto eng = make_engine(11, 0x7A);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (double tau : {0.0, 0.5, 0.8}) {
    auto w = [&](const std::vector<ResourceBundle>& bundles) {
      double mi = 0.0;
      for (std::size_t i = 0; i < bundles.size(); ++i) mi += evaluate_mi(s.users[i], s.bounds, bundles[i]).mi;
      const double wealth = fs + um * mi - total_cost(bundles, s.prices);
      return tau == 0.0 ? wealth : std::pow(wealth, 1.0 - tau) / (1.0 - tau);
    };
    const double best = w(inner->bundles());
    for (int k = 0; k < 40; ++k) {
      auto b = inner->bundles();
      for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t d = 0; d < 4; ++d) b[i][d] *= 1.0 + jitter(eng);
        b[i] = s.boxes[i].project(b[i]);
      }
      EXPECT_LE(w(b), best + 1e-9 * std::abs(best)) << "rra " << tau;
    }
  }
}

TEST(Inner, RejectsRenderBoxBelowFloor) {
  auto s = market();
  s.boxes[0].lower.render_total = 14.0 * static_cast<double>(s.users[0].attention.size());
  EXPECT_THROW(optimize_inner({0.0, 1.0}, s), InfeasibleError);
  s = market();
  s.prices.render = 0.0;
  EXPECT_THROW(optimize_inner({0.0, 1.0}, s), ConfigError);
}

TEST(Surface, UtilitiesMatchDefinitions) {
  ContractSurface surf;
  const auto sol = optimize_contract(market(), bundled().grid, shared_cache(), &surf);
  const auto& g = bundled().grid;
  ASSERT_EQ(surf.points.size(), static_cast<std::size_t>(g.fs_points * g.um_points));
  for (std::size_t k = 0; k < surf.points.size(); k += 37) {
    const auto& p = surf.points[k];
    const auto& inner = *surf.inner[k / static_cast<std::size_t>(g.fs_points)];
    const double wealth = p.fixed_fee + p.per_qoe_fee * inner.mi_total() - inner.cost_total();
    const double expected = wealth > 0.0 ? std::pow(wealth, 0.2) / 0.2 : -std::numeric_limits<double>::infinity();
    if (std::isfinite(expected))
      EXPECT_NEAR(p.inp_utility, expected, 1e-12 * std::abs(expected));
    else
      EXPECT_EQ(p.inp_utility, expected);
    EXPECT_EQ(p.feasible, p.inp_utility >= market().market.inp_utility_floor);
  }
  EXPECT_TRUE(sol.ir_satisfied);
  EXPECT_TRUE(sol.inner_converged);
}

TEST(Surface, InpUtilityIncreasesWithBothFees) {
  ContractSurface surf;
  optimize_contract(market(), bundled().grid, shared_cache(), &surf);
  const auto& g = bundled().grid;
  auto at = [&](int um, int fs) { return surf.points[static_cast<std::size_t>(um * g.fs_points + fs)]; };
  for (int um = 0; um < g.um_points; ++um)
    for (int fs = 1; fs < g.fs_points; ++fs) {
      EXPECT_GE(at(um, fs).inp_utility, at(um, fs - 1).inp_utility);
      EXPECT_LT(at(um, fs).msp_utility, at(um, fs - 1).msp_utility);
    }
  // The inner value u_M * MI - cost is a maximum of functions nondecreasing in u_M.
  for (int fs = 0; fs < g.fs_points; fs += 7)
    for (int um = 1; um < g.um_points; ++um) {
      const double a = at(um - 1, fs).inp_utility, b = at(um, fs).inp_utility;
      if (std::isfinite(a)) EXPECT_GE(b, a - 1e-9 * std::abs(a)) << "u_M index " << um;
    }
}

TEST(Optimum, InteriorFixedFeeAndIrHolds) {
  const auto sol = optimize_contract(market(), bundled().grid, shared_cache());
  EXPECT_GT(sol.terms.fixed_fee, 0.0);
  EXPECT_GT(sol.terms.per_qoe_fee, 0.0);
  EXPECT_GE(sol.inp_utility, market().market.inp_utility_floor);
  for (double m : sol.mi) EXPECT_GT(m, 0.0);
}

TEST(Optimum, MspUtilityNonincreasingInIrThreshold) {
  auto s = market();
  InnerCache cache(s);
  double prev = std::numeric_limits<double>::infinity();
  for (double uth : {60.0, 70.0, 80.0, 90.0}) {
    s.market.inp_utility_floor = uth;
    const auto sol = optimize_contract(s, bundled().grid, cache);
    EXPECT_TRUE(sol.ir_satisfied);
    EXPECT_LE(sol.msp_utility, prev) << "threshold " << uth;
    prev = sol.msp_utility;
  }
}

TEST(Optimum, UnreachableThresholdIsInfeasible) {
  auto s = market();
  s.market.inp_utility_floor = 1e12;
  try {
    optimize_contract(s, bundled().grid, shared_cache());
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_STREQ(e.what(), "IR infeasible over grid");
  }
}

TEST(Surface, CsvLayout) {
  ContractSurface surf;
  ContractGrid g{0.0, 1e6, 1e5, 2e5, 3, 2};
  optimize_contract(market(), g, shared_cache(), &surf);
  std::ostringstream os;
  write_surface_csv(os, surf);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "F_s,u_M,inp_utility,msp_utility,feasible,mi_total");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Grid, RejectsBadRanges) {
  EXPECT_THROW(require_valid(ContractGrid{0, 1, 0, 1, 0, 5}), ConfigError);
  EXPECT_THROW(require_valid(ContractGrid{2, 1, 0, 1, 5, 5}), ConfigError);
  EXPECT_THROW(require_valid(ContractGrid{0, 1, -1, 1, 5, 5}), ConfigError);
}
