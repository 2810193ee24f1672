#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "core_types.hpp"

namespace xqoe {

/// Split `total` rendering capacity over objects with attention weights K_n,
/// maximizing sum K_n ln(P_n / floor) subject to P_n >= floor.
struct AllocationProblem {
  std::vector<double> attention;
  double total = 0.0;
  double floor = 0.0;
};

inline void require_valid(const AllocationProblem& p) {
  if (p.attention.empty()) throw ConfigError("allocation: no objects");
  for (double k : p.attention)
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("allocation: attention values must be finite and >0");
  if (!(p.floor > 0.0)) throw ConfigError("allocation: floor must be >0");
  const double need = static_cast<double>(p.attention.size()) * p.floor;
  if (!(p.total >= need * (1.0 - 1e-12))) {
    std::ostringstream os;
    os << "allocation infeasible: total - objects*floor = " << p.total - need;
    throw InfeasibleError(os.str());
  }
}

struct WaterFillResult {
  std::vector<double> allocation;
  std::vector<bool> pinned;
  double water_level = 0.0;  // mu*, so unpinned P_n = K_n / mu*
  int passes = 0;      // solves of the water level
  int pin_rounds = 0;  // passes that pinned at least one object; never exceeds N
};

/// Pin-and-resolve: solve for mu over the unpinned set, pin every object whose
/// share falls strictly below the floor, repeat until nothing new is pinned.
inline WaterFillResult water_fill_detailed(const AllocationProblem& prob) {
  require_valid(prob);
  const std::size_t n = prob.attention.size();
  WaterFillResult r;
  r.pinned.assign(n, false);
  std::size_t pinned_count = 0;
  for (;;) {
    ++r.passes;
    double k_free = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!r.pinned[i]) k_free += prob.attention[i];
    const double budget = prob.total - static_cast<double>(pinned_count) * prob.floor;
    if (pinned_count == n || !(budget > 0.0)) break;
    r.water_level = k_free / budget;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i)
      if (!r.pinned[i] && prob.attention[i] / r.water_level < prob.floor) {
        r.pinned[i] = true;
        ++pinned_count;
        changed = true;
      }
    if (!changed) break;
    ++r.pin_rounds;
  }
  r.allocation.resize(n);
  if (pinned_count == n) {
    // Budget equals n*floor up to rounding: everything sits on the floor.
    std::fill(r.allocation.begin(), r.allocation.end(), prob.total / static_cast<double>(n));
    return r;
  }
  for (std::size_t i = 0; i < n; ++i)
    r.allocation[i] = r.pinned[i] ? prob.floor : prob.attention[i] / r.water_level;
  return r;
}

inline std::vector<double> water_fill(const AllocationProblem& prob) { return water_fill_detailed(prob).allocation; }

/// sum K_n ln(P_n / floor). Entries below the floor are rejected.
inline double objective(const std::vector<double>& attention, const std::vector<double>& allocation, double floor) {
  if (attention.size() != allocation.size()) throw ConfigError("objective: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < attention.size(); ++i) {
    if (allocation[i] < floor * (1.0 - 1e-12)) throw ConfigError("objective: allocation below floor");
    acc += attention[i] * std::log(std::max(allocation[i], floor) / floor);
  }
  return acc;
}

struct KktReport {
  bool stationarity = true;
  bool primal_feasibility = true;
  bool dual_feasibility = true;
  bool complementary_slackness = true;
  bool budget = true;
  double water_level = 0.0;
  std::vector<std::string> violations;

  bool ok() const { return stationarity && primal_feasibility && dual_feasibility && complementary_slackness && budget; }
};

/// Checks the optimality system of the allocation problem with multiplier mu on
/// the budget and lambda_n = mu - K_n/P_n on each floor constraint.
inline KktReport kkt_check(const AllocationProblem& prob, const std::vector<double>& alloc, double tol) {
  KktReport rep;
  if (alloc.size() != prob.attention.size()) throw ConfigError("kkt_check: size mismatch");
  const std::size_t n = alloc.size();
  auto fail = [&](bool& flag, std::string what) {
    flag = false;
    rep.violations.push_back(std::move(what));
  };
  // Objects strictly above the floor must share one ratio K/P = mu.
  std::vector<std::size_t> free_set;
  for (std::size_t i = 0; i < n; ++i) {
    if (alloc[i] < prob.floor * (1.0 - tol)) fail(rep.primal_feasibility, "object " + std::to_string(i) + " below floor");
    if (alloc[i] > prob.floor * (1.0 + tol)) free_set.push_back(i);
  }
  double sum = 0.0;
  for (double v : alloc) sum += v;
  if (std::abs(sum - prob.total) > tol * prob.total) fail(rep.budget, "budget not exhausted");

  if (free_set.empty()) {
    // All at the floor: any mu >= max K/floor works, so dual feasibility always holds.
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu = std::max(mu, prob.attention[i] / prob.floor);
    rep.water_level = mu;
    return rep;
  }
  double mu = 0.0;
  for (std::size_t i : free_set) mu += prob.attention[i] / alloc[i];
  mu /= static_cast<double>(free_set.size());
  rep.water_level = mu;
  for (std::size_t i : free_set)
    if (std::abs(prob.attention[i] / alloc[i] - mu) > tol * mu)
      fail(rep.stationarity, "object " + std::to_string(i) + " ratio differs from water level");
  for (std::size_t i = 0; i < n; ++i) {
    const bool at_floor = std::find(free_set.begin(), free_set.end(), i) == free_set.end();
    const double lambda = mu - prob.attention[i] / alloc[i];
    if (at_floor && lambda < -tol * mu)
      fail(rep.dual_feasibility, "object " + std::to_string(i) + " has negative floor multiplier");
    if (!at_floor && std::abs(lambda * (alloc[i] - prob.floor)) > tol * mu * prob.floor)
      fail(rep.complementary_slackness, "object " + std::to_string(i) + " slack and multiplier both nonzero");
  }
  return rep;
}

}  // namespace xqoe
