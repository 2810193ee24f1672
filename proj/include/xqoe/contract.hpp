#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "core_types.hpp"
#include "qoe.hpp"
#include "rng.hpp"

namespace xqoe {

/// Lower and upper bound per resource dimension.
struct ResourceBox {
  ResourceBundle lower;
  ResourceBundle upper;

  ResourceBundle at(const std::array<double, 4>& x) const {
    ResourceBundle t;
    for (std::size_t d = 0; d < 4; ++d) t[d] = lower[d] + x[d] * (upper[d] - lower[d]);
    return t;
  }

  ResourceBundle project(ResourceBundle t) const {
    for (std::size_t d = 0; d < 4; ++d) t[d] = std::clamp(t[d], lower[d], upper[d]);
    return t;
  }
};

struct ContractScenario {
  std::vector<QoeUser> users;
  std::vector<ResourceBox> boxes;  // one per user
  UnitPrices prices;
  MarketConstants market;
  KpiBounds bounds;
  /// When set, T(R) * T(1 - E) is replaced by this constant for every user.
  std::optional<double> frozen_kpi_factor;
};

inline void require_valid(const ContractScenario& s) {
  if (s.users.empty()) throw ConfigError("contract: no users");
  if (s.boxes.size() != s.users.size()) throw ConfigError("contract: one resource box per user required");
  require_valid(s.market, s.users.size());
  require_valid(s.bounds);
  const std::array<double, 4> price = {s.prices.power_down, s.prices.bandwidth, s.prices.power_up, s.prices.render};
  for (double p : price)
    if (!(p > 0.0)) throw ConfigError("contract: unit prices must be >0");
  for (std::size_t i = 0; i < s.users.size(); ++i) {
    const auto& b = s.boxes[i];
    for (std::size_t d = 0; d < 4; ++d)
      if (!(b.lower[d] > 0.0) || !(b.upper[d] >= b.lower[d]) || !std::isfinite(b.upper[d]))
        throw ConfigError("contract: user " + std::to_string(i + 1) + " box must satisfy 0 < lower <= upper");
    const double need = s.users[i].render_floor * static_cast<double>(s.users[i].attention.size());
    if (b.lower.render_total < need * (1.0 - 1e-12))
      throw InfeasibleError("contract: user " + std::to_string(i + 1) + " render box starts below objects*floor");
  }
}

// ---- market utilities ---------------------------------------------------------

/// F_s + u_M * sum MI.
inline double inp_revenue(const ContractTerms& c, const std::vector<double>& mi) {
  double s = 0.0;
  for (double m : mi) s += m;
  return c.fixed_fee + c.per_qoe_fee * s;
}

/// CRRA utility W^(1-tau)/(1-tau); W itself at tau = 0; -inf when W <= 0 and tau > 0.
inline double crra(double wealth, double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("crra: tau must lie in [0,1)");
  if (tau == 0.0) return wealth;
  if (!(wealth > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::pow(wealth, 1.0 - tau) / (1.0 - tau);
}

inline double total_cost(const std::vector<ResourceBundle>& bundles, const UnitPrices& prices) {
  double s = 0.0;
  for (const auto& b : bundles) s += cost(b, prices);
  return s;
}

inline double inp_utility(const ContractTerms& c, const std::vector<ResourceBundle>& bundles, const UnitPrices& prices,
                          const MarketConstants& market, const std::vector<double>& mi) {
  return crra(inp_revenue(c, mi) - total_cost(bundles, prices), market.rra);
}

/// sum (omega_i + (mu_i - u_M) MI_i) - F_s.
inline double msp_utility(const ContractTerms& c, const MarketConstants& market, const std::vector<double>& mi) {
  if (mi.size() != market.base_fee_per_user.size() || mi.size() != market.qoe_fee_per_user.size())
    throw ConfigError("msp_utility: one MI value per user required");
  double s = -c.fixed_fee;
  for (std::size_t i = 0; i < mi.size(); ++i)
    s += market.base_fee_per_user[i] + (market.qoe_fee_per_user[i] - c.per_qoe_fee) * mi[i];
  return s;
}

// ---- inner problem -------------------------------------------------------------

struct InnerConfig {
  double fd_step = 1e-4;  // in box-normalized coordinates
  double tol = 1e-10;     // largest coordinate move of a sweep, normalized
  int max_sweeps = 300;
};

struct UserInnerSolution {
  ResourceBundle theta;
  double mi = 0.0;
  double cost = 0.0;
  double objective = 0.0;  // u_M * MI - cost
  int sweeps = 0;
  bool converged = false;
  bool kpi_out_of_range = false;
};

struct InnerSolution {
  double per_qoe_fee = 0.0;
  std::vector<UserInnerSolution> users;

  std::vector<ResourceBundle> bundles() const {
    std::vector<ResourceBundle> out;
    for (const auto& u : users) out.push_back(u.theta);
    return out;
  }
  std::vector<double> mi() const {
    std::vector<double> out;
    for (const auto& u : users) out.push_back(u.mi);
    return out;
  }
  double mi_total() const {
    double s = 0.0;
    for (const auto& u : users) s += u.mi;
    return s;
  }
  double cost_total() const {
    double s = 0.0;
    for (const auto& u : users) s += u.cost;
    return s;
  }
  bool converged() const {
    return std::all_of(users.begin(), users.end(), [](const UserInnerSolution& u) { return u.converged; });
  }
};

/// MI for one user with the link KPIs memoized per power value: moves along
/// bandwidth or rendering never re-run the contour integrals.
class UserMiEvaluator {
public:
  UserMiEvaluator(const QoeUser& user, const KpiBounds& bounds, std::optional<double> frozen)
      : user_(user), bounds_(bounds), frozen_(frozen) {}

  double spectral_efficiency(double power_down) {
    auto it = se_.find(power_down);
    if (it != se_.end()) return it->second;
    LinkParams p = user_.link;
    p.tx_power_down = power_down;
    p.bandwidth_hz = 1.0;
    return se_[power_down] = downlink_rate(p, user_.zeta_down).value;
  }

  double bep(double power_up) {
    auto it = bep_.find(power_up);
    if (it != bep_.end()) return it->second;
    LinkParams p = user_.link;
    p.tx_power_up = power_up;
    return bep_[power_up] = uplink_bep(p, user_.zeta_up, user_.modulation).value;
  }

  double rendering(double render_total) {
    auto it = render_.find(render_total);
    if (it != render_.end()) return it->second;
    const auto alloc = water_fill({user_.attention, render_total, user_.render_floor});
    return render_[render_total] = rendering_term(user_.attention, alloc, user_.render_floor);
  }

  double kpi_factor(const ResourceBundle& t, bool* out_of_range = nullptr) {
    if (frozen_) return *frozen_;
    const auto tr = normalize_rate(t.bandwidth * spectral_efficiency(t.power_down), bounds_);
    const auto te = normalize_reliability(bep(t.power_up), bounds_);
    if (out_of_range) *out_of_range = tr.out_of_range || te.out_of_range;
    return tr.value * te.value;
  }

  double mi(const ResourceBundle& t, bool* out_of_range = nullptr) {
    return kpi_factor(t, out_of_range) * rendering(t.render_total);
  }

private:
  const QoeUser& user_;
  const KpiBounds& bounds_;
  std::optional<double> frozen_;
  std::map<double, double> se_, bep_, render_;
};

namespace detail {

/// Projected coordinate ascent in normalized coordinates from one start point:
/// finite-difference Newton steps where the slice is concave, gradient steps
/// otherwise, each with backtracking.
template <typename F>
std::array<double, 4> coordinate_ascent(F&& f, std::array<double, 4> x, const std::array<bool, 4>& active,
                                        const InnerConfig& cfg, int& sweeps, bool& converged) {
  double fx = f(x);
  const double h = cfg.fd_step;
  sweeps = 0;
  converged = false;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    ++sweeps;
    double biggest = 0.0;
    for (std::size_t d = 0; d < 4; ++d) {
      if (!active[d]) continue;
      // Three-point stencil kept inside [0, 1].
      const double c = std::clamp(x[d], h, 1.0 - h);
      auto at = [&](double v) {
        auto y = x;
        y[d] = v;
        return f(y);
      };
      const double fm = at(c - h), f0 = c == x[d] ? fx : at(c), fp = at(c + h);
      const double curv = (fp - 2.0 * f0 + fm) / (h * h);
      const double g = (fp - fm) / (2.0 * h) + (x[d] - c) * curv;
      double step = curv < 0.0 ? -g / curv : (g > 0.0 ? 0.25 : (g < 0.0 ? -0.25 : 0.0));
      double best_v = x[d], best_f = fx;
      for (int bt = 0; bt < 60 && step != 0.0; ++bt) {
        const double v = std::clamp(x[d] + step, 0.0, 1.0);
        if (v == x[d]) break;
        const double fv = at(v);
        if (fv > fx) {
          best_v = v;
          best_f = fv;
          break;
        }
        step *= 0.5;
      }
      biggest = std::max(biggest, std::abs(best_v - x[d]));
      x[d] = best_v;
      fx = best_f;
    }
    if (biggest < cfg.tol) {
      converged = true;
      break;
    }
  }
  return x;
}

}  // namespace detail

/// Maximizes u_M * MI(theta) - cost(theta) over one user's box. MI is a product of
/// factors in different resources, so it is concave along each coordinate but not
/// jointly; the ascent runs from the lower corner, the centre and the upper corner
/// and keeps the best end point (earliest start on ties).
inline UserInnerSolution optimize_user(const QoeUser& user, const ResourceBox& box, const UnitPrices& prices,
                                       const KpiBounds& bounds, double per_qoe_fee, const InnerConfig& cfg,
                                       std::optional<double> frozen = std::nullopt) {
  UserMiEvaluator ev(user, bounds, frozen);
  auto f = [&](const std::array<double, 4>& x) {
    const auto t = box.at(x);
    return per_qoe_fee * ev.mi(t) - cost(t, prices);
  };
  std::array<bool, 4> active{};
  for (std::size_t d = 0; d < 4; ++d) active[d] = box.upper[d] > box.lower[d];
  UserInnerSolution sol;
  double best = -std::numeric_limits<double>::infinity();
  for (double s0 : {0.0, 0.5, 1.0}) {
    int sweeps = 0;
    bool conv = false;
    const auto x = detail::coordinate_ascent(f, {s0, s0, s0, s0}, active, cfg, sweeps, conv);
    const double fx = f(x);
    sol.sweeps += sweeps;
    if (fx > best) {
      best = fx;
      sol.theta = box.at(x);
      sol.converged = conv;
    }
  }
  sol.mi = ev.mi(sol.theta, &sol.kpi_out_of_range);
  sol.cost = cost(sol.theta, prices);
  sol.objective = per_qoe_fee * sol.mi - sol.cost;
  return sol;
}

/// Per-user optimal bundles for a contract. F_s enters the InP utility additively and
/// the CRRA transform is increasing, so neither changes the argmax; only u_M is used.
inline InnerSolution optimize_inner(const ContractTerms& terms, const ContractScenario& s, const InnerConfig& cfg = {}) {
  require_valid(terms);
  require_valid(s);
  InnerSolution out;
  out.per_qoe_fee = terms.per_qoe_fee;
  out.users.resize(s.users.size());
  for (std::size_t i = 0; i < s.users.size(); ++i)
    out.users[i] = optimize_user(s.users[i], s.boxes[i], s.prices, s.bounds, terms.per_qoe_fee, cfg, s.frozen_kpi_factor);
  return out;
}

/// Write-once cache of inner solutions keyed by u_M.
class InnerCache {
public:
  InnerCache(const ContractScenario& s, InnerConfig cfg = {}) : s_(s), cfg_(cfg) {}

  std::shared_ptr<const InnerSolution> get(double per_qoe_fee) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = cache_.find(per_qoe_fee);
      if (it != cache_.end()) return it->second;
    }
    auto sol = std::make_shared<const InnerSolution>(optimize_inner({0.0, per_qoe_fee}, s_, cfg_));
    std::lock_guard<std::mutex> lk(mu_);
    return cache_.emplace(per_qoe_fee, std::move(sol)).first->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lk(mu_);
    return cache_.size();
  }

private:
  const ContractScenario& s_;
  InnerConfig cfg_;
  mutable std::mutex mu_;
  std::map<double, std::shared_ptr<const InnerSolution>> cache_;
};

// ---- IC check --------------------------------------------------------------------

struct IcReport {
  int draws = 0;
  double max_gain = -std::numeric_limits<double>::infinity();  // best perturbed minus optimum
  double tolerance = 0.0;
  bool ok() const { return max_gain <= tolerance; }
};

/// Random +-rel multiplicative perturbations of every user's bundle, projected onto the
/// boxes; reports the largest increase of u_M * sum MI - sum cost.
inline IcReport ic_check(const ContractScenario& s, const InnerSolution& inner, int draws, double rel,
                         std::uint64_t seed, double tol_rel = 1e-9) {
  IcReport rep;
  rep.draws = draws;
  const double um = inner.per_qoe_fee;
  double base = 0.0;
  for (const auto& u : inner.users) base += u.objective;
  rep.tolerance = tol_rel * std::max(1.0, std::abs(base));
  auto eng = make_engine(seed, 0x1C);
  std::uniform_real_distribution<double> jitter(-rel, rel);
  std::vector<UserMiEvaluator> evs;
  for (const auto& u : s.users) evs.emplace_back(u, s.bounds, s.frozen_kpi_factor);
  for (int k = 0; k < draws; ++k) {
    double val = 0.0;
    for (std::size_t i = 0; i < s.users.size(); ++i) {
      ResourceBundle t = inner.users[i].theta;
      for (std::size_t d = 0; d < 4; ++d) t[d] *= 1.0 + jitter(eng);
      t = s.boxes[i].project(t);
      val += um * evs[i].mi(t) - cost(t, s.prices);
    }
    rep.max_gain = std::max(rep.max_gain, val - base);
  }
  return rep;
}

// ---- outer problem -------------------------------------------------------------

struct ContractGrid {
  double fs_min = 0.0, fs_max = 0.0;
  double um_min = 0.0, um_max = 0.0;
  int fs_points = 50, um_points = 50;
};

inline void require_valid(const ContractGrid& g) {
  if (g.fs_points < 1 || g.um_points < 1) throw ConfigError("grid: point counts must be >=1");
  if (g.fs_min < 0.0 || g.fs_max < g.fs_min || g.um_min < 0.0 || g.um_max < g.um_min)
    throw ConfigError("grid: ranges must be nonnegative and ordered");
}

struct SurfacePoint {
  double fixed_fee = 0.0;
  double per_qoe_fee = 0.0;
  double inp_utility = 0.0;
  double msp_utility = 0.0;
  bool feasible = false;
  double mi_total = 0.0;
};

struct ContractSolution {
  ContractTerms terms;
  std::vector<ResourceBundle> bundles;
  std::vector<double> mi;
  double inp_utility = 0.0;
  double msp_utility = 0.0;
  bool ir_satisfied = false;
  bool inner_converged = false;
};

struct ContractSurface {
  std::vector<SurfacePoint> points;  // u_M outer, F_s inner
  std::vector<std::shared_ptr<const InnerSolution>> inner;  // one per u_M grid value
};

inline ContractSurface contract_surface(const ContractScenario& s, const ContractGrid& g, InnerCache& cache) {
  require_valid(g);
  require_valid(s);
  const auto fs = linear_grid(g.fs_min, g.fs_max, g.fs_points);
  const auto um = linear_grid(g.um_min, g.um_max, g.um_points);
  ContractSurface out;
  out.inner.resize(um.size());
  parallel_for(um.size(), [&](std::size_t k) { out.inner[k] = cache.get(um[k]); });
  for (std::size_t k = 0; k < um.size(); ++k) {
    const auto& inner = *out.inner[k];
    const auto mi = inner.mi();
    const auto bundles = inner.bundles();
    for (double f : fs) {
      const ContractTerms t{f, um[k]};
      SurfacePoint p;
      p.fixed_fee = f;
      p.per_qoe_fee = um[k];
      p.inp_utility = inp_utility(t, bundles, s.prices, s.market, mi);
      p.msp_utility = msp_utility(t, s.market, mi);
      p.feasible = p.inp_utility >= s.market.inp_utility_floor;
      p.mi_total = inner.mi_total();
      out.points.push_back(p);
    }
  }
  return out;
}

/// Feasible grid point with the largest MSP utility; ties keep the first in grid order.
inline ContractSolution select_optimum(const ContractScenario& s, const ContractSurface& surf, const ContractGrid& g) {
  std::size_t best = surf.points.size();
  for (std::size_t i = 0; i < surf.points.size(); ++i)
    if (surf.points[i].feasible && (best == surf.points.size() || surf.points[i].msp_utility > surf.points[best].msp_utility))
      best = i;
  if (best == surf.points.size()) throw InfeasibleError("IR infeasible over grid");
  const auto& p = surf.points[best];
  const auto& inner = *surf.inner[best / static_cast<std::size_t>(g.fs_points)];
  ContractSolution sol;
  sol.terms = {p.fixed_fee, p.per_qoe_fee};
  sol.bundles = inner.bundles();
  sol.mi = inner.mi();
  sol.inp_utility = p.inp_utility;
  sol.msp_utility = p.msp_utility;
  sol.ir_satisfied = p.inp_utility >= s.market.inp_utility_floor;
  sol.inner_converged = inner.converged();
  return sol;
}

inline ContractSolution optimize_contract(const ContractScenario& s, const ContractGrid& g, InnerCache& cache,
                                          ContractSurface* surface_out = nullptr) {
  auto surf = contract_surface(s, g, cache);
  auto sol = select_optimum(s, surf, g);
  if (surface_out) *surface_out = std::move(surf);
  return sol;
}

inline ContractSolution optimize_contract(const ContractScenario& s, const ContractGrid& g,
                                          ContractSurface* surface_out = nullptr, const InnerConfig& cfg = {}) {
  InnerCache cache(s, cfg);
  return optimize_contract(s, g, cache, surface_out);
}

inline void write_surface_csv(std::ostream& os, const ContractSurface& surf) {
  os << "F_s,u_M,inp_utility,msp_utility,feasible,mi_total\n";
  os.precision(17);
  for (const auto& p : surf.points)
    os << p.fixed_fee << ',' << p.per_qoe_fee << ',' << p.inp_utility << ',' << p.msp_utility << ','
       << (p.feasible ? 1 : 0) << ',' << p.mi_total << '\n';
}

}  // namespace xqoe
