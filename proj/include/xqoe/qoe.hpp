#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "allocation.hpp"
#include "core_types.hpp"
#include "mimo_kpi.hpp"

namespace xqoe {

struct Normalized {
  double value = 0.0;
  bool out_of_range = false;  // value outside [0, 1]; never clamped
};

/// (t - t_min) / (t_max - t_min).
inline Normalized normalize(double t, double t_min, double t_max) {
  if (!(t_max > t_min)) throw ConfigError("normalize: t_max must exceed t_min");
  const double v = (t - t_min) / (t_max - t_min);
  return {v, v < 0.0 || v > 1.0};
}

inline Normalized normalize_rate(double rate_bps, const KpiBounds& b) { return normalize(rate_bps, b.rate_min, b.rate_max); }

/// Reliability factor T(1 - E) with bounds [1 - bep_max, 1 - bep_min].
inline Normalized normalize_reliability(double bep, const KpiBounds& b) {
  return normalize(1.0 - bep, 1.0 - b.bep_max, 1.0 - b.bep_min);
}

/// Weber-Fechner rendering term sum K_n ln(P_n / floor).
inline double rendering_term(const std::vector<double>& attention, const std::vector<double>& allocation, double floor) {
  return objective(attention, allocation, floor);
}

struct MiBreakdown {
  double mi = 0.0;
  double rate_factor = 0.0;
  double reliability_factor = 0.0;
  double rendering = 0.0;
  bool kpi_out_of_range = false;
};

inline MiBreakdown meta_immersion_detailed(double rate_bps, double bep, const KpiBounds& bounds,
                                           const std::vector<double>& attention, const std::vector<double>& allocation,
                                           double floor) {
  require_valid(bounds);
  const auto tr = normalize_rate(rate_bps, bounds);
  const auto te = normalize_reliability(bep, bounds);
  MiBreakdown out;
  out.rate_factor = tr.value;
  out.reliability_factor = te.value;
  out.kpi_out_of_range = tr.out_of_range || te.out_of_range;
  out.rendering = rendering_term(attention, allocation, floor);
  out.mi = tr.value * te.value * out.rendering;
  return out;
}

/// T(R) * T(1 - E) * sum K_n ln(P_n / floor).
inline double meta_immersion(double rate_bps, double bep, const KpiBounds& bounds, const std::vector<double>& attention,
                             const std::vector<double>& allocation, double floor) {
  return meta_immersion_detailed(rate_bps, bep, bounds, attention, allocation, floor).mi;
}

struct LatencyAdjusted {
  double mi = 0.0;
  double multiplier = 0.0;
  bool over_budget = false;
};

/// Scales MI by T(L_max - L) on [0, L_max]; latency beyond L_max forces 0.
inline LatencyAdjusted latency_hook(double mi, double latency, double latency_max) {
  if (!(latency_max > 0.0)) throw ConfigError("latency_hook: latency_max must be >0");
  if (latency < 0.0) throw ConfigError("latency_hook: latency must be >=0");
  if (latency > latency_max) return {0.0, 0.0, true};
  const double m = normalize(latency_max - latency, 0.0, latency_max).value;
  return {mi * m, m, false};
}

/// Everything needed to evaluate one user's MI for a resource bundle.
struct QoeUser {
  LinkParams link;
  double zeta_down = 1.0;
  double zeta_up = 1.0;
  ModulationScheme modulation = ModulationScheme::of(Modulation::dpsk);
  std::vector<double> attention;  // K per object
  double render_floor = 15.0;
};

/// MI for a bundle: the bundle overrides the link's downlink power, bandwidth and
/// uplink power; rendering is split by water-filling over the user's attention.
inline MiReport evaluate_mi(const QoeUser& user, const KpiBounds& bounds, const ResourceBundle& theta,
                            Method method = Method::closed_form) {
  LinkParams p = user.link;
  p.tx_power_down = theta.power_down;
  p.bandwidth_hz = theta.bandwidth;
  p.tx_power_up = theta.power_up;
  MiReport r;
  r.rate_bps = downlink_rate(p, user.zeta_down, method).value;
  const auto bep = uplink_bep(p, user.zeta_up, user.modulation, method);
  r.bep = bep.value;
  r.bep_underflow = bep.underflow;
  r.per_object_render = water_fill({user.attention, theta.render_total, user.render_floor});
  const auto b = meta_immersion_detailed(r.rate_bps, r.bep, bounds, user.attention, r.per_object_render, user.render_floor);
  r.kpi_out_of_range = b.kpi_out_of_range;
  r.mi = b.mi;
  return r;
}

enum class Resource { power_down, bandwidth, power_up, render_total };

inline Resource resource_from_name(const std::string& s) {
  if (s == "power_down") return Resource::power_down;
  if (s == "bandwidth") return Resource::bandwidth;
  if (s == "power_up") return Resource::power_up;
  if (s == "render_total") return Resource::render_total;
  throw ConfigError("unknown resource '" + s + "' (power_down, bandwidth, power_up, render_total)");
}

inline std::size_t resource_index(Resource r) { return static_cast<std::size_t>(r); }

struct ConcavityReport {
  std::vector<double> grid;
  std::vector<double> values;             // MI at each grid point
  std::vector<double> second_differences;  // M(x-h) - 2M(x) + M(x+h), interior points
  std::vector<double> second_derivatives;  // second differences / h^2
  double max_second_derivative = 0.0;
  /// Curvature scale max|M| / h^2; criteria compare second derivatives against tol * scale.
  double scale = 0.0;
};

/// Central second differences of MI along one resource on a uniform grid, with the
/// other resources held at `base` and rendering re-split at every point.
inline ConcavityReport concavity_probe(Resource which, const QoeUser& user, const KpiBounds& bounds,
                                       const ResourceBundle& base, const std::vector<double>& grid) {
  if (grid.size() < 5) throw ConfigError("concavity_probe: need at least 5 grid points");
  const double h = grid[1] - grid[0];
  if (!(h > 0.0)) throw ConfigError("concavity_probe: grid must be increasing");
  for (std::size_t k = 2; k < grid.size(); ++k)
    if (std::abs((grid[k] - grid[k - 1]) - h) > 1e-9 * std::abs(h) + 1e-12 * std::abs(grid[k]))
      throw ConfigError("concavity_probe: grid must be uniform");
  ConcavityReport rep;
  rep.grid = grid;
  double max_abs = 0.0;
  for (double x : grid) {
    ResourceBundle t = base;
    t[resource_index(which)] = x;
    const double m = evaluate_mi(user, bounds, t).mi;
    rep.values.push_back(m);
    max_abs = std::max(max_abs, std::abs(m));
  }
  rep.scale = max_abs / (h * h);
  rep.max_second_derivative = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    const double d2 = rep.values[k - 1] - 2.0 * rep.values[k] + rep.values[k + 1];
    rep.second_differences.push_back(d2);
    rep.second_derivatives.push_back(d2 / (h * h));
    rep.max_second_derivative = std::max(rep.max_second_derivative, d2 / (h * h));
  }
  return rep;
}

inline std::vector<double> linear_grid(double from, double to, int points) {
  if (points < 1) throw ConfigError("grid needs at least one point");
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(points == 1 ? from : from + (to - from) * k / (points - 1));
  return g;
}

}  // namespace xqoe
