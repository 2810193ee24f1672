#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "core_types.hpp"

namespace xqoe {

using cplx = std::complex<double>;

/// Principal-ish complex log-gamma. The imaginary part is only defined modulo
/// 2*pi, which is all the contour integrator needs since it exponentiates.
inline cplx log_gamma(cplx z) {
  if (z.imag() < 0.0) return std::conj(log_gamma(std::conj(z)));
  // Stirling is accurate once |z| >= 12 in the right half-plane.
  auto needs_shift = [](cplx w) { return w.real() < 0.0 || (w.real() < 12.0 && std::abs(w) < 12.0); };
  cplx shift_log = 0.0;
  if (needs_shift(z)) {
    // Multiply a few factors at a time before taking the log to save work.
    cplx prod = 1.0;
    int in_prod = 0;
    while (needs_shift(z)) {
      prod *= z;
      z += 1.0;
      if (++in_prod == 8) {
        shift_log += std::log(prod);
        prod = 1.0;
        in_prod = 0;
      }
    }
    shift_log += std::log(prod);
  }
  // Stirling series truncated after the z^-11 term.
  const cplx inv = 1.0 / z;
  const cplx inv2 = inv * inv;
  const cplx series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360360.0))))));
  constexpr double half_log_2pi = 0.91893853320467274178;
  return (z - 0.5) * std::log(z) - z + half_log_2pi + series - shift_log;
}

/// Meijer G^{m,n}_{p,q}(z | a; b) in the Gradshteyn-Ryzhik contour convention:
///   G = 1/(2 pi i) Int prod_{j<m} Gamma(b_j - s) prod_{j<n} Gamma(1 - a_j + s)
///                  / (prod_{j>=m} Gamma(1 - b_j + s) prod_{j>=n} Gamma(a_j - s)) z^s ds
/// along a vertical line Re s = c that separates the two pole families.
struct MeijerGSpec {
  std::vector<double> a;
  std::vector<double> b;
  std::size_t m = 0;
  std::size_t n = 0;
  /// Contour abscissa. When unset the real-axis minimum of |integrand| inside
  /// the admissible strip is used, which keeps cancellation along the line small.
  std::optional<double> abscissa;
  /// Initial trapezoid step; halved until successive estimates agree.
  double step = 0.25;
  double rel_tol = 1e-8;
  /// Tail cut-off relative to the peak integrand magnitude.
  double tail_tol = 1e-18;
  double max_half_height = 2000.0;
  int max_halvings = 10;
};

struct ContourResult {
  double value = 0.0;
  /// log|value| computed without under/overflow; value == sign * exp(log_magnitude).
  double log_magnitude = -std::numeric_limits<double>::infinity();
  int sign = 0;
  bool converged = false;
  double residual = 0.0;
  double abscissa = 0.0;
  double half_height = 0.0;
  std::size_t nodes = 0;
};

namespace detail {

struct Strip {
  double lo;
  double hi;
};

inline Strip admissible_strip(const MeijerGSpec& g) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.n; ++j) lo = std::max(lo, g.a[j] - 1.0);
  for (std::size_t j = 0; j < g.m; ++j) hi = std::min(hi, g.b[j]);
  return {lo, hi};
}

inline cplx log_integrand(const MeijerGSpec& g, cplx s, double log_z) {
  cplx acc = s * log_z;
  for (std::size_t j = 0; j < g.b.size(); ++j)
    acc += j < g.m ? log_gamma(g.b[j] - s) : -log_gamma(1.0 - g.b[j] + s);
  for (std::size_t j = 0; j < g.a.size(); ++j)
    acc += j < g.n ? log_gamma(1.0 - g.a[j] + s) : -log_gamma(g.a[j] - s);
  return acc;
}

inline double log_abs_integrand_real(const MeijerGSpec& g, double s, double log_z) {
  double acc = s * log_z;
  for (std::size_t j = 0; j < g.b.size(); ++j)
    acc += j < g.m ? std::lgamma(g.b[j] - s) : -std::lgamma(1.0 - g.b[j] + s);
  for (std::size_t j = 0; j < g.a.size(); ++j)
    acc += j < g.n ? std::lgamma(1.0 - g.a[j] + s) : -std::lgamma(g.a[j] - s);
  return acc;
}

inline double golden_minimum(const MeijerGSpec& g, double log_z, double left, double right) {
  auto f = [&](double s) { return log_abs_integrand_real(g, s, log_z); };
  // Coarse scan then golden-section refinement around the best sample.
  constexpr int kScan = 48;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double v = f(left + (right - left) * i / kScan);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double cell = (right - left) / kScan;
  double x0 = std::max(left, left + (best - 1) * cell);
  double x3 = std::min(right, left + (best + 1) * cell);
  constexpr double r = 0.61803398874989484820;
  double x1 = x3 - r * (x3 - x0);
  double x2 = x0 + r * (x3 - x0);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 80 && x3 - x0 > 1e-10 * (1.0 + std::abs(x0)); ++it) {
    if (f1 < f2) {
      x3 = x2;
      x2 = x1;
      f2 = f1;
      x1 = x3 - r * (x3 - x0);
      f1 = f(x1);
    } else {
      x0 = x1;
      x1 = x2;
      f1 = f2;
      x2 = x0 + r * (x3 - x0);
      f2 = f(x2);
    }
  }
  return 0.5 * (x0 + x3);
}

inline double choose_abscissa(const MeijerGSpec& g, double log_z) {
  const auto [lo, hi] = admissible_strip(g);
  if (!(hi > lo)) throw ConfigError("meijer_g: empty admissible strip");
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const double margin = std::min(0.25, (hi - lo) / 4.0);
    return golden_minimum(g, log_z, lo + margin, hi - margin);
  }
  // Half-open strip: widen the search window until the minimum is interior.
  double span = 40.0;
  for (;;) {
    const double left = std::isfinite(lo) ? lo + 0.25 : (std::isfinite(hi) ? hi - span : -span);
    const double right = std::isfinite(hi) ? hi - 0.25 : (std::isfinite(lo) ? lo + span : span);
    const double c = golden_minimum(g, log_z, left, right);
    const bool at_open_edge = (!std::isfinite(lo) && c < left + 1e-3 * span) ||
                              (!std::isfinite(hi) && c > right - 1e-3 * span);
    if (!at_open_edge || span > 1e5) return c;
    span *= 4.0;
  }
}

}  // namespace detail

/// Evaluates exp(log_scale) * G^{m,n}_{p,q}(z). Passing the prefactor in log form
/// lets callers combine huge Gamma normalizers with the integral safely.
inline ContourResult meijer_g(const MeijerGSpec& g, double z, double log_scale = 0.0) {
  if (g.m > g.b.size() || g.n > g.a.size()) throw ConfigError("meijer_g: m/n exceed parameter counts");
  if (!(z > 0.0) || !std::isfinite(z)) throw ConfigError("meijer_g: argument must be finite and >0");
  const double log_z = std::log(z);
  const auto strip = detail::admissible_strip(g);
  ContourResult out;
  out.abscissa = g.abscissa ? *g.abscissa : detail::choose_abscissa(g, log_z);
  if (!(out.abscissa > strip.lo && out.abscissa < strip.hi))
    throw ConfigError("meijer_g: abscissa outside the admissible strip");

  const double c = out.abscissa;
  // Reference magnitude at the real axis keeps every exponentiated term O(1).
  const double ref = detail::log_abs_integrand_real(g, c, log_z);
  auto term = [&](double y) -> cplx { return std::exp(detail::log_integrand(g, cplx(c, y), log_z) - ref); };

  // Find the truncation height on the coarse grid.
  const double h0 = g.step;
  std::vector<double> coarse;
  double peak = 0.0;
  double y = 0.0;
  int below = 0;
  for (;;) {
    const cplx t = term(y);
    const double mag = std::abs(t);
    coarse.push_back(t.real());
    peak = std::max(peak, mag);
    below = mag < g.tail_tol * peak ? below + 1 : 0;
    if (below >= 4) break;
    y += h0;
    if (y > g.max_half_height) break;
  }
  out.half_height = y;
  const std::size_t n_coarse = coarse.size();

  double sum = 0.5 * coarse[0];
  for (std::size_t k = 1; k < n_coarse; ++k) sum += coarse[k];
  double h = h0;
  double estimate = h * sum / M_PI;
  std::size_t nodes = n_coarse;
  double residual = std::numeric_limits<double>::infinity();
  for (int level = 0; level < g.max_halvings; ++level) {
    const double h_new = h / 2.0;
    double odd = 0.0;
    for (double yy = h_new; yy < out.half_height; yy += h) odd += term(yy).real();
    nodes += static_cast<std::size_t>(std::ceil(out.half_height / h));
    sum += odd;
    h = h_new;
    const double refined = h * sum / M_PI;
    residual = std::abs(refined - estimate) / std::max(std::abs(refined), std::numeric_limits<double>::min());
    estimate = refined;
    if (residual < g.rel_tol) break;
  }
  out.nodes = nodes;
  out.residual = residual;
  out.converged = residual < g.rel_tol && out.half_height <= g.max_half_height;
  if (estimate == 0.0) {
    out.sign = 0;
    out.value = 0.0;
    return out;
  }
  out.sign = estimate > 0.0 ? 1 : -1;
  out.log_magnitude = std::log(std::abs(estimate)) + ref + log_scale;
  out.value = out.sign * std::exp(out.log_magnitude);
  return out;
}

}  // namespace xqoe
