#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "core_types.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace xqoe {

enum class Direction { down, up };
enum class Method { closed_form, quadrature };

inline constexpr std::int64_t kDefaultZetaSamples = 100000;
inline constexpr std::uint64_t kDefaultZetaSeed = 0x5EEDC0FFEEULL;

namespace detail {

inline double zeta_uncached(int m_c, int m_u, std::int64_t samples, std::uint64_t seed) {
  const int rows = std::min(m_c, m_u);
  const int cols = std::max(m_c, m_u);
  if (rows == 1) return 1.0;  // one non-zero eigenvalue: lambda_max equals the trace
  constexpr std::int64_t kBlock = 4096;
  const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<double> num(static_cast<std::size_t>(blocks)), den(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
    auto eng = make_engine(seed, m_c, m_u, blk);
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    const std::int64_t begin = static_cast<std::int64_t>(blk) * kBlock;
    const std::int64_t end = std::min(samples, begin + kBlock);
    Eigen::MatrixXcd h(rows, cols);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rows);
    double s_max = 0.0, s_sum = 0.0;
    for (std::int64_t k = begin; k < end; ++k) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          const double re = nd(eng);
          const double im = nd(eng);
          h(i, j) = {re, im};
        }
      // The smaller Gram matrix carries the same non-zero spectrum.
      const Eigen::MatrixXcd gram = h * h.adjoint();
      solver.compute(gram, Eigen::EigenvaluesOnly);
      const auto& ev = solver.eigenvalues();
      s_max += ev(rows - 1);
      s_sum += ev.sum();
    }
    num[blk] = s_max;
    den[blk] = s_sum;
  });
  double total_max = 0.0, total_sum = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    total_max += num[i];
    total_sum += den[i];
  }
  return total_max / total_sum;
}

}  // namespace detail

/// Ratio E[lambda_max]/E[sum lambda_i] for an m_u x m_c complex Gaussian channel,
/// estimated by Monte Carlo from empirical averages of both numerator and denominator.
inline double zeta(int m_c, int m_u, std::int64_t samples = kDefaultZetaSamples,
                   std::uint64_t seed = kDefaultZetaSeed) {
  if (m_c < 1 || m_u < 1) throw ConfigError("zeta: antenna counts must be >=1");
  if (samples < 1) throw ConfigError("zeta: samples must be >=1");
  using Key = std::tuple<int, int, std::int64_t, std::uint64_t>;
  static std::mutex mu;
  static std::map<Key, double> cache;
  const Key key{m_c, m_u, samples, seed};
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const double z = detail::zeta_uncached(m_c, m_u, samples, seed);
  cache.emplace(key, z);
  return z;
}

/// gamma * lambda follows a beta-prime(a, b) law.
struct SirShape {
  double a = 1.0;
  double b = 1.0;
  double lambda = 1.0;
};

inline SirShape sir_shape(const LinkParams& p, double zeta_value, Direction dir) {
  if (!(zeta_value > 0.0)) throw ConfigError("zeta must be >0");
  SirShape s;
  s.a = static_cast<double>(p.antennas_cbs) * p.antennas_rs;
  if (dir == Direction::down) {
    s.b = static_cast<double>(p.antennas_cbs) * p.interference_paths;
    s.lambda = p.interference_power_down * p.chan_coeff_intf /
               (p.antennas_cbs * zeta_value * std::pow(p.distance_m, -p.path_loss_exp) * p.tx_power_down *
                p.chan_coeff_data);
  } else {
    s.b = static_cast<double>(p.antennas_rs) * p.interference_paths;
    s.lambda = p.interference_power_up * p.chan_coeff_intf_up /
               (p.antennas_rs * zeta_value * p.tx_power_up * p.chan_coeff_data_up);
  }
  return s;
}

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

inline double sir_log_pdf(double gamma, const SirShape& s) {
  if (!(gamma > 0.0)) throw ConfigError("sir_pdf: gamma must be >0");
  const double x = gamma * s.lambda;
  return std::log(s.lambda) + (s.a - 1.0) * std::log(x) - log_beta(s.a, s.b) - (s.a + s.b) * std::log1p(x);
}

inline double sir_pdf(double gamma, const SirShape& s) { return std::exp(sir_log_pdf(gamma, s)); }

inline double sir_pdf(double gamma, const LinkParams& p, double zeta_value, Direction dir = Direction::down) {
  return sir_pdf(gamma, sir_shape(p, zeta_value, dir));
}

/// Analytic SIR CDF through the Mellin-Barnes representation
/// G^{1,2}_{2,2}(lambda*gamma | 1-b, 1; a, 0) / (Gamma(a) Gamma(b)).
inline double sir_cdf(double gamma, const SirShape& s) {
  if (!(gamma > 0.0)) return 0.0;
  MeijerGSpec g;
  g.a = {1.0 - s.b, 1.0};
  g.b = {s.a, 0.0};
  g.m = 1;
  g.n = 2;
  const auto r = meijer_g(g, s.lambda * gamma, -std::lgamma(s.a) - std::lgamma(s.b));
  return std::clamp(r.value, 0.0, 1.0);
}

struct KpiResult {
  double value = 0.0;
  bool converged = true;
  double residual = 0.0;
  /// True when the true value is below 1e-300 and was reported as 0.
  bool underflow = false;
  Method method = Method::closed_form;
};

inline constexpr double kUnderflowLog = -690.7755278982137;  // ln(1e-300)

namespace detail {

/// Integrates exp(log_h(v)) over the real line, where v = ln(gamma * lambda).
/// The window is found by a coarse scan around the peak; Gauss-Kronrod handles the pieces.
template <typename LogH>
std::pair<double, double> integrate_log_domain(LogH&& log_h, double centre) {
  constexpr double kSpan = 80.0;
  constexpr double kStep = 0.05;
  const int n = static_cast<int>(2.0 * kSpan / kStep);
  std::vector<double> lv(static_cast<std::size_t>(n + 1));
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    lv[static_cast<std::size_t>(i)] = log_h(centre - kSpan + i * kStep);
    peak = std::max(peak, lv[static_cast<std::size_t>(i)]);
  }
  if (!std::isfinite(peak)) return {-std::numeric_limits<double>::infinity(), 0.0};
  int first = n, last = 0;
  for (int i = 0; i <= n; ++i)
    if (lv[static_cast<std::size_t>(i)] > peak - 46.0) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  const double lo = centre - kSpan + std::max(0, first - 2) * kStep;
  const double hi = centre - kSpan + std::min(n, last + 2) * kStep;
  // Scale by the peak so the integrand is O(1) regardless of magnitude.
  auto f = [&](double v) { return std::exp(log_h(v) - peak); };
  constexpr int kPieces = 16;
  double total = 0.0, err = 0.0;
  for (int k = 0; k < kPieces; ++k) {
    const double x0 = lo + (hi - lo) * k / kPieces;
    const double x1 = lo + (hi - lo) * (k + 1) / kPieces;
    double e = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, x0, x1, 12, 1e-13, &e);
    err += e;
  }
  return {std::log(total) + peak, err / total};
}

inline double log_beta_prime_in_v(double v, double a, double b) {
  // density of v = ln X for X ~ beta-prime(a, b); log1p(e^v) written stably
  const double softplus = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  return a * v - (a + b) * softplus - log_beta(a, b);
}

}  // namespace detail

/// Rate per unit bandwidth (bit/s/Hz) for a given downlink SIR shape.
inline KpiResult spectral_efficiency(const SirShape& s, Method method = Method::closed_form) {
  KpiResult out;
  out.method = method;
  if (method == Method::closed_form) {
    MeijerGSpec g;
    g.a = {1.0 - s.b, 0.0, 1.0};
    g.b = {s.a, 0.0, 0.0};
    g.m = 3;
    g.n = 2;
    const auto r = meijer_g(g, s.lambda, -std::lgamma(s.a) - std::lgamma(s.b));
    out.value = r.value / std::log(2.0);
    out.converged = r.converged;
    out.residual = r.residual;
    return out;
  }
  auto log_h = [&](double v) {
    const double x = std::exp(v) / s.lambda;
    return detail::log_beta_prime_in_v(v, s.a, s.b) + std::log(std::log1p(x) / std::log(2.0));
  };
  const auto [log_val, rel_err] = detail::integrate_log_domain(log_h, std::log(s.a / s.b));
  out.value = std::exp(log_val);
  out.residual = rel_err;
  out.converged = rel_err < 1e-9;
  return out;
}

/// Average downlink rate in bit/s.
inline KpiResult downlink_rate(const LinkParams& p, double zeta_value, Method method = Method::closed_form) {
  require_valid(p);
  auto r = spectral_efficiency(sir_shape(p, zeta_value, Direction::down), method);
  r.value *= p.bandwidth_hz;
  return r;
}

/// Uplink bit error probability for an uplink SIR shape.
inline KpiResult bit_error_probability(const SirShape& s, const ModulationScheme& mod,
                                       Method method = Method::closed_form) {
  KpiResult out;
  out.method = method;
  double log_val = 0.0;
  if (method == Method::closed_form) {
    MeijerGSpec g;
    g.a = {1.0 - s.b, 1.0, 1.0 - mod.tau2};
    g.b = {s.a, 0.0};
    g.m = 1;
    g.n = 3;
    const double log_scale = -std::log(2.0) - std::lgamma(mod.tau2) - std::lgamma(s.a) - std::lgamma(s.b);
    const auto r = meijer_g(g, s.lambda / mod.tau1, log_scale);
    out.converged = r.converged;
    out.residual = r.residual;
    if (r.sign <= 0) {
      out.value = 0.0;
      out.underflow = true;
      return out;
    }
    log_val = r.log_magnitude;
  } else {
    auto log_h = [&](double v) {
      const double gamma = std::exp(v) / s.lambda;
      const double q = boost::math::gamma_q(mod.tau2, mod.tau1 * gamma);
      return detail::log_beta_prime_in_v(v, s.a, s.b) + std::log(0.5 * q);
    };
    const auto [lv, rel_err] = detail::integrate_log_domain(log_h, std::log(s.a / s.b));
    log_val = lv;
    out.residual = rel_err;
    out.converged = rel_err < 1e-9;
  }
  if (log_val < kUnderflowLog) {
    out.value = 0.0;
    out.underflow = true;
    return out;
  }
  out.value = std::min(0.5, std::exp(log_val));
  return out;
}

inline KpiResult uplink_bep(const LinkParams& p, double zeta_up, const ModulationScheme& mod,
                            Method method = Method::closed_form) {
  require_valid(p);
  return bit_error_probability(sir_shape(p, zeta_up, Direction::up), mod, method);
}

/// Leading residue of the rate integral as lambda grows (interference dominates):
/// R ~ B * a / ((b - 1) * lambda * ln 2). Needs b >= 2 for the pole at s = -1 to be simple.
inline double rate_high_interference_approx(const LinkParams& p, double zeta_value) {
  const auto s = sir_shape(p, zeta_value, Direction::down);
  if (s.b < 2.0) throw ConfigError("rate approximation needs antennas_cbs*interference_paths >= 2");
  return p.bandwidth_hz * s.a / ((s.b - 1.0) * s.lambda * std::log(2.0));
}

/// Leading residue of the BEP integral as lambda_up shrinks (high transmit power).
inline double bep_high_power_approx(const SirShape& s, const ModulationScheme& mod) {
  if (s.lambda <= 0.0) return 0.0;
  const double log_coef = std::lgamma(s.a + mod.tau2) - std::log(2.0 * s.a) - std::lgamma(mod.tau2) - log_beta(s.b, s.a);
  return std::exp(log_coef + s.a * std::log(s.lambda / mod.tau1));
}

inline double bep_high_power_approx(const LinkParams& p, double zeta_up, const ModulationScheme& mod) {
  return bep_high_power_approx(sir_shape(p, zeta_up, Direction::up), mod);
}

}  // namespace xqoe
