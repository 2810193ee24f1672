#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "core_types.hpp"
#include "mimo_kpi.hpp"
#include "rng.hpp"

namespace xqoe {

struct OracleConfig {
  std::int64_t samples = 1000000;
  std::uint64_t seed = 1;
  int histogram_bins = 100;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

namespace detail {
inline constexpr std::int64_t kOracleBlock = 1 << 14;
}

/// SIR draws from the gamma-ratio form: Gamma(a,1)/Gamma(b,1)/lambda is beta-prime scaled by 1/lambda.
inline std::vector<double> sample_sir(const SirShape& s, const OracleConfig& cfg, std::uint64_t stream = 0) {
  if (cfg.samples < 1) throw ConfigError("oracle: samples must be >=1");
  std::vector<double> out(static_cast<std::size_t>(cfg.samples));
  const std::int64_t blocks = (cfg.samples + detail::kOracleBlock - 1) / detail::kOracleBlock;
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
    auto eng = make_engine(cfg.seed, stream, blk);
    std::gamma_distribution<double> signal(s.a, 1.0), interference(s.b, 1.0);
    const std::int64_t begin = static_cast<std::int64_t>(blk) * detail::kOracleBlock;
    const std::int64_t end = std::min(cfg.samples, begin + detail::kOracleBlock);
    for (std::int64_t k = begin; k < end; ++k) {
      const double x = signal(eng);
      const double y = interference(eng);
      out[static_cast<std::size_t>(k)] = x / y / s.lambda;
    }
  });
  return out;
}

inline std::vector<double> sample_sir(const LinkParams& p, double zeta_value, const OracleConfig& cfg,
                                      Direction dir) {
  require_valid(p);
  return sample_sir(sir_shape(p, zeta_value, dir), cfg, dir == Direction::down ? 0 : 1);
}

/// Secondary validator: signal from the largest eigenvalue of an explicit channel
/// draw, interference as a sum of Rayleigh path powers. Only the mean is pinned to
/// the gamma-ratio model by construction of zeta; the shapes differ.
inline std::vector<double> sample_sir_matrix(const LinkParams& p, const OracleConfig& cfg, Direction dir) {
  require_valid(p);
  const int mc = p.antennas_cbs, mu = p.antennas_rs;
  const int rows = std::min(mc, mu), cols = std::max(mc, mu);
  const int paths = dir == Direction::down ? mc * p.interference_paths : mu * p.interference_paths;
  const double sig_scale = dir == Direction::down
                               ? mc * std::pow(p.distance_m, -p.path_loss_exp) * p.tx_power_down * p.chan_coeff_data
                               : mu * p.tx_power_up * p.chan_coeff_data_up;
  const double intf_scale = dir == Direction::down ? p.interference_power_down * p.chan_coeff_intf
                                                   : p.interference_power_up * p.chan_coeff_intf_up;
  std::vector<double> out(static_cast<std::size_t>(cfg.samples));
  const std::int64_t blocks = (cfg.samples + detail::kOracleBlock - 1) / detail::kOracleBlock;
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
    auto eng = make_engine(cfg.seed, 7, dir == Direction::down ? 0 : 1, blk);
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    std::exponential_distribution<double> ex(1.0);
    Eigen::MatrixXcd h(rows, cols);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rows);
    const std::int64_t begin = static_cast<std::int64_t>(blk) * detail::kOracleBlock;
    const std::int64_t end = std::min(cfg.samples, begin + detail::kOracleBlock);
    for (std::int64_t k = begin; k < end; ++k) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          const double re = nd(eng);
          const double im = nd(eng);
          h(i, j) = {re, im};
        }
      double lmax = 0.0;
      if (rows == 1) {
        lmax = h.squaredNorm();
      } else {
        solver.compute(h * h.adjoint(), Eigen::EigenvaluesOnly);
        lmax = solver.eigenvalues()(rows - 1);
      }
      double intf = 0.0;
      for (int q = 0; q < paths; ++q) intf += ex(eng);
      out[static_cast<std::size_t>(k)] = sig_scale * lmax / (intf_scale * intf);
    }
  });
  return out;
}

inline Estimate mean_and_se(const std::vector<double>& v) {
  Estimate e;
  if (v.empty()) return e;
  // Two-pass variance; sums run in index order so results do not depend on threads.
  double sum = 0.0;
  for (double x : v) sum += x;
  e.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return e;
}

inline Estimate empirical_rate_from(const std::vector<double>& sir, double bandwidth_hz) {
  if (bandwidth_hz == 0.0) return {};
  std::vector<double> r(sir.size());
  for (std::size_t i = 0; i < sir.size(); ++i) r[i] = std::log2(1.0 + sir[i]) * bandwidth_hz;
  return mean_and_se(r);
}

inline Estimate empirical_bep_from(const std::vector<double>& sir, const ModulationScheme& mod) {
  std::vector<double> e(sir.size());
  for (std::size_t i = 0; i < sir.size(); ++i) e[i] = 0.5 * boost::math::gamma_q(mod.tau2, mod.tau1 * sir[i]);
  return mean_and_se(e);
}

inline Estimate empirical_rate(const LinkParams& p, double zeta_value, const OracleConfig& cfg) {
  return empirical_rate_from(sample_sir(p, zeta_value, cfg, Direction::down), p.bandwidth_hz);
}

inline Estimate empirical_bep(const LinkParams& p, double zeta_up, const ModulationScheme& mod,
                              const OracleConfig& cfg) {
  return empirical_bep_from(sample_sir(p, zeta_up, cfg, Direction::up), mod);
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  double density = 0.0;
};

/// Density-normalized histogram on [lo, hi); samples outside the range still count
/// toward the total so the densities estimate the full law.
inline std::vector<HistogramBin> histogram(const std::vector<double>& sample, double lo, double hi, int bins) {
  if (!(hi > lo) || bins < 1) throw ConfigError("histogram: need hi > lo and bins >= 1");
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  const double w = (hi - lo) / bins;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : sample) {
    if (x < lo || x >= hi) continue;
    const auto k = std::min<std::int64_t>(bins - 1, static_cast<std::int64_t>((x - lo) / w));
    ++counts[static_cast<std::size_t>(k)];
  }
  const double n = static_cast<double>(sample.size());
  for (int k = 0; k < bins; ++k) {
    auto& b = out[static_cast<std::size_t>(k)];
    b.left = lo + k * w;
    b.right = lo + (k + 1) * w;
    b.density = static_cast<double>(counts[static_cast<std::size_t>(k)]) / (n * w);
  }
  return out;
}

inline void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& h) {
  os << "gamma_bin_left,gamma_bin_right,density\n";
  os.precision(17);
  for (const auto& b : h) os << b.left << ',' << b.right << ',' << b.density << '\n';
}

}  // namespace xqoe
