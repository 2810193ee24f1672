#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "core_types.hpp"
#include "rng.hpp"

namespace xqoe {

/// Latent factors for the user-object attention matrix: prediction = M N^T.
struct FactorModel {
  Eigen::MatrixXd user_factors;    // N_U x S
  Eigen::MatrixXd object_factors;  // N_O x S
  double reg_lambda = 0.0;
  /// 1 on observed cells, 0 elsewhere.
  Eigen::MatrixXd weights;

  Eigen::Index rank() const { return user_factors.cols(); }
  Eigen::MatrixXd predict() const { return user_factors * object_factors.transpose(); }
};

inline Eigen::MatrixXd observation_weights(const AttentionMatrix& observed) {
  return observed.mask().cast<double>().matrix();
}

/// J = sum w (a - m^T n)^2 + lambda (|M|^2 + |N|^2). Unobserved cells carry zero weight
/// and are never read.
inline double loss(const FactorModel& model, const AttentionMatrix& observed) {
  if (model.user_factors.rows() != observed.users() || model.object_factors.rows() != observed.objects())
    throw ConfigError("loss: dimension mismatch");
  double fit = 0.0;
  for (Eigen::Index u = 0; u < observed.users(); ++u)
    for (Eigen::Index i = 0; i < observed.objects(); ++i) {
      const double w = model.weights(u, i);
      if (w == 0.0) continue;
      const double r = observed.value(u, i) - model.user_factors.row(u).dot(model.object_factors.row(i));
      fit += w * r * r;
    }
  return fit + model.reg_lambda * (model.user_factors.squaredNorm() + model.object_factors.squaredNorm());
}

struct ElementUpdate {
  double value = 0.0;
  /// Denominator vanished (lambda = 0 and no weighted support); the factor was left as is.
  bool zero_denominator = false;
};

/// Element-wise ALS over the observed cells with a cached prediction matrix.
/// Each element update costs O(|observed in row or column|).
class ElementwiseAls {
public:
  ElementwiseAls(FactorModel model, const AttentionMatrix& observed) : model_(std::move(model)), obs_(&observed) {
    const auto nu = observed.users(), no = observed.objects();
    if (model_.user_factors.rows() != nu || model_.object_factors.rows() != no ||
        model_.user_factors.cols() != model_.object_factors.cols())
      throw ConfigError("eALS: factor shapes do not match the attention matrix");
    if (model_.weights.rows() != nu || model_.weights.cols() != no) model_.weights = observation_weights(observed);
    by_user_.resize(static_cast<std::size_t>(nu));
    by_object_.resize(static_cast<std::size_t>(no));
    for (Eigen::Index u = 0; u < nu; ++u)
      for (Eigen::Index i = 0; i < no; ++i)
        if (model_.weights(u, i) != 0.0) {
          if (!observed.observed(u, i)) throw ConfigError("eALS: nonzero weight on an unobserved cell");
          by_user_[static_cast<std::size_t>(u)].push_back(i);
          by_object_[static_cast<std::size_t>(i)].push_back(u);
        }
    refresh_cache();
  }

  ElementUpdate update_user_element(Eigen::Index u, Eigen::Index f) {
    auto& M = model_.user_factors;
    const auto& N = model_.object_factors;
    const double old = M(u, f);
    double num = 0.0, den = model_.reg_lambda;
    for (Eigen::Index i : by_user_[static_cast<std::size_t>(u)]) {
      const double w = model_.weights(u, i);
      const double partial = cache_(u, i) - old * N(i, f);  // prediction without factor f
      num += (obs_->value(u, i) - partial) * w * N(i, f);
      den += w * N(i, f) * N(i, f);
    }
    if (den == 0.0) return {old, true};
    const double next = num / den;
    M(u, f) = next;
    for (Eigen::Index i : by_user_[static_cast<std::size_t>(u)]) cache_(u, i) += (next - old) * N(i, f);
    // Unobserved cells keep the cache exact too, so cached == M N^T everywhere.
    for (Eigen::Index i = 0; i < cache_.cols(); ++i)
      if (model_.weights(u, i) == 0.0) cache_(u, i) += (next - old) * N(i, f);
    return {next, false};
  }

  ElementUpdate update_object_element(Eigen::Index i, Eigen::Index f) {
    const auto& M = model_.user_factors;
    auto& N = model_.object_factors;
    const double old = N(i, f);
    double num = 0.0, den = model_.reg_lambda;
    for (Eigen::Index u : by_object_[static_cast<std::size_t>(i)]) {
      const double w = model_.weights(u, i);
      const double partial = cache_(u, i) - M(u, f) * old;
      num += (obs_->value(u, i) - partial) * w * M(u, f);
      den += w * M(u, f) * M(u, f);
    }
    if (den == 0.0) return {old, true};
    const double next = num / den;
    N(i, f) = next;
    for (Eigen::Index u = 0; u < cache_.rows(); ++u) cache_(u, i) += M(u, f) * (next - old);
    return {next, false};
  }

  /// One pass over every user element then every object element.
  /// Returns the number of updates skipped for a zero denominator.
  int sweep() {
    int skipped = 0;
    for (Eigen::Index u = 0; u < model_.user_factors.rows(); ++u)
      for (Eigen::Index f = 0; f < model_.rank(); ++f) skipped += update_user_element(u, f).zero_denominator;
    for (Eigen::Index i = 0; i < model_.object_factors.rows(); ++i)
      for (Eigen::Index f = 0; f < model_.rank(); ++f) skipped += update_object_element(i, f).zero_denominator;
    return skipped;
  }

  void refresh_cache() { cache_ = model_.predict(); }

  const FactorModel& model() const { return model_; }
  const Eigen::MatrixXd& cache() const { return cache_; }
  double current_loss() const { return loss(model_, *obs_); }

private:
  FactorModel model_;
  const AttentionMatrix* obs_;
  Eigen::MatrixXd cache_;
  std::vector<std::vector<Eigen::Index>> by_user_;
  std::vector<std::vector<Eigen::Index>> by_object_;
};

/// Free-function forms of the element updates; the cache is rebuilt from the
/// factors, so prefer ElementwiseAls inside loops.
inline ElementUpdate update_user_element(Eigen::Index u, Eigen::Index f, FactorModel& model,
                                         const AttentionMatrix& observed) {
  ElementwiseAls als(model, observed);
  const auto r = als.update_user_element(u, f);
  model = als.model();
  return r;
}

inline ElementUpdate update_object_element(Eigen::Index i, Eigen::Index f, FactorModel& model,
                                           const AttentionMatrix& observed) {
  ElementwiseAls als(model, observed);
  const auto r = als.update_object_element(i, f);
  model = als.model();
  return r;
}

struct FactorizeConfig {
  int rank = 16;
  double lambda = 0.1;
  int max_sweeps = 200;
  double tol = 1e-4;
  std::uint64_t seed = 1;
};

struct FactorizeResult {
  FactorModel model;
  std::vector<double> loss_trace;  // initial loss then one entry per sweep
  int sweeps = 0;
  bool converged = false;
  int zero_denominator_skips = 0;
};

inline FactorModel initial_model(const AttentionMatrix& observed, int rank, double lambda, std::uint64_t seed) {
  if (rank < 1) throw ConfigError("factorize: rank must be >=1");
  if (!(lambda >= 0.0)) throw ConfigError("factorize: lambda must be >=0");
  if (observed.observed_count() == 0) throw ConfigError("factorize: no observed entries");
  double mean = 0.0;
  for (Eigen::Index u = 0; u < observed.users(); ++u)
    for (Eigen::Index i = 0; i < observed.objects(); ++i)
      if (observed.observed(u, i)) mean += observed.value(u, i);
  mean /= static_cast<double>(observed.observed_count());
  const double hi = std::sqrt(std::max(mean, 0.0) / rank);
  auto eng = make_engine(seed, 0xA77E);
  std::uniform_real_distribution<double> unif(0.0, hi);
  FactorModel m;
  m.reg_lambda = lambda;
  m.user_factors.resize(observed.users(), rank);
  m.object_factors.resize(observed.objects(), rank);
  for (Eigen::Index r = 0; r < m.user_factors.rows(); ++r)
    for (Eigen::Index c = 0; c < rank; ++c) m.user_factors(r, c) = unif(eng);
  for (Eigen::Index r = 0; r < m.object_factors.rows(); ++r)
    for (Eigen::Index c = 0; c < rank; ++c) m.object_factors(r, c) = unif(eng);
  m.weights = observation_weights(observed);
  return m;
}

/// Sweeps until the relative loss decrease of a sweep falls below tol.
inline FactorizeResult factorize(const AttentionMatrix& observed, const FactorizeConfig& cfg) {
  FactorizeResult out;
  ElementwiseAls als(initial_model(observed, cfg.rank, cfg.lambda, cfg.seed), observed);
  double prev = als.current_loss();
  out.loss_trace.push_back(prev);
  for (int s = 0; s < cfg.max_sweeps; ++s) {
    out.zero_denominator_skips += als.sweep();
    ++out.sweeps;
    const double cur = als.current_loss();
    out.loss_trace.push_back(cur);
    const double rel = prev > 0.0 ? (prev - cur) / prev : 0.0;
    prev = cur;
    if (rel < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.model = als.model();
  return out;
}

/// Dense M N^T rounded half-up and clamped onto the five-level grid.
inline AttentionMatrix predict_levels(const FactorModel& model) {
  const Eigen::MatrixXd raw = model.predict();
  AttentionMatrix out(raw.rows(), raw.cols());
  for (Eigen::Index u = 0; u < raw.rows(); ++u)
    for (Eigen::Index i = 0; i < raw.cols(); ++i) out.set(u, i, quantize_level(raw(u, i)));
  return out;
}

struct ErrorHistogram {
  double exact = 0.0;     // |error| = 0
  double one = 0.0;       // |error| = 1
  double two_plus = 0.0;  // |error| >= 2
  std::size_t count = 0;
};

enum class CellSet { all, observed, unobserved };

/// Proportions of level errors between predictions and truth, over the chosen cells
/// of the observation mask.
inline ErrorHistogram error_histogram(const AttentionMatrix& predicted, const AttentionMatrix& truth,
                                      const AttentionMatrix& observed, CellSet cells) {
  ErrorHistogram h;
  std::size_t e0 = 0, e1 = 0, e2 = 0;
  for (Eigen::Index u = 0; u < truth.users(); ++u)
    for (Eigen::Index i = 0; i < truth.objects(); ++i) {
      const bool obs = observed.observed(u, i);
      if ((cells == CellSet::observed && !obs) || (cells == CellSet::unobserved && obs)) continue;
      const double err = std::abs(predicted.value(u, i) - truth.value(u, i));
      if (err < 0.5) ++e0;
      else if (err < 1.5) ++e1;
      else ++e2;
    }
  h.count = e0 + e1 + e2;
  if (h.count > 0) {
    const double n = static_cast<double>(h.count);
    h.exact = e0 / n;
    h.one = e1 / n;
    h.two_plus = e2 / n;
  }
  return h;
}

}  // namespace xqoe
