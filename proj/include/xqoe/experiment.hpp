#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "allocation.hpp"
#include "attention.hpp"
#include "dataset.hpp"
#include "rng.hpp"

namespace xqoe {

/// Per-user rendering experiment: each user gets one virtual scenario, a budget of
/// budget_per_object * objects, and four ways to split it. Every scheme is scored
/// with the ground-truth attention; only the split differs.
struct AllocationExperimentConfig {
  CorpusConfig corpus;
  std::uint64_t seed = 1;
  FactorizeConfig predictor;
  SparsifyConfig sparsity;
  double budget_per_object = 20.0;
  double floor = 15.0;
  int random_draws = 32;          // random scheme reports the mean over this many splits
  double kpi_coefficient = 1.0;   // T(R) * T(1 - E), common to all schemes of a user
};

struct AllocationRow {
  int user = 0;
  int objects = 0;
  double mi_random = 0.0;
  double mi_uniform = 0.0;
  double mi_attention = 0.0;
  double mi_oracle = 0.0;

  bool ordered(double tol = 1e-12) const {
    return mi_oracle + tol >= mi_attention && mi_attention + tol >= mi_uniform && mi_uniform + tol >= mi_random;
  }
};

struct AllocationSummary {
  double improvement_mean = 0.0;  // attention over uniform, fraction
  double improvement_max = 0.0;
  double improvement_min = 0.0;
  double oracle_gap_mean = 0.0;   // oracle over attention, fraction
  double ordered_fraction = 0.0;
  double missing_fraction = 0.0;
  ErrorHistogram unobserved_errors;
};

struct AllocationExperiment {
  std::vector<AllocationRow> rows;
  AllocationSummary summary;
};

namespace detail {

inline std::vector<double> levels_for(const AttentionMatrix& m, int user, const std::vector<int>& objects) {
  std::vector<double> k;
  k.reserve(objects.size());
  for (int o : objects) k.push_back(m.value(user, o));
  return k;
}

/// Ratio minus one; equal values (including both zero) count as no change.
inline double relative_gain(double num, double den) {
  if (num == den) return 0.0;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den - 1.0;
}

}  // namespace detail

/// Scores the four schemes for one user's scenario. `predicted` and `truth` are the
/// attention levels of the scenario objects.
inline AllocationRow score_schemes(int user, const std::vector<double>& truth, const std::vector<double>& predicted,
                                   const AllocationExperimentConfig& cfg, std::uint64_t stream_seed) {
  const auto n = truth.size();
  const double total = cfg.budget_per_object * static_cast<double>(n);
  AllocationRow r;
  r.user = user;
  r.objects = static_cast<int>(n);
  const double c = cfg.kpi_coefficient;
  const AllocationProblem with_truth{truth, total, cfg.floor};
  require_valid(with_truth);
  r.mi_uniform = c * objective(truth, std::vector<double>(n, total / static_cast<double>(n)), cfg.floor);
  r.mi_attention = c * objective(truth, water_fill({predicted, total, cfg.floor}), cfg.floor);
  r.mi_oracle = c * objective(truth, water_fill(with_truth), cfg.floor);
  auto eng = make_engine(stream_seed, 0xD1, user);
  std::gamma_distribution<double> g(1.0, 1.0);
  const double surplus = total - cfg.floor * static_cast<double>(n);
  double acc = 0.0;
  std::vector<double> w(n), alloc(n);
  for (int d = 0; d < cfg.random_draws; ++d) {
    double s = 0.0;
    for (auto& x : w) s += (x = g(eng));
    for (std::size_t i = 0; i < n; ++i) alloc[i] = cfg.floor + surplus * w[i] / s;
    acc += objective(truth, alloc, cfg.floor);
  }
  r.mi_random = cfg.random_draws > 0 ? c * acc / cfg.random_draws : 0.0;
  return r;
}

inline AllocationSummary summarize(const std::vector<AllocationRow>& rows) {
  AllocationSummary s;
  if (rows.empty()) return s;
  s.improvement_max = -std::numeric_limits<double>::infinity();
  s.improvement_min = std::numeric_limits<double>::infinity();
  int ordered = 0;
  for (const auto& r : rows) {
    const double imp = detail::relative_gain(r.mi_attention, r.mi_uniform);
    s.improvement_mean += imp;
    s.improvement_max = std::max(s.improvement_max, imp);
    s.improvement_min = std::min(s.improvement_min, imp);
    s.oracle_gap_mean += detail::relative_gain(r.mi_oracle, r.mi_attention);
    ordered += r.ordered();
  }
  const double n = static_cast<double>(rows.size());
  s.improvement_mean /= n;
  s.oracle_gap_mean /= n;
  s.ordered_fraction = ordered / n;
  return s;
}

/// Corpus -> sparse records -> predictor -> per-user scenario -> four schemes.
inline AllocationExperiment run_allocation_experiment(const AllocationExperimentConfig& cfg) {
  if (!(cfg.floor > 0.0)) throw ConfigError("experiment: floor must be >0");
  if (cfg.budget_per_object < cfg.floor) {
    throw InfeasibleError("allocation infeasible: budget per object " + std::to_string(cfg.budget_per_object) +
                          " below floor " + std::to_string(cfg.floor));
  }
  if (cfg.random_draws < 1) throw ConfigError("experiment: random_draws must be >=1");
  const auto corpus = generate_corpus(cfg.corpus, cfg.seed);
  const auto records = sparsify(corpus, substream_seed(cfg.seed, 0x5B), cfg.sparsity);
  const auto model = factorize(records.observed, cfg.predictor).model;
  const auto predicted = predict_levels(model);

  AllocationExperiment out;
  out.rows.resize(static_cast<std::size_t>(cfg.corpus.n_users));
  parallel_for(out.rows.size(), [&](std::size_t idx) {
    const int u = static_cast<int>(idx);
    const auto objects = select_scenario(corpus, substream_seed(cfg.seed, 0x5C), u, cfg.sparsity);
    out.rows[idx] = score_schemes(u, detail::levels_for(corpus.ground_truth, u, objects),
                                  detail::levels_for(predicted, u, objects), cfg, cfg.seed);
  });
  out.summary = summarize(out.rows);
  out.summary.missing_fraction = records.observed.missing_fraction();
  out.summary.unobserved_errors = error_histogram(predicted, corpus.ground_truth, records.observed, CellSet::unobserved);
  return out;
}

}  // namespace xqoe
