#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core_types.hpp"
#include "rng.hpp"

namespace xqoe {

/// Shape and statistics of the synthetic attention corpus. Interest of user u in
/// object j is object_bias*z_j + latent_scale*<x_u, y_j>/sqrt(rank) + taste_noise*e_uj,
/// and each appearance of an object in an image yields an exposure weight
/// exp(interest + exposure_noise*n), the stand-in for summed gaze over its pixels.
struct CorpusConfig {
  int n_users = 30;
  int n_objects = 96;
  int n_images = 1000;
  int n_groups = 20;
  int latent_rank = 3;
  double object_bias = 1.5;
  double latent_scale = 0.5;
  double taste_noise = 0.15;
  double exposure_noise = 0.3;
  int pool_min = 20;
  int pool_max = 36;
  int objects_per_image_min = 3;
  int objects_per_image_max = 9;
};

inline void require_valid(const CorpusConfig& c) {
  if (c.n_users < 1 || c.n_objects < 1 || c.n_images < 1 || c.n_groups < 1 || c.latent_rank < 1)
    throw ConfigError("corpus: dimensions must be >=1");
  if (c.n_groups > c.n_images) throw ConfigError("corpus: more groups than images");
  if (c.pool_min < 1 || c.pool_max < c.pool_min) throw ConfigError("corpus: bad object pool range");
  if (c.objects_per_image_min < 1 || c.objects_per_image_max < c.objects_per_image_min)
    throw ConfigError("corpus: bad objects-per-image range");
}

struct SyntheticCorpus {
  CorpusConfig config;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> images;  // distinct object ids per image
  std::vector<int> image_group;
  std::vector<std::vector<int>> group_images;
  Eigen::MatrixXd interest;  // N_U x N_O
  Eigen::MatrixXd ground_truth_scores;
  AttentionMatrix ground_truth;  // dense, five levels

  double exposure_weight(int user, int object, int image) const {
    return std::exp(interest(user, object) + config.exposure_noise * hash_normal(seed, 0xE7E, user, object, image));
  }
};

/// Per-user sorted split into five near-equal chunks (sizes differ by at most one,
/// larger chunks first); chunk k gets level k+1. Ties keep index order.
inline std::vector<int> quintile_levels(const std::vector<double>& scores, const std::vector<int>& cells) {
  std::vector<int> order(cells);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return scores[x] < scores[y]; });
  std::vector<int> levels(scores.size(), 0);
  const std::size_t n = order.size();
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    const std::size_t len = n / 5 + (k < n % 5 ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) levels[static_cast<std::size_t>(order[pos++])] = static_cast<int>(k) + 1;
  }
  return levels;
}

namespace detail {

/// Mean exposure weight per object over the given images; NaN where the object never appears.
inline std::vector<double> mean_exposure(const SyntheticCorpus& c, int user, const std::vector<int>& image_ids) {
  const auto n = static_cast<std::size_t>(c.config.n_objects);
  std::vector<double> sum(n, 0.0), cnt(n, 0.0);
  for (int img : image_ids)
    for (int obj : c.images[static_cast<std::size_t>(img)]) {
      sum[static_cast<std::size_t>(obj)] += c.exposure_weight(user, obj, img);
      cnt[static_cast<std::size_t>(obj)] += 1.0;
    }
  std::vector<double> out(n, std::nan(""));
  for (std::size_t j = 0; j < n; ++j)
    if (cnt[j] > 0.0) out[j] = sum[j] / cnt[j];
  return out;
}

template <typename Eng>
std::vector<int> sample_without_replacement(Eng& eng, int population, int k) {
  std::vector<int> idx(static_cast<std::size_t>(population));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, population - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(eng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace detail

inline SyntheticCorpus generate_corpus(const CorpusConfig& cfg, std::uint64_t seed) {
  require_valid(cfg);
  SyntheticCorpus c;
  c.config = cfg;
  c.seed = seed;
  const int nu = cfg.n_users, no = cfg.n_objects;

  // Interest model.
  {
    auto eng = make_engine(seed, 0x1);
    std::normal_distribution<double> nd;
    Eigen::VectorXd bias(no);
    for (int j = 0; j < no; ++j) bias(j) = nd(eng);
    Eigen::MatrixXd x(nu, cfg.latent_rank), y(no, cfg.latent_rank);
    for (int u = 0; u < nu; ++u)
      for (int r = 0; r < cfg.latent_rank; ++r) x(u, r) = nd(eng);
    for (int j = 0; j < no; ++j)
      for (int r = 0; r < cfg.latent_rank; ++r) y(j, r) = nd(eng);
    c.interest = cfg.latent_scale / std::sqrt(static_cast<double>(cfg.latent_rank)) * (x * y.transpose());
    for (int u = 0; u < nu; ++u)
      for (int j = 0; j < no; ++j) c.interest(u, j) += cfg.object_bias * bias(j) + cfg.taste_noise * nd(eng);
  }

  // Scenario groups: each draws an object pool with uneven popularity, and each image
  // shows a handful of distinct objects from its group's pool.
  {
    auto eng = make_engine(seed, 0x2);
    c.images.resize(static_cast<std::size_t>(cfg.n_images));
    c.image_group.resize(static_cast<std::size_t>(cfg.n_images));
    c.group_images.resize(static_cast<std::size_t>(cfg.n_groups));
    for (int img = 0; img < cfg.n_images; ++img) {
      const int g = static_cast<int>(static_cast<std::int64_t>(img) * cfg.n_groups / cfg.n_images);
      c.image_group[static_cast<std::size_t>(img)] = g;
      c.group_images[static_cast<std::size_t>(g)].push_back(img);
    }
    for (int g = 0; g < cfg.n_groups; ++g) {
      const int pool_size = std::min(no, std::uniform_int_distribution<int>(cfg.pool_min, cfg.pool_max)(eng));
      const auto pool = detail::sample_without_replacement(eng, no, pool_size);
      std::vector<double> w(static_cast<std::size_t>(pool_size));
      std::gamma_distribution<double> gam(1.0, 1.0);
      for (auto& v : w) v = gam(eng);
      for (int img : c.group_images[static_cast<std::size_t>(g)]) {
        const int k = std::min(pool_size, std::uniform_int_distribution<int>(cfg.objects_per_image_min,
                                                                             cfg.objects_per_image_max)(eng));
        // Weighted draw without replacement.
        std::vector<double> ww = w;
        auto& objs = c.images[static_cast<std::size_t>(img)];
        for (int t = 0; t < k; ++t) {
          std::discrete_distribution<int> pick(ww.begin(), ww.end());
          const int slot = pick(eng);
          objs.push_back(pool[static_cast<std::size_t>(slot)]);
          ww[static_cast<std::size_t>(slot)] = 0.0;
        }
      }
    }
    // Every object must appear somewhere.
    std::vector<bool> seen(static_cast<std::size_t>(no), false);
    for (const auto& im : c.images)
      for (int o : im) seen[static_cast<std::size_t>(o)] = true;
    std::uniform_int_distribution<int> any_image(0, cfg.n_images - 1);
    for (int o = 0; o < no; ++o)
      if (!seen[static_cast<std::size_t>(o)]) c.images[static_cast<std::size_t>(any_image(eng))].push_back(o);
  }

  // Ground truth from every image.
  std::vector<int> all_images(static_cast<std::size_t>(cfg.n_images));
  std::iota(all_images.begin(), all_images.end(), 0);
  c.ground_truth = AttentionMatrix(nu, no);
  c.ground_truth_scores.resize(nu, no);
  std::vector<int> all_objects(static_cast<std::size_t>(no));
  std::iota(all_objects.begin(), all_objects.end(), 0);
  for (int u = 0; u < nu; ++u) {
    const auto scores = detail::mean_exposure(c, u, all_images);
    const auto levels = quintile_levels(scores, all_objects);
    for (int j = 0; j < no; ++j) {
      c.ground_truth_scores(u, j) = scores[static_cast<std::size_t>(j)];
      c.ground_truth.set(u, j, levels[static_cast<std::size_t>(j)]);
    }
  }
  return c;
}

struct SparsifyConfig {
  int groups_min = 2;
  int groups_max = 4;
  double reserve_min = 0.3;
  double reserve_max = 0.7;
};

struct SparseRecords {
  AttentionMatrix observed;
  std::vector<std::vector<int>> reserved_images;  // per user
  int redraws = 0;                                // users redrawn for having nothing observed
};

namespace detail {

template <typename Eng>
std::vector<int> pick_images(const SyntheticCorpus& c, const SparsifyConfig& s, Eng& eng) {
  const int groups_hi = std::min(s.groups_max, c.config.n_groups);
  const int groups_lo = std::min(s.groups_min, groups_hi);
  const int a1 = std::uniform_int_distribution<int>(groups_lo, groups_hi)(eng);
  const double a2 = s.reserve_min == s.reserve_max ? s.reserve_min
                                                   : std::uniform_real_distribution<double>(s.reserve_min, s.reserve_max)(eng);
  std::vector<int> candidates;
  for (int g : sample_without_replacement(eng, c.config.n_groups, a1))
    for (int img : c.group_images[static_cast<std::size_t>(g)]) candidates.push_back(img);
  const int keep = static_cast<int>(std::lround(a2 * static_cast<double>(candidates.size())));
  std::vector<int> chosen;
  for (int idx : sample_without_replacement(eng, static_cast<int>(candidates.size()), keep))
    chosen.push_back(candidates[static_cast<std::size_t>(idx)]);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace detail

/// Per user: pick a1 scenario groups, reserve a fraction a2 of their images, and score
/// every object seen in the reserved images by its mean exposure weight; the observed
/// scores are then split into five levels per user.
inline SparseRecords sparsify(const SyntheticCorpus& c, std::uint64_t seed, const SparsifyConfig& s = {}) {
  if (s.groups_min < 1 || s.groups_max < s.groups_min) throw ConfigError("sparsify: bad group range");
  if (!(s.reserve_min > 0.0) || s.reserve_max > 1.0 || s.reserve_max < s.reserve_min)
    throw ConfigError("sparsify: bad reserve range");
  const int nu = c.config.n_users, no = c.config.n_objects;
  SparseRecords out;
  out.observed = AttentionMatrix(nu, no);
  out.reserved_images.resize(static_cast<std::size_t>(nu));
  std::vector<int> redraw_count(static_cast<std::size_t>(nu), 0);
  std::vector<std::vector<double>> user_scores(static_cast<std::size_t>(nu));
  parallel_for(static_cast<std::size_t>(nu), [&](std::size_t u) {
    auto eng = make_engine(seed, 0x5A, u);
    for (;;) {
      auto chosen = detail::pick_images(c, s, eng);
      auto scores = detail::mean_exposure(c, static_cast<int>(u), chosen);
      const bool any = std::any_of(scores.begin(), scores.end(), [](double v) { return !std::isnan(v); });
      if (any) {
        out.reserved_images[u] = std::move(chosen);
        user_scores[u] = std::move(scores);
        return;
      }
      ++redraw_count[u];
    }
  });
  for (int u = 0; u < nu; ++u) {
    const auto& scores = user_scores[static_cast<std::size_t>(u)];
    std::vector<int> cells;
    for (int j = 0; j < no; ++j)
      if (!std::isnan(scores[static_cast<std::size_t>(j)])) cells.push_back(j);
    const auto levels = quintile_levels(scores, cells);
    for (int j : cells) out.observed.set(u, j, levels[static_cast<std::size_t>(j)]);
    out.redraws += redraw_count[static_cast<std::size_t>(u)];
  }
  return out;
}

/// Objects in one randomly selected virtual scenario for a user, drawn the same way
/// as the sparse records (a1 groups, a fraction a2 of their images).
inline std::vector<int> select_scenario(const SyntheticCorpus& c, std::uint64_t seed, int user,
                                        const SparsifyConfig& s = {}) {
  auto eng = make_engine(seed, 0x5CE, user);
  std::vector<bool> in(static_cast<std::size_t>(c.config.n_objects), false);
  for (int img : detail::pick_images(c, s, eng))
    for (int o : c.images[static_cast<std::size_t>(img)]) in[static_cast<std::size_t>(o)] = true;
  std::vector<int> objs;
  for (int o = 0; o < c.config.n_objects; ++o)
    if (in[static_cast<std::size_t>(o)]) objs.push_back(o);
  return objs;
}

// ---- CSV matrix format -------------------------------------------------------

inline std::vector<std::string> default_object_labels(Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back("object_" + std::to_string(i));
  return out;
}

inline void write_matrix(std::ostream& os, const AttentionMatrix& m, std::vector<std::string> labels = {}) {
  if (labels.empty()) labels = default_object_labels(m.objects());
  if (static_cast<Eigen::Index>(labels.size()) != m.objects()) throw ConfigError("write_matrix: label count mismatch");
  for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
  os << '\n';
  std::ostringstream cell;
  cell.precision(17);
  for (Eigen::Index u = 0; u < m.users(); ++u) {
    for (Eigen::Index i = 0; i < m.objects(); ++i) {
      if (i) os << ',';
      if (auto v = m.at(u, i)) {
        cell.str("");
        if (*v == std::round(*v)) cell << static_cast<long long>(*v);
        else cell << *v;
        os << cell.str();
      }
    }
    os << '\n';
  }
}

struct LoadedMatrix {
  AttentionMatrix matrix;
  std::vector<std::string> labels;
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

/// Parses the CSV matrix format; empty cells are unobserved. Values must lie in [1, 5].
/// Row and column numbers in errors are 1-based and count the header as row 1.
inline LoadedMatrix load_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("matrix csv: missing header row");
  LoadedMatrix out;
  out.labels = detail::split_csv_line(line);
  for (auto& l : out.labels) l = detail::trim(l);
  const std::size_t cols = out.labels.size();
  std::vector<std::vector<std::string>> rows;
  int row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != cols) {
      throw ConfigError("matrix csv: row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(cols));
    }
    rows.push_back(std::move(cells));
  }
  out.matrix = AttentionMatrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string cell = detail::trim(rows[r][c]);
      if (cell.empty()) continue;
      const std::string where = "row " + std::to_string(r + 2) + ", column " + std::to_string(c + 1);
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ConfigError("matrix csv: " + where + ": not a number '" + cell + "'");
      }
      if (used != cell.size()) throw ConfigError("matrix csv: " + where + ": not a number '" + cell + "'");
      if (!(v >= 1.0 && v <= 5.0)) throw ConfigError("matrix csv: " + where + ": level " + cell + " outside [1,5]");
      out.matrix.set(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
    }
  return out;
}

inline LoadedMatrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open matrix file '" + path + "'");
  return load_matrix(f);
}

}  // namespace xqoe
