// xqoe: link KPIs, attention prediction, rendering allocation and contract design
// from the command line. Every command writes its outputs plus manifest.json into
// --out-dir; `xqoe replay <manifest>` re-runs the recorded configuration.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/version.hpp>

#include "xqoe/xqoe.hpp"

namespace fs = std::filesystem;
using namespace xqoe;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_text(const std::string& path, const char* what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json read_json(const std::string& path, const char* what) {
  try {
    return json::parse(read_text(path, what));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " '" + path + "': " + e.what());
  }
}

/// Formats doubles with round-trip precision so reruns compare byte for byte.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class Outputs {
public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    f << body;
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const { return names_; }

private:
  fs::path dir_;
  std::vector<std::string> names_;
};

json build_info() {
  return {{"xqoe", kVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

template <typename T>
T cfg_get(const json& cfg, const char* key) {
  if (!cfg.contains(key)) throw ConfigError(std::string("manifest config: missing '") + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("manifest config: bad value for '") + key + "'");
  }
}

std::array<double, 2> parse_range(const std::string& s, const char* what) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError(std::string(what) + ": expected 'lo,hi'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": expected 'lo,hi'");
  }
}

// ---- kpi ------------------------------------------------------------------------

void run_kpi(const json& cfg, Outputs& out) {
  const auto s = parse_scenario(cfg_get<json>(cfg, "scenario"));
  const auto sweep = cfg_get<std::string>(cfg, "sweep");
  if (sweep != "power_down" && sweep != "power_up" && sweep != "bandwidth")
    throw ConfigError("kpi: --sweep must be power_down, power_up or bandwidth");
  const auto xs = linear_grid(cfg_get<double>(cfg, "from"), cfg_get<double>(cfg, "to"), cfg_get<int>(cfg, "points"));
  const bool oracle = cfg_get<bool>(cfg, "oracle");
  const auto samples = cfg_get<std::int64_t>(cfg, "samples");
  const auto seed = cfg_get<std::uint64_t>(cfg, "seed");
  const auto mod_override = cfg_get<std::string>(cfg, "modulation");
  if (oracle && samples < 2) throw ConfigError("kpi: --samples must be >=2");

  struct Row {
    double rate = 0, bep = 0;
    Estimate rate_mc, bep_mc;
  };
  const std::size_t users = s.links.size();
  std::vector<Row> rows(users * xs.size());
  std::vector<double> zetas(users);
  for (std::size_t u = 0; u < users; ++u) zetas[u] = scenario_zeta(s, s.links[u]);
  for (std::size_t u = 0; u < users; ++u) {
    const auto mod = mod_override.empty() ? s.modulations[u] : ModulationScheme::from_name(mod_override);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      LinkParams p = s.links[u];
      if (sweep == "power_down") p.tx_power_down = db_to_linear(xs[k]);
      if (sweep == "power_up") p.tx_power_up = db_to_linear(xs[k]);
      if (sweep == "bandwidth") p.bandwidth_hz = xs[k];
      require_valid(p);
      auto& r = rows[u * xs.size() + k];
      r.rate = downlink_rate(p, zetas[u]).value;
      r.bep = uplink_bep(p, zetas[u], mod).value;
      if (oracle) {
        const OracleConfig oc{samples, substream_seed(seed, 0x4B, u, k), 100};
        r.rate_mc = empirical_rate(p, zetas[u], oc);
        r.bep_mc = empirical_bep(p, zetas[u], mod, oc);
      }
    }
  }
  std::ostringstream csv;
  csv << "user,x,rate_analytic,rate_mc,rate_mc_se,bep_analytic,bep_mc,bep_mc_se\n";
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto& r = rows[u * xs.size() + k];
      csv << u + 1 << ',' << num(xs[k]) << ',' << num(r.rate) << ',';
      if (oracle) csv << num(r.rate_mc.mean) << ',' << num(r.rate_mc.se);
      else csv << ',';
      csv << ',' << num(r.bep) << ',';
      if (oracle) csv << num(r.bep_mc.mean) << ',' << num(r.bep_mc.se);
      else csv << ',';
      csv << '\n';
    }
  out.write("kpi.csv", csv.str());
}

// ---- experiment-allocation ------------------------------------------------------

void run_allocation(const json& cfg, Outputs& out) {
  AllocationExperimentConfig c;
  c.seed = cfg_get<std::uint64_t>(cfg, "seed");
  c.budget_per_object = cfg_get<double>(cfg, "budget_per_object");
  c.floor = cfg_get<double>(cfg, "floor");
  c.random_draws = cfg_get<int>(cfg, "random_draws");
  c.predictor.rank = cfg_get<int>(cfg, "rank");
  c.predictor.lambda = cfg_get<double>(cfg, "lambda");
  c.predictor.tol = cfg_get<double>(cfg, "tol");
  c.predictor.max_sweeps = cfg_get<int>(cfg, "max_sweeps");
  c.predictor.seed = c.seed;
  const auto schemes = cfg_get<std::vector<std::string>>(cfg, "schemes");
  for (const auto& name : schemes)
    if (name != "random" && name != "uniform" && name != "attention" && name != "oracle")
      throw ConfigError("experiment-allocation: unknown scheme '" + name + "'");

  const auto exp = run_allocation_experiment(c);
  auto has = [&](const char* n) { return std::find(schemes.begin(), schemes.end(), n) != schemes.end(); };
  std::ostringstream csv;
  csv << "user,objects";
  for (const char* n : {"random", "uniform", "attention", "oracle"})
    if (has(n)) csv << ",mi_" << n;
  csv << '\n';
  for (const auto& r : exp.rows) {
    csv << r.user + 1 << ',' << r.objects;
    if (has("random")) csv << ',' << num(r.mi_random);
    if (has("uniform")) csv << ',' << num(r.mi_uniform);
    if (has("attention")) csv << ',' << num(r.mi_attention);
    if (has("oracle")) csv << ',' << num(r.mi_oracle);
    csv << '\n';
  }
  out.write("allocation.csv", csv.str());

  const auto& sm = exp.summary;
  std::ostringstream sum;
  sum << "improvement_mean_pct,improvement_max_pct,improvement_min_pct,oracle_gap_mean_pct,ordered_fraction,"
         "missing_fraction,unobserved_exact,unobserved_one,unobserved_two_plus\n";
  sum << num(100 * sm.improvement_mean) << ',' << num(100 * sm.improvement_max) << ',' << num(100 * sm.improvement_min)
      << ',' << num(100 * sm.oracle_gap_mean) << ',' << num(sm.ordered_fraction) << ',' << num(sm.missing_fraction)
      << ',' << num(sm.unobserved_errors.exact) << ',' << num(sm.unobserved_errors.one) << ','
      << num(sm.unobserved_errors.two_plus) << '\n';
  out.write("summary.csv", sum.str());
}

// ---- contract -------------------------------------------------------------------

json bundle_json(const ResourceBundle& b) {
  return {{"power_down_w", b.power_down}, {"bandwidth_hz", b.bandwidth}, {"power_up_w", b.power_up},
          {"render_total_k", b.render_total}};
}

void run_contract(const json& cfg, Outputs& out) {
  auto s = parse_scenario(cfg_get<json>(cfg, "scenario"));
  if (cfg.contains("fs_range")) {
    const auto r = cfg_get<std::array<double, 2>>(cfg, "fs_range");
    s.grid.fs_min = r[0];
    s.grid.fs_max = r[1];
  }
  if (cfg.contains("um_range")) {
    const auto r = cfg_get<std::array<double, 2>>(cfg, "um_range");
    s.grid.um_min = r[0];
    s.grid.um_max = r[1];
  }
  if (cfg.contains("grid")) {
    const auto g = cfg_get<std::array<int, 2>>(cfg, "grid");
    s.grid.fs_points = g[0];
    s.grid.um_points = g[1];
  }
  if (cfg.contains("inp_utility_floor")) s.market.inp_utility_floor = cfg_get<double>(cfg, "inp_utility_floor");
  require_valid(s.grid);
  auto c = contract_scenario(s);
  ContractSurface surf;
  InnerCache cache(c);
  const auto sol = optimize_contract(c, s.grid, cache, &surf);

  std::ostringstream csv;
  write_surface_csv(csv, surf);
  out.write("surface.csv", csv.str());

  const auto inner = cache.get(sol.terms.per_qoe_fee);
  const auto ic = ic_check(c, *inner, cfg_get<int>(cfg, "ic_draws"), cfg_get<double>(cfg, "ic_rel"),
                           cfg_get<std::uint64_t>(cfg, "seed"));
  json opt;
  opt["fixed_fee"] = sol.terms.fixed_fee;
  opt["per_qoe_fee"] = sol.terms.per_qoe_fee;
  opt["inp_utility"] = sol.inp_utility;
  opt["msp_utility"] = sol.msp_utility;
  opt["inp_utility_floor"] = c.market.inp_utility_floor;
  opt["ir_satisfied"] = sol.ir_satisfied;
  opt["inner_converged"] = sol.inner_converged;
  opt["ic"] = {{"draws", ic.draws}, {"max_gain", ic.max_gain}, {"tolerance", ic.tolerance}, {"ok", ic.ok()}};
  opt["users"] = json::array();
  for (std::size_t i = 0; i < sol.bundles.size(); ++i)
    opt["users"].push_back({{"user", i + 1}, {"bundle", bundle_json(sol.bundles[i])}, {"mi", sol.mi[i]}});
  out.write("optimum.json", opt.dump(2) + "\n");
}

// ---- predict --------------------------------------------------------------------

std::string histogram_row(const char* cells, const ErrorHistogram& h) {
  return std::string(cells) + ',' + num(h.exact) + ',' + num(h.one) + ',' + num(h.two_plus) + ',' +
         std::to_string(h.count) + '\n';
}

void run_predict(const json& cfg, Outputs& out) {
  std::istringstream in(cfg_get<std::string>(cfg, "matrix_csv"));
  const auto observed = load_matrix(in);
  FactorizeConfig fc;
  fc.rank = cfg_get<int>(cfg, "rank");
  fc.lambda = cfg_get<double>(cfg, "lambda");
  fc.tol = cfg_get<double>(cfg, "tol");
  fc.max_sweeps = cfg_get<int>(cfg, "max_sweeps");
  fc.seed = cfg_get<std::uint64_t>(cfg, "seed");
  const auto fit = factorize(observed.matrix, fc);
  const auto predicted = predict_levels(fit.model);

  std::ostringstream pcsv;
  write_matrix(pcsv, predicted, observed.labels);
  out.write("predicted.csv", pcsv.str());

  std::ostringstream lcsv;
  lcsv << "sweep,loss\n";
  for (std::size_t k = 0; k < fit.loss_trace.size(); ++k) lcsv << k << ',' << num(fit.loss_trace[k]) << '\n';
  out.write("loss.csv", lcsv.str());

  const auto truth_text = cfg_get<std::string>(cfg, "truth_csv");
  if (!truth_text.empty()) {
    std::istringstream tin(truth_text);
    const auto truth = load_matrix(tin);
    if (truth.matrix.users() != observed.matrix.users() || truth.matrix.objects() != observed.matrix.objects())
      throw ConfigError("predict: truth matrix shape differs from the input");
    if (truth.matrix.observed_count() != static_cast<std::size_t>(truth.matrix.raw().size()))
      throw ConfigError("predict: truth matrix must be fully observed");
    std::ostringstream ecsv;
    ecsv << "cells,exact,one,two_plus,count\n";
    ecsv << histogram_row("all", error_histogram(predicted, truth.matrix, observed.matrix, CellSet::all));
    ecsv << histogram_row("unobserved", error_histogram(predicted, truth.matrix, observed.matrix, CellSet::unobserved));
    out.write("errors.csv", ecsv.str());
  }
}

// ---- generate -------------------------------------------------------------------

void run_generate(const json& cfg, Outputs& out) {
  const auto seed = cfg_get<std::uint64_t>(cfg, "seed");
  CorpusConfig cc;
  cc.n_users = cfg_get<int>(cfg, "users");
  cc.n_objects = cfg_get<int>(cfg, "objects");
  const auto corpus = generate_corpus(cc, seed);
  const auto records = sparsify(corpus, substream_seed(seed, 0x5B));
  std::ostringstream gt, obs;
  write_matrix(gt, corpus.ground_truth);
  write_matrix(obs, records.observed);
  out.write("ground_truth.csv", gt.str());
  out.write("observed.csv", obs.str());
  std::ostringstream stats;
  stats << "users,objects,images,missing_fraction,redraws\n"
        << cc.n_users << ',' << cc.n_objects << ',' << cc.n_images << ',' << num(records.observed.missing_fraction())
        << ',' << records.redraws << '\n';
  out.write("corpus.csv", stats.str());
}

// ---- sir-hist -------------------------------------------------------------------

void run_sir_hist(const json& cfg, Outputs& out) {
  const auto s = parse_scenario(cfg_get<json>(cfg, "scenario"));
  const int user = cfg_get<int>(cfg, "user");
  if (user < 1 || user > static_cast<int>(s.links.size())) throw ConfigError("sir-hist: --user out of range");
  const auto dir_name = cfg_get<std::string>(cfg, "direction");
  if (dir_name != "down" && dir_name != "up") throw ConfigError("sir-hist: --direction must be down or up");
  const Direction dir = dir_name == "down" ? Direction::down : Direction::up;
  const auto& p = s.links[static_cast<std::size_t>(user - 1)];
  const double z = scenario_zeta(s, p);
  const OracleConfig oc{cfg_get<std::int64_t>(cfg, "samples"), cfg_get<std::uint64_t>(cfg, "seed"),
                        cfg_get<int>(cfg, "bins")};
  auto sample = sample_sir(p, z, oc, dir);
  double hi = cfg_get<double>(cfg, "max_sir");
  if (!(hi > 0.0)) {
    auto sorted = sample;
    const auto q = sorted.begin() + static_cast<std::ptrdiff_t>(0.99 * static_cast<double>(sorted.size() - 1));
    std::nth_element(sorted.begin(), q, sorted.end());
    hi = *q;
  }
  const auto h = histogram(sample, 0.0, hi, oc.histogram_bins);
  const auto shape = sir_shape(p, z, dir);
  std::ostringstream csv;
  csv << "gamma_bin_left,gamma_bin_right,density,pdf_mid\n";
  for (const auto& b : h)
    csv << num(b.left) << ',' << num(b.right) << ',' << num(b.density) << ',' << num(sir_pdf(0.5 * (b.left + b.right), shape))
        << '\n';
  out.write("sir_hist.csv", csv.str());
}

// ---- dispatch -------------------------------------------------------------------

void run(const std::string& command, const json& cfg, const fs::path& out_dir) {
  Outputs out(out_dir);
  if (command == "kpi") run_kpi(cfg, out);
  else if (command == "experiment-allocation") run_allocation(cfg, out);
  else if (command == "contract") run_contract(cfg, out);
  else if (command == "predict") run_predict(cfg, out);
  else if (command == "generate") run_generate(cfg, out);
  else if (command == "sir-hist") run_sir_hist(cfg, out);
  else throw ConfigError("manifest: unknown command '" + command + "'");
  json manifest;
  manifest["tool"] = "xqoe";
  manifest["command"] = command;
  manifest["config"] = cfg;
  manifest["outputs"] = out.names();
  manifest["build"] = build_info();
  std::ofstream f(out_dir / "manifest.json", std::ios::binary);
  f << manifest.dump(2) << '\n';
  if (!f) throw ConfigError("cannot write manifest in '" + out_dir.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-aware QoE and contract design toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::string scenario_path;
  auto add_out = [&](CLI::App* c) { c->add_option("--out-dir", out_dir, "Directory for outputs and manifest.json"); };

  // kpi
  auto* kpi = app.add_subcommand("kpi", "Rate and BEP per user over a sweep, optionally with the Monte Carlo oracle");
  std::string sweep = "power_down", modulation;
  double from = std::nan(""), to = std::nan("");
  int points = 11;
  bool oracle = false;
  std::int64_t samples = 1000000;
  std::uint64_t seed = 1;
  kpi->add_option("scenario", scenario_path, "Scenario JSON")->required();
  kpi->add_option("--sweep", sweep, "power_down | power_up (dBW) or bandwidth (Hz)");
  kpi->add_option("--from", from);
  kpi->add_option("--to", to);
  kpi->add_option("--points", points);
  kpi->add_flag("--oracle", oracle, "Add Monte Carlo columns");
  kpi->add_option("--samples", samples, "Monte Carlo samples per point");
  kpi->add_option("--seed", seed);
  kpi->add_option("--modulation", modulation, "Override every user's modulation scheme");
  add_out(kpi);

  // experiment-allocation
  auto* alloc = app.add_subcommand("experiment-allocation", "Random / uniform / attention / oracle rendering splits");
  std::vector<std::string> schemes = {"random", "uniform", "attention", "oracle"};
  double budget = 20.0, floor_k = 15.0;
  int draws = 32;
  FactorizeConfig pred;
  std::uint64_t alloc_seed = 1;
  alloc->add_option("--scheme", schemes, "Schemes to report (repeatable)");
  alloc->add_option("--budget-per-object", budget, "Rendering budget per object, K");
  alloc->add_option("--floor", floor_k, "Per-object rendering floor, K");
  alloc->add_option("--random-draws", draws);
  alloc->add_option("--s", pred.rank, "Latent dimension");
  alloc->add_option("--lambda", pred.lambda);
  alloc->add_option("--tol", pred.tol);
  alloc->add_option("--max-sweeps", pred.max_sweeps);
  alloc->add_option("--seed", alloc_seed);
  add_out(alloc);

  // contract
  auto* contract = app.add_subcommand("contract", "Contract surface over (F_s, u_M) and the MSP-optimal contract");
  std::string fs_range, um_range, grid;
  double u_th = std::nan("");
  int ic_draws = 100;
  double ic_rel = 0.05;
  std::uint64_t contract_seed = 1;
  contract->add_option("scenario", scenario_path, "Scenario JSON")->required();
  contract->add_option("--fs-range", fs_range, "lo,hi for the fixed fee");
  contract->add_option("--um-range", um_range, "lo,hi for the per-QoE fee");
  contract->add_option("--grid", grid, "N or NxM grid points (F_s x u_M)");
  contract->add_option("--u-th", u_th, "InP utility floor override");
  contract->add_option("--ic-draws", ic_draws);
  contract->add_option("--ic-rel", ic_rel);
  contract->add_option("--seed", contract_seed);
  add_out(contract);

  // predict
  auto* predict = app.add_subcommand("predict", "Fill a sparse attention matrix");
  std::string matrix_path, truth_path;
  FactorizeConfig pc;
  predict->add_option("matrix", matrix_path, "Sparse matrix CSV")->required();
  predict->add_option("--truth", truth_path, "Dense ground-truth CSV for error proportions");
  predict->add_option("--s", pc.rank);
  predict->add_option("--lambda", pc.lambda);
  predict->add_option("--tol", pc.tol);
  predict->add_option("--max-sweeps", pc.max_sweeps);
  predict->add_option("--seed", pc.seed);
  add_out(predict);

  // generate
  auto* generate = app.add_subcommand("generate", "Synthetic attention corpus and its sparse records");
  std::uint64_t gen_seed = 1;
  int gen_users = 30, gen_objects = 96;
  generate->add_option("--seed", gen_seed);
  generate->add_option("--users", gen_users);
  generate->add_option("--objects", gen_objects);
  add_out(generate);

  // sir-hist
  auto* hist = app.add_subcommand("sir-hist", "Monte Carlo SIR histogram next to the analytic density");
  int hist_user = 1, bins = 100;
  std::string direction = "down";
  std::int64_t hist_samples = 1000000;
  std::uint64_t hist_seed = 1;
  double max_sir = 0.0;
  hist->add_option("scenario", scenario_path, "Scenario JSON")->required();
  hist->add_option("--user", hist_user, "1-based user index");
  hist->add_option("--direction", direction, "down or up");
  hist->add_option("--samples", hist_samples);
  hist->add_option("--bins", bins);
  hist->add_option("--max-sir", max_sir, "Upper histogram edge (linear); default the 99th percentile");
  hist->add_option("--seed", hist_seed);
  add_out(hist);

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  add_out(replay);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    std::string command;
    json cfg;
    if (*kpi) {
      command = "kpi";
      if (std::isnan(from) || std::isnan(to)) {
        const bool bw = sweep == "bandwidth";
        if (std::isnan(from)) from = bw ? 1e6 : (sweep == "power_up" ? 10.0 : 20.0);
        if (std::isnan(to)) to = bw ? 1e7 : (sweep == "power_up" ? 30.0 : 40.0);
      }
      cfg = {{"scenario", read_json(scenario_path, "scenario")}, {"sweep", sweep}, {"from", from}, {"to", to},
             {"points", points}, {"oracle", oracle}, {"samples", samples}, {"seed", seed}, {"modulation", modulation}};
    } else if (*alloc) {
      command = "experiment-allocation";
      cfg = {{"schemes", schemes}, {"budget_per_object", budget}, {"floor", floor_k}, {"random_draws", draws},
             {"rank", pred.rank}, {"lambda", pred.lambda}, {"tol", pred.tol}, {"max_sweeps", pred.max_sweeps},
             {"seed", alloc_seed}};
    } else if (*contract) {
      command = "contract";
      cfg = {{"scenario", read_json(scenario_path, "scenario")}, {"ic_draws", ic_draws}, {"ic_rel", ic_rel},
             {"seed", contract_seed}};
      if (!fs_range.empty()) cfg["fs_range"] = parse_range(fs_range, "--fs-range");
      if (!um_range.empty()) cfg["um_range"] = parse_range(um_range, "--um-range");
      if (!grid.empty()) {
        const auto x = grid.find('x');
        try {
          const int a = std::stoi(grid.substr(0, x));
          const int b = x == std::string::npos ? a : std::stoi(grid.substr(x + 1));
          cfg["grid"] = {a, b};
        } catch (const std::exception&) {
          throw ConfigError("--grid: expected N or NxM");
        }
      }
      if (!std::isnan(u_th)) cfg["inp_utility_floor"] = u_th;
    } else if (*predict) {
      command = "predict";
      cfg = {{"matrix_csv", read_text(matrix_path, "matrix")},
             {"truth_csv", truth_path.empty() ? std::string() : read_text(truth_path, "truth matrix")},
             {"rank", pc.rank}, {"lambda", pc.lambda}, {"tol", pc.tol}, {"max_sweeps", pc.max_sweeps},
             {"seed", pc.seed}};
    } else if (*generate) {
      command = "generate";
      cfg = {{"seed", gen_seed}, {"users", gen_users}, {"objects", gen_objects}};
    } else if (*hist) {
      command = "sir-hist";
      cfg = {{"scenario", read_json(scenario_path, "scenario")}, {"user", hist_user}, {"direction", direction},
             {"samples", hist_samples}, {"bins", bins}, {"max_sir", max_sir}, {"seed", hist_seed}};
    } else {
      const auto m = read_json(manifest_path, "manifest");
      if (!m.contains("command") || !m.at("command").is_string() || !m.contains("config"))
        throw ConfigError("manifest '" + manifest_path + "': needs 'command' and 'config'");
      command = m.at("command").get<std::string>();
      cfg = m.at("config");
    }
    run(command, cfg, out_dir);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
