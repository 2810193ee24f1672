#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace xqoe {

/// Malformed input or violated precondition. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A well-formed problem without a feasible answer. The CLI maps it to exit code 3.
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Per-user wireless configuration. Every stored value is on a linear scale
/// (watts, meters, hertz, unitless channel coefficients).
struct LinkParams {
  int antennas_cbs = 1;        // M_C
  int antennas_rs = 1;         // M_U
  int interference_paths = 1;  // N_Q
  double distance_m = 1.0;
  double path_loss_exp = 2.0;
  double tx_power_down = 1.0;
  double interference_power_down = 1.0;
  double chan_coeff_data = 1.0;
  double chan_coeff_intf = 1.0;
  double tx_power_up = 1.0;
  double interference_power_up = 1.0;
  double chan_coeff_data_up = 1.0;
  double chan_coeff_intf_up = 1.0;
  double bandwidth_hz = 0.0;
};

struct FieldError {
  std::string field;
  std::string message;
};

/// Collects every violated invariant; an empty result means the parameters are usable.
inline std::vector<FieldError> validate(const LinkParams& p) {
  std::vector<FieldError> errors;
  auto count = [&](std::string_view name, int v) {
    if (v < 1) errors.push_back({std::string(name), std::string(name) + " must be >=1"});
  };
  auto positive = [&](std::string_view name, double v) {
    if (!(v > 0.0) || !std::isfinite(v))
      errors.push_back({std::string(name), std::string(name) + " must be finite and >0"});
  };
  count("antennas_cbs", p.antennas_cbs);
  count("antennas_rs", p.antennas_rs);
  count("interference_paths", p.interference_paths);
  positive("distance_m", p.distance_m);
  positive("path_loss_exp", p.path_loss_exp);
  positive("tx_power_down", p.tx_power_down);
  positive("interference_power_down", p.interference_power_down);
  positive("chan_coeff_data", p.chan_coeff_data);
  positive("chan_coeff_intf", p.chan_coeff_intf);
  positive("tx_power_up", p.tx_power_up);
  positive("interference_power_up", p.interference_power_up);
  positive("chan_coeff_data_up", p.chan_coeff_data_up);
  positive("chan_coeff_intf_up", p.chan_coeff_intf_up);
  if (!(p.bandwidth_hz >= 0.0) || !std::isfinite(p.bandwidth_hz))
    errors.push_back({"bandwidth_hz", "bandwidth_hz must be finite and >=0"});
  return errors;
}

inline void require_valid(const LinkParams& p) {
  const auto errors = validate(p);
  if (errors.empty()) return;
  std::string msg = "invalid link parameters:";
  for (const auto& e : errors) msg += " " + e.message + ";";
  throw ConfigError(msg);
}

/// The four provider resources, in SI-ish storage units:
/// watts, hertz, watts, and resolution units "K".
struct ResourceBundle {
  double power_down = 0.0;
  double bandwidth = 0.0;
  double power_up = 0.0;
  double render_total = 0.0;

  static constexpr std::size_t size = 4;

  double& operator[](std::size_t i) {
    switch (i) {
      case 0: return power_down;
      case 1: return bandwidth;
      case 2: return power_up;
      default: return render_total;
    }
  }
  double operator[](std::size_t i) const { return const_cast<ResourceBundle&>(*this)[i]; }
};

/// Unit prices, per kW for the powers, per MHz for bandwidth and per K for rendering.
struct UnitPrices {
  double power_down = 0.0;
  double bandwidth = 0.0;
  double power_up = 0.0;
  double render = 0.0;
};

/// Conversion from storage units to the units the prices are quoted in.
inline constexpr std::array<double, 4> kPriceUnitScale = {1e-3, 1e-6, 1e-3, 1.0};

/// Quadratic provider cost sum_i u_i * theta_i^2 with theta in price units.
inline double cost(const ResourceBundle& r, const UnitPrices& u) {
  const std::array<double, 4> price = {u.power_down, u.bandwidth, u.power_up, u.render};
  double total = 0.0;
  for (std::size_t i = 0; i < ResourceBundle::size; ++i) {
    const double v = r[i] * kPriceUnitScale[i];
    total += price[i] * v * v;
  }
  return total;
}

enum class Modulation { coherent_bfsk, coherent_bpsk, noncoherent_bfsk, dpsk };

/// Conditional BEP is upper_gamma(tau2, tau1*gamma) / (2*Gamma(tau2)).
struct ModulationScheme {
  Modulation kind = Modulation::dpsk;
  double tau1 = 1.0;
  double tau2 = 1.0;

  static ModulationScheme of(Modulation m) {
    switch (m) {
      case Modulation::coherent_bfsk: return {m, 0.5, 0.5};
      case Modulation::coherent_bpsk: return {m, 1.0, 0.5};
      case Modulation::noncoherent_bfsk: return {m, 0.5, 1.0};
      case Modulation::dpsk: return {m, 1.0, 1.0};
    }
    return {};
  }

  static ModulationScheme from_name(std::string_view name) {
    if (name == "coherent-BFSK") return of(Modulation::coherent_bfsk);
    if (name == "coherent-BPSK" || name == "BPSK") return of(Modulation::coherent_bpsk);
    if (name == "noncoherent-BFSK") return of(Modulation::noncoherent_bfsk);
    if (name == "DPSK") return of(Modulation::dpsk);
    throw ConfigError("unknown modulation scheme '" + std::string(name) + "'");
  }

  std::string name() const {
    switch (kind) {
      case Modulation::coherent_bfsk: return "coherent-BFSK";
      case Modulation::coherent_bpsk: return "coherent-BPSK";
      case Modulation::noncoherent_bfsk: return "noncoherent-BFSK";
      case Modulation::dpsk: return "DPSK";
    }
    return "?";
  }
};

inline std::array<ModulationScheme, 4> all_modulations() {
  return {ModulationScheme::of(Modulation::coherent_bfsk), ModulationScheme::of(Modulation::coherent_bpsk),
          ModulationScheme::of(Modulation::noncoherent_bfsk), ModulationScheme::of(Modulation::dpsk)};
}

/// Normalization bounds for the rate (bit/s) and the BEP.
struct KpiBounds {
  double rate_min = 10e6;
  double rate_max = 42e6;
  double bep_min = 1e-8;
  double bep_max = 1e-2;
};

inline void require_valid(const KpiBounds& b) {
  if (!(b.rate_max > b.rate_min)) throw ConfigError("bounds: rate_max must exceed rate_min");
  if (!(b.bep_max > b.bep_min)) throw ConfigError("bounds: bep_max must exceed bep_min");
}

/// Users x objects attention values with an observation mask. Unobserved
/// cells hold NaN so that reading one as data fails loudly downstream.
class AttentionMatrix {
public:
  AttentionMatrix() = default;
  AttentionMatrix(Eigen::Index users, Eigen::Index objects)
      : values_(Eigen::MatrixXd::Constant(users, objects, std::numeric_limits<double>::quiet_NaN())),
        mask_(Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(users, objects, false)) {}

  static AttentionMatrix dense(const Eigen::MatrixXd& values) {
    AttentionMatrix m(values.rows(), values.cols());
    m.values_ = values;
    m.mask_.setConstant(true);
    return m;
  }

  Eigen::Index users() const { return values_.rows(); }
  Eigen::Index objects() const { return values_.cols(); }

  bool observed(Eigen::Index u, Eigen::Index i) const { return mask_(u, i); }

  std::optional<double> at(Eigen::Index u, Eigen::Index i) const {
    if (!mask_(u, i)) return std::nullopt;
    return values_(u, i);
  }

  /// Value of an observed cell. Reading an unobserved cell is a logic error.
  double value(Eigen::Index u, Eigen::Index i) const {
    if (!mask_(u, i)) throw std::logic_error("read of unobserved attention cell");
    return values_(u, i);
  }

  void set(Eigen::Index u, Eigen::Index i, double v) {
    values_(u, i) = v;
    mask_(u, i) = true;
  }
  void clear(Eigen::Index u, Eigen::Index i) {
    values_(u, i) = std::numeric_limits<double>::quiet_NaN();
    mask_(u, i) = false;
  }

  std::size_t observed_count() const { return static_cast<std::size_t>(mask_.count()); }
  double missing_fraction() const {
    const double total = static_cast<double>(values_.size());
    return total == 0.0 ? 0.0 : 1.0 - static_cast<double>(observed_count()) / total;
  }

  const Eigen::MatrixXd& raw() const { return values_; }
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask() const { return mask_; }

  friend bool operator==(const AttentionMatrix& a, const AttentionMatrix& b) {
    if (a.users() != b.users() || a.objects() != b.objects()) return false;
    if ((a.mask_ != b.mask_).any()) return false;
    for (Eigen::Index u = 0; u < a.users(); ++u)
      for (Eigen::Index i = 0; i < a.objects(); ++i)
        if (a.mask_(u, i) && a.values_(u, i) != b.values_(u, i)) return false;
    return true;
  }

private:
  Eigen::MatrixXd values_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
};

/// Round half up onto the five-level grid.
inline int quantize_level(double raw) {
  const double r = std::floor(raw + 0.5);
  if (!(r >= 1.0)) return 1;  // also catches NaN
  if (r > 5.0) return 5;
  return static_cast<int>(r);
}

struct ContractTerms {
  double fixed_fee = 0.0;    // F_s
  double per_qoe_fee = 0.0;  // u_M
};

inline void require_valid(const ContractTerms& t) {
  if (!std::isfinite(t.fixed_fee) || t.fixed_fee < 0.0 || !std::isfinite(t.per_qoe_fee) || t.per_qoe_fee < 0.0)
    throw ConfigError("contract terms must be finite and >=0");
}

struct MarketConstants {
  std::vector<double> base_fee_per_user;  // omega_Ui
  std::vector<double> qoe_fee_per_user;   // mu_Ui
  double rra = 0.0;                       // tau, relative risk aversion
  double inp_utility_floor = 0.0;         // IR threshold
};

inline void require_valid(const MarketConstants& m, std::size_t users) {
  if (!(m.rra >= 0.0 && m.rra < 1.0)) throw ConfigError("market: rra must lie in [0,1)");
  if (m.base_fee_per_user.size() != users || m.qoe_fee_per_user.size() != users)
    throw ConfigError("market: fee sequences must have one entry per user");
}

struct MiReport {
  double rate_bps = 0.0;
  double bep = 0.5;
  bool bep_underflow = false;
  bool kpi_out_of_range = false;
  std::vector<double> per_object_render;
  double mi = 0.0;
};

}  // namespace xqoe
