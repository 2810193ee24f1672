#pragma once

#include <array>
#include <cmath>

#include "xqoe/core_types.hpp"

// The three reference users. Uplink data coefficients fold in the same path
// loss as the downlink; interference settings are shared by both directions.
namespace reference_users {

inline xqoe::LinkParams user(int k, double down_dbw = 30.0, double up_dbw = 20.0, double bandwidth_hz = 5e6) {
  using xqoe::db_to_linear;
  xqoe::LinkParams p;
  p.antennas_cbs = 6;
  p.antennas_rs = k == 3 ? 7 : 3;
  p.interference_paths = 3;
  p.path_loss_exp = 2.0;
  p.distance_m = k == 2 ? 6.0 : 10.0;
  p.interference_power_down = db_to_linear(k == 3 ? 1.0 : 5.0);
  p.chan_coeff_intf = db_to_linear(k == 2 ? -1.0 : -3.0);
  p.chan_coeff_data = db_to_linear(k == 2 ? -2.0 : -1.0);
  p.tx_power_down = db_to_linear(down_dbw);
  p.tx_power_up = db_to_linear(up_dbw);
  p.interference_power_up = p.interference_power_down;
  p.chan_coeff_intf_up = p.chan_coeff_intf;
  p.chan_coeff_data_up = p.chan_coeff_data * std::pow(p.distance_m, -p.path_loss_exp);
  p.bandwidth_hz = bandwidth_hz;
  return p;
}

}  // namespace reference_users
