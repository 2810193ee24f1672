#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "reference_users.hpp"
#include "xqoe/core_types.hpp"

using namespace xqoe;

TEST(Units, DecibelRoundTrip) {
  for (double db : {-40.0, -3.0, 0.0, 5.0, 30.0, 36.0}) EXPECT_NEAR(linear_to_db(db_to_linear(db)), db, 1e-12);
  EXPECT_DOUBLE_EQ(db_to_linear(30.0), 1000.0);
  EXPECT_DOUBLE_EQ(dbm_to_watts(30.0), 1.0);
  EXPECT_NEAR(dbm_to_watts(60.0), db_to_linear(30.0), 1e-9);
}

TEST(LinkParams, ReferenceUsersAreValid) {
  for (int k = 1; k <= 3; ++k) EXPECT_TRUE(validate(reference_users::user(k)).empty()) << "user " << k;
}

TEST(LinkParams, ValidateNamesEveryBadField) {
  auto p = reference_users::user(1);
  p.antennas_rs = 0;
  p.tx_power_up = -1.0;
  p.chan_coeff_intf = std::numeric_limits<double>::quiet_NaN();
  p.bandwidth_hz = -5.0;
  const auto errors = validate(p);
  ASSERT_EQ(errors.size(), 4u);
  EXPECT_EQ(errors[0].field, "antennas_rs");
  EXPECT_EQ(errors[0].message, "antennas_rs must be >=1");
  EXPECT_EQ(errors[1].field, "chan_coeff_intf");
  EXPECT_EQ(errors[2].field, "tx_power_up");
  EXPECT_EQ(errors[2].message, "tx_power_up must be finite and >0");
  EXPECT_EQ(errors[3].field, "bandwidth_hz");
  EXPECT_THROW(require_valid(p), ConfigError);
}

TEST(LinkParams, ZeroBandwidthIsAllowed) {
  auto p = reference_users::user(2);
  p.bandwidth_hz = 0.0;
  EXPECT_NO_THROW(require_valid(p));
}

TEST(ResourceBundle, IndexOrder) {
  ResourceBundle r{1, 2, 3, 4};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r[i], static_cast<double>(i + 1));
  r[3] = 9;
  EXPECT_EQ(r.render_total, 9.0);
}

TEST(Cost, ZeroBundleCostsNothing) { EXPECT_EQ(cost({}, UnitPrices{3, 2, 4, 5}), 0.0); }

TEST(Cost, QuadraticInPriceUnits) {
  // 2 kW, 5 MHz, 0.5 kW, 10 K.
  const UnitPrices u{3, 2, 4, 5};
  const double expected = 3 * 4.0 + 2 * 25.0 + 4 * 0.25 + 5 * 100.0;
  EXPECT_NEAR(cost({2000, 5e6, 500, 10}, u), expected, 1e-9);
}

TEST(Modulation, NamesRoundTrip) {
  for (const auto& m : all_modulations()) EXPECT_EQ(ModulationScheme::from_name(m.name()).kind, m.kind);
  EXPECT_EQ(ModulationScheme::from_name("BPSK").kind, Modulation::coherent_bpsk);
  EXPECT_THROW(ModulationScheme::from_name("QAM16"), ConfigError);
}

TEST(Modulation, ShapeParameters) {
  const auto d = ModulationScheme::of(Modulation::dpsk);
  EXPECT_EQ(d.tau1, 1.0);
  EXPECT_EQ(d.tau2, 1.0);
  const auto b = ModulationScheme::of(Modulation::coherent_bpsk);
  EXPECT_EQ(b.tau1, 1.0);
  EXPECT_EQ(b.tau2, 0.5);
  const auto f = ModulationScheme::of(Modulation::coherent_bfsk);
  EXPECT_EQ(f.tau1, 0.5);
  EXPECT_EQ(f.tau2, 0.5);
  const auto n = ModulationScheme::of(Modulation::noncoherent_bfsk);
  EXPECT_EQ(n.tau1, 0.5);
  EXPECT_EQ(n.tau2, 1.0);
}

TEST(KpiBounds, RejectsInvertedRanges) {
  EXPECT_NO_THROW(require_valid(KpiBounds{}));
  EXPECT_THROW(require_valid(KpiBounds{42e6, 10e6, 1e-8, 1e-2}), ConfigError);
  EXPECT_THROW(require_valid(KpiBounds{10e6, 42e6, 1e-2, 1e-8}), ConfigError);
}

TEST(Quantize, RoundsHalfUpAndClamps) {
  EXPECT_EQ(quantize_level(3.4), 3);
  EXPECT_EQ(quantize_level(2.5), 3);
  EXPECT_EQ(quantize_level(0.2), 1);
  EXPECT_EQ(quantize_level(5.7), 5);
  EXPECT_EQ(quantize_level(std::numeric_limits<double>::quiet_NaN()), 1);
}

TEST(AttentionMatrix, UnobservedCellsRefuseReads) {
  AttentionMatrix m(2, 3);
  EXPECT_EQ(m.observed_count(), 0u);
  EXPECT_DOUBLE_EQ(m.missing_fraction(), 1.0);
  m.set(1, 2, 4.0);
  EXPECT_EQ(m.value(1, 2), 4.0);
  EXPECT_FALSE(m.at(0, 0).has_value());
  EXPECT_THROW(m.value(0, 0), std::logic_error);
  m.clear(1, 2);
  EXPECT_FALSE(m.observed(1, 2));
}

TEST(AttentionMatrix, EqualityIgnoresUnobservedPayload) {
  AttentionMatrix a(2, 2), b(2, 2);
  a.set(0, 1, 3.0);
  b.set(0, 1, 3.0);
  EXPECT_TRUE(a == b);
  b.set(1, 1, 2.0);
  EXPECT_FALSE(a == b);
}

TEST(Market, Validation) {
  EXPECT_THROW(require_valid(ContractTerms{-1.0, 0.0}), ConfigError);
  EXPECT_THROW(require_valid(ContractTerms{0.0, std::numeric_limits<double>::infinity()}), ConfigError);
  MarketConstants m{{1, 1}, {1, 1}, 0.8, 70};
  EXPECT_NO_THROW(require_valid(m, 2));
  EXPECT_THROW(require_valid(m, 3), ConfigError);
  m.rra = 1.0;
  EXPECT_THROW(require_valid(m, 2), ConfigError);
}
