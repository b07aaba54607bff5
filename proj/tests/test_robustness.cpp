#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hyperst/isometry.hpp"
#include "hyperst/robustness.hpp"
#include "test_util.hpp"

using namespace hyperst;

TEST(EpsDerived, Values) {
  EXPECT_EQ(eps_derived(0.0).eps1, 0.0);
  EXPECT_EQ(eps_derived(0.0).eps2, 0.0);
  const auto one = eps_derived(std::numbers::sqrt2 / 2);
  EXPECT_NEAR(one.eps1, 2.0, 1e-14);
  EXPECT_NEAR(one.eps2, 4.0, 1e-14);
  const auto small = eps_derived(1e-4);
  EXPECT_NEAR(small.eps1, 0.023784, 1e-6);
  EXPECT_NEAR(small.eps2, 0.4362031, 1e-7);  // 30-digit reference value
  EXPECT_THROW(eps_derived(-1e-9), std::invalid_argument);
}

TEST(EpsDerived, PowerIdentities) {
  for (double e : {1e-8, 3e-5, 0.01, 1.0}) {
    const auto d = eps_derived(e);
    EXPECT_NEAR(d.eps1 * d.eps1, 4 * e * std::numbers::sqrt2, 1e-12 * std::max(1.0, e));
    EXPECT_NEAR(std::pow(d.eps2, 4), 256 * e * std::numbers::sqrt2, 1e-10 * std::max(1.0, e));
  }
}

TEST(FidelityBound, Anchors) {
  EXPECT_EQ(fidelity_lower_bound(0.0), 1.0);
  EXPECT_NEAR(fidelity_lower_bound(2.40e-4), 0.5, 0.01);
  EXPECT_NEAR(fidelity_lower_bound(9.07e-4), 0.0, 0.01);
  EXPECT_THROW(fidelity_lower_bound(-1.0), std::invalid_argument);
}

TEST(FidelityBound, StrictlyDecreasing) {
  const auto g = make_grid(1e-12, 1.0, 2000);
  for (std::size_t k = 1; k < g.size(); ++k)
    EXPECT_LT(fidelity_lower_bound(g[k]), fidelity_lower_bound(g[k - 1]));
}

TEST(TotalBound, ProductAndClamping) {
  const auto zero = total_bound({0, 0});
  EXPECT_EQ(zero.f_t_lb, 1.0);
  const auto anchor = total_bound({2.40e-4, 2.40e-4});
  EXPECT_NEAR(anchor.f_t_lb, 0.25, 0.01);
  const auto mixed = total_bound({1e-5, 5e-5});
  EXPECT_DOUBLE_EQ(mixed.f_t_lb, fidelity_lower_bound(1e-5) * fidelity_lower_bound(5e-5));
  const auto big = total_bound({1e-2, 1e-3});
  EXPECT_LT(big.f_p_lb, 0.0);
  EXPECT_EQ(big.f_p_lb_clamped, 0.0);
  EXPECT_EQ(big.f_t_lb_clamped, 0.0);
  EXPECT_LT(big.f_t_lb, 0.0);  // never the positive product of two negatives
  EXPECT_THROW(total_bound({-1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(total_bound({3.0, 0.0}), std::invalid_argument);
}

TEST(NormBounds, IdealIsExactlyZero) {
  for (const auto& l : all_hyper_labels()) {
    const auto rho = make_source(l);
    const auto checks = check_norm_bounds(rho, canonical_settings(l));
    ASSERT_EQ(checks.size(), 8u);
    for (const auto& c : checks) {
      EXPECT_LT(c.value, 1e-12) << to_string(l) << " " << c.name;
      EXPECT_TRUE(c.holds);
    }
  }
}

TEST(NormBounds, HoldUnderWernerAndRotation) {
  NoiseSpec w;
  w.werner_p_pol = 0.999;
  NoiseSpec r;
  r.rotation_angle_spat = 0.01;
  for (const NoiseSpec& n : {w, r}) {
    const HyperBellLabel l{BellLabel::PsiMinus, BellLabel::PhiPlus};
    const auto rho = make_source(l, n);
    for (const auto& c : check_norm_bounds(rho, noisy_settings(l, n))) EXPECT_TRUE(c.holds) << c.name;
  }
  // eps from the exact CHSH value equals 2 sqrt2 (1 - p) under Werner noise.
  const auto rho = make_source({}, w);
  EXPECT_NEAR(deficit(chsh_exact(rho, canonical_settings({}), Dof::Polarization)),
              kTsirelson * 0.001, 1e-12);
}

TEST(NormBounds, ViolatedWhenEpsilonUnderstated) {
  NoiseSpec n;
  n.rotation_angle_pol = 0.3;
  const auto rho = make_source({}, n);
  const auto checks = check_norm_bounds(rho, noisy_settings({}, n), {0.0, 0.0});
  bool any_fail = false;
  for (const auto& c : checks) any_fail |= !c.holds;
  EXPECT_TRUE(any_fail);
}

TEST(Sweep, GridAndMonotoneTable) {
  const auto lin = make_grid(0.0, 1e-3, 11);
  EXPECT_EQ(lin.front(), 0.0);
  EXPECT_NEAR(lin[1], 1e-4, 1e-18);
  const auto log = make_grid(1e-7, 1e-3, 100);
  EXPECT_NEAR(log[1] / log[0], std::pow(1e4, 1.0 / 99), 1e-12);
  EXPECT_EQ(log.back(), 1e-3);
  const auto rows = sweep_bounds(log);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_LE(rows[k].f_p_lb, rows[k - 1].f_p_lb);
    EXPECT_LE(rows[k].f_t_lb, rows[k - 1].f_t_lb);
  }
  const auto z = sweep_bounds({0.0});
  EXPECT_EQ(z[0].f_p_lb, 1.0);
  EXPECT_EQ(z[0].f_t_lb, 1.0);
  EXPECT_THROW(sweep_bounds({-1.0}), std::invalid_argument);
  EXPECT_THROW(make_grid(1.0, 0.5, 3), std::invalid_argument);
}

TEST(Sweep, CsvFormat) {
  std::ostringstream os;
  write_sweep_csv(os, sweep_bounds({0.0, 2.4e-4}));
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "epsilon,f_p_lb,f_t_lb");
  EXPECT_NE(s.find("0,1,1\n"), std::string::npos);
  EXPECT_NE(s.find("0.00024,0.50"), std::string::npos);
}

TEST(Soundness, ExtractedFidelityDominatesBound) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> p(0.99, 1.0), t(-0.05, 0.05);
  for (int k = 0; k < 20; ++k) {
    NoiseSpec n;
    n.werner_p_pol = p(gen);
    n.werner_p_spat = p(gen);
    n.rotation_angle_pol = t(gen);
    n.rotation_angle_spat = t(gen);
    const auto l = all_hyper_labels()[static_cast<std::size_t>(k) % 16];
    const auto rho = make_source(l, n);
    const auto s = noisy_settings(l, n);
    const auto b = total_bound({deficit(chsh_exact(rho, s, Dof::Polarization)),
                                deficit(chsh_exact(rho, s, Dof::Spatial))});
    const auto s1 = run_step1_spatial(rho, l, noisy_isometry_config(Dof::Spatial, n));
    const auto s2 = run_step2_polarization(rho, l, noisy_isometry_config(Dof::Polarization, n));
    EXPECT_GE(s1.extracted_fidelity, b.f_s_lb_clamped);
    EXPECT_GE(s2.extracted_fidelity, b.f_p_lb_clamped);
  }
}
