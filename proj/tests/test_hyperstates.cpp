#include <gtest/gtest.h>

#include "hyperst/hyperstates.hpp"
#include "test_util.hpp"

using namespace hyperst;

TEST(Labels, ParseAndPrintRoundTrip) {
  for (const auto& l : all_hyper_labels()) {
    const auto p = parse_hyper_label(to_string(l));
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(*p, l);
  }
  EXPECT_FALSE(parse_hyper_label("phi+").has_value());
  EXPECT_FALSE(parse_hyper_label("phi+,chi").has_value());
  EXPECT_EQ(all_hyper_labels().size(), 16u);
}

TEST(HyperBell, IsProductOfDofBellStates) {
  const HyperBellLabel l{BellLabel::PsiMinus, BellLabel::PhiMinus};
  const auto psi = make_hyper_bell(l);
  ASSERT_TRUE(is_normalized(psi));
  const auto phys = RegisterLayout::physical();
  const ComplexMatrix rho = projector(psi);
  EXPECT_NEAR(fidelity(partial_trace(rho, phys, {QubitRole::PolA, QubitRole::PolB}), make_bell(l.pol)), 1.0, 1e-14);
  EXPECT_NEAR(fidelity(partial_trace(rho, phys, {QubitRole::SpatA, QubitRole::SpatB}), make_bell(l.spat)), 1.0, 1e-14);
  // |psi-_P>|phi-_S> amplitude on |h v a1 b1> (polA=0, polB=1, spatA=0, spatB=0) is +1/2.
  EXPECT_NEAR(psi(0b0100).real(), 0.5, 1e-15);
  EXPECT_NEAR(psi(0b0111).real(), -0.5, 1e-15);
}

TEST(HyperBell, SixteenStatesAreOrthonormal) {
  const auto labels = all_hyper_labels();
  for (const auto& a : labels)
    for (const auto& b : labels)
      EXPECT_NEAR(std::abs(make_hyper_bell(a).dot(make_hyper_bell(b))), a == b ? 1.0 : 0.0, 1e-14);
}

TEST(HyperBell, ExtendedLayoutStartsAuxInZero) {
  const RegisterLayout l{QubitRole::PolA, QubitRole::PolB, QubitRole::SpatA, QubitRole::SpatB, QubitRole::AuxA};
  const auto psi = make_hyper_bell({}, l);
  for (Eigen::Index i = 1; i < psi.size(); i += 2) EXPECT_EQ(psi(i), cplx(0.0));
  EXPECT_THROW(make_hyper_bell({}, RegisterLayout{QubitRole::PolA, QubitRole::PolB}), std::invalid_argument);
}

TEST(Noise, WernerFidelityFormula) {
  for (double p : {1.0, 0.9, 0.5, 0.0}) {
    NoiseSpec n;
    n.werner_p_pol = p;
    const HyperBellLabel l{BellLabel::PhiMinus, BellLabel::PsiPlus};
    const auto rho = make_source(l, n);
    ASSERT_TRUE(is_density(rho));
    const auto phys = RegisterLayout::physical();
    EXPECT_NEAR(fidelity(partial_trace(rho, phys, {QubitRole::PolA, QubitRole::PolB}), make_bell(l.pol)),
                (1 + 3 * p) / 4, 1e-12);
    EXPECT_NEAR(fidelity(partial_trace(rho, phys, {QubitRole::SpatA, QubitRole::SpatB}), make_bell(l.spat)),
                1.0, 1e-12);
  }
}

TEST(Noise, SourceStaysProductAcrossDofs) {
  NoiseSpec n;
  n.werner_p_pol = 0.8;
  n.werner_p_spat = 0.7;
  n.dephase_gamma_pol = 0.2;
  n.dephase_gamma_spat = 0.1;
  const auto rho = make_source({BellLabel::PsiPlus, BellLabel::PhiMinus}, n);
  const auto phys = RegisterLayout::physical();
  const ComplexMatrix prod = tensor(partial_trace(rho, phys, {QubitRole::PolA, QubitRole::PolB}),
                                    partial_trace(rho, phys, {QubitRole::SpatA, QubitRole::SpatB}));
  EXPECT_LT(testutil::max_abs(prod - rho), 1e-14);
}

TEST(Noise, DephasingScalesCoherence) {
  NoiseSpec n;
  n.dephase_gamma_pol = 0.36;  // each pol qubit keeps sqrt(0.64) = 0.8
  const auto rho = make_source({}, n);
  // <hh a1b1| rho |vv a1b1> = 1/4 * 0.8 * 0.8
  EXPECT_NEAR(rho(0b0000, 0b1100).real(), 0.25 * 0.64, 1e-14);
  EXPECT_NEAR(rho(0b0000, 0b0000).real(), 0.25, 1e-14);
}

TEST(Noise, ValidationRejectsOutOfRange) {
  NoiseSpec n;
  n.werner_p_spat = 1.2;
  EXPECT_THROW(n.validate(), std::invalid_argument);
  n = {};
  n.rotation_angle_pol = std::numeric_limits<double>::infinity();
  EXPECT_THROW(n.validate(), std::invalid_argument);
  EXPECT_THROW(apply_noise(ComplexVector(2.0 * ket("0000")), NoiseSpec{}), std::invalid_argument);
}
