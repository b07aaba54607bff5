#include <gtest/gtest.h>

#include <cmath>

#include "hyperst/chsh.hpp"
#include "test_util.hpp"

using namespace hyperst;

TEST(BinaryObservable, ValidatesInvolution) {
  EXPECT_NO_THROW(BinaryObservable::in_xz_plane(0.3));
  EXPECT_THROW(BinaryObservable(Matrix2(2.0 * pauli_z())), std::invalid_argument);
  Matrix2 nh = pauli_x();
  nh(0, 1) = cplx(0, 1);
  EXPECT_THROW(BinaryObservable{nh}, std::invalid_argument);
  EXPECT_NEAR(*BinaryObservable::in_xz_plane(1.1).xz_angle(), 1.1, 1e-14);
  EXPECT_FALSE(BinaryObservable(pauli_y()).xz_angle().has_value());
}

TEST(Regularize, RecoversSignOfEigenvalues) {
  const Matrix2 m = 0.7 * pauli_z() + 0.1 * pauli_x();
  const auto r = regularize(m);
  EXPECT_LT((r.matrix() * r.matrix() - identity2()).norm(), 1e-12);
  const auto expect = BinaryObservable::in_xz_plane(std::atan2(0.1, 0.7));
  EXPECT_LT((r.matrix() - expect.matrix()).norm(), 1e-12);
}

TEST(ChshExact, TsirelsonOnEveryLabel) {
  for (const auto& l : all_hyper_labels()) {
    const auto psi = make_hyper_bell(l);
    const auto s = canonical_settings(l);
    for (Dof d : kDofs) EXPECT_NEAR(chsh_exact(psi, s, d), kTsirelson, 1e-12) << to_string(l);
  }
}

TEST(ChshExact, WernerScalesLinearly) {
  for (double p : {1.0, 0.8, 0.5}) {
    NoiseSpec n;
    n.werner_p_spat = p;
    const HyperBellLabel l{BellLabel::PhiMinus, BellLabel::PsiMinus};
    const auto rho = make_source(l, n);
    EXPECT_NEAR(chsh_exact(rho, canonical_settings(l), Dof::Spatial), p * kTsirelson, 1e-12);
    EXPECT_NEAR(chsh_exact(rho, canonical_settings(l), Dof::Polarization), kTsirelson, 1e-12);
  }
}

TEST(ChshExact, RotationGivesCosineDeficit) {
  // Rotating Alice's pair by t leaves I = 2 sqrt2 cos t.
  for (double t : {0.0, 0.01, 0.1, 0.4}) {
    NoiseSpec n;
    n.rotation_angle_pol = t;
    const HyperBellLabel l{BellLabel::PsiPlus, BellLabel::PhiPlus};
    const auto rho = make_source(l, n);
    EXPECT_NEAR(chsh_exact(rho, noisy_settings(l, n), Dof::Polarization), kTsirelson * std::cos(t), 1e-12);
  }
}

TEST(ChshExact, ChshOperatorExpectationMatchesCorrelators) {
  std::mt19937_64 gen(21);
  const auto rho = testutil::random_density(16, gen);
  const HyperBellLabel l{BellLabel::PsiMinus, BellLabel::PhiMinus};
  const auto s = canonical_settings(l);
  for (Dof d : kDofs) {
    const auto r = chsh_exact_report(rho, s, d);
    const ComplexMatrix op = chsh_operator(s, d);
    const double direct = (dof_state(rho, d) * op).trace().real();
    EXPECT_NEAR(r.i_value, direct, 1e-12);
    EXPECT_NEAR(r.i_value, chsh_exact(rho, s, d), 1e-12);
  }
}

TEST(JointDistribution, SumsToOne) {
  std::mt19937_64 gen(4);
  const auto rho = testutil::random_density(4, gen);
  const auto p = joint_distribution(rho, BinaryObservable::in_xz_plane(0.2), BinaryObservable::x());
  double s = 0;
  for (double x : p) {
    EXPECT_GE(x, -1e-15);
    s += x;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(ChshSampled, DeterministicPerSeedAndUnbiased) {
  const HyperBellLabel l{};
  const auto rho = make_source(l);
  const auto s = canonical_settings(l);
  const auto a = chsh_sampled(rho, s, Dof::Polarization, 20000, 99);
  const auto b = chsh_sampled(rho, s, Dof::Polarization, 20000, 99);
  const auto c = chsh_sampled(rho, s, Dof::Polarization, 20000, 100);
  EXPECT_EQ(a.i_value, b.i_value);
  EXPECT_NE(a.i_value, c.i_value);
  EXPECT_NEAR(a.i_value, kTsirelson, 5 * a.std_error);
  EXPECT_GT(a.std_error, 0.0);
}

TEST(ChshSampled, StreamsIndependentOfShotSink) {
  const HyperBellLabel l{BellLabel::PhiMinus, BellLabel::PsiPlus};
  const auto rho = make_source(l);
  const auto s = canonical_settings(l);
  std::size_t n = 0;
  long long sum00 = 0;
  const auto with = chsh_sampled(rho, s, Dof::Spatial, 1000, 5, StderrMode::Binomial,
                                 [&](const ShotRecord& r) {
                                   ++n;
                                   if (r.i == 0 && r.j == 0) sum00 += r.a * r.b;
                                 });
  const auto without = chsh_sampled(rho, s, Dof::Spatial, 1000, 5);
  EXPECT_EQ(n, 4000u);
  EXPECT_EQ(with.i_value, without.i_value);
  EXPECT_DOUBLE_EQ(with.correlators[0][0], sum00 / 1000.0);
}

TEST(ChshSampled, HoeffdingErrorIsWorstCase) {
  const auto rho = make_source({});
  const auto r = chsh_sampled(rho, canonical_settings({}), Dof::Spatial, 400, 1, StderrMode::Hoeffding);
  EXPECT_NEAR(r.std_error, std::sqrt(4.0 / 400), 1e-15);
  EXPECT_THROW(chsh_sampled(rho, canonical_settings({}), Dof::Spatial, 0, 1), std::invalid_argument);
}

TEST(Anticommutator, ZeroForIdealSettingsOnEveryLabel) {
  for (const auto& l : all_hyper_labels()) {
    const auto psi = make_hyper_bell(l);
    const auto s = canonical_settings(l);
    for (Dof d : kDofs) {
      const auto [a, b] = derived_ab_anticommutators(s, psi, d);
      EXPECT_LT(a, 1e-12);
      EXPECT_LT(b, 1e-12);
    }
  }
}

TEST(Anticommutator, CommutingPairHasNormTwo) {
  const auto psi = make_hyper_bell({});
  EXPECT_NEAR(anticommutator_norm(psi, RegisterLayout::physical(), QubitRole::PolA,
                                  BinaryObservable::z(), BinaryObservable::z()),
              2.0, 1e-12);
}

TEST(DerivedObservables, RecoverCanonicalXZ) {
  const HyperBellLabel l{BellLabel::PsiMinus, BellLabel::PhiPlus};
  const auto s = canonical_settings(l);
  const auto a = derived_observables(s, Party::Alice, Dof::Polarization);
  EXPECT_LT((a.z.matrix() - pauli_z()).norm(), 1e-12);
  EXPECT_LT((a.x.matrix() - pauli_x()).norm(), 1e-12);
  const auto b = derived_observables(s, Party::Bob, Dof::Polarization);
  EXPECT_LT((b.z.matrix() + pauli_z()).norm(), 1e-12);  // psi- flips both signs
  EXPECT_LT((b.x.matrix() + pauli_x()).norm(), 1e-12);
}
