#pragma once

// Binary observables, CHSH settings, exact and shot-sampled CHSH values, and
// anticommutator diagnostics.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hyperst/hyperstates.hpp"
#include "hyperst/qlin.hpp"
#include "hyperst/rng.hpp"

namespace hyperst {

inline constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

/// Hermitian involution on one qubit (eigenvalues +1 and -1).
class BinaryObservable {
 public:
  explicit BinaryObservable(const Matrix2& m, std::string label = {})
      : matrix_(m), label_(std::move(label)) {
    if (!is_hermitian(matrix_, kTol.matrix))
      throw std::invalid_argument("BinaryObservable: matrix is not Hermitian");
    if ((matrix_ * matrix_ - Matrix2::Identity()).cwiseAbs().maxCoeff() > kTol.involution)
      throw std::invalid_argument("BinaryObservable: matrix is not involutory");
  }

  static BinaryObservable z() { return BinaryObservable(pauli_z(), "Z"); }
  static BinaryObservable x() { return BinaryObservable(pauli_x(), "X"); }

  /// cos(angle) Z + sin(angle) X.
  static BinaryObservable in_xz_plane(double angle, std::string label = {}) {
    return BinaryObservable(std::cos(angle) * pauli_z() + std::sin(angle) * pauli_x(),
                            std::move(label));
  }

  const Matrix2& matrix() const { return matrix_; }
  const std::string& label() const { return label_; }

  /// Angle theta with matrix = cos(theta) Z + sin(theta) X, if the observable
  /// lies in the real X-Z plane.
  std::optional<double> xz_angle() const {
    const cplx c = matrix_(0, 0), s = matrix_(0, 1);
    if (std::abs(c.imag()) > kTol.matrix || std::abs(s.imag()) > kTol.matrix) return std::nullopt;
    if (std::abs(matrix_(1, 0) - s) > kTol.matrix) return std::nullopt;
    if (std::abs(matrix_(1, 1) + c) > kTol.matrix) return std::nullopt;
    return std::atan2(s.real(), c.real());
  }

  /// Projectors onto the +1 and -1 eigenspaces.
  std::array<Matrix2, 2> spectral_projectors() const {
    return {(Matrix2::Identity() + matrix_) / 2.0, (Matrix2::Identity() - matrix_) / 2.0};
  }

 private:
  Matrix2 matrix_;
  std::string label_;
};

/// Closest involution to a Hermitian 2x2 matrix (sign of its eigenvalues).
inline BinaryObservable regularize(const Matrix2& m, std::string label = {}) {
  const Matrix2 h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix2> es(h);
  Eigen::Vector2cd signs;
  for (int k = 0; k < 2; ++k) signs(k) = es.eigenvalues()(k) >= 0.0 ? 1.0 : -1.0;
  const Matrix2 v = es.eigenvectors();
  return BinaryObservable(v * signs.asDiagonal() * v.adjoint(), std::move(label));
}

struct MeasurementSetting {
  Party party;
  Dof dof;
  int index;  // 0 or 1
  BinaryObservable observable;
};

/// Two parties x two DOFs x two inputs.
class ChshSettings {
 public:
  explicit ChshSettings(std::vector<MeasurementSetting> entries) : entries_(std::move(entries)) {
    for (Party p : {Party::Alice, Party::Bob})
      for (Dof d : kDofs)
        for (int i : {0, 1}) (void)at(p, d, i);
  }

  const BinaryObservable& at(Party p, Dof d, int index) const {
    for (const auto& e : entries_)
      if (e.party == p && e.dof == d && e.index == index) return e.observable;
    throw std::invalid_argument("ChshSettings: missing setting");
  }

  void set(Party p, Dof d, int index, BinaryObservable obs) {
    for (auto& e : entries_)
      if (e.party == p && e.dof == d && e.index == index) {
        e.observable = std::move(obs);
        return;
      }
    entries_.push_back({p, d, index, std::move(obs)});
  }

  const std::vector<MeasurementSetting>& entries() const { return entries_; }

 private:
  std::vector<MeasurementSetting> entries_;
};

/// Signs (s0, s1) with B0 = s0 Z, B1 = s1 X maximizing the CHSH value on `b`.
/// Equal to (sign <ZZ>, sign <XX>) on the Bell state.
inline std::pair<int, int> bob_signs(BellLabel b) {
  switch (b) {
    case BellLabel::PhiPlus: return {+1, +1};
    case BellLabel::PhiMinus: return {+1, -1};
    case BellLabel::PsiPlus: return {-1, +1};
    case BellLabel::PsiMinus: return {-1, -1};
  }
  return {+1, +1};
}

/// Settings with Alice's Z/X rotated in the X-Z plane by angle(dof). With zero
/// angles this is the maximal-violation choice for `label`:
///   A0 = (Z+X)/sqrt2, A1 = (Z-X)/sqrt2, B0 = s0 Z, B1 = s1 X.
inline ChshSettings rotated_settings(const HyperBellLabel& label, double angle_pol,
                                     double angle_spat) {
  std::vector<MeasurementSetting> e;
  for (Dof d : kDofs) {
    const double t = d == Dof::Polarization ? angle_pol : angle_spat;
    const double q = std::numbers::pi / 4;
    // A0 = (Z_t + X_t)/sqrt2 with Z_t at angle t and X_t at t + pi/2.
    e.push_back({Party::Alice, d, 0, BinaryObservable::in_xz_plane(t + q, "A0")});
    e.push_back({Party::Alice, d, 1, BinaryObservable::in_xz_plane(t - q, "A1")});
    const auto [s0, s1] = bob_signs(label.of(d));
    e.push_back({Party::Bob, d, 0, BinaryObservable(s0 * pauli_z(), s0 > 0 ? "Z" : "-Z")});
    e.push_back({Party::Bob, d, 1, BinaryObservable(s1 * pauli_x(), s1 > 0 ? "X" : "-X")});
  }
  return ChshSettings(std::move(e));
}

inline ChshSettings canonical_settings(const HyperBellLabel& label) {
  return rotated_settings(label, 0.0, 0.0);
}

inline ChshSettings noisy_settings(const HyperBellLabel& label, const NoiseSpec& noise) {
  return rotated_settings(label, noise.rotation_angle_pol, noise.rotation_angle_spat);
}

// ---------------------------------------------------------------------------
// Exact values

/// A0 B0 + A1 B0 + A0 B1 - A1 B1 on the (Alice, Bob) qubit pair of `dof`.
inline ComplexMatrix chsh_operator(const ChshSettings& s, Dof dof) {
  const auto& a0 = s.at(Party::Alice, dof, 0).matrix();
  const auto& a1 = s.at(Party::Alice, dof, 1).matrix();
  const auto& b0 = s.at(Party::Bob, dof, 0).matrix();
  const auto& b1 = s.at(Party::Bob, dof, 1).matrix();
  return tensor(ComplexMatrix(a0 + a1), ComplexMatrix(b0)) +
         tensor(ComplexMatrix(a0 - a1), ComplexMatrix(b1));
}

/// Reduced two-qubit state of one DOF (Alice's qubit first).
inline ComplexMatrix dof_state(const ComplexMatrix& rho, Dof dof,
                               const RegisterLayout& layout = RegisterLayout::physical()) {
  const auto roles = dof_roles(dof);
  ComplexMatrix r = partial_trace(rho, layout, roles);
  if (layout.position(roles[0]) > layout.position(roles[1]))
    r = reorder(r, RegisterLayout{roles[1], roles[0]}, RegisterLayout{roles[0], roles[1]});
  return r;
}

inline double chsh_exact(const ComplexMatrix& rho, const ChshSettings& s, Dof dof,
                         const RegisterLayout& layout = RegisterLayout::physical()) {
  require_dim(rho.rows(), layout.dim(), "chsh_exact");
  const ComplexMatrix r = dof_state(rho, dof, layout);
  return (r * chsh_operator(s, dof)).trace().real();
}

inline double chsh_exact(const ComplexVector& psi, const ChshSettings& s, Dof dof,
                         const RegisterLayout& layout = RegisterLayout::physical()) {
  return chsh_exact(ComplexMatrix(projector(psi)), s, dof, layout);
}

/// Born distribution of (a, b) for a commuting pair A (x) B on a two-qubit
/// state. Order: (+,+), (+,-), (-,+), (-,-).
inline std::array<double, 4> joint_distribution(const ComplexMatrix& rho_dof,
                                                const BinaryObservable& a,
                                                const BinaryObservable& b) {
  require_dim(rho_dof.rows(), 4, "joint_distribution");
  const auto pa = a.spectral_projectors();
  const auto pb = b.spectral_projectors();
  std::array<double, 4> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out[2 * i + j] =
          (rho_dof * tensor(ComplexMatrix(pa[i]), ComplexMatrix(pb[j]))).trace().real();
  return out;
}

inline double correlator(const std::array<double, 4>& p) { return p[0] - p[1] - p[2] + p[3]; }

// ---------------------------------------------------------------------------
// Sampling

enum class StderrMode {
  Binomial,   // per-correlator sqrt((1 - E^2)/n), combined in quadrature
  Hoeffding,  // worst-case variance 1 per shot: sqrt(4/n)
};

struct ChshReport {
  Dof dof = Dof::Polarization;
  double i_value = 0.0;
  std::uint64_t shots_per_pair = 0;  // 0 means exact
  double std_error = 0.0;
  double epsilon = 0.0;      // max(0, 2 sqrt2 - i_value)
  double epsilon_raw = 0.0;  // 2 sqrt2 - i_value
  std::array<std::array<double, 2>, 2> correlators{};  // [i][j] = <A_i B_j>
};

struct ShotRecord {
  Dof dof;
  int i, j;
  int a, b;  // +1 / -1
};

using ShotSink = std::function<void(const ShotRecord&)>;

inline double chsh_combination(const std::array<std::array<double, 2>, 2>& e) {
  return e[0][0] + e[1][0] + e[0][1] - e[1][1];
}

inline ChshReport make_chsh_report(Dof dof, const std::array<std::array<double, 2>, 2>& e,
                                   std::uint64_t shots, double std_error) {
  ChshReport r;
  r.dof = dof;
  r.correlators = e;
  r.i_value = chsh_combination(e);
  r.shots_per_pair = shots;
  r.std_error = std_error;
  r.epsilon_raw = kTsirelson - r.i_value;
  r.epsilon = std::max(0.0, r.epsilon_raw);
  return r;
}

/// Samples `shots` outcome pairs for each (i, j) from the given joint
/// distributions. Stream (seed, dof, i, j) drives pair (i, j).
inline ChshReport chsh_from_distributions(
    Dof dof, const std::array<std::array<std::array<double, 4>, 2>, 2>& dists,
    std::uint64_t shots, std::uint64_t seed, StderrMode mode = StderrMode::Binomial,
    const ShotSink& sink = {}) {
  if (shots < 1) throw std::invalid_argument("chsh_sampled: shots_per_pair must be >= 1");
  std::array<std::array<double, 2>, 2> e{};
  double var = 0.0;
  static constexpr int kA[4] = {+1, +1, -1, -1};
  static constexpr int kB[4] = {+1, -1, +1, -1};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CounterRng rng(seed, {static_cast<std::uint64_t>(dof), static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(j)});
      const DiscreteSampler draw(dists[i][j]);
      std::int64_t sum = 0;
      for (std::uint64_t s = 0; s < shots; ++s) {
        const std::size_t k = draw(rng);
        sum += kA[k] * kB[k];
        if (sink) sink({dof, i, j, kA[k], kB[k]});
      }
      const double n = static_cast<double>(shots);
      e[i][j] = static_cast<double>(sum) / n;
      var += mode == StderrMode::Binomial ? (1.0 - e[i][j] * e[i][j]) / n : 1.0 / n;
    }
  return make_chsh_report(dof, e, shots, std::sqrt(var));
}

inline ChshReport chsh_sampled(const ComplexMatrix& rho, const ChshSettings& s, Dof dof,
                               std::uint64_t shots_per_pair, std::uint64_t seed,
                               StderrMode mode = StderrMode::Binomial, const ShotSink& sink = {},
                               const RegisterLayout& layout = RegisterLayout::physical()) {
  require_dim(rho.rows(), layout.dim(), "chsh_sampled");
  const ComplexMatrix r = dof_state(rho, dof, layout);
  std::array<std::array<std::array<double, 4>, 2>, 2> dists{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      dists[i][j] = joint_distribution(r, s.at(Party::Alice, dof, i), s.at(Party::Bob, dof, j));
  return chsh_from_distributions(dof, dists, shots_per_pair, seed, mode, sink);
}

/// Exact report (shots_per_pair = 0, stderr = 0).
inline ChshReport chsh_exact_report(const ComplexMatrix& rho, const ChshSettings& s, Dof dof,
                                    const RegisterLayout& layout = RegisterLayout::physical()) {
  const ComplexMatrix r = dof_state(rho, dof, layout);
  std::array<std::array<double, 2>, 2> e{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      e[i][j] = correlator(joint_distribution(r, s.at(Party::Alice, dof, i), s.at(Party::Bob, dof, j)));
  return make_chsh_report(dof, e, 0, 0.0);
}

// ---------------------------------------------------------------------------
// Anticommutators

/// ||M psi|| with M = {X, Z} embedded on `role`.
inline double anticommutator_norm(const ComplexVector& psi, const RegisterLayout& layout,
                                  QubitRole role, const BinaryObservable& x,
                                  const BinaryObservable& z) {
  require_dim(psi.size(), layout.dim(), "anticommutator_norm");
  const Matrix2 ac = x.matrix() * z.matrix() + z.matrix() * x.matrix();
  ComplexVector v = psi;
  apply_gate(v, layout, ac, role);
  return v.norm();
}

/// sqrt(Tr[rho M^dagger M]) with M = {X, Z} embedded on `role`.
inline double anticommutator_norm(const ComplexMatrix& rho, const RegisterLayout& layout,
                                  QubitRole role, const BinaryObservable& x,
                                  const BinaryObservable& z) {
  require_dim(rho.rows(), layout.dim(), "anticommutator_norm");
  const Matrix2 ac = x.matrix() * z.matrix() + z.matrix() * x.matrix();
  const ComplexMatrix m = embed(ac, layout, role);
  return std::sqrt(std::max(0.0, (rho * m.adjoint() * m).trace().real()));
}

template <class State>
double anticommutator_norm(const State& state, const RegisterLayout& layout, Party party, Dof dof,
                           const BinaryObservable& x, const BinaryObservable& z) {
  return anticommutator_norm(state, layout, role_of(party, dof), x, z);
}

/// (||{A0,A1} state||, ||{B0,B1} state||) for one DOF.
template <class State>
std::pair<double, double> derived_ab_anticommutators(
    const ChshSettings& s, const State& state, Dof dof,
    const RegisterLayout& layout = RegisterLayout::physical()) {
  return {anticommutator_norm(state, layout, role_of(Party::Alice, dof), s.at(Party::Alice, dof, 0),
                              s.at(Party::Alice, dof, 1)),
          anticommutator_norm(state, layout, role_of(Party::Bob, dof), s.at(Party::Bob, dof, 0),
                              s.at(Party::Bob, dof, 1))};
}

/// The (X, Z) pair a party would derive from its CHSH inputs:
/// Alice: Z ~ (A0+A1)/sqrt2, X ~ (A0-A1)/sqrt2 (regularized); Bob: Z = B0, X = B1.
struct ObservablePair {
  BinaryObservable x;
  BinaryObservable z;
};

inline ObservablePair derived_observables(const ChshSettings& s, Party p, Dof d) {
  if (p == Party::Bob) return {s.at(p, d, 1), s.at(p, d, 0)};
  const Matrix2& a0 = s.at(p, d, 0).matrix();
  const Matrix2& a1 = s.at(p, d, 1).matrix();
  return {regularize((a0 - a1) / std::numbers::sqrt2, "X"),
          regularize((a0 + a1) / std::numbers::sqrt2, "Z")};
}

}  // namespace hyperst
