#pragma once

// Swap isometries built from (X, Z) observables, the spatial-mode circuit
// (Step 1), the two-site polarization circuit (Step 2), Bell-state
// measurement on the auxiliaries, and success rules.
//
// Per party the swap circuit is
//   H(aux) ; controlled-Z(aux -> sys) ; H(aux) ; controlled-X(aux -> sys)
// which maps |phi>|0> to 1/2 [(I+Z)|phi>|0> + X(I-Z)|phi>|1>].

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hyperst/chsh.hpp"
#include "hyperst/hyperstates.hpp"
#include "hyperst/qlin.hpp"

namespace hyperst {

struct IsometryConfig {
  Dof dof = Dof::Spatial;
  ObservablePair alice{BinaryObservable::x(), BinaryObservable::z()};
  ObservablePair bob{BinaryObservable::x(), BinaryObservable::z()};

  static IsometryConfig canonical(Dof d) {
    IsometryConfig c;
    c.dof = d;
    return c;
  }

  const ObservablePair& of(Party p) const { return p == Party::Alice ? alice : bob; }
};

/// Alice's X/Z rotated by the source's misalignment angle, Bob canonical.
inline IsometryConfig noisy_isometry_config(Dof d, const NoiseSpec& noise) {
  IsometryConfig c = IsometryConfig::canonical(d);
  const double t = noise.rotation_angle(d);
  c.alice = {BinaryObservable::in_xz_plane(t + std::numbers::pi / 2, "X"),
             BinaryObservable::in_xz_plane(t, "Z")};
  return c;
}

using QuantumState = std::variant<ComplexVector, ComplexMatrix>;

inline ComplexMatrix to_density(const ComplexVector& psi) { return projector(psi); }
inline const ComplexMatrix& to_density(const ComplexMatrix& rho) { return rho; }
inline ComplexMatrix to_density(const QuantumState& s) {
  return std::visit([](const auto& x) { return ComplexMatrix(to_density(x)); }, s);
}

namespace detail {

inline double weight(const ComplexVector& psi) { return psi.squaredNorm(); }
inline double weight(const ComplexMatrix& rho) { return rho.trace().real(); }

// Zeroes every amplitude whose `role` qubit differs from `value`.
inline ComplexVector project_bit(const ComplexVector& psi, const RegisterLayout& layout,
                                 QubitRole role, int value) {
  ComplexVector out = psi;
  const std::size_t m = layout.mask(role);
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (bool(static_cast<std::size_t>(i) & m) != bool(value)) out(i) = 0.0;
  return out;
}

inline ComplexMatrix project_bit(const ComplexMatrix& rho, const RegisterLayout& layout,
                                 QubitRole role, int value) {
  ComplexMatrix out = rho;
  const std::size_t m = layout.mask(role);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (bool(static_cast<std::size_t>(i) & m) != bool(value) ||
          bool(static_cast<std::size_t>(j) & m) != bool(value))
        out(i, j) = 0.0;
  return out;
}

template <class State>
void party_swap(State& st, const RegisterLayout& layout, QubitRole sys, QubitRole aux,
                const ObservablePair& obs, std::vector<Control> site = {}) {
  const Matrix2 h = hadamard();
  std::vector<Control> ctl = site;
  ctl.push_back({aux, 1});
  apply_gate(st, layout, h, aux);
  apply_gate(st, layout, obs.z.matrix(), sys, ctl);
  apply_gate(st, layout, h, aux);
  apply_gate(st, layout, obs.x.matrix(), sys, ctl);
}

inline RegisterLayout without(const RegisterLayout& layout, QubitRole a, QubitRole b) {
  std::vector<QubitRole> rest;
  for (QubitRole r : layout.roles())
    if (r != a && r != b) rest.push_back(r);
  return RegisterLayout(rest);
}

inline RegisterLayout with_tail(const RegisterLayout& rest, QubitRole a, QubitRole b) {
  std::vector<QubitRole> order = rest.roles();
  order.push_back(a);
  order.push_back(b);
  return RegisterLayout(order);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-DOF swap isometry

/// Layout [A, B, A', B'] used by swap_isometry_single.
inline RegisterLayout single_dof_layout(Dof d) {
  return {role_of(Party::Alice, d), role_of(Party::Bob, d), QubitRole::AuxA, QubitRole::AuxB};
}

/// Applies both parties' swap circuits to a state over single_dof_layout(cfg.dof).
/// A 4-dimensional input is taken as the AB state and padded with aux |00>.
inline ComplexVector swap_isometry_single(const ComplexVector& state, const IsometryConfig& cfg) {
  const RegisterLayout layout = single_dof_layout(cfg.dof);
  ComplexVector psi;
  if (state.size() == 4) {
    psi = tensor(state, ComplexVector(ket("00")));
  } else {
    require_dim(state.size(), 16, "swap_isometry_single");
    for (Eigen::Index i = 0; i < 16; ++i)
      if ((i & 3) != 0 && std::abs(state(i)) > kTol.vector)
        throw std::invalid_argument("swap_isometry_single: auxiliary qubits must start in |00>");
    psi = state;
  }
  detail::party_swap(psi, layout, role_of(Party::Alice, cfg.dof), QubitRole::AuxA, cfg.alice);
  detail::party_swap(psi, layout, role_of(Party::Bob, cfg.dof), QubitRole::AuxB, cfg.bob);
  return psi;
}

// ---------------------------------------------------------------------------
// Bell-state measurement

template <class State>
struct BsmBranch {
  BellLabel label;
  double probability;
  State residual;  // normalized state of the remaining qubits (zero if probability ~ 0)
  RegisterLayout residual_layout;
};

/// Projects the (aux_a, aux_b) pair onto the four Bell states.
inline std::vector<BsmBranch<ComplexVector>> classify_bsm(const ComplexVector& psi,
                                                          const RegisterLayout& layout,
                                                          QubitRole aux_a, QubitRole aux_b) {
  const RegisterLayout rest = detail::without(layout, aux_a, aux_b);
  const ComplexVector moved = reorder(psi, layout, detail::with_tail(rest, aux_a, aux_b));
  const auto rd = static_cast<Eigen::Index>(rest.dim());
  // Rows index the rest, columns the aux pair.
  const Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      moved.data(), rd, 4);
  std::vector<BsmBranch<ComplexVector>> out;
  for (BellLabel b : kBellLabels) {
    ComplexVector r = m * make_bell(b).conjugate();
    const double p = r.squaredNorm();
    if (p > kTol.vector) r /= std::sqrt(p);
    else r.setZero();
    out.push_back({b, p, std::move(r), rest});
  }
  return out;
}

inline std::vector<BsmBranch<ComplexMatrix>> classify_bsm(const ComplexMatrix& rho,
                                                          const RegisterLayout& layout,
                                                          QubitRole aux_a, QubitRole aux_b) {
  const RegisterLayout rest = detail::without(layout, aux_a, aux_b);
  const ComplexMatrix moved = reorder(rho, layout, detail::with_tail(rest, aux_a, aux_b));
  const auto rd = static_cast<Eigen::Index>(rest.dim());
  std::vector<BsmBranch<ComplexMatrix>> out;
  for (BellLabel b : kBellLabels) {
    const ComplexMatrix k =
        tensor(ComplexMatrix(ComplexMatrix::Identity(rd, rd)), ComplexMatrix(make_bell(b).adjoint()));
    ComplexMatrix r = k * moved * k.adjoint();
    const double p = r.trace().real();
    if (p > kTol.vector) r /= p;
    else r.setZero();
    out.push_back({b, p, std::move(r), rest});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certification records

enum class Step { Spatial, Polarization };

inline std::string_view to_string(Step s) { return s == Step::Spatial ? "spatial" : "polarization"; }

using OutcomePair = std::pair<BellLabel, BellLabel>;

struct BsmOutcome {
  BellLabel first;                    // Step 1: the only pair; Step 2: A1'B1'
  std::optional<BellLabel> second;    // Step 2: A2'B2'
  bool operator==(const BsmOutcome&) const = default;
};

inline std::string to_string(const BsmOutcome& o) {
  std::string s(to_string(o.first));
  if (o.second) s += "," + std::string(to_string(*o.second));
  return s;
}

struct CertificationRecord {
  HyperBellLabel claimed;
  Step step;
  BsmOutcome bsm;
  bool accepted = false;
  QuantumState posterior;           // physical qubits after the measurement
  double extracted_fidelity = 0.0;  // auxiliary state vs the claimed DOF Bell vector
  double junk_spatial_entropy = 0.0;
  double probability = 0.0;
};

/// Accepted Step 2 outcome pairs (A1'B1', A2'B2') for a claimed polarization label.
inline std::vector<OutcomePair> success_rule(BellLabel pol) {
  using enum BellLabel;
  switch (pol) {
    case PhiPlus: return {{PhiPlus, PhiPlus}};
    case PhiMinus: return {{PhiMinus, PhiMinus}};
    case PsiPlus: return {{PsiPlus, PhiPlus}, {PsiPlus, PhiMinus}, {PhiPlus, PsiPlus}, {PhiMinus, PsiPlus}};
    case PsiMinus:
      return {{PsiMinus, PhiPlus}, {PsiMinus, PhiMinus}, {PhiPlus, PsiMinus}, {PhiMinus, PsiMinus}};
  }
  return {};
}

inline std::vector<OutcomePair> success_rule(const HyperBellLabel& label) {
  return success_rule(label.pol);
}

inline bool is_accepted(BellLabel pol, const OutcomePair& o) {
  for (const auto& a : success_rule(pol))
    if (a == o) return true;
  return false;
}

/// Entropy of Alice's spatial marginal of the junk's spatial pair. For a pure
/// spatial junk this is its entanglement entropy.
inline double junk_spatial_entropy(const ComplexMatrix& physical) {
  return von_neumann_entropy(partial_trace(physical, RegisterLayout::physical(), {QubitRole::SpatA}));
}

// ---------------------------------------------------------------------------
// Step 1: spatial swap isometry

inline RegisterLayout step1_layout() {
  return {QubitRole::PolA, QubitRole::PolB, QubitRole::SpatA, QubitRole::SpatB,
          QubitRole::AuxA, QubitRole::AuxB};
}

struct Step1Result {
  std::vector<CertificationRecord> branches;  // one per spatial BSM outcome
  double extracted_fidelity = 0.0;
  ComplexMatrix aux_state;        // reduced (a', b') state before the BSM
  ComplexMatrix pol_before;       // reduced polarization state of the source
  ComplexMatrix pol_after;        // ... after the circuit
};

namespace detail {

template <class State>
State lift(const State& physical, const RegisterLayout& to) {
  if constexpr (std::is_same_v<State, ComplexVector>) {
    return reorder(physical, RegisterLayout::physical(), to);
  } else {
    // Pad with |0...0><0...0| on the extra qubits.
    const RegisterLayout phys = RegisterLayout::physical();
    std::vector<QubitRole> order = phys.roles();
    for (QubitRole r : to.roles())
      if (!phys.contains(r)) order.push_back(r);
    const std::size_t extra = order.size() - phys.qubits();
    ComplexMatrix pad = ComplexMatrix::Zero(1 << extra, 1 << extra);
    pad(0, 0) = 1.0;
    return reorder(tensor(physical, pad), RegisterLayout(order), to);
  }
}

}  // namespace detail

template <class State>
Step1Result run_step1_spatial(const State& physical, const HyperBellLabel& claimed,
                              const IsometryConfig& cfg = IsometryConfig::canonical(Dof::Spatial)) {
  if (cfg.dof != Dof::Spatial) throw std::invalid_argument("run_step1_spatial: config must be spatial");
  require_dim(physical.rows(), 16, "run_step1_spatial");
  const RegisterLayout layout = step1_layout();
  State st = detail::lift(physical, layout);
  detail::party_swap(st, layout, QubitRole::SpatA, QubitRole::AuxA, cfg.alice);
  detail::party_swap(st, layout, QubitRole::SpatB, QubitRole::AuxB, cfg.bob);

  Step1Result res;
  const ComplexMatrix out = to_density(st);
  res.aux_state = partial_trace(out, layout, {QubitRole::AuxA, QubitRole::AuxB});
  res.extracted_fidelity = fidelity(res.aux_state, make_bell(claimed.spat));
  res.pol_before =
      partial_trace(to_density(physical), RegisterLayout::physical(), {QubitRole::PolA, QubitRole::PolB});
  res.pol_after = partial_trace(out, layout, {QubitRole::PolA, QubitRole::PolB});

  for (auto& br : classify_bsm(st, layout, QubitRole::AuxA, QubitRole::AuxB)) {
    CertificationRecord rec;
    rec.claimed = claimed;
    rec.step = Step::Spatial;
    rec.bsm = {br.label, std::nullopt};
    rec.accepted = br.label == claimed.spat;
    rec.probability = br.probability;
    rec.extracted_fidelity = res.extracted_fidelity;
    rec.junk_spatial_entropy =
        br.probability > kTol.vector ? junk_spatial_entropy(to_density(br.residual)) : 0.0;
    rec.posterior = std::move(br.residual);
    res.branches.push_back(std::move(rec));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Step 2: two-site polarization swap isometry

inline RegisterLayout step2_layout() {
  return {QubitRole::PolA,  QubitRole::PolB,  QubitRole::SpatA, QubitRole::SpatB,
          QubitRole::AuxA1, QubitRole::AuxB1, QubitRole::AuxA2, QubitRole::AuxB2};
}

struct Step2Result {
  std::vector<CertificationRecord> branches;  // 16 outcome pairs, A1'B1' major
  double acceptance_probability = 0.0;
  double extracted_fidelity = 0.0;  // site-resolved, see site_resolved_fidelity
  bool beam_displacer = false;      // BD applied around the circuit
};

namespace detail {

inline QubitRole site_aux(Party p, int site) {
  if (p == Party::Alice) return site == 0 ? QubitRole::AuxA1 : QubitRole::AuxA2;
  return site == 0 ? QubitRole::AuxB1 : QubitRole::AuxB2;
}

// Sum over which site each photon occupied of P(sites) times the fidelity of
// the auxiliary pair (Alice's aux at her site, Bob's at his) with `target`.
template <class State>
double site_resolved_fidelity(const State& st, const RegisterLayout& layout,
                              const ComplexVector& target) {
  double f = 0.0;
  for (int sa : {0, 1})
    for (int sb : {0, 1}) {
      const State proj = project_bit(project_bit(st, layout, QubitRole::SpatA, sa), layout,
                                     QubitRole::SpatB, sb);
      const double p = weight(proj);
      if (p <= kTol.vector) continue;
      const ComplexMatrix pair = partial_trace(
          to_density(proj), layout, {site_aux(Party::Alice, sa), site_aux(Party::Bob, sb)});
      // Alice's auxiliary precedes Bob's in step2_layout only when sa <= sb.
      ComplexMatrix ordered = pair;
      if (layout.position(site_aux(Party::Alice, sa)) > layout.position(site_aux(Party::Bob, sb)))
        ordered = reorder(pair, RegisterLayout{site_aux(Party::Bob, sb), site_aux(Party::Alice, sa)},
                          RegisterLayout{site_aux(Party::Alice, sa), site_aux(Party::Bob, sb)});
      f += target.dot(ordered * target).real();
    }
  return f;
}

}  // namespace detail

template <class State>
Step2Result run_step2_polarization(const State& physical, const HyperBellLabel& claimed,
                                   const IsometryConfig& cfg = IsometryConfig::canonical(Dof::Polarization)) {
  if (cfg.dof != Dof::Polarization)
    throw std::invalid_argument("run_step2_polarization: config must be polarization");
  require_dim(physical.rows(), 16, "run_step2_polarization");
  const RegisterLayout layout = step2_layout();
  State st = detail::lift(physical, layout);

  Step2Result res;
  res.beam_displacer = !is_phi_family(claimed.spat);
  if (res.beam_displacer) apply_gate(st, layout, pauli_x(), QubitRole::SpatA);

  for (int site : {0, 1}) {
    detail::party_swap(st, layout, QubitRole::PolA, detail::site_aux(Party::Alice, site), cfg.alice,
                       {{QubitRole::SpatA, site}});
    detail::party_swap(st, layout, QubitRole::PolB, detail::site_aux(Party::Bob, site), cfg.bob,
                       {{QubitRole::SpatB, site}});
  }
  res.extracted_fidelity = detail::site_resolved_fidelity(st, layout, make_bell(claimed.pol));

  if (res.beam_displacer) apply_gate(st, layout, pauli_x(), QubitRole::SpatA);

  for (auto& first : classify_bsm(st, layout, QubitRole::AuxA1, QubitRole::AuxB1)) {
    for (auto& second :
         classify_bsm(first.residual, first.residual_layout, QubitRole::AuxA2, QubitRole::AuxB2)) {
      CertificationRecord rec;
      rec.claimed = claimed;
      rec.step = Step::Polarization;
      rec.bsm = {first.label, second.label};
      rec.accepted = is_accepted(claimed.pol, {first.label, second.label});
      rec.probability = first.probability * second.probability;
      rec.extracted_fidelity = res.extracted_fidelity;
      rec.junk_spatial_entropy =
          rec.probability > kTol.vector ? junk_spatial_entropy(to_density(second.residual)) : 0.0;
      if (rec.accepted) res.acceptance_probability += rec.probability;
      rec.posterior = std::move(second.residual);
      res.branches.push_back(std::move(rec));
    }
  }
  return res;
}

}  // namespace hyperst
