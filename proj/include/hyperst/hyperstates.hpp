#pragma once

// Hyperentangled Bell states over polarization and spatial mode, and the
// noise channels used to build imperfect sources.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hyperst/qlin.hpp"

namespace hyperst {

enum class BellLabel { PhiPlus, PhiMinus, PsiPlus, PsiMinus };
enum class Dof { Polarization, Spatial };
enum class Party { Alice, Bob };

inline constexpr std::array<BellLabel, 4> kBellLabels = {BellLabel::PhiPlus, BellLabel::PhiMinus,
                                                         BellLabel::PsiPlus, BellLabel::PsiMinus};
inline constexpr std::array<Dof, 2> kDofs = {Dof::Polarization, Dof::Spatial};

inline std::string_view to_string(BellLabel b) {
  switch (b) {
    case BellLabel::PhiPlus: return "phi+";
    case BellLabel::PhiMinus: return "phi-";
    case BellLabel::PsiPlus: return "psi+";
    case BellLabel::PsiMinus: return "psi-";
  }
  return "?";
}

inline std::string_view to_string(Dof d) { return d == Dof::Polarization ? "pol" : "spat"; }
inline std::string_view to_string(Party p) { return p == Party::Alice ? "alice" : "bob"; }

inline std::optional<BellLabel> parse_bell_label(std::string_view s) {
  for (BellLabel b : kBellLabels)
    if (s == to_string(b)) return b;
  return std::nullopt;
}

inline bool is_phi_family(BellLabel b) { return b == BellLabel::PhiPlus || b == BellLabel::PhiMinus; }
inline std::size_t index_of(BellLabel b) { return static_cast<std::size_t>(b); }

struct HyperBellLabel {
  BellLabel pol = BellLabel::PhiPlus;
  BellLabel spat = BellLabel::PhiPlus;

  BellLabel of(Dof d) const { return d == Dof::Polarization ? pol : spat; }
  bool operator==(const HyperBellLabel&) const = default;
};

inline std::string to_string(const HyperBellLabel& l) {
  return std::string(to_string(l.pol)) + "," + std::string(to_string(l.spat));
}

/// Parses "POL,SPAT", e.g. "psi+,phi-".
inline std::optional<HyperBellLabel> parse_hyper_label(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto pol = parse_bell_label(s.substr(0, comma));
  auto spat = parse_bell_label(s.substr(comma + 1));
  if (!pol || !spat) return std::nullopt;
  return HyperBellLabel{*pol, *spat};
}

inline std::array<HyperBellLabel, 16> all_hyper_labels() {
  std::array<HyperBellLabel, 16> out;
  std::size_t k = 0;
  for (BellLabel p : kBellLabels)
    for (BellLabel s : kBellLabels) out[k++] = {p, s};
  return out;
}

inline QubitRole role_of(Party p, Dof d) {
  if (d == Dof::Polarization) return p == Party::Alice ? QubitRole::PolA : QubitRole::PolB;
  return p == Party::Alice ? QubitRole::SpatA : QubitRole::SpatB;
}

/// The two qubits (Alice, Bob) carrying one degree of freedom.
inline std::array<QubitRole, 2> dof_roles(Dof d) {
  return {role_of(Party::Alice, d), role_of(Party::Bob, d)};
}

inline Dof other(Dof d) { return d == Dof::Polarization ? Dof::Spatial : Dof::Polarization; }

// ---------------------------------------------------------------------------

inline ComplexVector make_bell(BellLabel label) { return bell_vectors()[index_of(label)]; }

/// |pol Bell>_(polA,polB) (x) |spat Bell>_(spatA,spatB), laid out over `layout`.
/// Roles of `layout` beyond the physical four start in |0>.
inline ComplexVector make_hyper_bell(const HyperBellLabel& label,
                                     const RegisterLayout& layout = RegisterLayout::physical()) {
  for (QubitRole r : RegisterLayout::physical().roles())
    if (!layout.contains(r))
      throw std::invalid_argument("make_hyper_bell: layout lacks physical role " +
                                  std::string(to_string(r)));
  const ComplexVector psi = tensor(make_bell(label.pol), make_bell(label.spat));
  return reorder(psi, RegisterLayout::physical(), layout);
}

// ---------------------------------------------------------------------------
// Noise

/// Per-DOF imperfections of a source. Rotations act on Alice's observables
/// (see chsh.hpp), not on the state.
struct NoiseSpec {
  double werner_p_pol = 1.0;
  double werner_p_spat = 1.0;
  double dephase_gamma_pol = 0.0;
  double dephase_gamma_spat = 0.0;
  double rotation_angle_pol = 0.0;
  double rotation_angle_spat = 0.0;

  double werner_p(Dof d) const { return d == Dof::Polarization ? werner_p_pol : werner_p_spat; }
  double dephase_gamma(Dof d) const {
    return d == Dof::Polarization ? dephase_gamma_pol : dephase_gamma_spat;
  }
  double rotation_angle(Dof d) const {
    return d == Dof::Polarization ? rotation_angle_pol : rotation_angle_spat;
  }

  void validate() const {
    auto unit = [](double x, const char* name) {
      if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument(std::string("NoiseSpec: ") + name + " must lie in [0,1]");
    };
    unit(werner_p_pol, "werner_p_pol");
    unit(werner_p_spat, "werner_p_spat");
    unit(dephase_gamma_pol, "dephase_gamma_pol");
    unit(dephase_gamma_spat, "dephase_gamma_spat");
    if (!std::isfinite(rotation_angle_pol) || !std::isfinite(rotation_angle_spat))
      throw std::invalid_argument("NoiseSpec: rotation angles must be finite");
  }

  bool operator==(const NoiseSpec&) const = default;
};

/// rho -> p rho + (1-p) (I/4)_{a,b} (x) Tr_{a,b} rho on the qubit pair (a, b).
inline ComplexMatrix depolarize_pair(const ComplexMatrix& rho, const RegisterLayout& layout,
                                     QubitRole a, QubitRole b, double p) {
  if (p == 1.0) return rho;
  std::vector<QubitRole> rest;
  for (QubitRole r : layout.roles())
    if (r != a && r != b) rest.push_back(r);
  ComplexMatrix mixed;
  if (rest.empty()) {
    mixed = ComplexMatrix::Identity(4, 4) / 4.0;
  } else {
    const ComplexMatrix reduced = partial_trace(rho, layout, rest);
    std::vector<QubitRole> order = rest;
    order.push_back(a);
    order.push_back(b);
    mixed = reorder(tensor(reduced, ComplexMatrix(ComplexMatrix::Identity(4, 4) / 4.0)),
                    RegisterLayout(order), layout);
  }
  return p * rho + (1.0 - p) * mixed;
}

/// Phase damping on one qubit: coherences between |0> and |1> scale by sqrt(1-gamma).
inline ComplexMatrix dephase_qubit(const ComplexMatrix& rho, const RegisterLayout& layout,
                                   QubitRole q, double gamma) {
  if (gamma == 0.0) return rho;
  const std::size_t m = layout.mask(q);
  const double keep = std::sqrt(1.0 - gamma);
  ComplexMatrix out = rho;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if ((static_cast<std::size_t>(i) & m) != (static_cast<std::size_t>(j) & m)) out(i, j) *= keep;
  return out;
}

/// Per-DOF Werner mixing followed by per-qubit phase damping.
inline ComplexMatrix apply_noise(const ComplexMatrix& rho, const NoiseSpec& spec) {
  spec.validate();
  const auto layout = RegisterLayout::physical();
  require_dim(rho.rows(), layout.dim(), "apply_noise");
  ComplexMatrix out = rho;
  for (Dof d : kDofs) {
    const auto [a, b] = dof_roles(d);
    out = depolarize_pair(out, layout, a, b, spec.werner_p(d));
  }
  for (Dof d : kDofs)
    for (QubitRole q : dof_roles(d)) out = dephase_qubit(out, layout, q, spec.dephase_gamma(d));
  return out;
}

inline ComplexMatrix apply_noise(const ComplexVector& psi, const NoiseSpec& spec) {
  if (!is_normalized(psi)) throw std::invalid_argument("apply_noise: state not normalized");
  return apply_noise(ComplexMatrix(projector(psi)), spec);
}

/// Noisy physical source for a target label.
inline ComplexMatrix make_source(const HyperBellLabel& label, const NoiseSpec& spec = {}) {
  return apply_noise(make_hyper_bell(label), spec);
}

}  // namespace hyperst
