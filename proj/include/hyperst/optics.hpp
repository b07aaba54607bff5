#pragma once

// Linear-optical analyzers for one photon's joint (polarization, spatial)
// qubit pair. The photon space is 4-dimensional with polarization as the
// most significant qubit: index = 2 * pol + spat.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hyperst/chsh.hpp"
#include "hyperst/hyperstates.hpp"
#include "hyperst/qlin.hpp"
#include "hyperst/rng.hpp"

namespace hyperst {

using Matrix4 = Eigen::Matrix4cd;

enum class ElementKind {
  PBS,            // transmits |h>, reflects |v>: spatial flip controlled by polarization
  BS,             // 50:50 beam splitter, Hadamard on the spatial qubit
  PolarizationH,  // wave plate acting as a polarization Hadamard
  SpatialSwap,    // beam displacer, X on the spatial qubit
  Phase,          // diag(1, e^{i phi}) on one DOF
};

inline std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::PBS: return "PBS";
    case ElementKind::BS: return "BS";
    case ElementKind::PolarizationH: return "PolarizationH";
    case ElementKind::SpatialSwap: return "BD";
    case ElementKind::Phase: return "Phase";
  }
  return "?";
}

struct OpticalElement {
  ElementKind kind;
  Dof phase_dof = Dof::Polarization;  // Phase only
  double phi = 0.0;                   // Phase only
  std::pair<std::string, std::string> ports = {"a1", "a2"};
};

inline Matrix4 element_unitary(const OpticalElement& e) {
  const Matrix2 id = identity2();
  auto kron = [](const Matrix2& p, const Matrix2& s) -> Matrix4 {
    return Eigen::kroneckerProduct(p, s).eval();
  };
  switch (e.kind) {
    case ElementKind::PBS: {
      Matrix4 u = Matrix4::Zero();
      u(0, 0) = u(1, 1) = 1.0;  // |h,1>, |h,2> pass
      u(3, 2) = u(2, 3) = 1.0;  // |v,1> <-> |v,2>
      return u;
    }
    case ElementKind::BS: return kron(id, hadamard());
    case ElementKind::PolarizationH: return kron(hadamard(), id);
    case ElementKind::SpatialSwap: return kron(id, pauli_x());
    case ElementKind::Phase: {
      Matrix2 ph = Matrix2::Identity();
      ph(1, 1) = std::polar(1.0, e.phi);
      return e.phase_dof == Dof::Polarization ? kron(ph, id) : kron(id, ph);
    }
  }
  throw std::invalid_argument("element_unitary: unknown element");
}

/// Outcome pair (tau_pol, tau_spat), each +1 or -1.
struct Outcome {
  int tau_p;
  int tau_s;
  bool operator==(const Outcome&) const = default;
};

struct AnalyzerCircuit {
  std::vector<OpticalElement> elements;
  std::array<Outcome, 4> detector_map;  // output basis index -> outcome

  /// Composed unitary (later elements act on the left).
  Matrix4 unitary() const {
    Matrix4 u = Matrix4::Identity();
    for (const auto& e : elements) u = element_unitary(e) * u;
    return u;
  }
};

/// The four joint bases drawn for the CHSH apparatus.
enum class FigureBasis { SxPz, SxPx, SzPx, SzPz };

namespace detail {

// Elements that rotate the measurement axis of one DOF from Z to
// cos(theta) Z + sin(theta) X ahead of a Z-type readout.
inline void append_axis_rotation(std::vector<OpticalElement>& out, Dof dof, double theta,
                                 const std::pair<std::string, std::string>& ports) {
  const ElementKind h = dof == Dof::Polarization ? ElementKind::PolarizationH : ElementKind::BS;
  constexpr double kEps = 1e-15;
  const double half_pi = std::numbers::pi / 2;
  if (std::abs(theta) < kEps) return;
  if (std::abs(theta - half_pi) < kEps) {
    out.push_back({h, dof, 0.0, ports});
    return;
  }
  // Ry(-theta) = S H P(-theta) H S^dagger up to a global phase.
  out.push_back({ElementKind::Phase, dof, -half_pi, ports});
  out.push_back({h, dof, 0.0, ports});
  out.push_back({ElementKind::Phase, dof, -theta, ports});
  out.push_back({h, dof, 0.0, ports});
  out.push_back({ElementKind::Phase, dof, half_pi, ports});
}

inline std::pair<std::string, std::string> ports_for(Party p) {
  return p == Party::Alice ? std::pair<std::string, std::string>{"a1", "a2"}
                           : std::pair<std::string, std::string>{"b1", "b2"};
}

}  // namespace detail

/// Analyzer reading out cos(pol_angle) Z + sin(pol_angle) X on polarization and
/// the analogous observable on the spatial mode, in one shot.
inline AnalyzerCircuit build_analyzer(double pol_angle, double spat_angle,
                                      Party party = Party::Alice) {
  AnalyzerCircuit c;
  const auto ports = detail::ports_for(party);
  detail::append_axis_rotation(c.elements, Dof::Spatial, spat_angle, ports);
  detail::append_axis_rotation(c.elements, Dof::Polarization, pol_angle, ports);
  c.elements.push_back({ElementKind::PBS, Dof::Polarization, 0.0, ports});
  // After the PBS the exit port carries spat XOR pol.
  for (int k = 0; k < 4; ++k) {
    const int p = k >> 1, s = k & 1;
    c.detector_map[k] = {p ? -1 : 1, (s ^ p) ? -1 : 1};
  }
  return c;
}

inline AnalyzerCircuit build_analyzer(FigureBasis basis, Party party = Party::Alice) {
  const double x = std::numbers::pi / 2;
  switch (basis) {
    case FigureBasis::SxPz: return build_analyzer(0.0, x, party);
    case FigureBasis::SxPx: return build_analyzer(x, x, party);
    case FigureBasis::SzPx: return build_analyzer(x, 0.0, party);
    case FigureBasis::SzPz: return build_analyzer(0.0, 0.0, party);
  }
  throw std::invalid_argument("build_analyzer: unknown basis");
}

/// Observables measured by a circuit: U^dagger diag(tau) U for each DOF.
inline std::pair<Matrix4, Matrix4> induced_observables(const AnalyzerCircuit& c) {
  const Matrix4 u = c.unitary();
  Eigen::Vector4cd tp, ts;
  for (int k = 0; k < 4; ++k) {
    tp(k) = c.detector_map[k].tau_p;
    ts(k) = c.detector_map[k].tau_s;
  }
  return {u.adjoint() * tp.asDiagonal() * u, u.adjoint() * ts.asDiagonal() * u};
}

/// Projectors onto each detector outcome, pulled back to the input frame.
inline std::array<Matrix4, 4> induced_povm(const AnalyzerCircuit& c) {
  const Matrix4 u = c.unitary();
  std::array<Matrix4, 4> out;
  for (int k = 0; k < 4; ++k) {
    Matrix4 pk = Matrix4::Zero();
    pk(k, k) = 1.0;
    out[k] = u.adjoint() * pk * u;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Measurement on photon pairs

namespace detail {

// Alice's circuit on (polA, spatA), Bob's on (polB, spatB), in the physical layout.
inline ComplexMatrix pair_unitary(const Matrix4& ua, const Matrix4& ub) {
  const RegisterLayout by_photon{QubitRole::PolA, QubitRole::SpatA, QubitRole::PolB,
                                 QubitRole::SpatB};
  return reorder(tensor(ComplexMatrix(ua), ComplexMatrix(ub)), by_photon,
                 RegisterLayout::physical());
}

// Photon-local output index (2 * pol + spat) of `party` in a physical basis index.
inline int photon_index(std::size_t i, Party party) {
  const auto layout = RegisterLayout::physical();
  const bool p = i & layout.mask(role_of(party, Dof::Polarization));
  const bool s = i & layout.mask(role_of(party, Dof::Spatial));
  return 2 * int(p) + int(s);
}

}  // namespace detail

/// Exact joint detector distribution, indexed [alice_output][bob_output].
inline std::array<std::array<double, 4>, 4> analyzer_distribution(const ComplexMatrix& rho,
                                                                  const AnalyzerCircuit& alice,
                                                                  const AnalyzerCircuit& bob) {
  require_dim(rho.rows(), 16, "analyzer_distribution");
  const ComplexMatrix u = detail::pair_unitary(alice.unitary(), bob.unitary());
  const ComplexMatrix out = u * rho * u.adjoint();
  std::array<std::array<double, 4>, 4> p{};
  for (std::size_t i = 0; i < 16; ++i)
    p[detail::photon_index(i, Party::Alice)][detail::photon_index(i, Party::Bob)] +=
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  return p;
}

struct AnalyzerMeasurement {
  Outcome outcome;
  ComplexVector post_state;  // collapsed, in the input frame
  double probability;
};

/// Samples one detection of `party`'s photon through `circuit` on a pure
/// physical state.
inline AnalyzerMeasurement measure_with_analyzer(const ComplexVector& psi, Party party,
                                                 const AnalyzerCircuit& circuit, CounterRng& rng) {
  require_dim(psi.size(), 16, "measure_with_analyzer");
  const Matrix4 id4 = Matrix4::Identity();
  const Matrix4 uc = circuit.unitary();
  const ComplexMatrix u = party == Party::Alice ? detail::pair_unitary(uc, id4)
                                                : detail::pair_unitary(id4, uc);
  const ComplexVector out = u * psi;
  std::array<double, 4> probs{};
  for (std::size_t i = 0; i < 16; ++i)
    probs[detail::photon_index(i, party)] += std::norm(out(static_cast<Eigen::Index>(i)));
  const std::size_t k = DiscreteSampler(probs)(rng);
  ComplexVector collapsed = ComplexVector::Zero(16);
  for (std::size_t i = 0; i < 16; ++i)
    if (detail::photon_index(i, party) == static_cast<int>(k))
      collapsed(static_cast<Eigen::Index>(i)) = out(static_cast<Eigen::Index>(i));
  collapsed /= std::sqrt(probs[k]);
  return {circuit.detector_map[k], u.adjoint() * collapsed, probs[k]};
}

/// Joint (tau_A, tau_B) distribution on one DOF when both photons pass
/// analyzers set to the given angles; the other DOF is read out in Z and
/// marginalized. Order (+,+), (+,-), (-,+), (-,-).
inline std::array<double, 4> hardware_pair_distribution(const ComplexMatrix& rho, Dof dof,
                                                        double alice_angle, double bob_angle) {
  auto circuit_for = [dof](double angle, Party p) {
    return dof == Dof::Polarization ? build_analyzer(angle, 0.0, p) : build_analyzer(0.0, angle, p);
  };
  const auto ca = circuit_for(alice_angle, Party::Alice);
  const auto cb = circuit_for(bob_angle, Party::Bob);
  const auto joint = analyzer_distribution(rho, ca, cb);
  std::array<double, 4> out{};
  for (int ka = 0; ka < 4; ++ka)
    for (int kb = 0; kb < 4; ++kb) {
      const Outcome oa = ca.detector_map[ka], ob = cb.detector_map[kb];
      const int ta = dof == Dof::Polarization ? oa.tau_p : oa.tau_s;
      const int tb = dof == Dof::Polarization ? ob.tau_p : ob.tau_s;
      out[2 * (ta < 0) + (tb < 0)] += joint[ka][kb];
    }
  return out;
}

/// CHSH test routed through the analyzer model. Settings must lie in the X-Z plane.
inline ChshReport chsh_sampled_hardware(const ComplexMatrix& rho, const ChshSettings& s, Dof dof,
                                        std::uint64_t shots_per_pair, std::uint64_t seed,
                                        StderrMode mode = StderrMode::Binomial,
                                        const ShotSink& sink = {}) {
  auto angle = [&](Party p, int i) {
    const auto a = s.at(p, dof, i).xz_angle();
    if (!a) throw std::invalid_argument("chsh_sampled_hardware: observable outside the X-Z plane");
    return *a;
  };
  std::array<std::array<std::array<double, 4>, 2>, 2> dists{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      dists[i][j] = hardware_pair_distribution(rho, dof, angle(Party::Alice, i), angle(Party::Bob, j));
  return chsh_from_distributions(dof, dists, shots_per_pair, seed, mode, sink);
}

// ---------------------------------------------------------------------------
// JSON description

inline nlohmann::ordered_json to_json(const OpticalElement& e) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(e.kind);
  if (e.kind == ElementKind::Phase) {
    j["dof"] = to_string(e.phase_dof);
    j["phi"] = e.phi;
  }
  j["ports"] = {e.ports.first, e.ports.second};
  return j;
}

inline nlohmann::ordered_json to_json(const AnalyzerCircuit& c) {
  nlohmann::ordered_json j;
  j["elements"] = nlohmann::ordered_json::array();
  for (const auto& e : c.elements) j["elements"].push_back(to_json(e));
  j["detector_map"] = nlohmann::ordered_json::array();
  for (int k = 0; k < 4; ++k) {
    const std::string bits = {char('0' + (k >> 1)), char('0' + (k & 1))};
    j["detector_map"].push_back(
        {{"output", bits}, {"tau_p", c.detector_map[k].tau_p}, {"tau_s", c.detector_map[k].tau_s}});
  }
  return j;
}

}  // namespace hyperst
