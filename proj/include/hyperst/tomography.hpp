#pragma once

// Four-qubit Pauli tomography of the physical register: simulated counts,
// linear-inversion reconstruction projected onto density matrices, and the per-DOF
// fidelities compared against the robust bounds.

#include <algorithm>
#include <array>
#include <functional>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperst/hyperstates.hpp"
#include "hyperst/qlin.hpp"
#include "hyperst/rng.hpp"

namespace hyperst {

inline constexpr std::size_t kTomoQubits = 4;
inline constexpr std::size_t kTomoSettings = 81;
inline constexpr std::size_t kTomoOutcomes = 16;

/// Setting strings over physical qubit order, e.g. "XZYX"; k-th in base-3 with X=0, Y=1, Z=2.
inline std::string setting_name(std::size_t k) {
  static constexpr char kLetters[] = {'X', 'Y', 'Z'};
  std::string s(kTomoQubits, 'X');
  for (std::size_t q = kTomoQubits; q-- > 0;) {
    s[q] = kLetters[k % 3];
    k /= 3;
  }
  return s;
}

inline std::vector<std::string> all_settings() {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < kTomoSettings; ++k) out.push_back(setting_name(k));
  return out;
}

/// Outcome string, bit 0 = +1 eigenvalue, in physical qubit order.
inline std::string outcome_name(std::size_t o) {
  std::string s(kTomoQubits, '0');
  for (std::size_t q = 0; q < kTomoQubits; ++q)
    if (o & (std::size_t{1} << (kTomoQubits - 1 - q))) s[q] = '1';
  return s;
}

struct PauliSettingCounts {
  std::string setting;
  std::array<std::uint64_t, kTomoOutcomes> counts{};

  std::uint64_t shots() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

/// Outcome frequencies per setting; the exact mode fills these with Born probabilities.
struct PauliSettingFrequencies {
  std::string setting;
  std::array<double, kTomoOutcomes> freq{};
};

namespace detail {

inline Matrix2 basis_change(char letter) {
  switch (letter) {
    case 'X': return hadamard();
    case 'Y': {
      Matrix2 sdg;
      sdg << 1, 0, 0, cplx(0, -1);
      return hadamard() * sdg;
    }
    case 'Z': return identity2();
  }
  throw std::invalid_argument(std::string("tomography: bad setting letter ") + letter);
}

inline Matrix2 pauli_of(char letter) {
  switch (letter) {
    case 'I': return identity2();
    case 'X': return pauli_x();
    case 'Y': return pauli_y();
    case 'Z': return pauli_z();
  }
  throw std::invalid_argument(std::string("tomography: bad Pauli letter ") + letter);
}

inline std::array<double, kTomoOutcomes> born(const ComplexMatrix& rho, const std::string& setting) {
  ComplexMatrix u = ComplexMatrix::Identity(1, 1);
  for (char c : setting) u = tensor(u, ComplexMatrix(basis_change(c)));
  const ComplexMatrix r = u * rho * u.adjoint();
  std::array<double, kTomoOutcomes> p{};
  for (std::size_t o = 0; o < kTomoOutcomes; ++o)
    p[o] = std::max(0.0, r(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(o)).real());
  return p;
}

inline void require_settings(std::size_t n) {
  if (n != kTomoSettings)
    throw std::invalid_argument("reconstruct: expected 81 settings, got " + std::to_string(n));
}

}  // namespace detail

/// Born-rule multinomial sampling; setting k draws from stream (seed, {k}).
inline std::vector<PauliSettingCounts> simulate_tomography(const ComplexMatrix& rho,
                                                           std::uint64_t shots_per_setting,
                                                           std::uint64_t seed) {
  require_density(rho, "simulate_tomography");
  require_dim(rho.rows(), kTomoOutcomes, "simulate_tomography");
  if (shots_per_setting < 1) throw std::invalid_argument("simulate_tomography: shots must be >= 1");
  std::vector<PauliSettingCounts> out(kTomoSettings);
  for (std::size_t k = 0; k < kTomoSettings; ++k) {
    out[k].setting = setting_name(k);
    const auto p = detail::born(rho, out[k].setting);
    CounterRng rng(seed, {k});
    const auto c = sample_counts(p, shots_per_setting, rng);
    std::copy(c.begin(), c.end(), out[k].counts.begin());
  }
  return out;
}

inline std::vector<PauliSettingFrequencies> exact_tomography(const ComplexMatrix& rho) {
  require_dim(rho.rows(), kTomoOutcomes, "exact_tomography");
  std::vector<PauliSettingFrequencies> out(kTomoSettings);
  for (std::size_t k = 0; k < kTomoSettings; ++k) {
    out[k].setting = setting_name(k);
    out[k].freq = detail::born(rho, out[k].setting);
  }
  return out;
}

inline std::vector<PauliSettingFrequencies> to_frequencies(const std::vector<PauliSettingCounts>& counts) {
  std::vector<PauliSettingFrequencies> out;
  for (const auto& c : counts) {
    const double n = static_cast<double>(c.shots());
    if (n <= 0) throw std::invalid_argument("reconstruct: setting " + c.setting + " has no shots");
    PauliSettingFrequencies f{c.setting, {}};
    for (std::size_t o = 0; o < kTomoOutcomes; ++o) f.freq[o] = static_cast<double>(c.counts[o]) / n;
    out.push_back(f);
  }
  return out;
}

/// How negative eigenvalues of the linear-inversion estimate are removed.
enum class PsdProjection {
  // Closest density matrix in Frobenius norm: eigenvalues are shifted by a
  // common offset and clipped at zero so that they sum to one.
  Nearest,
  // Clip negatives, then rescale the remaining eigenvalues to sum to one.
  Rescale,
};

inline ComplexMatrix project_psd(const ComplexMatrix& m, PsdProjection mode = PsdProjection::Nearest) {
  const ComplexMatrix h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  if (mode == PsdProjection::Rescale) {
    ev = ev.cwiseMax(0.0);
    const double tr = ev.sum();
    if (!(tr > 0.0)) throw std::invalid_argument("project_psd: no positive eigenvalues");
    ev /= tr;
  } else {
    // Euclidean projection of the spectrum onto the probability simplex.
    std::vector<double> u(ev.data(), ev.data() + ev.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double acc = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      acc += u[j];
      const double t = (acc - 1.0) / static_cast<double>(j + 1);
      if (u[j] - t > 0.0) theta = t;
    }
    ev = (ev.array() - theta).cwiseMax(0.0);
  }
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

/// Linear inversion over the 256 Pauli strings; each expectation averages
/// every setting compatible with the string. No PSD projection.
inline ComplexMatrix linear_inversion(const std::vector<PauliSettingFrequencies>& data) {
  detail::require_settings(data.size());
  std::vector<bool> seen(kTomoSettings, false);
  for (const auto& d : data) {
    std::size_t k = 0;
    for (char c : d.setting) {
      if (c != 'X' && c != 'Y' && c != 'Z') throw std::invalid_argument("reconstruct: bad setting " + d.setting);
      k = 3 * k + (c == 'X' ? 0 : c == 'Y' ? 1 : 2);
    }
    if (d.setting.size() != kTomoQubits || seen[k])
      throw std::invalid_argument("reconstruct: duplicate or malformed setting " + d.setting);
    seen[k] = true;
  }

  static constexpr char kP[] = {'I', 'X', 'Y', 'Z'};
  ComplexMatrix rho = ComplexMatrix::Zero(16, 16);
  for (std::size_t s = 0; s < 256; ++s) {
    std::string str(kTomoQubits, 'I');
    for (std::size_t q = 0; q < kTomoQubits; ++q) str[q] = kP[(s >> (2 * (kTomoQubits - 1 - q))) & 3];
    double sum = 0.0;
    int n = 0;
    for (const auto& d : data) {
      bool ok = true;
      for (std::size_t q = 0; q < kTomoQubits; ++q)
        if (str[q] != 'I' && str[q] != d.setting[q]) ok = false;
      if (!ok) continue;
      double e = 0.0;
      for (std::size_t o = 0; o < kTomoOutcomes; ++o) {
        int sign = 1;
        for (std::size_t q = 0; q < kTomoQubits; ++q)
          if (str[q] != 'I' && (o & (std::size_t{1} << (kTomoQubits - 1 - q)))) sign = -sign;
        e += sign * d.freq[o];
      }
      sum += e;
      ++n;
    }
    ComplexMatrix p = ComplexMatrix::Identity(1, 1);
    for (char c : str) p = tensor(p, ComplexMatrix(detail::pauli_of(c)));
    rho += (sum / n) * p;
  }
  return rho / 16.0;
}

inline ComplexMatrix reconstruct(const std::vector<PauliSettingFrequencies>& data,
                                 PsdProjection mode = PsdProjection::Nearest) {
  return project_psd(linear_inversion(data), mode);
}

inline ComplexMatrix reconstruct(const std::vector<PauliSettingCounts>& counts,
                                 PsdProjection mode = PsdProjection::Nearest) {
  detail::require_settings(counts.size());
  return reconstruct(to_frequencies(counts), mode);
}

struct DofFidelities {
  double f_p;
  double f_s;
  double f_t_product;
  double f_full;
};

inline DofFidelities dof_fidelities(const ComplexMatrix& rho, const HyperBellLabel& label) {
  const RegisterLayout phys = RegisterLayout::physical();
  DofFidelities f{};
  f.f_p = fidelity(partial_trace(rho, phys, {QubitRole::PolA, QubitRole::PolB}), make_bell(label.pol));
  f.f_s = fidelity(partial_trace(rho, phys, {QubitRole::SpatA, QubitRole::SpatB}), make_bell(label.spat));
  f.f_t_product = f.f_p * f.f_s;
  f.f_full = fidelity(rho, make_hyper_bell(label));
  return f;
}

}  // namespace hyperst
