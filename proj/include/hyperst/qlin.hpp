#pragma once

// Dense complex linear algebra for small qubit registers.
//
// Conventions used everywhere in hyperst:
//   * |h>, |a1>, |b1> are basis index 0; |v>, |a2>, |b2> are index 1.
//   * The first qubit of a RegisterLayout is the most significant bit of the
//     flattened basis index.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace hyperst {

using cplx = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Matrix2 = Eigen::Matrix2cd;

/// Numerical tolerances shared by all modules.
struct Tolerances {
  double vector = 1e-12;       // normalization of state vectors
  double matrix = 1e-10;       // hermiticity, unitarity, trace
  double involution = 1e-10;   // M^2 = I for binary observables
  double eigenvalue = 1e-8;    // spectrum of binary observables
  double psd = 1e-10;          // smallest admissible density eigenvalue
  double entropy_cutoff = 1e-12;
};

inline constexpr Tolerances kTol{};

// ---------------------------------------------------------------------------
// Register layout

enum class QubitRole : std::uint8_t {
  PolA,
  PolB,
  SpatA,
  SpatB,
  AuxA,   // Step 1 / single-DOF auxiliary on Alice's side
  AuxB,
  AuxA1,  // Step 2 auxiliaries, site a1b1
  AuxB1,
  AuxA2,  // Step 2 auxiliaries, site a2b2
  AuxB2,
};

inline std::string_view to_string(QubitRole r) {
  switch (r) {
    case QubitRole::PolA: return "polA";
    case QubitRole::PolB: return "polB";
    case QubitRole::SpatA: return "spatA";
    case QubitRole::SpatB: return "spatB";
    case QubitRole::AuxA: return "auxA";
    case QubitRole::AuxB: return "auxB";
    case QubitRole::AuxA1: return "auxA1";
    case QubitRole::AuxB1: return "auxB1";
    case QubitRole::AuxA2: return "auxA2";
    case QubitRole::AuxB2: return "auxB2";
  }
  return "?";
}

/// Ordered list of qubit roles; position 0 is the most significant bit.
class RegisterLayout {
 public:
  RegisterLayout(std::initializer_list<QubitRole> roles)
      : RegisterLayout(std::vector<QubitRole>(roles)) {}

  explicit RegisterLayout(std::vector<QubitRole> roles) : roles_(std::move(roles)) {
    if (roles_.size() > 10) throw std::invalid_argument("RegisterLayout: more than 10 qubits");
    for (std::size_t i = 0; i < roles_.size(); ++i)
      for (std::size_t j = i + 1; j < roles_.size(); ++j)
        if (roles_[i] == roles_[j])
          throw std::invalid_argument("RegisterLayout: duplicate role " +
                                      std::string(to_string(roles_[i])));
  }

  /// [polA, polB, spatA, spatB]
  static RegisterLayout physical() {
    return {QubitRole::PolA, QubitRole::PolB, QubitRole::SpatA, QubitRole::SpatB};
  }

  std::size_t qubits() const { return roles_.size(); }
  std::size_t dim() const { return std::size_t{1} << roles_.size(); }
  const std::vector<QubitRole>& roles() const& { return roles_; }
  std::vector<QubitRole> roles() && { return std::move(roles_); }

  bool contains(QubitRole r) const {
    return std::find(roles_.begin(), roles_.end(), r) != roles_.end();
  }

  std::size_t position(QubitRole r) const {
    auto it = std::find(roles_.begin(), roles_.end(), r);
    if (it == roles_.end())
      throw std::invalid_argument("RegisterLayout: role " + std::string(to_string(r)) +
                                  " not in layout");
    return static_cast<std::size_t>(it - roles_.begin());
  }

  /// Bit mask of the qubit at `pos` inside a flattened basis index.
  std::size_t mask_at(std::size_t pos) const { return std::size_t{1} << (qubits() - 1 - pos); }
  std::size_t mask(QubitRole r) const { return mask_at(position(r)); }

  bool operator==(const RegisterLayout&) const = default;

 private:
  std::vector<QubitRole> roles_;
};

// ---------------------------------------------------------------------------
// Elementary matrices and vectors

inline Matrix2 pauli_x() { return (Matrix2() << 0, 1, 1, 0).finished(); }
inline Matrix2 pauli_y() { return (Matrix2() << 0, cplx(0, -1), cplx(0, 1), 0).finished(); }
inline Matrix2 pauli_z() { return (Matrix2() << 1, 0, 0, -1).finished(); }
inline Matrix2 hadamard() { return (Matrix2() << 1, 1, 1, -1).finished() / std::sqrt(2.0); }
inline Matrix2 identity2() { return Matrix2::Identity(); }

/// Computational basis vector |index> in dimension dim.
inline ComplexVector basis_ket(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::invalid_argument("basis_ket: index out of range");
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return v;
}

/// Basis ket from a bit string such as "0110" (first character most significant).
inline ComplexVector ket(std::string_view bits) {
  std::size_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument("ket: expected a string of 0/1");
    index = (index << 1) | static_cast<std::size_t>(c - '0');
  }
  return basis_ket(std::size_t{1} << bits.size(), index);
}

inline ComplexMatrix projector(const ComplexVector& psi) { return psi * psi.adjoint(); }

// ---------------------------------------------------------------------------
// Kronecker products

inline ComplexVector tensor(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

template <class T>
T tensor(std::initializer_list<T> factors) {
  auto it = factors.begin();
  T out = *it;
  for (++it; it != factors.end(); ++it) out = tensor(out, *it);
  return out;
}

// ---------------------------------------------------------------------------
// Validity checks

inline bool is_normalized(const ComplexVector& v, double tol = kTol.vector) {
  return std::abs(v.squaredNorm() - 1.0) <= tol;
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kTol.matrix) {
  return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_unitary(const ComplexMatrix& m, double tol = kTol.matrix) {
  if (m.rows() != m.cols()) return false;
  return (m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

inline Eigen::VectorXd hermitian_eigenvalues(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline bool is_density(const ComplexMatrix& m, double tol = kTol.matrix) {
  if (!is_hermitian(m, tol)) return false;
  if (std::abs(m.trace() - cplx(1.0)) > tol) return false;
  return hermitian_eigenvalues(m).minCoeff() >= -kTol.psd;
}

inline void require_density(const ComplexMatrix& m, std::string_view who) {
  if (!is_density(m))
    throw std::invalid_argument(std::string(who) + ": input is not a valid density operator");
}

inline void require_dim(Eigen::Index got, std::size_t want, std::string_view who) {
  if (static_cast<std::size_t>(got) != want)
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (got " +
                                std::to_string(got) + ", expected " + std::to_string(want) + ")");
}

// ---------------------------------------------------------------------------
// Embedding and gate application

struct Control {
  QubitRole role;
  int value = 1;  // fire when the control qubit equals this value
};

/// Full-register matrix of a single-qubit operator acting on `role`.
inline ComplexMatrix embed(const Matrix2& op, const RegisterLayout& layout, QubitRole role) {
  const std::size_t n = layout.qubits();
  const std::size_t pos = layout.position(role);
  ComplexMatrix out = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t k = 0; k < n; ++k)
    out = tensor(out, k == pos ? ComplexMatrix(op) : ComplexMatrix(identity2()));
  return out;
}

/// Product of single-qubit operators on distinct roles (identity elsewhere).
inline ComplexMatrix embed(std::span<const std::pair<QubitRole, Matrix2>> ops,
                           const RegisterLayout& layout) {
  std::vector<ComplexMatrix> factors(layout.qubits(), ComplexMatrix(identity2()));
  for (const auto& [role, op] : ops) factors[layout.position(role)] = op;
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (const auto& f : factors) out = tensor(out, f);
  return out;
}

/// Applies a (multi-)controlled single-qubit gate in place on a state vector.
inline void apply_gate(ComplexVector& psi, const RegisterLayout& layout, const Matrix2& op,
                       QubitRole target, std::span<const Control> controls = {}) {
  require_dim(psi.size(), layout.dim(), "apply_gate");
  const std::size_t tmask = layout.mask(target);
  std::size_t cmask = 0, cwant = 0;
  for (const auto& c : controls) {
    const std::size_t m = layout.mask(c.role);
    if (m == tmask) throw std::invalid_argument("apply_gate: control equals target");
    cmask |= m;
    if (c.value) cwant |= m;
  }
  const std::size_t dim = layout.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & tmask) continue;
    if ((i & cmask) != cwant) continue;
    const std::size_t j = i | tmask;
    const cplx a0 = psi(static_cast<Eigen::Index>(i));
    const cplx a1 = psi(static_cast<Eigen::Index>(j));
    psi(static_cast<Eigen::Index>(i)) = op(0, 0) * a0 + op(0, 1) * a1;
    psi(static_cast<Eigen::Index>(j)) = op(1, 0) * a0 + op(1, 1) * a1;
  }
}

inline void apply_gate(ComplexVector& psi, const RegisterLayout& layout, const Matrix2& op,
                       QubitRole target, std::initializer_list<Control> controls) {
  apply_gate(psi, layout, op, target, std::span<const Control>(controls.begin(), controls.size()));
}

/// rho -> G rho G^dagger for a (multi-)controlled single-qubit gate G.
inline void apply_gate(ComplexMatrix& rho, const RegisterLayout& layout, const Matrix2& op,
                       QubitRole target, std::span<const Control> controls = {}) {
  require_dim(rho.rows(), layout.dim(), "apply_gate");
  for (Eigen::Index c = 0; c < rho.cols(); ++c) {
    ComplexVector col = rho.col(c);
    apply_gate(col, layout, op, target, controls);
    rho.col(c) = col;
  }
  const Matrix2 op_conj = op.conjugate();
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    ComplexVector row = rho.row(r).transpose();
    apply_gate(row, layout, op_conj, target, controls);
    rho.row(r) = row.transpose();
  }
}

inline void apply_gate(ComplexMatrix& rho, const RegisterLayout& layout, const Matrix2& op,
                       QubitRole target, std::initializer_list<Control> controls) {
  apply_gate(rho, layout, op, target, std::span<const Control>(controls.begin(), controls.size()));
}

namespace detail {

// For each basis index over `from`, the matching basis index over `to`.
inline std::vector<std::size_t> index_map(const RegisterLayout& from, const RegisterLayout& to) {
  for (QubitRole r : from.roles())
    if (!to.contains(r)) throw std::invalid_argument("reorder: target layout lacks a role");
  std::vector<std::size_t> masks;
  for (QubitRole r : from.roles()) masks.push_back(to.mask(r));
  std::vector<std::size_t> out(from.dim());
  for (std::size_t i = 0; i < from.dim(); ++i) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < from.qubits(); ++k)
      if (i & from.mask_at(k)) j |= masks[k];
    out[i] = j;
  }
  return out;
}

}  // namespace detail

/// Re-expresses a state given over `from` in the qubit order of `to`.
/// Qubits of `to` that are missing from `from` are initialised to |0>.
inline ComplexVector reorder(const ComplexVector& psi, const RegisterLayout& from,
                             const RegisterLayout& to) {
  require_dim(psi.size(), from.dim(), "reorder");
  const auto map = detail::index_map(from, to);
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(to.dim()));
  for (std::size_t i = 0; i < from.dim(); ++i)
    out(static_cast<Eigen::Index>(map[i])) = psi(static_cast<Eigen::Index>(i));
  return out;
}

/// Operator version of reorder; `from` and `to` must hold the same roles.
inline ComplexMatrix reorder(const ComplexMatrix& m, const RegisterLayout& from,
                             const RegisterLayout& to) {
  require_dim(m.rows(), from.dim(), "reorder");
  if (from.qubits() != to.qubits())
    throw std::invalid_argument("reorder: operator layouts must hold the same roles");
  const auto map = detail::index_map(from, to);
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < from.dim(); ++i)
    for (std::size_t j = 0; j < from.dim(); ++j)
      out(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) =
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

// ---------------------------------------------------------------------------
// Partial trace, fidelity, entropy

namespace detail {

inline std::vector<std::size_t> positions_of(const RegisterLayout& layout,
                                             std::span<const QubitRole> keep) {
  std::vector<std::size_t> pos;
  for (QubitRole r : keep) {
    if (!layout.contains(r))
      throw std::invalid_argument("partial_trace: role " + std::string(to_string(r)) +
                                  " absent from layout");
    pos.push_back(layout.position(r));
  }
  std::sort(pos.begin(), pos.end());
  if (std::adjacent_find(pos.begin(), pos.end()) != pos.end())
    throw std::invalid_argument("partial_trace: duplicate role in keep set");
  return pos;
}

// Index of the kept qubits, compacted in layout order.
inline std::size_t gather(std::size_t index, const RegisterLayout& layout,
                          const std::vector<std::size_t>& pos) {
  std::size_t out = 0;
  for (std::size_t p : pos) out = (out << 1) | ((index & layout.mask_at(p)) ? 1u : 0u);
  return out;
}

}  // namespace detail

/// Reduced operator on `keep` (kept qubits appear in layout order).
inline ComplexMatrix partial_trace(const ComplexMatrix& rho, const RegisterLayout& layout,
                                   std::span<const QubitRole> keep) {
  require_dim(rho.rows(), layout.dim(), "partial_trace");
  const auto pos = detail::positions_of(layout, keep);
  std::size_t keep_mask = 0;
  for (std::size_t p : pos) keep_mask |= layout.mask_at(p);
  const std::size_t trace_mask = (layout.dim() - 1) & ~keep_mask;

  const auto kdim = static_cast<Eigen::Index>(std::size_t{1} << pos.size());
  ComplexMatrix out = ComplexMatrix::Zero(kdim, kdim);
  const std::size_t dim = layout.dim();
  std::vector<std::size_t> compact(dim);
  for (std::size_t i = 0; i < dim; ++i) compact[i] = detail::gather(i, layout, pos);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      if ((i & trace_mask) == (j & trace_mask))
        out(static_cast<Eigen::Index>(compact[i]), static_cast<Eigen::Index>(compact[j])) +=
            rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

inline ComplexMatrix partial_trace(const ComplexMatrix& rho, const RegisterLayout& layout,
                                   std::initializer_list<QubitRole> keep) {
  return partial_trace(rho, layout, std::span<const QubitRole>(keep.begin(), keep.size()));
}

/// <target| rho |target>. The imaginary residue must vanish within kTol.matrix.
inline double fidelity(const ComplexMatrix& rho, const ComplexVector& target) {
  if (rho.rows() != target.size() || rho.cols() != target.size())
    throw std::invalid_argument("fidelity: dimension mismatch");
  const cplx f = target.dot(rho * target);
  if (std::abs(f.imag()) > kTol.matrix)
    throw std::invalid_argument("fidelity: non-Hermitian input");
  return std::clamp(f.real(), 0.0, 1.0);
}

inline double fidelity(const ComplexVector& psi, const ComplexVector& target) {
  if (psi.size() != target.size()) throw std::invalid_argument("fidelity: dimension mismatch");
  return std::clamp(std::norm(target.dot(psi)), 0.0, 1.0);
}

/// Base-2 von Neumann entropy; eigenvalues are clamped to [0, 1].
inline double von_neumann_entropy(const ComplexMatrix& rho) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(rho);
  double s = 0.0;
  for (double lam : ev) {
    lam = std::clamp(lam, 0.0, 1.0);
    if (lam > kTol.entropy_cutoff) s -= lam * std::log2(lam);
  }
  return s;
}

/// Entropy of entanglement of a pure state across `cut` | rest.
inline double entanglement_entropy(const ComplexVector& psi, const RegisterLayout& layout,
                                   std::span<const QubitRole> cut) {
  require_dim(psi.size(), layout.dim(), "entanglement_entropy");
  if (!is_normalized(psi)) throw std::invalid_argument("entanglement_entropy: state not normalized");
  return von_neumann_entropy(partial_trace(projector(psi), layout, cut));
}

inline double entanglement_entropy(const ComplexVector& psi, const RegisterLayout& layout,
                                   std::initializer_list<QubitRole> cut) {
  return entanglement_entropy(psi, layout, std::span<const QubitRole>(cut.begin(), cut.size()));
}

/// Trace distance 1/2 ||a - b||_1 between Hermitian operators.
inline double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Bell basis

/// Normalized Bell vectors in the order phi+, phi-, psi+, psi-.
inline std::array<ComplexVector, 4> bell_vectors() {
  const double s = 1.0 / std::sqrt(2.0);
  std::array<ComplexVector, 4> out;
  for (auto& v : out) v = ComplexVector::Zero(4);
  out[0](0) = s; out[0](3) = s;
  out[1](0) = s; out[1](3) = -s;
  out[2](1) = s; out[2](2) = s;
  out[3](1) = s; out[3](2) = -s;
  return out;
}

/// Rank-1 projectors onto phi+, phi-, psi+, psi- (same order as bell_vectors).
inline std::array<ComplexMatrix, 4> bell_projectors() {
  std::array<ComplexMatrix, 4> out;
  const auto vs = bell_vectors();
  for (std::size_t k = 0; k < 4; ++k) out[k] = projector(vs[k]);
  return out;
}

}  // namespace hyperst
