#pragma once

// Robust fidelity lower bounds driven by the CHSH deficit, the norm
// inequalities they rest on, and the epsilon sweep table.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperst/chsh.hpp"
#include "hyperst/hyperstates.hpp"
#include "hyperst/qlin.hpp"

namespace hyperst {

struct RobustnessInput {
  double epsilon_p = 0.0;
  double epsilon_s = 0.0;

  double of(Dof d) const { return d == Dof::Polarization ? epsilon_p : epsilon_s; }

  void validate() const {
    for (double e : {epsilon_p, epsilon_s})
      if (!(e >= 0.0 && e <= kTsirelson))
        throw std::invalid_argument("RobustnessInput: epsilon must lie in [0, 2*sqrt2]");
  }
};

struct EpsDerived {
  double eps1;
  double eps2;
};

/// eps1 = 2 (eps sqrt2)^(1/2), eps2 = 4 (eps sqrt2)^(1/4).
inline EpsDerived eps_derived(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps_derived: epsilon must be >= 0");
  const double t = eps * std::numbers::sqrt2;
  return {2.0 * std::sqrt(t), 4.0 * std::pow(t, 0.25)};
}

/// Raw (unclamped) bound 1 - (9 sqrt2 eps + 2^(1/4) 100 eps^(1/2) + 2^(3/8) 60 eps^(3/4)) / 4.
/// The constants are taken as published; they are not re-derived here.
inline double fidelity_lower_bound(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("fidelity_lower_bound: epsilon must be >= 0");
  const double a = 9.0 * std::numbers::sqrt2 * eps;
  const double b = std::pow(2.0, 0.25) * 100.0 * std::sqrt(eps);
  const double c = std::pow(2.0, 0.375) * 60.0 * std::pow(eps, 0.75);
  return 1.0 - 0.25 * (a + b + c);
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

struct FidelityBound {
  double eps1_p = 0, eps1_s = 0, eps2_p = 0, eps2_s = 0;
  double f_p_lb = 1, f_s_lb = 1, f_t_lb = 1;                   // raw
  double f_p_lb_clamped = 1, f_s_lb_clamped = 1, f_t_lb_clamped = 1;
};

inline FidelityBound total_bound(const RobustnessInput& in) {
  in.validate();
  FidelityBound b;
  const auto dp = eps_derived(in.epsilon_p);
  const auto ds = eps_derived(in.epsilon_s);
  b.eps1_p = dp.eps1;
  b.eps2_p = dp.eps2;
  b.eps1_s = ds.eps1;
  b.eps2_s = ds.eps2;
  b.f_p_lb = fidelity_lower_bound(in.epsilon_p);
  b.f_s_lb = fidelity_lower_bound(in.epsilon_s);
  // A product of two negative raw bounds would be positive and meaningless.
  b.f_t_lb = (b.f_p_lb >= 0.0 && b.f_s_lb >= 0.0) ? b.f_p_lb * b.f_s_lb
                                                   : std::min({b.f_p_lb, b.f_s_lb, 0.0});
  b.f_p_lb_clamped = clamp01(b.f_p_lb);
  b.f_s_lb_clamped = clamp01(b.f_s_lb);
  b.f_t_lb_clamped = b.f_p_lb_clamped * b.f_s_lb_clamped;
  return b;
}

/// Deficit 2 sqrt2 - I clamped at zero.
inline double deficit(double i_value) { return std::max(0.0, kTsirelson - i_value); }

// ---------------------------------------------------------------------------
// Norm inequalities

struct NormCheck {
  Dof dof;
  std::string name;
  double value;
  double bound;
  bool holds;
};

namespace detail {

inline double op_norm_on(const ComplexMatrix& rho, const ComplexMatrix& m) {
  return std::sqrt(std::max(0.0, (rho * m.adjoint() * m).trace().real()));
}

}  // namespace detail

/// Per DOF: ||{X_A,Z_A}|| <= 2 eps1, ||{X_B,Z_B}|| <= 2 eps1,
/// ||(X_A - X_B)|| <= 2 eps2, ||(Z_A - Z_B)|| <= 2 eps2, all evaluated on `rho`.
/// X and Z are the ones each party derives from its CHSH settings.
inline std::vector<NormCheck> check_norm_bounds(const ComplexMatrix& rho, const ChshSettings& s,
                                                const RobustnessInput& eps,
                                                double slack = 1e-12) {
  const RegisterLayout layout = RegisterLayout::physical();
  require_dim(rho.rows(), layout.dim(), "check_norm_bounds");
  std::vector<NormCheck> out;
  for (Dof d : kDofs) {
    const auto e = eps_derived(eps.of(d));
    const auto a = derived_observables(s, Party::Alice, d);
    const auto b = derived_observables(s, Party::Bob, d);
    const QubitRole ra = role_of(Party::Alice, d);
    const QubitRole rb = role_of(Party::Bob, d);
    auto push = [&](std::string name, double v, double bound) {
      out.push_back({d, std::move(name), v, bound, v <= bound + slack});
    };
    push("anticomm_alice", anticommutator_norm(rho, layout, ra, a.x, a.z), 2 * e.eps1);
    push("anticomm_bob", anticommutator_norm(rho, layout, rb, b.x, b.z), 2 * e.eps1);
    const ComplexMatrix dx = embed(a.x.matrix(), layout, ra) - embed(b.x.matrix(), layout, rb);
    const ComplexMatrix dz = embed(a.z.matrix(), layout, ra) - embed(b.z.matrix(), layout, rb);
    push("x_difference", detail::op_norm_on(rho, dx), 2 * e.eps2);
    push("z_difference", detail::op_norm_on(rho, dz), 2 * e.eps2);
  }
  return out;
}

/// Same, with the deficits taken from the exact CHSH values of `rho` under `s`.
inline std::vector<NormCheck> check_norm_bounds(const ComplexMatrix& rho, const ChshSettings& s) {
  return check_norm_bounds(rho, s,
                           {deficit(chsh_exact(rho, s, Dof::Polarization)),
                            deficit(chsh_exact(rho, s, Dof::Spatial))});
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  double epsilon;
  double f_p_lb;
  double f_t_lb;
};

/// With assume_equal the same epsilon is used for both DOFs (the published
/// curve); otherwise the spatial DOF is taken as ideal.
inline std::vector<SweepRow> sweep_bounds(const std::vector<double>& grid, bool assume_equal = true) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double e : grid) {
    if (!(e >= 0.0)) throw std::invalid_argument("sweep_bounds: grid values must be >= 0");
    const double fp = fidelity_lower_bound(e);
    const double fs = assume_equal ? fp : 1.0;
    rows.push_back({e, fp, (fp >= 0.0 && fs >= 0.0) ? fp * fs : std::min({fp, fs, 0.0})});
  }
  return rows;
}

/// lo == 0 gives a linear grid, lo > 0 a log-spaced one. Both ends included.
inline std::vector<double> make_grid(double lo, double hi, std::size_t points) {
  if (points == 0) throw std::invalid_argument("make_grid: need at least one point");
  if (!(lo >= 0.0) || !(hi >= lo)) throw std::invalid_argument("make_grid: need 0 <= lo <= hi");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(points - 1);
    g[k] = lo > 0.0 ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
  }
  g.back() = hi;
  return g;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "epsilon,f_p_lb,f_t_lb\n";
  std::ostringstream line;
  line << std::setprecision(12);
  for (const auto& r : rows) {
    line.str({});
    line << r.epsilon << ',' << r.f_p_lb << ',' << r.f_t_lb << '\n';
    os << line.str();
  }
}

}  // namespace hyperst
