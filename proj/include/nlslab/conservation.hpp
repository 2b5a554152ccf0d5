#pragma once

// Stress-tensor densities, continuity residuals, and the integrated
// invariants of a field or trajectory.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlslab/csv.hpp"
#include "nlslab/dynamics.hpp"
#include "nlslab/spectral.hpp"

namespace nlslab {

// F00 = |u|^2
inline RealField1D f00(const ComplexField1D& u) { return pointwise_abs_pow(u, 2.0); }

// F10 = Im(u_x conj(u))
inline RealField1D f10(const ComplexField1D& u) { return im_product(derivative(u, 1), u); }

// F11 = |u_x|^2 - (1/4) (|u|^2)_xx + lambda (p-1)/(p+1) |u|^(p+1)
inline RealField1D f11(const ComplexField1D& u, const NlsParams& params) {
  const auto ux = derivative(u, 1);
  auto out = re_product(ux, ux);
  const auto rho_xx = derivative(f00(u), 2);
  const auto pot = pointwise_abs_pow(u, params.p + 1.0);
  const double coeff = params.lambda * (params.p - 1.0) / (params.p + 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += -0.25 * rho_xx[i] + coeff * pot[i];
  return out;
}

struct TensorSnapshot {
  double t;
  RealField1D f00;
  RealField1D f10;
  RealField1D f11;
};

inline TensorSnapshot tensor_snapshot(const ComplexField1D& u, const NlsParams& params, double t) {
  return {t, f00(u), f10(u), f11(u, params)};
}

struct ConservedQuantities {
  double t = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double energy = 0.0;
  double lagrangian = 0.0;
};

/// Kinetic energy (1/2) int |u_x|^2.
inline double kinetic_energy(const ComplexField1D& u) {
  return 0.5 * integrate(pointwise_abs_pow(derivative(u, 1), 2.0));
}

/// Lagrangian (1/2) int |u_x|^2 - (1/4) int |u|^4, independent of sigma and p.
inline double lagrangian(const ComplexField1D& u) {
  return kinetic_energy(u) - 0.25 * integrate(pointwise_abs_pow(u, 4.0));
}

/// Conserved Hamiltonian (1/2) int |u_x|^2 + sigma/(p+1) int |u|^(p+1);
/// for p = 3 the quartic coefficient is sigma/4.
inline double hamiltonian(const ComplexField1D& u, const NlsParams& params) {
  return kinetic_energy(u) +
         params.sigma / (params.p + 1.0) * integrate(pointwise_abs_pow(u, params.p + 1.0));
}

inline ConservedQuantities conserved_quantities(const ComplexField1D& u, const NlsParams& params, double t) {
  ConservedQuantities q;
  q.t = t;
  const auto ux = derivative(u, 1);
  const auto rho = f00(u);
  q.mass = integrate(rho);
  q.momentum = -integrate(im_product(ux, u));
  q.kinetic = 0.5 * integrate(pointwise_abs_pow(ux, 2.0));
  const double pow_int = integrate(pointwise_abs_pow(u, params.p + 1.0));
  q.potential = 2.0 * params.lambda / (params.p + 1.0) * pow_int;
  q.energy = q.kinetic + params.sigma / (params.p + 1.0) * pow_int;
  const double quartic = params.p == 3 ? pow_int : integrate(pointwise_abs_pow(u, 4.0));
  q.lagrangian = q.kinetic - 0.25 * quartic;
  return q;
}

inline constexpr double kDriftFloor = 1e-14;

struct InvariantDrift {
  std::vector<ConservedQuantities> records;
  double mass = 0.0;
  double momentum = 0.0;
  double energy = 0.0;
};

inline double relative_drift(const std::vector<double>& q) {
  const double denom = std::max(std::abs(q.front()), kDriftFloor);
  double m = 0.0;
  for (double v : q) m = std::max(m, std::abs(v - q.front()));
  return m / denom;
}

inline InvariantDrift invariant_drift(const Trajectory& traj, const NlsParams& params) {
  if (traj.size() < 2) throw std::invalid_argument("invariant_drift needs at least 2 records");
  InvariantDrift d;
  std::vector<double> m, p, e;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    d.records.push_back(conserved_quantities(traj.states[i], params, traj.times[i]));
    m.push_back(d.records.back().mass);
    p.push_back(d.records.back().momentum);
    e.push_back(d.records.back().energy);
  }
  d.mass = relative_drift(m);
  d.momentum = relative_drift(p);
  d.energy = relative_drift(e);
  return d;
}

/// Drift accumulated on the fly, for long runs that should not store states.
class DriftAccumulator {
 public:
  explicit DriftAccumulator(NlsParams params) : params_(params) {}

  void operator()(double t, const ComplexField1D& u) {
    const auto q = conserved_quantities(u, params_, t);
    if (count_ == 0) first_ = q;
    ++count_;
    mass_ = std::max(mass_, std::abs(q.mass - first_.mass));
    momentum_ = std::max(momentum_, std::abs(q.momentum - first_.momentum));
    energy_ = std::max(energy_, std::abs(q.energy - first_.energy));
  }

  double mass_drift() const { return mass_ / std::max(std::abs(first_.mass), kDriftFloor); }
  double momentum_drift() const { return momentum_ / std::max(std::abs(first_.momentum), kDriftFloor); }
  double energy_drift() const { return energy_ / std::max(std::abs(first_.energy), kDriftFloor); }
  const ConservedQuantities& initial() const { return first_; }

 private:
  NlsParams params_;
  ConservedQuantities first_{};
  std::size_t count_ = 0;
  double mass_ = 0.0;
  double momentum_ = 0.0;
  double energy_ = 0.0;
};

// Diagnostics CSV: t,mass,momentum,kinetic,potential,energy,lagrangian

inline const std::vector<std::string>& diagnostics_header() {
  static const std::vector<std::string> h{"t", "mass", "momentum", "kinetic", "potential", "energy", "lagrangian"};
  return h;
}

inline void write_diagnostics_header(std::ostream& out) {
  out << "t,mass,momentum,kinetic,potential,energy,lagrangian\n";
}

inline void write_diagnostics_row(std::ostream& out, const ConservedQuantities& q) {
  out << format_double(q.t) << ',' << format_double(q.mass) << ',' << format_double(q.momentum) << ','
      << format_double(q.kinetic) << ',' << format_double(q.potential) << ',' << format_double(q.energy) << ','
      << format_double(q.lagrangian) << '\n';
}

inline std::vector<ConservedQuantities> read_diagnostics(std::istream& in) {
  const auto t = read_csv(in);
  expect_header(t, diagnostics_header());
  std::vector<ConservedQuantities> out(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out[r] = {t.number(r, "t"),       t.number(r, "mass"),   t.number(r, "momentum"),  t.number(r, "kinetic"),
              t.number(r, "potential"), t.number(r, "energy"), t.number(r, "lagrangian")};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuity identities
//
// The densities satisfy d/dt F00 + c d/dx F10 = 0 and d/dt F10 + c d/dx F11 = 0
// for some scaling c. Residuals are evaluated with central time differences
// of recorded snapshots; c is either given or fitted by least squares.

struct ContinuityResidual {
  RealField1D mass;
  RealField1D momentum;
  double mass_l2;
  double momentum_l2;
};

inline double l2_norm(const RealField1D& f) {
  double s = 0.0;
  for (double v : f.samples()) s += v * v;
  return std::sqrt(f.grid().dx() * s);
}

/// Residuals at the middle of three records spaced h apart.
inline ContinuityResidual continuity_residual(const ComplexField1D& prev, const ComplexField1D& mid,
                                              const ComplexField1D& next, double h, const NlsParams& params,
                                              double c) {
  if (!(h > 0.0)) throw std::invalid_argument("record spacing must be positive");
  prev.check_same_grid(mid);
  mid.check_same_grid(next);
  const auto a0 = f00(prev), a2 = f00(next);
  const auto b0 = f10(prev), b2 = f10(next);
  const auto flux_mass = derivative(f10(mid), 1);
  const auto flux_mom = derivative(f11(mid, params), 1);
  RealField1D rm(mid.grid()), rp(mid.grid());
  for (std::size_t i = 0; i < mid.size(); ++i) {
    rm[i] = (a2[i] - a0[i]) / (2.0 * h) + c * flux_mass[i];
    rp[i] = (b2[i] - b0[i]) / (2.0 * h) + c * flux_mom[i];
  }
  const double lm = l2_norm(rm), lp = l2_norm(rp);
  return {std::move(rm), std::move(rp), lm, lp};
}

/// Overload on a trajectory triplet centred at record index i.
inline ContinuityResidual continuity_residual(const Trajectory& traj, std::size_t i, double c) {
  if (i == 0 || i + 1 >= traj.size()) throw std::invalid_argument("continuity residual needs interior record");
  const double h1 = traj.times[i] - traj.times[i - 1];
  const double h2 = traj.times[i + 1] - traj.times[i];
  if (std::abs(h1 - h2) > 1e-9 * h1) throw std::invalid_argument("non-uniform record spacing");
  return continuity_residual(traj.states[i - 1], traj.states[i], traj.states[i + 1], h1, traj.params, c);
}

/// Residuals with the instantaneous time derivative taken from nls_rhs
/// instead of time differences; isolates the spatial discretization.
inline ContinuityResidual continuity_residual_analytic(const ComplexField1D& u, const NlsParams& params, double c) {
  const auto ut = nls_rhs(u, params);
  const auto ux = derivative(u, 1);
  const auto utx = derivative(ut, 1);
  // d/dt |u|^2 = 2 Re(u_t conj(u)); d/dt Im(u_x conj(u)) = Im(u_tx conj(u)) + Im(u_x conj(u_t))
  const auto dt_mass = re_product(ut, u);
  const auto dt_mom_a = im_product(utx, u);
  const auto dt_mom_b = im_product(ux, ut);
  const auto flux_mass = derivative(im_product(ux, u), 1);
  const auto flux_mom = derivative(f11(u, params), 1);
  RealField1D rm(u.grid()), rp(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) {
    rm[i] = 2.0 * dt_mass[i] + c * flux_mass[i];
    rp[i] = dt_mom_a[i] + dt_mom_b[i] + c * flux_mom[i];
  }
  const double lm = l2_norm(rm), lp = l2_norm(rp);
  return {std::move(rm), std::move(rp), lm, lp};
}

struct ContinuityReport {
  double c_fit = std::numeric_limits<double>::quiet_NaN();
  double mass_residual_l2 = 0.0;
  double momentum_residual_l2 = 0.0;
  /// Filled by continuity_refinement_study; NaN for a single trajectory.
  double refinement_order = std::numeric_limits<double>::quiet_NaN();
};

/// Raised when the flux term vanishes and c cannot be fitted.
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Space-time RMS residual norms over all interior records, for a given c.
inline ContinuityReport continuity_norms(const Trajectory& traj, double c) {
  traj.uniform_spacing();
  if (traj.size() < 3) throw std::invalid_argument("continuity needs at least 3 records");
  double sm = 0.0, sp = 0.0;
  const std::size_t count = traj.size() - 2;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const auto r = continuity_residual(traj, i, c);
    sm += r.mass_l2 * r.mass_l2;
    sp += r.momentum_l2 * r.momentum_l2;
  }
  ContinuityReport rep;
  rep.c_fit = c;
  rep.mass_residual_l2 = std::sqrt(sm / static_cast<double>(count));
  rep.momentum_residual_l2 = std::sqrt(sp / static_cast<double>(count));
  return rep;
}

/// Least-squares c minimizing the mass residual over all interior records:
/// c = -<d_t F00, d_x F10> / ||d_x F10||^2.
inline ContinuityReport fit_continuity_coefficient(const Trajectory& traj) {
  const double h = traj.uniform_spacing();
  if (traj.size() < 3) throw std::invalid_argument("continuity fit needs at least 3 records");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const auto a0 = f00(traj.states[i - 1]), a2 = f00(traj.states[i + 1]);
    const auto flux = derivative(f10(traj.states[i]), 1);
    for (std::size_t j = 0; j < flux.size(); ++j) {
      const double dt_rho = (a2[j] - a0[j]) / (2.0 * h);
      num += dt_rho * flux[j];
      den += flux[j] * flux[j];
    }
  }
  const double dx = traj.grid.dx();
  const auto records = static_cast<double>(traj.size() - 2);
  if (dx * den / records < 1e-14) {
    throw DegenerateFit("flux derivative vanishes; continuity coefficient is undefined");
  }
  return continuity_norms(traj, -num / den);
}

struct RefinementLevel {
  double dt;
  double c_fit;
  double residual_c2;
  double residual_c1;
};

struct RefinementStudy {
  std::vector<RefinementLevel> levels;
  ContinuityReport finest;
  double order_c2 = 0.0;
  double order_c1 = 0.0;
};

/// Least-squares slope of log2(err) against log2(dt).
inline double fitted_order(const std::vector<double>& dts, const std::vector<double>& errs) {
  const std::size_t n = dts.size();
  if (n < 2 || errs.size() != n) throw std::invalid_argument("fitted_order needs >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log2(dts[i]), y = std::log2(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

/// Runs the same datum with dt, dt/2, ... (recording every step) and reports
/// how the c = 2 and c = 1 residuals scale.
inline RefinementStudy continuity_refinement_study(const ComplexField1D& u0, const NlsParams& params,
                                                   SolverConfig config, int halvings) {
  RefinementStudy study;
  config.record_every = 1;
  std::vector<double> dts, r2, r1;
  for (int level = 0; level <= halvings; ++level) {
    const auto traj = evolve(u0, params, config);
    const auto fit = fit_continuity_coefficient(traj);
    const auto n2 = continuity_norms(traj, 2.0);
    const auto n1 = continuity_norms(traj, 1.0);
    study.levels.push_back({config.dt, fit.c_fit, n2.mass_residual_l2, n1.mass_residual_l2});
    dts.push_back(config.dt);
    r2.push_back(n2.mass_residual_l2);
    r1.push_back(n1.mass_residual_l2);
    if (level == halvings) study.finest = fit;
    config.dt *= 0.5;
  }
  study.order_c2 = fitted_order(dts, r2);
  study.order_c1 = fitted_order(dts, r1);
  study.finest.refinement_order = study.order_c2;
  return study;
}

}  // namespace nlslab
