#pragma once

// Action functional S = int int (1/2)|u_x|^2 - (1/4)|u|^4 dx dt over a
// recorded trajectory, its first variation, and center-of-mass diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlslab/conservation.hpp"
#include "nlslab/csv.hpp"
#include "nlslab/dynamics.hpp"
#include "nlslab/smoothing.hpp"
#include "nlslab/spectral.hpp"

namespace nlslab {

/// Trapezoid rule in time of the Lagrangian over uniformly spaced records.
inline double action(const Trajectory& traj) {
  traj.uniform_spacing();
  std::vector<double> l(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) l[i] = lagrangian(traj.states[i]);
  return trapezoid(traj.times, l);
}

/// g = -u_xx - |u|^2 u: the L2 gradient of the Lagrangian, so that
/// d/de L(u + e phi) at e = 0 equals int Re(g conj(phi)) dx.
inline ComplexField1D action_gradient_density(const ComplexField1D& u) {
  auto g = derivative(u, 2);
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = -g[i] - std::norm(u[i]) * u[i];
  return g;
}

/// int Re(g conj(phi)) dx.
inline double lagrangian_directional_derivative(const ComplexField1D& u, const ComplexField1D& phi) {
  return integrate(re_product(action_gradient_density(u), phi));
}

/// Space-time test field
///   phi(t, x) = amplitude exp(-(x - x_center)^2 / (2 width^2)) exp(i k x) b(t)
/// with b the smooth compact bump exp(1 - 1 / (1 - s^2)), s = (t - t_center) / t_halfwidth.
struct TestFieldSpec {
  Complex amplitude{1.0, 0.0};
  double x_center = 0.0;
  double width = 1.0;
  double k = 0.0;
  double t_center = 0.0;
  double t_halfwidth = 1.0;

  void validate(const Grid1D& grid) const {
    if (!(width > 0.0) || !(t_halfwidth > 0.0)) throw std::invalid_argument("test field widths must be positive");
    const double margin = 0.5 * grid.length() - std::abs(x_center);
    if (!(margin > 0.0) || std::abs(amplitude) * std::exp(-margin * margin / (2.0 * width * width)) >= 1e-12) {
      throw std::invalid_argument("test field is not supported away from the boundary");
    }
  }

  double time_bump(double t) const {
    const double s = (t - t_center) / t_halfwidth;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
  }

  ComplexField1D at(const Grid1D& grid, double t) const {
    const double b = time_bump(t);
    return ComplexField1D::from_function(grid, [&](double x) {
      const double r = x - x_center;
      return amplitude * b * std::exp(-r * r / (2.0 * width * width)) * Complex(std::cos(k * x), std::sin(k * x));
    });
  }
};

inline void check_epsilon(double epsilon) {
  if (!(epsilon >= 1e-8 && epsilon <= 1e-2)) throw std::invalid_argument("epsilon must lie in [1e-8, 1e-2]");
}

/// (S(u + e phi) - S(u - e phi)) / (2 e) on the recorded trajectory, which is
/// perturbed but not re-solved.
inline double first_variation(const Trajectory& traj, const TestFieldSpec& phi, double epsilon) {
  check_epsilon(epsilon);
  phi.validate(traj.grid);
  traj.uniform_spacing();
  std::vector<double> plus(traj.size()), minus(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto p = phi.at(traj.grid, traj.times[i]);
    plus[i] = lagrangian(traj.states[i] + epsilon * p);
    minus[i] = lagrangian(traj.states[i] - epsilon * p);
  }
  return (trapezoid(traj.times, plus) - trapezoid(traj.times, minus)) / (2.0 * epsilon);
}

/// The same directional derivative from the analytic gradient density.
inline double first_variation_analytic(const Trajectory& traj, const TestFieldSpec& phi) {
  phi.validate(traj.grid);
  traj.uniform_spacing();
  std::vector<double> d(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    d[i] = lagrangian_directional_derivative(traj.states[i], phi.at(traj.grid, traj.times[i]));
  }
  return trapezoid(traj.times, d);
}

// ---------------------------------------------------------------------------
// Center of mass

struct VariationalReport {
  double action = 0.0;
  std::vector<double> times;
  std::vector<double> xcm;
  std::vector<double> mass;
  double xcm_slope = 0.0;
  double xcm_accel_max = 0.0;
  /// mass * xcm'' by central differences; NaN at the first and last record.
  std::vector<double> eq32_lhs;
  /// -(1/4) int |u|^4 at every record.
  std::vector<double> eq32_rhs;
};

/// Fraction of mass within the outer `edge` fraction of the box on each side.
inline double edge_mass_fraction(const ComplexField1D& u, double edge = 0.05) {
  const auto& g = u.grid();
  const double cut = 0.5 * g.length() * (1.0 - 2.0 * edge);
  double total = 0.0, outer = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = std::norm(u[i]);
    total += m;
    if (std::abs(g.node(i)) > cut) outer += m;
  }
  return total > 0.0 ? outer / total : 0.0;
}

inline constexpr double kEdgeMassTolerance = 1e-10;

inline double center_of_mass(const ComplexField1D& u) {
  const auto rho = f00(u);
  const double m = integrate(rho);
  if (!(m >= 1e-14)) throw std::invalid_argument("center of mass undefined: mass below 1e-14");
  RealField1D xr(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) xr[i] = u.grid().node(i) * rho[i];
  return integrate(xr) / m;
}

/// Least-squares slope of y against t.
inline double linear_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const auto n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

inline VariationalReport center_of_mass_report(const Trajectory& traj) {
  if (traj.size() < 5) throw std::invalid_argument("center-of-mass report needs at least 5 records");
  const double h = traj.uniform_spacing();
  VariationalReport rep;
  rep.times = traj.times;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& u = traj.states[i];
    if (edge_mass_fraction(u) > kEdgeMassTolerance) {
      throw std::invalid_argument("boundary margin violated at t = " + format_double(traj.times[i]));
    }
    rep.xcm.push_back(center_of_mass(u));
    rep.mass.push_back(l2_norm_sq(u));
    rep.eq32_rhs.push_back(-0.25 * integrate(pointwise_abs_pow(u, 4.0)));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.eq32_lhs.assign(traj.size(), nan);
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double accel = (rep.xcm[i + 1] - 2.0 * rep.xcm[i] + rep.xcm[i - 1]) / (h * h);
    rep.eq32_lhs[i] = rep.mass[i] * accel;
    rep.xcm_accel_max = std::max(rep.xcm_accel_max, std::abs(rep.eq32_lhs[i]));
  }
  rep.xcm_slope = linear_slope(rep.times, rep.xcm);
  rep.action = action(traj);
  return rep;
}

// Variational CSV: t,xcm,eq32_lhs,eq32_rhs

inline void write_variational_csv(std::ostream& out, const VariationalReport& rep) {
  out << "t,xcm,eq32_lhs,eq32_rhs\n";
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    out << format_double(rep.times[i]) << ',' << format_double(rep.xcm[i]) << ',' << format_double(rep.eq32_lhs[i])
        << ',' << format_double(rep.eq32_rhs[i]) << '\n';
  }
}

struct VariationalCsvRow {
  double t, xcm, eq32_lhs, eq32_rhs;
};

inline std::vector<VariationalCsvRow> read_variational_csv(std::istream& in) {
  const auto t = read_csv(in);
  expect_header(t, {"t", "xcm", "eq32_lhs", "eq32_rhs"});
  std::vector<VariationalCsvRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({t.number(r, "t"), t.number(r, "xcm"), t.number(r, "eq32_lhs"), t.number(r, "eq32_rhs")});
  }
  return out;
}

}  // namespace nlslab
