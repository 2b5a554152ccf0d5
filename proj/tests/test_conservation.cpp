#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "nlslab/conservation.hpp"

using namespace nlslab;

namespace {

constexpr double kPi = std::numbers::pi;
const NlsParams kDefocusing{1, 1.0, 3};
const NlsParams kFocusing{-1, 1.0, 3};

SolverConfig strang(double dt, double t_end, int record_every = 1) {
  SolverConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.record_every = record_every;
  return c;
}

}  // namespace

TEST(Densities, PlaneWave) {
  // u = A e^{ikx}: |u|^2 = A^2, Im(u_x conj u) = k A^2,
  // F11 = k^2 A^2 + lambda (p-1)/(p+1) A^(p+1).
  const Grid1D g(32, 2 * kPi);
  const double amp = 1.5;
  const auto u = plane_wave(amp, 3, g, kDefocusing, 0.0);
  const auto snap = tensor_snapshot(u, kDefocusing, 0.0);
  const NlsParams quintic{1, 2.0, 5};
  const auto f11q = f11(u, quintic);
  for (std::size_t i = 0; i < g.n(); ++i) {
    EXPECT_NEAR(snap.f00[i], amp * amp, 1e-12);
    EXPECT_NEAR(snap.f10[i], 3.0 * amp * amp, 1e-11);
    EXPECT_NEAR(snap.f11[i], 9.0 * amp * amp + 0.5 * std::pow(amp, 4), 1e-10);
    EXPECT_NEAR(f11q[i], 9.0 * amp * amp + 2.0 * (4.0 / 6.0) * std::pow(amp, 6), 1e-10);
  }
}

TEST(Densities, RealFieldHasNoCurrent) {
  const Grid1D g(128, 20.0);
  const auto u = gaussian_packet(1.0, 0.0, 0.0, 1.0, g);
  EXPECT_LT(max_abs(to_complex(f10(u))), 1e-13);
}

TEST(Densities, CurvatureTermIntegratesToZero) {
  const Grid1D g(256, 40.0);
  const auto u = gaussian_packet(1.2, 1.0, 0.7, 1.3, g);
  EXPECT_NEAR(integrate(derivative(f00(u), 2)), 0.0, 1e-12);
  // so int F11 = 2T + lambda (p-1)/(p+1) int |u|^4
  const auto q = conserved_quantities(u, kDefocusing, 0.0);
  EXPECT_NEAR(integrate(f11(u, kDefocusing)), 2.0 * q.kinetic + 0.5 * integrate(pointwise_abs_pow(u, 4.0)), 1e-11);
}

TEST(ConservedQuantities, PlaneWave) {
  const Grid1D g(32, 2 * kPi);
  const auto u = plane_wave(1.0, 1, g, kDefocusing, 0.0);
  const auto q = conserved_quantities(u, kDefocusing, 0.25);
  EXPECT_EQ(q.t, 0.25);
  EXPECT_NEAR(q.mass, 2 * kPi, 1e-12);
  EXPECT_NEAR(q.momentum, -2 * kPi, 1e-12);
  EXPECT_NEAR(q.kinetic, kPi, 1e-12);
  EXPECT_NEAR(q.potential, kPi, 1e-12);
  EXPECT_NEAR(q.energy, 1.5 * kPi, 1e-12);
  EXPECT_NEAR(q.lagrangian, 0.5 * kPi, 1e-12);
  EXPECT_NEAR(hamiltonian(u, kDefocusing), q.energy, 1e-12);
  EXPECT_NEAR(lagrangian(u), q.lagrangian, 1e-12);
}

TEST(ConservedQuantities, Soliton) {
  // a = 1: int sech^2 tanh^2 = 2/3, int sech^4 = 4/3.
  const Grid1D g(512, 60.0);
  const auto q = conserved_quantities(bright_soliton(1.0, 0.0, g, 0.0), kFocusing, 0.0);
  EXPECT_NEAR(q.mass, 4.0, 1e-12);
  EXPECT_NEAR(q.momentum, 0.0, 1e-13);
  EXPECT_NEAR(q.kinetic, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(q.potential, 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(q.energy, -2.0 / 3.0, 1e-12);
  EXPECT_NEAR(q.lagrangian, -2.0 / 3.0, 1e-12);
}

TEST(ConservedQuantities, LagrangianIgnoresNonlinearityParameters) {
  const Grid1D g(128, 20.0);
  const auto u = gaussian_packet(1.0, 0.0, 0.5, 1.0, g);
  const double ref = conserved_quantities(u, kDefocusing, 0.0).lagrangian;
  EXPECT_DOUBLE_EQ(conserved_quantities(u, kFocusing, 0.0).lagrangian, ref);
  EXPECT_NEAR(conserved_quantities(u, NlsParams{1, 1.0, 5}, 0.0).lagrangian, ref, 1e-14);
}

TEST(InvariantDrift, PlaneWaveIsFlat) {
  const Grid1D g(32, 2 * kPi);
  const auto traj = evolve(plane_wave(1.0, 2, g, kDefocusing, 0.0), kDefocusing, strang(1e-2, 1.0, 10));
  const auto d = invariant_drift(traj, kDefocusing);
  EXPECT_EQ(d.records.size(), traj.size());
  EXPECT_LE(d.mass, 1e-13);
  EXPECT_LE(d.momentum, 1e-13);
  EXPECT_LE(d.energy, 1e-13);
}

TEST(InvariantDrift, AccumulatorMatchesTrajectory) {
  const Grid1D g(256, 40.0);
  const auto u0 = gaussian_packet(1.0, 0.0, 1.0, 1.0, g);
  const auto cfg = strang(1e-2, 2.0, 5);
  const auto d = invariant_drift(evolve(u0, kFocusing, cfg), kFocusing);
  DriftAccumulator acc(kFocusing);
  evolve_stream(u0, kFocusing, cfg, std::ref(acc));
  EXPECT_DOUBLE_EQ(acc.mass_drift(), d.mass);
  EXPECT_DOUBLE_EQ(acc.momentum_drift(), d.momentum);
  EXPECT_DOUBLE_EQ(acc.energy_drift(), d.energy);
  EXPECT_GT(d.energy, 0.0);
}

TEST(InvariantDrift, FloorAndErrors) {
  EXPECT_DOUBLE_EQ(relative_drift({0.0, 1e-15}), 1e-15 / kDriftFloor);
  EXPECT_DOUBLE_EQ(relative_drift({2.0, 2.5, 1.0}), 0.5);
  const Grid1D g(32, 2 * kPi);
  Trajectory one{g, kDefocusing, {0.0}, {ComplexField1D(g)}};
  EXPECT_THROW(invariant_drift(one, kDefocusing), std::invalid_argument);
}

TEST(Diagnostics, CsvRoundTripIsExact) {
  const Grid1D g(256, 40.0);
  const auto u = gaussian_packet(1.0, 0.3, 1.0, 1.1, g);
  std::vector<ConservedQuantities> rows{conserved_quantities(u, kFocusing, 0.0),
                                        conserved_quantities(u, kDefocusing, 0.1)};
  std::stringstream ss;
  write_diagnostics_header(ss);
  for (const auto& r : rows) write_diagnostics_row(ss, r);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "t,mass,momentum,kinetic,potential,energy,lagrangian");
  const auto back = read_diagnostics(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].t, rows[i].t);
    EXPECT_EQ(back[i].mass, rows[i].mass);
    EXPECT_EQ(back[i].momentum, rows[i].momentum);
    EXPECT_EQ(back[i].kinetic, rows[i].kinetic);
    EXPECT_EQ(back[i].potential, rows[i].potential);
    EXPECT_EQ(back[i].energy, rows[i].energy);
    EXPECT_EQ(back[i].lagrangian, rows[i].lagrangian);
  }
  std::istringstream bad("t,mass\n0,1\n");
  EXPECT_THROW(read_diagnostics(bad), std::runtime_error);
}

TEST(Continuity, AnalyticResidualSelectsTwo) {
  const Grid1D g(256, 40.0);
  for (const auto& params : {kDefocusing, kFocusing}) {
    const auto u = gaussian_packet(1.0, 0.0, 1.0, 1.0, g);
    const auto r2 = continuity_residual_analytic(u, params, 2.0);
    const auto r1 = continuity_residual_analytic(u, params, 1.0);
    EXPECT_LT(r2.mass_l2, 1e-10);
    EXPECT_GT(r1.mass_l2, 0.1);
  }
}

TEST(Continuity, MomentumResidualIsThePotentialMismatch) {
  // The exact flux is |u_x|^2 - (1/4)(|u|^2)_xx + (sigma/4)|u|^4, so with
  // F11's coefficient lambda (p-1)/(p+1) = lambda/2 the c = 2 residual is
  // 2 d/dx [(lambda/2 - sigma/4) |u|^4].
  const Grid1D g(256, 40.0);
  const auto u = gaussian_packet(1.0, 0.0, 1.0, 1.0, g);
  for (const auto& params : {kDefocusing, kFocusing, NlsParams{1, 3.0, 3}}) {
    const auto r = continuity_residual_analytic(u, params, 2.0);
    const double coeff = 2.0 * (0.5 * params.lambda - 0.25 * params.sigma);
    const auto expected = derivative(pointwise_abs_pow(u, 4.0), 1);
    RealField1D diff(g);
    for (std::size_t i = 0; i < g.n(); ++i) diff[i] = r.momentum[i] - coeff * expected[i];
    EXPECT_LT(l2_norm(diff), 1e-9);
    EXPECT_GT(r.momentum_l2, 0.1);
  }
}

TEST(Continuity, PlaneWaveResidualVanishesAndFitIsDegenerate) {
  const Grid1D g(32, 2 * kPi);
  const auto traj = evolve(plane_wave(1.0, 2, g, kDefocusing, 0.0), kDefocusing, strang(1e-2, 0.2));
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const auto r = continuity_residual(traj, i, 2.0);
    EXPECT_LT(r.mass_l2, 1e-10);
    EXPECT_LT(r.momentum_l2, 1e-9);
  }
  EXPECT_THROW(fit_continuity_coefficient(traj), DegenerateFit);
}

TEST(Continuity, FittedCoefficientForMovingPacket) {
  const Grid1D g(256, 40.0);
  const auto u0 = gaussian_packet(1.0, 0.0, 1.0, 1.0, g);
  const auto rep = fit_continuity_coefficient(evolve(u0, kDefocusing, strang(1e-3, 0.5)));
  EXPECT_NEAR(rep.c_fit, 2.0, 0.01);
  EXPECT_TRUE(std::isnan(rep.refinement_order));
  EXPECT_LT(rep.mass_residual_l2, 1e-4);
}

TEST(Continuity, ResidualNeedsInteriorUniformRecords) {
  const Grid1D g(32, 2 * kPi);
  const auto traj = evolve(plane_wave(1.0, 1, g, kDefocusing, 0.0), kDefocusing, strang(1e-2, 0.05));
  EXPECT_THROW(continuity_residual(traj, 0, 2.0), std::invalid_argument);
  EXPECT_THROW(continuity_residual(traj, traj.size() - 1, 2.0), std::invalid_argument);
  const auto& s = traj.states;
  EXPECT_THROW(continuity_residual(s[0], s[1], s[2], 0.0, kDefocusing, 2.0), std::invalid_argument);
  const auto ragged = evolve(plane_wave(1.0, 1, g, kDefocusing, 0.0), kDefocusing, strang(1e-2, 0.25, 10));
  EXPECT_THROW(continuity_norms(ragged, 2.0), std::invalid_argument);
}

TEST(Continuity, RefinementStudySeparatesCandidates) {
  const Grid1D g(256, 40.0);
  const auto u0 = bright_soliton(1.0, 0.0, g, 0.0, 1.0);
  const auto study = continuity_refinement_study(u0, kFocusing, strang(4e-3, 0.5), 2);
  ASSERT_EQ(study.levels.size(), 3u);
  EXPECT_NEAR(study.order_c2, 2.0, 0.3);
  EXPECT_NEAR(study.order_c1, 0.0, 0.2);
  EXPECT_NEAR(study.finest.c_fit, 2.0, 0.01);
  EXPECT_DOUBLE_EQ(study.finest.refinement_order, study.order_c2);
  EXPECT_DOUBLE_EQ(study.levels[2].dt, 1e-3);
}

TEST(FittedOrder, SyntheticPowerLaw) {
  EXPECT_NEAR(fitted_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}), 2.0, 1e-12);
  EXPECT_THROW(fitted_order({0.1}, {1.0}), std::invalid_argument);
}
