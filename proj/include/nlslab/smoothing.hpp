#pragma once

// Local smoothing harness: measures |int_0^T Im(u_x conj u)(t, x0) dt|
// against ||u_x(0)||^2 for single runs and seeded ensembles.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nlslab/conservation.hpp"
#include "nlslab/csv.hpp"
#include "nlslab/dynamics.hpp"
#include "nlslab/spectral.hpp"

namespace nlslab {

inline constexpr double kDegenerateGradient = 1e-14;

/// Im(u_x conj(u)) at the node nearest x0 (within dx/2, periodically).
inline double smoothing_density(const ComplexField1D& u, double x0) {
  const auto i = u.grid().nearest_node(x0);
  const auto ux = derivative(u, 1);
  return (ux[i] * std::conj(u[i])).imag();
}

struct PoincareCheck {
  double lhs = 0.0;  // ||u - mean(u)||^2
  double rhs = 0.0;  // (L / 2 pi)^2 ||u_x||^2
  bool holds() const { return lhs <= rhs * (1.0 + 1e-12) + 1e-300; }
};

/// Periodic Poincare inequality for the mean-zero part of u.
inline PoincareCheck poincare_check(const ComplexField1D& u) {
  Complex mean = 0.0;
  for (const auto& v : u.samples()) mean += v;
  mean /= static_cast<double>(u.size());
  ComplexField1D centred = u;
  for (auto& v : centred.samples()) v -= mean;
  const double scale = u.grid().length() / (2.0 * std::numbers::pi);
  return {l2_norm_sq(centred), scale * scale * l2_norm_sq(derivative(u, 1))};
}

struct SmoothingReport {
  double x0 = 0.0;
  double t_end = 0.0;
  double lhs = 0.0;
  double grad_norm_sq = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  PoincareCheck poincare;

  bool degenerate() const { return !(grad_norm_sq > kDegenerateGradient); }
};

/// Trapezoid rule over possibly non-uniform samples.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

/// Evolves u0 and integrates the density at x0 over the recorded times.
/// The gradient norm is taken from the initial datum.
inline SmoothingReport smoothing_report(const ComplexField1D& u0, const NlsParams& params,
                                        const SolverConfig& config, double x0) {
  std::vector<double> times, density;
  evolve_stream(u0, params, config, [&](double t, const ComplexField1D& u) {
    times.push_back(t);
    density.push_back(smoothing_density(u, x0));
  });
  SmoothingReport r;
  r.x0 = x0;
  r.t_end = times.back();
  r.lhs = std::abs(trapezoid(times, density));
  r.grad_norm_sq = l2_norm_sq(derivative(u0, 1));
  if (!r.degenerate()) r.ratio = r.lhs / r.grad_norm_sq;
  r.poincare = poincare_check(u0);
  return r;
}

// ---------------------------------------------------------------------------
// Ensembles

enum class EnsembleFamily { gaussian_grid_scan, random_bandlimited };

inline std::string to_string(EnsembleFamily f) {
  return f == EnsembleFamily::gaussian_grid_scan ? "gaussian_grid_scan" : "random_bandlimited";
}

inline EnsembleFamily parse_family(const std::string& s) {
  if (s == "gaussian_grid_scan") return EnsembleFamily::gaussian_grid_scan;
  if (s == "random_bandlimited") return EnsembleFamily::random_bandlimited;
  throw std::invalid_argument("unknown ensemble family '" + s + "'");
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double at(double frac) const { return lo + (hi - lo) * frac; }
};

/// For gaussian_grid_scan, members are Gaussian packets with (A, w, k0, x0)
/// drawn by seeded Latin-hypercube sampling of the ranges. For
/// random_bandlimited, members are Gaussian envelopes (amplitude A, width w,
/// centre x0) times a random trigonometric polynomial on mode indices
/// [band_lo, band_hi].
struct EnsembleSpec {
  EnsembleFamily family = EnsembleFamily::gaussian_grid_scan;
  int count = 1;
  std::uint64_t seed = 0;
  Range amplitude{1.0, 1.0};
  Range width{1.0, 1.0};
  Range k0{0.0, 0.0};
  Range x0{0.0, 0.0};
  int band_lo = 1;
  int band_hi = 4;

  void validate() const {
    if (count < 1) throw std::invalid_argument("ensemble count must be >= 1");
    if (family == EnsembleFamily::random_bandlimited && (band_lo < 0 || band_hi < band_lo)) {
      throw std::invalid_argument("ensemble band must satisfy 0 <= band_lo <= band_hi");
    }
  }
};

struct EnsembleMember {
  int id = 0;
  EnsembleFamily family{};
  double amplitude = 0.0;
  double width = 0.0;
  double k0 = 0.0;
  double x0 = 0.0;
  ComplexField1D u0;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::vector<int> seeded_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace detail

/// Builds the members of an ensemble. Deterministic in the seed.
inline std::vector<EnsembleMember> make_ensemble(const EnsembleSpec& spec, const Grid1D& grid) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int n = spec.count;
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(n));

  if (spec.family == EnsembleFamily::gaussian_grid_scan) {
    const auto pa = detail::seeded_permutation(n, rng);
    const auto pw = detail::seeded_permutation(n, rng);
    const auto pk = detail::seeded_permutation(n, rng);
    const auto px = detail::seeded_permutation(n, rng);
    auto stratum = [&](int cell) { return (cell + detail::uniform01(rng)) / n; };
    for (int i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      const double a = spec.amplitude.at(stratum(pa[s]));
      const double w = spec.width.at(stratum(pw[s]));
      const double k = spec.k0.at(stratum(pk[s]));
      const double c = spec.x0.at(stratum(px[s]));
      members.push_back({i, spec.family, a, w, k, c, gaussian_packet(a, c, k, w, grid)});
    }
    return members;
  }

  for (int i = 0; i < n; ++i) {
    const double a = spec.amplitude.at(detail::uniform01(rng));
    const double w = spec.width.at(detail::uniform01(rng));
    const double c = spec.x0.at(detail::uniform01(rng));
    std::vector<Complex> coeffs;
    double norm = 0.0;
    for (int b = spec.band_lo; b <= spec.band_hi; ++b) {
      const double re = 2.0 * detail::uniform01(rng) - 1.0;
      const double im = 2.0 * detail::uniform01(rng) - 1.0;
      coeffs.emplace_back(re, im);
      norm += std::norm(coeffs.back());
    }
    norm = std::sqrt(norm);
    auto u0 = gaussian_packet(a, c, 0.0, w, grid);
    for (std::size_t j = 0; j < grid.n(); ++j) {
      Complex poly = 0.0;
      for (int b = spec.band_lo; b <= spec.band_hi; ++b) {
        const double kx = grid.dk() * b * grid.node(j);
        poly += coeffs[static_cast<std::size_t>(b - spec.band_lo)] * Complex(std::cos(kx), std::sin(kx));
      }
      u0[j] *= poly / (norm > 0.0 ? norm : 1.0);
    }
    const double k_mid = grid.dk() * 0.5 * (spec.band_lo + spec.band_hi);
    members.push_back({i, spec.family, a, w, k_mid, c, std::move(u0)});
  }
  return members;
}

struct EnsembleRow {
  EnsembleMember member;
  SmoothingReport report;
};

struct EnsembleResult {
  std::vector<EnsembleRow> rows;
  double empirical_constant = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> excluded;  // degenerate members, ratio undefined
};

/// Raised when a member's solve fails; carries the member index.
class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(int member, const std::string& what)
      : std::runtime_error("ensemble member " + std::to_string(member) + ": " + what), member_(member) {}
  int member() const { return member_; }

 private:
  int member_;
};

/// Runs f(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). If any call throws, the exception of the lowest index is
/// rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Smoothing reports for every member and the largest ratio among the
/// non-degenerate ones. Output order is member order regardless of threads.
inline EnsembleResult empirical_constant(const EnsembleSpec& spec, const Grid1D& grid, const NlsParams& params,
                                         const SolverConfig& config, double x0, unsigned threads = 1) {
  auto members = make_ensemble(spec, grid);
  std::vector<SmoothingReport> reports(members.size());
  parallel_for(members.size(), threads, [&](std::size_t i) {
    try {
      reports[i] = smoothing_report(members[i].u0, params, config, x0);
    } catch (const std::exception& e) {
      throw EnsembleError(static_cast<int>(i), e.what());
    }
  });
  EnsembleResult result;
  double best = -1.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (reports[i].degenerate()) {
      result.excluded.push_back(static_cast<int>(i));
    } else {
      best = std::max(best, reports[i].ratio);
    }
    result.rows.push_back({std::move(members[i]), reports[i]});
  }
  if (best >= 0.0) result.empirical_constant = best;
  return result;
}

// Ensemble CSV:
// member_id,family,A,w,k0,x0,lhs,grad_norm_sq,ratio,poincare_lhs,poincare_rhs

inline const std::vector<std::string>& ensemble_header() {
  static const std::vector<std::string> h{"member_id", "family",       "A",     "w",
                                          "k0",        "x0",           "lhs",   "grad_norm_sq",
                                          "ratio",     "poincare_lhs", "poincare_rhs"};
  return h;
}

inline void write_ensemble_csv(std::ostream& out, const EnsembleResult& result) {
  out << "member_id,family,A,w,k0,x0,lhs,grad_norm_sq,ratio,poincare_lhs,poincare_rhs\n";
  for (const auto& row : result.rows) {
    const auto& m = row.member;
    const auto& r = row.report;
    out << m.id << ',' << to_string(m.family) << ',' << format_double(m.amplitude) << ','
        << format_double(m.width) << ',' << format_double(m.k0) << ',' << format_double(m.x0) << ','
        << format_double(r.lhs) << ',' << format_double(r.grad_norm_sq) << ',' << format_double(r.ratio) << ','
        << format_double(r.poincare.lhs) << ',' << format_double(r.poincare.rhs) << '\n';
  }
}

struct EnsembleCsvRow {
  int member_id;
  std::string family;
  double amplitude, width, k0, x0, lhs, grad_norm_sq, ratio, poincare_lhs, poincare_rhs;
};

inline std::vector<EnsembleCsvRow> read_ensemble_csv(std::istream& in) {
  const auto t = read_csv(in);
  expect_header(t, ensemble_header());
  std::vector<EnsembleCsvRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({static_cast<int>(t.number(r, "member_id")), t.rows[r][t.column("family")], t.number(r, "A"),
                   t.number(r, "w"), t.number(r, "k0"), t.number(r, "x0"), t.number(r, "lhs"),
                   t.number(r, "grad_norm_sq"), t.number(r, "ratio"), t.number(r, "poincare_lhs"),
                   t.number(r, "poincare_rhs")});
  }
  return out;
}

}  // namespace nlslab
