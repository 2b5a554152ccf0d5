#pragma once

// Periodic 1-D grid, sampled fields, and the spectral calculus used by the
// rest of the library.
//
// Transform convention: the forward DFT is unnormalized,
//   F_j = sum_i f_i exp(-2 pi i i j / n),
// and the inverse carries the 1/n factor. Spectra are stored in DFT order,
// so index j < n/2 holds wavenumber (2 pi / L) j and index j >= n/2 holds
// (2 pi / L)(j - n).

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace nlslab {

using Complex = std::complex<double>;

class Grid1D {
 public:
  Grid1D(std::size_t n, double length) : n_(n), length_(length) {
    if (n < 8 || (n & (n - 1)) != 0) {
      throw std::invalid_argument("grid size n must be a power of two >= 8, got " +
                                  std::to_string(n));
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw std::invalid_argument("grid length must be positive and finite");
    }
    dx_ = length_ / static_cast<double>(n_);
  }

  std::size_t n() const { return n_; }
  double length() const { return length_; }
  double dx() const { return dx_; }

  /// Fundamental wavenumber 2 pi / L.
  double dk() const { return 2.0 * std::numbers::pi / length_; }

  double node(std::size_t i) const { return -0.5 * length_ + static_cast<double>(i) * dx_; }

  /// Signed mode index of DFT slot j, in [-n/2, n/2).
  long mode_index(std::size_t j) const {
    const auto half = static_cast<long>(n_ / 2);
    const auto sj = static_cast<long>(j);
    return sj < half ? sj : sj - static_cast<long>(n_);
  }

  double wavenumber(std::size_t j) const { return dk() * static_cast<double>(mode_index(j)); }

  std::vector<double> nodes() const {
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = node(i);
    return x;
  }

  std::vector<double> wavenumbers() const {
    std::vector<double> k(n_);
    for (std::size_t j = 0; j < n_; ++j) k[j] = wavenumber(j);
    return k;
  }

  /// Index of the node nearest to x, wrapping periodically.
  std::size_t nearest_node(double x) const {
    const double s = (x + 0.5 * length_) / dx_;
    auto i = static_cast<long>(std::llround(s));
    const auto sn = static_cast<long>(n_);
    i %= sn;
    if (i < 0) i += sn;
    return static_cast<std::size_t>(i);
  }

  friend bool operator==(const Grid1D& a, const Grid1D& b) {
    return a.n_ == b.n_ && a.length_ == b.length_;
  }

 private:
  std::size_t n_;
  double length_;
  double dx_;
};

inline Grid1D make_grid(std::size_t n, double length) { return Grid1D(n, length); }

namespace detail {

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (const auto& s : v) {
    if constexpr (std::is_same_v<T, Complex>) {
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
    } else {
      if (!std::isfinite(s)) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Field sampled on the nodes of a Grid1D. Sample type is double or Complex.
template <typename T>
class Field1D {
 public:
  using value_type = T;

  explicit Field1D(Grid1D grid) : grid_(grid), samples_(grid.n(), T{}) {}

  Field1D(Grid1D grid, std::vector<T> samples) : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.n()) {
      throw std::invalid_argument("field sample count does not match grid size");
    }
  }

  /// Samples f(x_i) at every node.
  template <typename F>
  static Field1D from_function(Grid1D grid, F&& f) {
    std::vector<T> s(grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i) s[i] = static_cast<T>(f(grid.node(i)));
    return Field1D(grid, std::move(s));
  }

  const Grid1D& grid() const { return grid_; }
  std::size_t size() const { return samples_.size(); }

  std::span<const T> samples() const { return samples_; }
  std::span<T> samples() { return samples_; }
  const std::vector<T>& vec() const { return samples_; }

  T& operator[](std::size_t i) { return samples_[i]; }
  const T& operator[](std::size_t i) const { return samples_[i]; }

  bool is_finite() const { return detail::all_finite(samples_); }

  Field1D& operator+=(const Field1D& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += o.samples_[i];
    return *this;
  }
  Field1D& operator-=(const Field1D& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] -= o.samples_[i];
    return *this;
  }
  template <typename S>
  Field1D& operator*=(S s) {
    for (auto& v : samples_) v *= s;
    return *this;
  }

  friend Field1D operator+(Field1D a, const Field1D& b) { return a += b; }
  friend Field1D operator-(Field1D a, const Field1D& b) { return a -= b; }
  template <typename S>
  friend Field1D operator*(S s, Field1D a) {
    return a *= s;
  }

  void check_same_grid(const Grid1D& g) const {
    if (!(grid_ == g)) throw std::invalid_argument("fields live on different grids");
  }
  template <typename U>
  void check_same_grid(const Field1D<U>& o) const {
    check_same_grid(o.grid());
  }

 private:
  Grid1D grid_;
  std::vector<T> samples_;
};

using ComplexField1D = Field1D<Complex>;
using RealField1D = Field1D<double>;

namespace detail {

// FFTW plans are cached per (size, direction). Planning is serialized; the
// new-array execute interface is thread-safe, so cached plans may be used
// concurrently. FFTW_ESTIMATE keeps plans, and hence results, reproducible.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

inline void execute(std::span<const Complex> in, std::span<Complex> out, int sign) {
  fftw_plan plan = PlanCache::instance().get(in.size(), sign);
  // FFTW does not modify the input of an out-of-place complex transform.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Unnormalized forward DFT of the samples, in DFT order.
inline std::vector<Complex> dft(const ComplexField1D& field) {
  std::vector<Complex> spectrum(field.size());
  detail::execute(field.samples(), spectrum, FFTW_FORWARD);
  return spectrum;
}

/// Inverse DFT including the 1/n factor.
inline ComplexField1D inverse_dft(const Grid1D& grid, std::span<const Complex> spectrum) {
  if (spectrum.size() != grid.n()) throw std::invalid_argument("spectrum size does not match grid");
  std::vector<Complex> out(grid.n());
  detail::execute(spectrum, out, FFTW_BACKWARD);
  const double inv_n = 1.0 / static_cast<double>(grid.n());
  for (auto& v : out) v *= inv_n;
  return ComplexField1D(grid, std::move(out));
}

/// Multiplies each DFT mode j by multiplier(k_j, j) and transforms back.
template <typename Multiplier>
ComplexField1D apply_fourier_multiplier(const ComplexField1D& field, Multiplier&& multiplier) {
  auto spectrum = dft(field);
  const auto& g = field.grid();
  for (std::size_t j = 0; j < spectrum.size(); ++j) spectrum[j] *= multiplier(g.wavenumber(j), j);
  return inverse_dft(g, spectrum);
}

/// Spectral derivative: mode j is multiplied by (i k_j)^order. The Nyquist
/// mode is treated like any other, so two first derivatives equal one second.
inline ComplexField1D derivative(const ComplexField1D& field, int order) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("derivative order must be 1 or 2, got " + std::to_string(order));
  }
  if (order == 1) {
    return apply_fourier_multiplier(field, [](double k, std::size_t) { return Complex(0.0, k); });
  }
  return apply_fourier_multiplier(field, [](double k, std::size_t) { return Complex(-k * k, 0.0); });
}

inline ComplexField1D to_complex(const RealField1D& f) {
  std::vector<Complex> s(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) s[i] = f[i];
  return ComplexField1D(f.grid(), std::move(s));
}

inline RealField1D real_part(const ComplexField1D& f) {
  std::vector<double> s(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) s[i] = f[i].real();
  return RealField1D(f.grid(), std::move(s));
}

/// Derivative of a real field; the imaginary part of the spectral result is
/// discarded (it only carries the unpaired Nyquist contribution).
inline RealField1D derivative(const RealField1D& field, int order) {
  return real_part(derivative(to_complex(field), order));
}

/// Periodic rectangle rule, dx * sum. Summation is sequential so the result is
/// reproducible bit for bit.
inline double integrate(const RealField1D& field) {
  double sum = 0.0;
  for (double v : field.samples()) sum += v;
  return field.grid().dx() * sum;
}

/// |f|^q pointwise.
inline RealField1D pointwise_abs_pow(const ComplexField1D& f, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("pointwise_abs_pow exponent must be positive");
  std::vector<double> s(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double m2 = std::norm(f[i]);
    if (q == 2.0) {
      s[i] = m2;
    } else if (q == 4.0) {
      s[i] = m2 * m2;
    } else {
      s[i] = std::pow(m2, 0.5 * q);
    }
  }
  return RealField1D(f.grid(), std::move(s));
}

/// Im(a * conj(b)) pointwise.
inline RealField1D im_product(const ComplexField1D& a, const ComplexField1D& b) {
  a.check_same_grid(b);
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = (a[i] * std::conj(b[i])).imag();
  return RealField1D(a.grid(), std::move(s));
}

/// Re(a * conj(b)) pointwise.
inline RealField1D re_product(const ComplexField1D& a, const ComplexField1D& b) {
  a.check_same_grid(b);
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = (a[i] * std::conj(b[i])).real();
  return RealField1D(a.grid(), std::move(s));
}

inline double l2_norm_sq(const ComplexField1D& f) { return integrate(pointwise_abs_pow(f, 2.0)); }

inline double max_abs_diff(const ComplexField1D& a, const ComplexField1D& b) {
  a.check_same_grid(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const ComplexField1D& a) {
  double m = 0.0;
  for (const auto& v : a.samples()) m = std::max(m, std::abs(v));
  return m;
}

/// True for DFT slots kept by the 2/3 rule (|mode| <= n/3).
inline bool dealias_keep(const Grid1D& g, std::size_t j) {
  return static_cast<std::size_t>(std::labs(g.mode_index(j))) * 3 <= g.n();
}

/// Zeroes the top third of the spectrum.
inline ComplexField1D dealias(const ComplexField1D& field) {
  const auto& g = field.grid();
  return apply_fourier_multiplier(field, [&g](double, std::size_t j) {
    return dealias_keep(g, j) ? Complex(1.0) : Complex(0.0);
  });
}

/// Periodic shift by whole nodes: result[i] = f[i - shift].
template <typename T>
Field1D<T> roll(const Field1D<T>& f, long shift) {
  const auto n = static_cast<long>(f.size());
  std::vector<T> s(f.size());
  for (long i = 0; i < n; ++i) {
    long src = (i - shift) % n;
    if (src < 0) src += n;
    s[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(src)];
  }
  return Field1D<T>(f.grid(), std::move(s));
}

}  // namespace nlslab
