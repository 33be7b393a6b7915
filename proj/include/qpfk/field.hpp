#pragma once

// Real periodic fields on the 2-torus R^2/Z^2 held in two dual forms: complex
// Fourier coefficients (SpectralField) and samples on a uniform grid
// (GridValues). Convention:  h(theta) = sum_k hhat_k exp(2 pi i k.theta).

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qpfk/fft.hpp"

namespace qpfk {

using Vec2 = std::array<double, 2>;
using Index2 = std::array<int, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double dot(const Index2& k, const Vec2& v) { return k[0] * v[0] + k[1] * v[1]; }

/// Raised for invalid shapes, resonant frequencies and other contract breaches.
class FieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GridDims {
  int n1 = 0;
  int n2 = 0;

  std::size_t size() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
  bool operator==(const GridDims&) const = default;
};

/// Throws FieldError unless both extents are positive and even.
void validate_dims(GridDims dims);
bool is_power_of_two(int n);

/// Signed wave number of DFT slot i on an axis of length n: [-n/2, n/2).
inline int wave_number(int i, int n) { return i < n / 2 ? i : i - n; }
/// Slot of signed wave number k (any integer) on an axis of length n.
inline int slot_of(int k, int n) {
  int s = k % n;
  return s < 0 ? s + n : s;
}

/// Samples of a real function at theta_j = (j1/n1, j2/n2), row-major (j1 slow).
struct GridValues {
  GridDims dims;
  std::vector<double> values;

  GridValues() = default;
  explicit GridValues(GridDims d, double fill = 0.0) : dims(d), values(d.size(), fill) {}

  double& at(int j1, int j2) { return values[static_cast<std::size_t>(j1) * dims.n2 + j2]; }
  double at(int j1, int j2) const { return values[static_cast<std::size_t>(j1) * dims.n2 + j2]; }

  double sup_norm() const;
  /// Root mean square over the grid (the L2 norm on the unit-mass torus).
  double l2_norm() const;
  double mean() const;
};

class SpectralField {
 public:
  SpectralField() = default;
  /// Zero field.
  explicit SpectralField(GridDims dims);
  SpectralField(GridDims dims, ComplexBuffer coeffs);

  GridDims dims() const { return dims_; }
  std::size_t size() const { return coeffs_.size(); }

  std::span<const cplx> coeffs() const { return coeffs_; }
  std::span<cplx> coeffs_mut() { return coeffs_; }

  std::size_t slot(int k1, int k2) const {
    return static_cast<std::size_t>(slot_of(k1, dims_.n1)) * dims_.n2 + slot_of(k2, dims_.n2);
  }
  /// Coefficient at signed wave vector (k1, k2); indices wrap modulo the grid.
  cplx& at(int k1, int k2) { return coeffs_[slot(k1, k2)]; }
  cplx at(int k1, int k2) const { return coeffs_[slot(k1, k2)]; }

  /// Sets the coefficient at k and its Hermitian partner -k to conj(c).
  void set_mode(int k1, int k2, cplx c);

  /// Average over the torus (the zero mode).
  double mean() const { return coeffs_.empty() ? 0.0 : coeffs_[0].real(); }
  double max_abs_coeff() const;

  /// Replaces every pair by its Hermitian-consistent part,
  /// c_k <- (c_k + conj(c_{-k}))/2. Self-conjugate slots become real.
  void symmetrize();
  /// Largest |c_k - conj(c_{-k})| relative to the largest coefficient.
  double hermitian_defect() const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  GridDims dims_{};
  ComplexBuffer coeffs_;
};

/// Grid samples -> Fourier coefficients, hhat_k = (1/N) sum_j h_j exp(-2 pi i k.theta_j).
SpectralField transform(const GridValues& grid);
/// Fourier coefficients -> grid samples (real part of the inverse DFT).
GridValues synthesize(const SpectralField& f);

/// Returns the field theta -> f(theta + sigma).
SpectralField shift(const SpectralField& f, const Vec2& sigma);

/// (v . grad)^order f. Nyquist slots are zeroed for order >= 1, since their
/// derivative symbol has no real-valued counterpart.
SpectralField dir_derivative(const SpectralField& f, const Vec2& v, int order);

/// sqrt( sum_k |2 pi k.v|^(2r) |hhat_k|^2 ), the L2 norm of (v . grad)^r f.
double sobolev_dir_norm(const SpectralField& f, double r, const Vec2& v);
/// sqrt( sum_k (1 + |2 pi k|^2)^r |hhat_k|^2 ).
double sobolev_norm(const SpectralField& f, double r);

struct ThresholdResult {
  SpectralField field;
  std::size_t removed = 0;
};

/// Zeroes every mode with |hhat_k| < tau_rel * max |hhat|. The mean is kept.
ThresholdResult threshold(const SpectralField& f, double tau_rel);

/// Zeroes the Nyquist lines k1 = -n1/2 and k2 = -n2/2. Symbols that are not
/// even in k (shifts, derivatives, cohomology divisors) are ambiguous there,
/// and iterating through them amplifies near-resonant errors.
SpectralField drop_nyquist(SpectralField f);

/// Keeps the modes with |k_i| <= fraction * n_i / 2 and zeroes the rest.
/// fraction = 1 leaves f unchanged.
SpectralField truncate_band(SpectralField f, double fraction);

/// Number of modes with nonzero amplitude.
std::size_t active_modes(const SpectralField& f);

/// Copies coefficients into a grid of a different size: zero padding when
/// growing, truncation to the representable band when shrinking.
SpectralField resample(const SpectralField& f, GridDims new_dims);

/// Pointwise product of grid samples.
GridValues multiply(const GridValues& a, const GridValues& b);

}  // namespace qpfk
