#include "qpfk/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qpfk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_dims(GridDims a, GridDims b) {
  if (!(a == b)) throw FieldError("field: dimension mismatch");
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate_dims(GridDims dims) {
  if (dims.n1 <= 0 || dims.n2 <= 0 || dims.n1 % 2 != 0 || dims.n2 % 2 != 0) {
    throw FieldError("field: grid dimensions must be positive and even, got " +
                     std::to_string(dims.n1) + "x" + std::to_string(dims.n2));
  }
}

double GridValues::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double GridValues::l2_norm() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / static_cast<double>(values.size()));
}

double GridValues::mean() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

SpectralField::SpectralField(GridDims dims) : dims_(dims) {
  validate_dims(dims);
  coeffs_.assign(dims.size(), cplx{});
}

SpectralField::SpectralField(GridDims dims, ComplexBuffer coeffs)
    : dims_(dims), coeffs_(std::move(coeffs)) {
  validate_dims(dims);
  if (coeffs_.size() != dims.size()) throw FieldError("field: coefficient count does not match dims");
}

void SpectralField::set_mode(int k1, int k2, cplx c) {
  at(k1, k2) = c;
  const std::size_t a = slot(k1, k2);
  const std::size_t b = slot(-k1, -k2);
  if (a == b) {
    coeffs_[a] = cplx(c.real(), 0.0);
  } else {
    coeffs_[b] = std::conj(c);
  }
}

double SpectralField::max_abs_coeff() const {
  double m = 0.0;
  for (const cplx& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

void SpectralField::symmetrize() {
  const int n1 = dims_.n1;
  const int n2 = dims_.n2;
  for (int i1 = 0; i1 < n1; ++i1) {
    const int p1 = (n1 - i1) % n1;
    for (int i2 = 0; i2 < n2; ++i2) {
      const int p2 = (n2 - i2) % n2;
      const std::size_t a = static_cast<std::size_t>(i1) * n2 + i2;
      const std::size_t b = static_cast<std::size_t>(p1) * n2 + p2;
      if (b < a) continue;
      if (a == b) {
        coeffs_[a] = cplx(coeffs_[a].real(), 0.0);
      } else {
        const cplx avg = 0.5 * (coeffs_[a] + std::conj(coeffs_[b]));
        coeffs_[a] = avg;
        coeffs_[b] = std::conj(avg);
      }
    }
  }
}

double SpectralField::hermitian_defect() const {
  const double scale = max_abs_coeff();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  const int n1 = dims_.n1;
  const int n2 = dims_.n2;
  for (int i1 = 0; i1 < n1; ++i1) {
    const int p1 = (n1 - i1) % n1;
    for (int i2 = 0; i2 < n2; ++i2) {
      const int p2 = (n2 - i2) % n2;
      const cplx a = coeffs_[static_cast<std::size_t>(i1) * n2 + i2];
      const cplx b = coeffs_[static_cast<std::size_t>(p1) * n2 + p2];
      worst = std::max(worst, std::abs(a - std::conj(b)));
    }
  }
  return worst / scale;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_dims(dims_, o.dims_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_dims(dims_, o.dims_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (cplx& c : coeffs_) c *= s;
  return *this;
}

SpectralField transform(const GridValues& grid) {
  validate_dims(grid.dims);
  if (grid.values.size() != grid.dims.size()) throw FieldError("transform: value count does not match dims");
  const int n1 = grid.dims.n1;
  const int n2 = grid.dims.n2;
  const int h2 = n2 / 2 + 1;
  const RealBuffer in(grid.values.begin(), grid.values.end());
  ComplexBuffer half;
  fft2_r2c(in, half, n1, n2);
  const double scale = 1.0 / static_cast<double>(grid.values.size());
  ComplexBuffer buf(grid.values.size());
  for (int i1 = 0; i1 < n1; ++i1) {
    const int m1 = (n1 - i1) % n1;
    for (int i2 = 0; i2 < n2; ++i2) {
      const cplx c = i2 < h2 ? half[static_cast<std::size_t>(i1) * h2 + i2]
                             : std::conj(half[static_cast<std::size_t>(m1) * h2 + (n2 - i2)]);
      buf[static_cast<std::size_t>(i1) * n2 + i2] = c * scale;
    }
  }
  return SpectralField(grid.dims, std::move(buf));
}

GridValues synthesize(const SpectralField& f) {
  const GridDims dims = f.dims();
  const int n1 = dims.n1;
  const int n2 = dims.n2;
  const int h2 = n2 / 2 + 1;
  const auto c = f.coeffs();
  // Hermitian part of the spectrum, so the result is Re of the complex synthesis.
  ComplexBuffer half(static_cast<std::size_t>(n1) * h2);
  for (int i1 = 0; i1 < n1; ++i1) {
    const int m1 = (n1 - i1) % n1;
    for (int i2 = 0; i2 < h2; ++i2) {
      const int m2 = (n2 - i2) % n2;
      half[static_cast<std::size_t>(i1) * h2 + i2] =
          0.5 * (c[static_cast<std::size_t>(i1) * n2 + i2] + std::conj(c[static_cast<std::size_t>(m1) * n2 + m2]));
    }
  }
  RealBuffer out;
  fft2_c2r(half, out, n1, n2);
  GridValues g(dims);
  std::copy(out.begin(), out.end(), g.values.begin());
  return g;
}

namespace {

// Multiplies every coefficient by symbol(k) and restores Hermitian symmetry.
template <class Symbol>
SpectralField apply_symbol(const SpectralField& f, Symbol&& symbol) {
  SpectralField out = f;
  const GridDims d = f.dims();
  auto c = out.coeffs_mut();
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const int k1 = wave_number(i1, d.n1);
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const int k2 = wave_number(i2, d.n2);
      c[static_cast<std::size_t>(i1) * d.n2 + i2] *= symbol(Index2{k1, k2});
    }
  }
  out.symmetrize();
  return out;
}

}  // namespace

SpectralField shift(const SpectralField& f, const Vec2& sigma) {
  return apply_symbol(f, [&](const Index2& k) {
    const double phase = kTwoPi * dot(k, sigma);
    return cplx(std::cos(phase), std::sin(phase));
  });
}

SpectralField dir_derivative(const SpectralField& f, const Vec2& v, int order) {
  if (order < 0) throw FieldError("dir_derivative: negative order");
  if (order == 0) return f;
  const GridDims d = f.dims();
  return apply_symbol(f, [&](const Index2& k) {
    if (k[0] == -d.n1 / 2 || k[1] == -d.n2 / 2) return cplx{};
    const cplx base(0.0, kTwoPi * dot(k, v));
    cplx m = base;
    for (int i = 1; i < order; ++i) m *= base;
    return m;
  });
}

double sobolev_dir_norm(const SpectralField& f, double r, const Vec2& v) {
  const GridDims d = f.dims();
  const auto c = f.coeffs();
  double sum = 0.0;
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const int k1 = wave_number(i1, d.n1);
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const double a = std::norm(c[static_cast<std::size_t>(i1) * d.n2 + i2]);
      if (a == 0.0) continue;
      const int k2 = wave_number(i2, d.n2);
      const double s = std::abs(kTwoPi * dot(Index2{k1, k2}, v));
      if (r == 0.0) {
        sum += a;
      } else if (s != 0.0) {
        sum += std::pow(s, 2.0 * r) * a;
      }
    }
  }
  return std::sqrt(sum);
}

double sobolev_norm(const SpectralField& f, double r) {
  const GridDims d = f.dims();
  const auto c = f.coeffs();
  double sum = 0.0;
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const int k1 = wave_number(i1, d.n1);
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const double a = std::norm(c[static_cast<std::size_t>(i1) * d.n2 + i2]);
      if (a == 0.0) continue;
      const int k2 = wave_number(i2, d.n2);
      const double k_sq = kTwoPi * kTwoPi * (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2);
      sum += std::pow(1.0 + k_sq, r) * a;
    }
  }
  return std::sqrt(sum);
}

SpectralField drop_nyquist(SpectralField f) {
  const GridDims d = f.dims();
  auto c = f.coeffs_mut();
  const int h1 = d.n1 / 2;
  const int h2 = d.n2 / 2;
  for (int i2 = 0; i2 < d.n2; ++i2) c[static_cast<std::size_t>(h1) * d.n2 + i2] = 0.0;
  for (int i1 = 0; i1 < d.n1; ++i1) c[static_cast<std::size_t>(i1) * d.n2 + h2] = 0.0;
  return f;
}

SpectralField truncate_band(SpectralField f, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw FieldError("truncate_band: fraction must lie in (0, 1]");
  if (fraction == 1.0) return f;
  const GridDims d = f.dims();
  const double c1 = fraction * d.n1 / 2.0;
  const double c2 = fraction * d.n2 / 2.0;
  auto c = f.coeffs_mut();
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const bool out1 = std::abs(wave_number(i1, d.n1)) > c1;
    for (int i2 = 0; i2 < d.n2; ++i2) {
      if (out1 || std::abs(wave_number(i2, d.n2)) > c2) c[static_cast<std::size_t>(i1) * d.n2 + i2] = 0.0;
    }
  }
  return f;
}

ThresholdResult threshold(const SpectralField& f, double tau_rel) {
  if (!(tau_rel >= 0.0 && tau_rel < 1.0)) throw FieldError("threshold: tau_rel must lie in [0, 1)");
  ThresholdResult res{f, 0};
  if (tau_rel == 0.0) return res;
  const double cut = tau_rel * f.max_abs_coeff();
  auto c = res.field.coeffs_mut();
  // |c_k| = |c_{-k}| for a Hermitian field, so pairs are removed together.
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] != cplx{} && std::abs(c[i]) < cut) {
      c[i] = cplx{};
      ++res.removed;
    }
  }
  return res;
}

std::size_t active_modes(const SpectralField& f) {
  return static_cast<std::size_t>(
      std::count_if(f.coeffs().begin(), f.coeffs().end(), [](const cplx& c) { return c != cplx{}; }));
}

SpectralField resample(const SpectralField& f, GridDims new_dims) {
  validate_dims(new_dims);
  const GridDims old = f.dims();
  SpectralField out(new_dims);
  const int lo1 = -std::min(old.n1, new_dims.n1) / 2;
  const int lo2 = -std::min(old.n2, new_dims.n2) / 2;
  for (int k1 = lo1; k1 < -lo1; ++k1) {
    for (int k2 = lo2; k2 < -lo2; ++k2) out.at(k1, k2) = f.at(k1, k2);
  }
  out.symmetrize();
  return out;
}

GridValues multiply(const GridValues& a, const GridValues& b) {
  require_same_dims(a.dims, b.dims);
  GridValues out(a.dims);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

}  // namespace qpfk
