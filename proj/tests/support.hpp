#pragma once

#include <cmath>
#include <random>

#include "qpfk/field.hpp"

namespace qpfk::testing {

// Real random field with modes only in |k_i| <= band (no Nyquist content),
// amplitudes decaying like exp(-decay |k|).
inline SpectralField random_field(GridDims d, int band, double amp, std::uint64_t seed, double decay = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField f(d);
  for (int k1 = 0; k1 <= band; ++k1) {
    for (int k2 = -band; k2 <= band; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const double scale = amp * std::exp(-decay * std::hypot(k1, k2));
      f.set_mode(k1, k2, cplx(g(rng), g(rng)) * scale);
    }
  }
  return f;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.coeffs()[i] - b.coeffs()[i]));
  return m;
}

}  // namespace qpfk::testing
