#include "qpfk/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qpfk::oracle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxDenseExtent = 32;

// Convolution kernel of the second difference on the grid:
// K(m) = Re (1/N) sum_k 2 (cos(2 pi k.w a) - 1) exp(2 pi i k.m/n).
std::vector<double> second_difference_kernel(const Frequency& fr, GridDims d) {
  const Vec2 v = fr.par();
  std::vector<double> kernel(d.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(d.size());
  for (int m1 = 0; m1 < d.n1; ++m1) {
    for (int m2 = 0; m2 < d.n2; ++m2) {
      double acc = 0.0;
      for (int k1 = -d.n1 / 2; k1 < d.n1 / 2; ++k1) {
        for (int k2 = -d.n2 / 2; k2 < d.n2 / 2; ++k2) {
          const double symbol = 2.0 * (std::cos(kTwoPi * (k1 * v[0] + k2 * v[1])) - 1.0);
          acc += symbol * std::cos(kTwoPi * (static_cast<double>(k1) * m1 / d.n1 + static_cast<double>(k2) * m2 / d.n2));
        }
      }
      kernel[static_cast<std::size_t>(m1) * d.n2 + m2] = acc * inv_n;
    }
  }
  return kernel;
}

Eigen::MatrixXd second_difference_matrix(const Frequency& fr, GridDims d) {
  const std::vector<double> kernel = second_difference_kernel(fr, d);
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd mat(n, n);
  for (int i1 = 0; i1 < d.n1; ++i1) {
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const Eigen::Index row = static_cast<Eigen::Index>(i1) * d.n2 + i2;
      for (int j1 = 0; j1 < d.n1; ++j1) {
        for (int j2 = 0; j2 < d.n2; ++j2) {
          const int m1 = slot_of(i1 - j1, d.n1);
          const int m2 = slot_of(i2 - j2, d.n2);
          mat(row, static_cast<Eigen::Index>(j1) * d.n2 + j2) = kernel[static_cast<std::size_t>(m1) * d.n2 + m2];
        }
      }
    }
  }
  return mat;
}

void require_small(GridDims d) {
  if (d.n1 > kMaxDenseExtent || d.n2 > kMaxDenseExtent) {
    throw FieldError("dense oracle: grid larger than 32x32");
  }
}

GridValues residual_from_matrix(const Eigen::MatrixXd& ldiff, const TrigPotential& v, const Frequency& fr,
                                const GridValues& hg, double lambda) {
  const auto n = static_cast<Eigen::Index>(hg.values.size());
  const Eigen::Map<const Eigen::VectorXd> hv(hg.values.data(), n);
  const Eigen::VectorXd lh = ldiff * hv;
  const GridValues f = force(v, fr, hg);
  GridValues e(hg.dims);
  for (Eigen::Index i = 0; i < n; ++i) e.values[i] = lh(i) + f.values[i] + lambda;
  return e;
}

}  // namespace

SpectralField lindstedt1(const TrigPotential& v, const Frequency& fr, GridDims dims) {
  SpectralField h(dims);
  const Vec2 wa = fr.par();
  for (const TrigTerm& t : v.terms()) {
    const double divisor = 2.0 * (std::cos(kTwoPi * dot(t.k, wa)) - 1.0);
    if (std::abs(divisor) < 1e-14) {
      throw SolverError(SolverError::Kind::Resonance, "lindstedt1: resonant term in the potential");
    }
    const cplx forcing = cplx(0.0, kTwoPi * dot(t.k, fr.alpha())) * t.c;
    h.at(t.k[0], t.k[1]) += -forcing / divisor;
  }
  return h;
}

ConfigSegment config_segment(const TorusState& state, int m) {
  if (m < 1) throw FieldError("config_segment: m must be at least 1");
  const SpectralField& h = state.h;
  const GridDims d = h.dims();
  const Vec2 wa = state.fr.par();

  struct Mode {
    int k1, k2;
    cplx c;
  };
  std::vector<Mode> modes;
  int kmax1 = 0;
  int kmax2 = 0;
  for (int i1 = 0; i1 < d.n1; ++i1) {
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const cplx c = h.coeffs()[static_cast<std::size_t>(i1) * d.n2 + i2];
      if (c == cplx{}) continue;
      const int k1 = wave_number(i1, d.n1);
      const int k2 = wave_number(i2, d.n2);
      modes.push_back({k1, k2, c});
      kmax1 = std::max(kmax1, std::abs(k1));
      kmax2 = std::max(kmax2, std::abs(k2));
    }
  }

  ConfigSegment seg;
  seg.m = m;
  seg.fr = state.fr;
  seg.u.resize(2 * static_cast<std::size_t>(m) + 1);
  seg.hull.resize(seg.u.size());

  // exp(2 pi i k.theta) = E1[k1] E2[k2] with per-axis tables.
  std::vector<cplx> e1(2 * static_cast<std::size_t>(kmax1) + 1);
  std::vector<cplx> e2(2 * static_cast<std::size_t>(kmax2) + 1);
  for (int n = -m; n <= m; ++n) {
    const double x1 = std::fmod(n * wa[0], 1.0);
    const double x2 = std::fmod(n * wa[1], 1.0);
    for (int k = -kmax1; k <= kmax1; ++k) e1[k + kmax1] = std::polar(1.0, kTwoPi * k * x1);
    for (int k = -kmax2; k <= kmax2; ++k) e2[k + kmax2] = std::polar(1.0, kTwoPi * k * x2);
    double acc = 0.0;
    for (const Mode& md : modes) acc += (md.c * e1[md.k1 + kmax1] * e2[md.k2 + kmax2]).real();
    const auto idx = static_cast<std::size_t>(n + m);
    seg.hull[idx] = acc;
    seg.u[idx] = state.fr.omega() * n + acc;
  }
  return seg;
}

double config_residual(const TorusState& state, const TrigPotential& v, int m) {
  const ConfigSegment seg = config_segment(state, m + 1);
  const Vec2 wa = state.fr.par();
  const Vec2& alpha = state.fr.alpha();
  double worst = 0.0;
  for (int n = -m; n <= m; ++n) {
    const auto i = static_cast<std::size_t>(n + seg.m);
    // alpha u_n = n w a + alpha h_n, reduced modulo the period for accuracy.
    const Vec2 phi{std::fmod(n * wa[0], 1.0) + alpha[0] * seg.hull[i],
                   std::fmod(n * wa[1], 1.0) + alpha[1] * seg.hull[i]};
    double f = 0.0;
    for (const TrigTerm& t : v.terms()) {
      const cplx w = cplx(0.0, kTwoPi * dot(t.k, alpha)) * t.c;
      const double phase = kTwoPi * dot(t.k, phi);
      f += w.real() * std::cos(phase) - w.imag() * std::sin(phase);
    }
    // The omega n parts of u_{n+1} + u_{n-1} - 2 u_n cancel exactly.
    const double lap = seg.hull[i + 1] + seg.hull[i - 1] - 2.0 * seg.hull[i];
    worst = std::max(worst, std::abs(f + lap));
  }
  return worst;
}

GridValues dense_residual(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda) {
  require_small(h.dims());
  const Eigen::MatrixXd ldiff = second_difference_matrix(fr, h.dims());
  return residual_from_matrix(ldiff, v, fr, synthesize(h), lambda);
}

DenseNewtonResult dense_newton(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda) {
  const GridDims d = h.dims();
  require_small(d);
  const auto n = static_cast<Eigen::Index>(d.size());

  const Eigen::MatrixXd ldiff = second_difference_matrix(fr, d);
  const GridValues hg = synthesize(h);
  const GridValues e = residual_from_matrix(ldiff, v, fr, hg, lambda);
  const GridValues c = curvature(v, fr, hg);
  const GridValues dh = synthesize(dir_derivative(h, fr.alpha(), 1));

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  a.topLeftCorner(n, n) = ldiff;
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) += c.values[i];
    a(i, n) = 1.0;
    rhs(i) = -e.values[i];
    a(n, i) = (1.0 + dh.values[i]) / static_cast<double>(n);
  }
  rhs(n) = 0.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    throw SolverError(SolverError::Kind::DegenerateL, "degenerate linearization");
  }
  const Eigen::VectorXd x = lu.solve(rhs);

  GridValues delta(d);
  for (Eigen::Index i = 0; i < n; ++i) delta.values[i] = x(i);
  return {h + transform(delta), lambda + x(n), e.sup_norm()};
}

DenseSolveResult dense_solve(const TrigPotential& v, const Frequency& fr, const SpectralField& h0, double lambda0,
                             double tol, int max_iters) {
  DenseSolveResult out{h0, lambda0, {}, false};
  for (int it = 0;; ++it) {
    const double r = dense_residual(v, fr, out.h, out.lambda).sup_norm();
    out.residual_history.push_back(r);
    if (r < tol) {
      out.converged = true;
      return out;
    }
    if (it >= max_iters || !std::isfinite(r)) return out;
    DenseNewtonResult step = dense_newton(v, fr, out.h, out.lambda);
    out.h = std::move(step.h);
    out.lambda = step.lambda;
  }
}

SpectralField gauge_align(const SpectralField& h, const SpectralField& reference, const Frequency& fr) {
  return gauge_transform(h, fr, reference.mean() - h.mean());
}

double sup_distance(const SpectralField& a, const SpectralField& b) { return synthesize(a - b).sup_norm(); }

}  // namespace qpfk::oracle
