#include "qpfk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qpfk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAverageTol = 1e-10;
constexpr double kDivisorTol = 1e-14;
constexpr double kRhoTol = 1e-10;

enum class Side { Minus, Plus };

CohomologySolution solve_cohomology(const SpectralField& rhs, const Vec2& sigma, Side side,
                                    std::optional<double> rhs_sup) {
  const double sup = rhs_sup ? *rhs_sup : synthesize(rhs).sup_norm();
  const double avg = std::abs(rhs.coeffs()[0]);
  if (avg > kAverageTol * sup) {
    std::ostringstream msg;
    msg << "unsolvable cohomology: average " << avg << " exceeds " << kAverageTol << " * sup " << sup;
    throw SolverError(SolverError::Kind::UnsolvableCohomology, msg.str());
  }

  const GridDims d = rhs.dims();
  CohomologySolution out{SpectralField(d), std::numeric_limits<double>::infinity()};
  auto w = out.w.coeffs_mut();
  const auto c = rhs.coeffs();
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const int k1 = wave_number(i1, d.n1);
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const int k2 = wave_number(i2, d.n2);
      if (k1 == 0 && k2 == 0) continue;
      if (k1 == -d.n1 / 2 || k2 == -d.n2 / 2) continue;
      const double phase = kTwoPi * dot(Index2{k1, k2}, sigma);
      // 1 - e^{-i phase}  or  e^{i phase} - 1
      const cplx divisor = side == Side::Minus ? cplx(1.0 - std::cos(phase), std::sin(phase))
                                               : cplx(std::cos(phase) - 1.0, std::sin(phase));
      const double mag = std::abs(divisor);
      if (mag < kDivisorTol) {
        std::ostringstream msg;
        msg << "resonant frequency: divisor " << mag << " at k = (" << k1 << ", " << k2 << ")";
        throw SolverError(SolverError::Kind::Resonance, msg.str());
      }
      out.min_divisor = std::min(out.min_divisor, mag);
      const std::size_t s = static_cast<std::size_t>(i1) * d.n2 + i2;
      w[s] = c[s] / divisor;
    }
  }
  out.w.symmetrize();
  return out;
}

GridValues plus_scalar(GridValues g, double s) {
  for (double& x : g.values) x += s;
  return g;
}

}  // namespace

std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::MaxIters: return "max-iters";
    case FailureReason::ResidualIncrease: return "residual-increase";
    case FailureReason::DegenerateL: return "degenerate-l";
    case FailureReason::Resonance: return "resonance";
  }
  return "unknown";
}

SpectralField second_difference(const SpectralField& h, const Frequency& fr) {
  SpectralField out = h;
  const GridDims d = h.dims();
  const Vec2 v = fr.par();
  auto c = out.coeffs_mut();
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const int k1 = wave_number(i1, d.n1);
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const int k2 = wave_number(i2, d.n2);
      c[static_cast<std::size_t>(i1) * d.n2 + i2] *= 2.0 * (std::cos(kTwoPi * dot(Index2{k1, k2}, v)) - 1.0);
    }
  }
  out.symmetrize();
  return out;
}

Residual residual(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda) {
  const GridValues hg = synthesize(h);
  GridValues e = synthesize(second_difference(h, fr));
  const GridValues f = force(v, fr, hg);
  for (std::size_t i = 0; i < e.values.size(); ++i) e.values[i] += f.values[i] + lambda;
  Residual r;
  r.sup = e.sup_norm();
  r.l2 = e.l2_norm();
  r.e = std::move(e);
  return r;
}

CohomologySolution solve_minus_cohomology(const SpectralField& b, const Vec2& sigma, std::optional<double> b_sup) {
  return solve_cohomology(b, sigma, Side::Minus, b_sup);
}

CohomologySolution solve_plus_cohomology(const SpectralField& a, const Vec2& sigma, std::optional<double> a_sup) {
  return solve_cohomology(a, sigma, Side::Plus, a_sup);
}

StepResult quasi_newton_step(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda,
                             const StepOptions& opts) {
  const GridDims d = h.dims();
  const Vec2 sigma = fr.par();
  NewtonReport rep;

  // e = T[h] + lambda
  const Residual res = residual(v, fr, h, lambda);
  const GridValues& e = res.e;
  rep.residual_before = res.sup;

  // l = 1 + (alpha . grad) h, the generator of the gauge orbit
  SpectralField dh = dir_derivative(h, fr.alpha(), 1);
  const GridValues l = plus_scalar(synthesize(dh), 1.0);
  const GridValues l_fwd = plus_scalar(synthesize(shift(dh, sigma)), 1.0);
  rep.l_sup = l.sup_norm();

  // delta = -<l e>
  const double delta = -multiply(l, e).mean();

  // l (T'[h] Delta + delta) = -l (e + delta) factors as G - G(. - sigma)
  // with G = rho (w(. + sigma) - w), rho = l l(. + sigma), Delta = l w.
  GridValues bg(d);
  for (std::size_t i = 0; i < bg.values.size(); ++i) bg.values[i] = -l.values[i] * (e.values[i] + delta);
  const SpectralField b = transform(bg);
  rep.avg_b = std::abs(b.coeffs()[0]);
  const CohomologySolution w0 = solve_minus_cohomology(b, sigma, bg.sup_norm());
  const GridValues w0g = synthesize(w0.w);

  GridValues rho = multiply(l, l_fwd);
  double min_rho = std::numeric_limits<double>::infinity();
  for (double r : rho.values) min_rho = std::min(min_rho, std::abs(r));
  rep.min_abs_rho = min_rho;
  if (!(min_rho >= kRhoTol)) {
    std::ostringstream msg;
    msg << "degenerate l: min |l l(. + w a)| = " << min_rho;
    throw SolverError(SolverError::Kind::DegenerateL, msg.str());
  }

  double avg_w_over_rho = 0.0;
  double avg_inv_rho = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    avg_w_over_rho += w0g.values[i] / rho.values[i];
    avg_inv_rho += 1.0 / rho.values[i];
  }
  const double wbar = -avg_w_over_rho / avg_inv_rho;

  GridValues ag(d);
  for (std::size_t i = 0; i < ag.values.size(); ++i) ag.values[i] = (w0g.values[i] + wbar) / rho.values[i];
  const SpectralField a = transform(ag);
  rep.avg_a = std::abs(a.coeffs()[0]);
  const CohomologySolution w = solve_plus_cohomology(a, sigma, ag.sup_norm());
  rep.cohomology_min_divisor = std::min(w0.min_divisor, w.min_divisor);

  GridValues wg = synthesize(w.w);
  if (opts.fix_mean) {
    // Delta + c l keeps the linearized equation up to the gauge defect and
    // moves the mean of h + Delta to zero.
    const double c = -(h.mean() + multiply(l, wg).mean());
    for (double& x : wg.values) x += c;
  }
  const GridValues delta_g = multiply(l, wg);
  rep.delta_sup = delta_g.sup_norm();
  rep.delta_lambda = delta;

  StepResult out{drop_nyquist(h + transform(delta_g)), lambda + delta, rep};
  if (!opts.skip_residual_after) out.report.residual_after = residual(v, fr, out.h, out.lambda).sup;
  return out;
}

void refresh_residual(TorusState& state, const TrigPotential& v) {
  const Residual r = residual(v, state.fr, state.h, state.lambda);
  state.residual_sup = r.sup;
  state.residual_l2 = r.l2;
}

SolveResult solve(const TrigPotential& v, const Frequency& fr, const SpectralField& h0, double lambda0,
                  const SolverOptions& opts) {
  SolveResult out;
  out.state.h = h0;
  out.state.lambda = lambda0;
  out.state.fr = fr;
  out.state.eps1 = v.eps1();
  out.state.eps2 = v.eps2();

  try {
    fr.require_nonresonant(h0.dims());
  } catch (const FieldError& err) {
    out.failure = FailureReason::Resonance;
    out.detail = err.what();
    return out;
  }

  Residual res = residual(v, fr, out.state.h, out.state.lambda);
  out.state.residual_sup = res.sup;
  out.state.residual_l2 = res.l2;
  out.residual_history.push_back(res.sup);
  if (res.sup < opts.tol) return out;

  int increases = 0;
  StepOptions step_opts;
  step_opts.fix_mean = opts.fix_mean;
  step_opts.skip_residual_after = true;

  for (int it = 1; it <= opts.max_iters; ++it) {
    StepResult step;
    try {
      step = quasi_newton_step(v, fr, out.state.h, out.state.lambda, step_opts);
    } catch (const SolverError& err) {
      out.failure = err.kind() == SolverError::Kind::DegenerateL ? FailureReason::DegenerateL
                    : err.kind() == SolverError::Kind::Resonance ? FailureReason::Resonance
                                                                 : FailureReason::ResidualIncrease;
      out.detail = err.what();
      return out;
    }
    const double prev = out.residual_history.back();

    out.state.h = truncate_band(threshold(step.h, opts.threshold_rel).field, opts.band_fraction);
    out.state.lambda = step.lambda;
    out.state.iterations = it;
    res = residual(v, fr, out.state.h, out.state.lambda);
    out.state.residual_sup = res.sup;
    out.state.residual_l2 = res.l2;
    step.report.residual_after = res.sup;
    out.steps.push_back(step.report);
    out.residual_history.push_back(res.sup);

    if (!std::isfinite(res.sup)) {
      out.failure = FailureReason::ResidualIncrease;
      out.detail = "residual is not finite";
      return out;
    }
    if (res.sup < opts.tol) return out;
    increases = res.sup > prev ? increases + 1 : 0;
    if (increases >= 2) {
      out.failure = FailureReason::ResidualIncrease;
      out.detail = "residual increased on two consecutive steps";
      return out;
    }
  }
  out.failure = FailureReason::MaxIters;
  out.detail = "no convergence within " + std::to_string(opts.max_iters) + " iterations";
  return out;
}

SpectralField gauge_transform(const SpectralField& h, const Frequency& fr, double s) {
  const Vec2& a = fr.alpha();
  SpectralField out = shift(h, {s * a[0], s * a[1]});
  out.coeffs_mut()[0] += s;
  return out;
}

}  // namespace qpfk
