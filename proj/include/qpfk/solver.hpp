#pragma once

// Hull-function equation
//
//   T[h](theta) + lambda = h(theta + w a) + h(theta - w a) - 2 h(theta)
//                          + (a . grad V)(theta + a h(theta)) + lambda = 0,
//
// with w a = omega * alpha, solved by the gauge-factorized quasi-Newton
// iteration: every operation is diagonal either on the grid or in Fourier
// space, so a step costs O(N log N) time and O(N) memory.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpfk/field.hpp"
#include "qpfk/frequency.hpp"
#include "qpfk/model.hpp"

namespace qpfk {

class SolverError : public std::runtime_error {
 public:
  enum class Kind { DegenerateL, Resonance, UnsolvableCohomology };
  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct TorusState {
  SpectralField h;
  double lambda = 0.0;
  Frequency fr;
  std::string model;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double residual_sup = 0.0;
  double residual_l2 = 0.0;
  int iterations = 0;
};

struct NewtonReport {
  double residual_before = 0.0;
  double residual_after = 0.0;
  double delta_sup = 0.0;
  double delta_lambda = 0.0;
  double avg_b = 0.0;
  double avg_a = 0.0;
  double cohomology_min_divisor = 0.0;
  double min_abs_rho = 0.0;
  double l_sup = 0.0;
};

struct Residual {
  GridValues e;
  double sup = 0.0;
  double l2 = 0.0;
};

/// Coefficients times 2(cos(2 pi omega k.alpha) - 1); the spectral form of
/// h(. + w a) + h(. - w a) - 2h.
SpectralField second_difference(const SpectralField& h, const Frequency& fr);

/// e = second_difference(h) + force(V, fr, h) + lambda on the grid.
Residual residual(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda);

struct CohomologySolution {
  SpectralField w;
  double min_divisor = 0.0;
};

/// Solves W(theta) - W(theta - sigma) = b with zero-average W:
/// What_k = bhat_k / (1 - exp(-2 pi i k.sigma)).
/// `b_sup` is the sup norm of b used for the zero-average check; when absent
/// it is computed by synthesis.
CohomologySolution solve_minus_cohomology(const SpectralField& b, const Vec2& sigma,
                                          std::optional<double> b_sup = std::nullopt);
/// Solves w(theta + sigma) - w(theta) = a with zero-average w:
/// what_k = ahat_k / (exp(2 pi i k.sigma) - 1).
CohomologySolution solve_plus_cohomology(const SpectralField& a, const Vec2& sigma,
                                         std::optional<double> a_sup = std::nullopt);

struct StepOptions {
  /// Adds a multiple of the gauge generator l to the correction so that the
  /// new iterate has zero mean.
  bool fix_mean = true;
  /// Skip evaluating the residual of the updated iterate.
  bool skip_residual_after = false;
};

struct StepResult {
  SpectralField h;
  double lambda = 0.0;
  NewtonReport report;
};

/// One quasi-Newton step. Throws SolverError on a degenerate gauge generator
/// (min |l(theta) l(theta + w a)| < 1e-10) or on cohomology failures.
StepResult quasi_newton_step(const TrigPotential& v, const Frequency& fr, const SpectralField& h,
                             double lambda, const StepOptions& opts = {});

struct SolverOptions {
  double tol = 1e-11;
  int max_iters = 20;
  double threshold_rel = 1e-13;
  double gauge_tol = 1e-8;
  bool fix_mean = true;
  /// Iterates are dealiased to |k_i| <= band_fraction * n_i / 2 after every
  /// step. Products aliased across the band edge break the factorization
  /// there, and near-resonant edge modes then stop contracting. 1 disables.
  double band_fraction = 2.0 / 3.0;
};

enum class FailureReason { MaxIters, ResidualIncrease, DegenerateL, Resonance };
std::string to_string(FailureReason r);

struct SolveResult {
  TorusState state;  ///< converged state, or the last iterate on failure
  std::optional<FailureReason> failure;
  std::string detail;
  std::vector<double> residual_history;  ///< sup norms, starting with the initial guess
  std::vector<NewtonReport> steps;

  bool converged() const { return !failure.has_value(); }
};

/// Iterates quasi_newton_step from (h0, lambda0), thresholding h after every
/// step, until the sup residual drops below opts.tol.
SolveResult solve(const TrigPotential& v, const Frequency& fr, const SpectralField& h0, double lambda0,
                  const SolverOptions& opts = {});

/// Recomputes residual norms of a state against its potential.
void refresh_residual(TorusState& state, const TrigPotential& v);

/// The gauge orbit of the hull equation: theta -> s + h(theta + s alpha).
/// If h solves the equation, so does the result.
SpectralField gauge_transform(const SpectralField& h, const Frequency& fr, double s);

}  // namespace qpfk
