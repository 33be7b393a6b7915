#pragma once

// Verification paths that do not share the quasi-Newton factorization:
// first-order perturbation theory, direct evaluation of the lattice
// equilibrium equations, and exact Newton on the full grid discretization.

#include <vector>

#include "qpfk/field.hpp"
#include "qpfk/frequency.hpp"
#include "qpfk/model.hpp"
#include "qpfk/solver.hpp"

namespace qpfk::oracle {

/// First-order solution of the hull equation,
/// hhat_k = -F_k / (2 (cos(2 pi omega k.alpha) - 1)), F_k = 2 pi i (alpha.k) Vhat_k.
/// The companion lambda is zero. Throws SolverError on a resonant term.
SpectralField lindstedt1(const TrigPotential& v, const Frequency& fr, GridDims dims);

/// Positions u_n = omega n + h(n omega alpha) for n in [-m, m].
struct ConfigSegment {
  int m = 0;
  Frequency fr;
  std::vector<double> u;    ///< index n + m
  std::vector<double> hull; ///< h(n omega alpha), same indexing

  double at(int n) const { return u[static_cast<std::size_t>(n + m)]; }
};

/// Evaluates h at the (off-grid) orbit points by direct Fourier summation
/// over the nonzero modes.
ConfigSegment config_segment(const TorusState& state, int m);

/// max over |n| <= m of |(alpha . grad V)(alpha u_n) + u_{n+1} + u_{n-1} - 2 u_n|.
double config_residual(const TorusState& state, const TrigPotential& v, int m);

struct DenseNewtonResult {
  SpectralField h;
  double lambda = 0.0;
  double residual_before = 0.0;
};

/// One exact Newton step on the grid discretization: solves
///   (Ldiff + diag(c)) Delta + delta = -e,   <l Delta> = 0
/// by dense LU, with Ldiff assembled from its convolution kernel and c the
/// curvature. Limited to grids of at most 32x32. Throws SolverError
/// ("degenerate linearization") when the bordered system is singular.
DenseNewtonResult dense_newton(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda);

struct DenseSolveResult {
  SpectralField h;
  double lambda = 0.0;
  std::vector<double> residual_history;
  bool converged = false;
};

/// Iterates dense_newton until the grid residual (evaluated by the oracle's
/// own kernel) drops below tol.
DenseSolveResult dense_solve(const TrigPotential& v, const Frequency& fr, const SpectralField& h0, double lambda0,
                             double tol, int max_iters);

/// Grid residual evaluated with the dense kernel; independent of residual().
GridValues dense_residual(const TrigPotential& v, const Frequency& fr, const SpectralField& h, double lambda);

/// Moves `h` along its gauge orbit s + h(. + s alpha) onto the member whose
/// mean equals that of `reference`. The mean parametrizes the orbit since
/// shifting does not change it.
SpectralField gauge_align(const SpectralField& h, const SpectralField& reference, const Frequency& fr);

/// sup over the grid of |a - b|.
double sup_distance(const SpectralField& a, const SpectralField& b);

}  // namespace qpfk::oracle
