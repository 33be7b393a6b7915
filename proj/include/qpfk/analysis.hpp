#pragma once

// Post-processing of continuation output: norm series toward the breakdown
// point, power-law fits ||h||_r ~ C d^p with d the distance to eps_crit, the
// line p(r) = -beta r + gamma, and the line along which the Fourier support
// of a near-critical hull function clusters.

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qpfk/continuation.hpp"

namespace qpfk {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeriesPoint {
  double distance = 0.0;  ///< |eps_crit - eps| in the (eps1, eps2) plane
  double norm = 0.0;
  double double_grid_ratio = 0.0;
  std::size_t record = 0;
};

/// One point per record, in decreasing distance. Norms missing from a record
/// are recomputed from its hull function; throws AnalysisError when that has
/// been released, or when the ray has fewer than 3 records.
std::vector<SeriesPoint> norm_series(const RayResult& ray, double order, NormDir dir);

struct FitWindow {
  std::size_t first = 0;
  std::size_t last = 0;  ///< inclusive, indices into the distance-sorted series
};

struct ExponentFit {
  double C = 0.0;
  double p = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  FitWindow window;
};

struct FitOptions {
  /// Keep points whose norm is at least this multiple of the plateau, the
  /// norm at the point nearest half the largest distance. 0 keeps everything.
  double plateau_factor = 2.0;
  /// The last point is dropped when its double-grid ratio exceeds this.
  double max_double_grid_ratio = 10.0;
};

/// Least squares on (log distance, log norm): p is the slope, C = exp(intercept).
/// Points are sorted by decreasing distance first, so the result does not
/// depend on input order. Throws AnalysisError with fewer than 3 usable points.
ExponentFit fit_power_law(std::vector<SeriesPoint> series, const FitOptions& opts = {});

struct ExponentLine {
  double beta = 0.0;
  double gamma = 0.0;
  double r_squared = 0.0;
};

/// Least squares of p against r over (r, p) pairs; beta = -slope, gamma = intercept.
/// Needs at least 3 pairs with at least two distinct orders.
ExponentLine fit_exponent_line(const std::vector<std::pair<double, double>>& pairs);

struct SupportLine {
  double slope = 0.0;      ///< dk2/dk1; infinite for a vertical line
  double intercept = 0.0;  ///< k2 at k1 = 0 (NaN for a vertical line)
  double captured_fraction = 0.0;
  Vec2 direction{1.0, 0.0};
  Vec2 centroid{0.0, 0.0};
  std::size_t n_modes = 0;
};

/// Total least squares line through {k : |hhat_k| >= tau_rel max |hhat|},
/// k != 0, one representative per Hermitian pair (k1 > 0, or k1 = 0 and
/// k2 > 0), weighted by |hhat_k|^2. captured_fraction is the weight within
/// 2 index units of the line. Throws AnalysisError with fewer than 2 modes.
SupportLine support_line(const SpectralField& h, double tau_rel);

}  // namespace qpfk
