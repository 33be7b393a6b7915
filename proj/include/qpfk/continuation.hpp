#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qpfk/field.hpp"
#include "qpfk/frequency.hpp"
#include "qpfk/model.hpp"
#include "qpfk/solver.hpp"

namespace qpfk {

enum class NormDir { Iso, Par, Perp };
std::string to_string(NormDir d);
NormDir parse_norm_dir(const std::string& s);

struct NormKey {
  double order = 0.0;
  NormDir dir = NormDir::Par;
  auto operator<=>(const NormKey&) const = default;
};

/// ||h||_{r,iso}, ||h||_{r,par} (along omega alpha) or ||h||_{r,perp}.
double hull_norm(const SpectralField& h, const Frequency& fr, double order, NormDir dir);

struct RayRecord {
  double eps1 = 0.0;
  double eps2 = 0.0;
  /// Ray parameter s with (eps1, eps2) = s * direction; s = |eps1|.
  double s = 0.0;
  /// The hull function is released for records outside the retention window
  /// (see RayOptions::retain_states); scalar fields stay valid.
  TorusState state;
  std::map<NormKey, double> norms;
  double double_grid_ratio = 0.0;
  std::size_t active_modes = 0;
};

struct RayOptions {
  double d_eps_init = 0.01;
  double d_eps_min = 1e-5;
  double step_growth = 1.2;
  int max_halvings = 12;
  /// Stop (reason "eps-max") once the ray parameter would exceed this.
  double eps_max = 10.0;
  double max_double_grid_ratio = 10.0;
  /// Scale the warm start by s_new/s_old while its sup norm is below this.
  double warm_scale_below = 0.01;
  std::vector<double> norm_orders = {1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10};
  /// Number of trailing records that keep their hull function.
  std::size_t retain_states = 16;
  SolverOptions solver;
};

struct RayResult {
  std::string model;
  double theta_ray = 0.0;
  Vec2 direction{1.0, 0.0};
  std::vector<RayRecord> records;
  Vec2 eps_crit{0.0, 0.0};
  double eps_crit_uncertainty = 0.0;
  /// Size of the last failed advance.
  double final_step = 0.0;
  std::string termination_reason;
  std::vector<std::string> warnings;
  int solver_calls = 0;
};

/// Unit step of the ray at angle theta, normalized to |eps1| = 1:
/// sign(cos theta) * (1, tan theta). Throws FieldError when cos theta ~ 0.
Vec2 ray_direction(double theta);

/// Sup residual of h zero-padded to factor x dims, divided by the residual on
/// the solver grid (floored at 1e-16).
double double_grid_check(const TorusState& state, const TrigPotential& v, int factor = 2);

struct CriticalEstimate {
  Vec2 eps_crit{0.0, 0.0};
  double s_crit = 0.0;
  double uncertainty = 0.0;
};

/// Last converged point plus half the final (failed) step along the ray;
/// the uncertainty is half the final step.
CriticalEstimate estimate_critical(const std::vector<RayRecord>& records, double final_step, const Vec2& direction);

using RecordCallback = std::function<void(const RayRecord&)>;

/// Walks the ray from (0, 0) with h = 0, warm-starting every point from the
/// previous torus and halving the advance on failure, until the advance
/// drops below d_eps_min (reason "boundary").
RayResult continue_ray(const ModelFamily& family, const std::string& model, const Frequency& fr, GridDims dims,
                       double theta, const RayOptions& opts, const RecordCallback& on_record = {});

}  // namespace qpfk
