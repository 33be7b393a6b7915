#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpfk/continuation.hpp"

namespace qpfk {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration; see docs/config.md for the JSON form.
struct RunConfig {
  std::string model = "model1";
  double omega = 1.0;
  Vec2 alpha = cubic_frequency().alpha();
  GridDims grid{128, 128};
  std::vector<double> ray_angles{0.62831853071795862};
  double d_eps_init = 0.01;
  double d_eps_min = 1e-5;
  double step_growth = 1.2;
  int max_halvings = 12;
  double max_double_grid_ratio = 10.0;
  double newton_tol = 1e-11;
  int newton_max_iters = 20;
  double threshold_rel = 1e-13;
  double band_fraction = 2.0 / 3.0;
  std::vector<double> norm_orders{1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10};
  std::string output_dir = "out";
  int threads = 1;

  SolverOptions solver_options() const;
  RayOptions ray_options() const;
};

/// Throws ConfigError on non-positive tolerances, non-power-of-two grids,
/// vertical ray angles or an unknown model.
void validate(const RunConfig& cfg);

/// Unknown keys are rejected; missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

/// "256" (square) or "256x128".
GridDims parse_grid(const std::string& text);

/// Ray CSV: idx, eps1, eps2, iters, residual_sup, residual_l2, lambda, h_mean,
/// norm_<dir>_<r> for every order and direction, double_grid_ratio,
/// active_modes. Floats carry 17 significant digits.
void write_ray_csv(std::ostream& out, const RayResult& ray, const std::vector<double>& orders);
/// Rebuilds records (scalars and norms, no hull functions) from a ray CSV.
std::vector<RayRecord> read_ray_csv(std::istream& in);

/// Exit codes: 0 success, 1 usage error, 2 solver or check failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace qpfk
