#include "qpfk/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qpfk {

std::string to_string(NormDir d) {
  switch (d) {
    case NormDir::Iso: return "iso";
    case NormDir::Par: return "par";
    case NormDir::Perp: return "perp";
  }
  return "unknown";
}

NormDir parse_norm_dir(const std::string& s) {
  if (s == "iso") return NormDir::Iso;
  if (s == "par") return NormDir::Par;
  if (s == "perp") return NormDir::Perp;
  throw FieldError("unknown norm direction '" + s + "'");
}

double hull_norm(const SpectralField& h, const Frequency& fr, double order, NormDir dir) {
  switch (dir) {
    case NormDir::Iso: return sobolev_norm(h, order);
    case NormDir::Par: return sobolev_dir_norm(h, order, fr.par());
    case NormDir::Perp: return sobolev_dir_norm(h, order, fr.perp());
  }
  return 0.0;
}

Vec2 ray_direction(double theta) {
  const double c = std::cos(theta);
  if (std::abs(c) < 1e-12) throw FieldError("ray angle must not be vertical");
  const double sign = c > 0.0 ? 1.0 : -1.0;
  return {sign, sign * std::tan(theta)};
}

double double_grid_check(const TorusState& state, const TrigPotential& v, int factor) {
  if (factor < 1) throw FieldError("double_grid_check: factor must be positive");
  const GridDims d = state.h.dims();
  const SpectralField fine = resample(state.h, {d.n1 * factor, d.n2 * factor});
  const double fine_sup = residual(v, state.fr, fine, state.lambda).sup;
  const double coarse_sup = residual(v, state.fr, state.h, state.lambda).sup;
  return fine_sup / std::max(coarse_sup, 1e-16);
}

CriticalEstimate estimate_critical(const std::vector<RayRecord>& records, double final_step, const Vec2& direction) {
  if (records.empty()) throw FieldError("estimate_critical: no records");
  CriticalEstimate est;
  est.s_crit = records.back().s + 0.5 * final_step;
  est.eps_crit = {est.s_crit * direction[0], est.s_crit * direction[1]};
  est.uncertainty = 0.5 * final_step;
  return est;
}

namespace {

RayRecord make_record(const TorusState& state, double s, double ratio, const RayOptions& opts) {
  RayRecord rec;
  rec.eps1 = state.eps1;
  rec.eps2 = state.eps2;
  rec.s = s;
  rec.state = state;
  rec.double_grid_ratio = ratio;
  rec.active_modes = active_modes(state.h);
  for (double r : opts.norm_orders) {
    for (NormDir dir : {NormDir::Iso, NormDir::Par, NormDir::Perp}) {
      rec.norms[{r, dir}] = hull_norm(state.h, state.fr, r, dir);
    }
  }
  return rec;
}

void check_norm_growth(RayResult& ray, const RayOptions& opts) {
  const std::size_t n = ray.records.size();
  if (n < 10) return;
  for (double r : opts.norm_orders) {
    if (r < 4.0) continue;
    for (std::size_t i = n - 9; i < n; ++i) {
      const double prev = ray.records[i - 1].norms.at({r, NormDir::Par});
      const double cur = ray.records[i].norms.at({r, NormDir::Par});
      if (cur < prev) {
        std::ostringstream msg;
        msg << "par norm of order " << r << " decreases between records " << i - 1 << " and " << i;
        ray.warnings.push_back(msg.str());
        break;
      }
    }
  }
}

}  // namespace

RayResult continue_ray(const ModelFamily& family, const std::string& model, const Frequency& fr, GridDims dims,
                       double theta, const RayOptions& opts, const RecordCallback& on_record) {
  if (!(opts.d_eps_min > 0.0)) throw FieldError("continue_ray: d_eps_min must be positive");
  validate_dims(dims);

  RayResult ray;
  ray.model = model;
  ray.theta_ray = theta;
  ray.direction = ray_direction(theta);
  const Vec2 dir = ray.direction;

  auto accept = [&](TorusState state, double s, double ratio) {
    state.model = model;
    ray.records.push_back(make_record(state, s, ratio, opts));
    if (ray.records.size() > opts.retain_states) {
      ray.records[ray.records.size() - 1 - opts.retain_states].state.h = SpectralField();
    }
    if (on_record) on_record(ray.records.back());
  };

  // Starting point (0, 0), h = 0.
  {
    const TrigPotential v0 = family(0.0, 0.0);
    SolveResult start = solve(v0, fr, SpectralField(dims), 0.0, opts.solver);
    ++ray.solver_calls;
    if (!start.converged()) {
      ray.termination_reason = to_string(*start.failure);
      ray.warnings.push_back("start point failed: " + start.detail);
      return ray;
    }
    accept(start.state, 0.0, double_grid_check(start.state, v0, 2));
  }

  double step = std::min(opts.d_eps_init, opts.eps_max);
  double last_failed = step;
  int halvings = 0;
  while (true) {
    if (step < opts.d_eps_min) {
      ray.termination_reason = "boundary";
      break;
    }
    const RayRecord& last = ray.records.back();
    const double s_new = last.s + step;
    if (s_new > opts.eps_max) {
      ray.termination_reason = "eps-max";
      last_failed = 0.0;
      break;
    }
    const TrigPotential v = family(s_new * dir[0], s_new * dir[1]);

    SpectralField guess = last.state.h;
    if (last.s > 0.0 && synthesize(guess).sup_norm() < opts.warm_scale_below) guess *= s_new / last.s;

    SolveResult res = solve(v, fr, guess, last.state.lambda, opts.solver);
    ++ray.solver_calls;
    bool ok = res.converged();
    double ratio = 0.0;
    if (ok) {
      ratio = double_grid_check(res.state, v, 2);
      ok = ratio <= opts.max_double_grid_ratio;
    } else if (res.failure == FailureReason::Resonance) {
      ray.termination_reason = "resonance";
      last_failed = step;
      break;
    }

    if (ok) {
      accept(std::move(res.state), s_new, ratio);
      halvings = 0;
      step = std::min(step * opts.step_growth, opts.d_eps_init);
    } else {
      last_failed = step;
      if (++halvings > opts.max_halvings) {
        ray.termination_reason = "boundary";
        break;
      }
      step *= 0.5;
    }
  }

  ray.final_step = last_failed;
  const CriticalEstimate est = estimate_critical(ray.records, ray.final_step, dir);
  ray.eps_crit = est.eps_crit;
  ray.eps_crit_uncertainty = est.uncertainty;
  check_norm_growth(ray, opts);
  return ray;
}

}  // namespace qpfk
