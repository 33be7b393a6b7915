#include "qpfk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpfk {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw AnalysisError("least squares: all abscissae coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  // A flat exact fit counts as perfect.
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return f;
}

}  // namespace

std::vector<SeriesPoint> norm_series(const RayResult& ray, double order, NormDir dir) {
  if (ray.records.size() < 3) throw AnalysisError("norm_series: need at least 3 records");
  std::vector<SeriesPoint> out;
  out.reserve(ray.records.size());
  for (std::size_t i = 0; i < ray.records.size(); ++i) {
    const RayRecord& rec = ray.records[i];
    SeriesPoint pt;
    pt.distance = std::hypot(ray.eps_crit[0] - rec.eps1, ray.eps_crit[1] - rec.eps2);
    pt.double_grid_ratio = rec.double_grid_ratio;
    pt.record = i;
    const auto it = rec.norms.find({order, dir});
    if (it != rec.norms.end()) {
      pt.norm = it->second;
    } else if (rec.state.h.size() > 0) {
      pt.norm = hull_norm(rec.state.h, rec.state.fr, order, dir);
    } else {
      throw AnalysisError("norm_series: record " + std::to_string(i) + " has neither the norm nor its hull function");
    }
    out.push_back(pt);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SeriesPoint& a, const SeriesPoint& b) { return a.distance > b.distance; });
  return out;
}

ExponentFit fit_power_law(std::vector<SeriesPoint> series, const FitOptions& opts) {
  std::sort(series.begin(), series.end(), [](const SeriesPoint& a, const SeriesPoint& b) {
    return a.distance != b.distance ? a.distance > b.distance : a.norm < b.norm;
  });
  std::erase_if(series, [](const SeriesPoint& p) { return !(p.distance > 0.0 && p.norm > 0.0); });
  if (series.size() < 3) throw AnalysisError("fit_power_law: fewer than 3 usable points");

  std::vector<bool> keep(series.size(), true);
  if (opts.plateau_factor > 0.0) {
    const double half = 0.5 * series.front().distance;
    std::size_t ip = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
      if (std::abs(series[i].distance - half) < std::abs(series[ip].distance - half)) ip = i;
    }
    const double floor = opts.plateau_factor * series[ip].norm;
    for (std::size_t i = 0; i < series.size(); ++i) keep[i] = series[i].norm >= floor;
  }
  if (series.back().double_grid_ratio > opts.max_double_grid_ratio) keep.back() = false;

  ExponentFit fit;
  std::vector<double> x;
  std::vector<double> y;
  bool first = true;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!keep[i]) continue;
    if (first) fit.window.first = i;
    first = false;
    fit.window.last = i;
    x.push_back(std::log(series[i].distance));
    y.push_back(std::log(series[i].norm));
  }
  if (x.size() < 3) throw AnalysisError("fit_power_law: fewer than 3 points in the fit window");

  const LineFit line = least_squares(x, y);
  fit.p = line.slope;
  fit.C = std::exp(line.intercept);
  fit.r_squared = line.r_squared;
  fit.n_points = x.size();
  return fit;
}

ExponentLine fit_exponent_line(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw AnalysisError("fit_exponent_line: need at least 3 orders");
  std::vector<double> r;
  std::vector<double> p;
  for (const auto& [order, exponent] : pairs) {
    r.push_back(order);
    p.push_back(exponent);
  }
  const LineFit line = least_squares(r, p);
  return {-line.slope, line.intercept, line.r_squared};
}

SupportLine support_line(const SpectralField& h, double tau_rel) {
  if (!(tau_rel > 0.0 && tau_rel < 1.0)) throw AnalysisError("support_line: tau_rel must lie in (0, 1)");
  const GridDims d = h.dims();
  double amax = 0.0;
  for (int i1 = 0; i1 < d.n1; ++i1) {
    for (int i2 = 0; i2 < d.n2; ++i2) {
      if (i1 == 0 && i2 == 0) continue;
      amax = std::max(amax, std::abs(h.coeffs()[static_cast<std::size_t>(i1) * d.n2 + i2]));
    }
  }

  struct Pt {
    double k1, k2, w;
  };
  std::vector<Pt> pts;
  for (int i1 = 0; i1 < d.n1; ++i1) {
    const int k1 = wave_number(i1, d.n1);
    for (int i2 = 0; i2 < d.n2; ++i2) {
      const int k2 = wave_number(i2, d.n2);
      if (!(k1 > 0 || (k1 == 0 && k2 > 0))) continue;
      const double a = std::abs(h.coeffs()[static_cast<std::size_t>(i1) * d.n2 + i2]);
      if (a == 0.0 || a < tau_rel * amax) continue;
      pts.push_back({static_cast<double>(k1), static_cast<double>(k2), a * a});
    }
  }
  if (pts.size() < 2) throw AnalysisError("support_line: fewer than 2 active modes");

  double wsum = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  for (const Pt& p : pts) {
    wsum += p.w;
    c1 += p.w * p.k1;
    c2 += p.w * p.k2;
  }
  c1 /= wsum;
  c2 /= wsum;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const Pt& p : pts) {
    sxx += p.w * (p.k1 - c1) * (p.k1 - c1);
    sxy += p.w * (p.k1 - c1) * (p.k2 - c2);
    syy += p.w * (p.k2 - c2) * (p.k2 - c2);
  }
  // Principal axis of the weighted scatter.
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  SupportLine out;
  out.direction = {std::cos(phi), std::sin(phi)};
  out.centroid = {c1, c2};
  out.n_modes = pts.size();
  if (std::abs(out.direction[0]) < 1e-14) {
    out.slope = std::numeric_limits<double>::infinity();
    out.intercept = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.slope = out.direction[1] / out.direction[0];
    out.intercept = c2 - out.slope * c1;
  }
  double captured = 0.0;
  for (const Pt& p : pts) {
    const double dist = std::abs((p.k1 - c1) * out.direction[1] - (p.k2 - c2) * out.direction[0]);
    if (dist <= 2.0) captured += p.w;
  }
  out.captured_fraction = captured / wsum;
  return out;
}

}  // namespace qpfk
