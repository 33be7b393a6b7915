#include "qpfk/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "qpfk/analysis.hpp"
#include "qpfk/oracle.hpp"
#include "qpfk/snapshot.hpp"

namespace qpfk {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string order_label(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

std::string norm_column(NormDir dir, double r) { return "norm_" + to_string(dir) + "_" + order_label(r); }

constexpr NormDir kDirs[] = {NormDir::Iso, NormDir::Par, NormDir::Perp};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

}  // namespace

// ---------------------------------------------------------------- config

SolverOptions RunConfig::solver_options() const {
  SolverOptions s;
  s.tol = newton_tol;
  s.max_iters = newton_max_iters;
  s.threshold_rel = threshold_rel;
  s.band_fraction = band_fraction;
  return s;
}

RayOptions RunConfig::ray_options() const {
  RayOptions r;
  r.d_eps_init = d_eps_init;
  r.d_eps_min = d_eps_min;
  r.step_growth = step_growth;
  r.max_halvings = max_halvings;
  r.max_double_grid_ratio = max_double_grid_ratio;
  r.norm_orders = norm_orders;
  r.solver = solver_options();
  return r;
}

void validate(const RunConfig& cfg) {
  try {
    parse_model(cfg.model);
  } catch (const FieldError& err) {
    throw ConfigError(err.what());
  }
  if (!is_power_of_two(cfg.grid.n1) || !is_power_of_two(cfg.grid.n2) || cfg.grid.n1 < 2 || cfg.grid.n2 < 2) {
    throw ConfigError("grid extents must be powers of two (at least 2)");
  }
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(cfg.d_eps_init, "d_eps_init");
  positive(cfg.d_eps_min, "d_eps_min");
  positive(cfg.newton_tol, "newton_tol");
  positive(cfg.threshold_rel, "threshold_rel");
  positive(cfg.max_double_grid_ratio, "max_double_grid_ratio");
  if (!(cfg.threshold_rel < 1.0)) throw ConfigError("threshold_rel must be below 1");
  if (!(cfg.step_growth >= 1.0)) throw ConfigError("step_growth must be at least 1");
  if (!(cfg.band_fraction > 0.0 && cfg.band_fraction <= 1.0)) throw ConfigError("band_fraction must lie in (0, 1]");
  if (cfg.newton_max_iters < 1) throw ConfigError("newton_max_iters must be at least 1");
  if (cfg.max_halvings < 0) throw ConfigError("max_halvings must be non-negative");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (cfg.norm_orders.empty()) throw ConfigError("norm_orders must not be empty");
  for (double r : cfg.norm_orders) {
    if (!(r >= 0.0)) throw ConfigError("norm orders must be non-negative");
  }
  for (double a : cfg.ray_angles) {
    if (!std::isfinite(a) || std::abs(std::cos(a)) < 1e-12) throw ConfigError("ray angle " + g17(a) + " is vertical");
  }
  if (!(cfg.omega != 0.0) || !std::isfinite(cfg.omega)) throw ConfigError("omega must be finite and nonzero");
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "model") c.model = val.get<std::string>();
      else if (key == "omega") c.omega = val.get<double>();
      else if (key == "alpha") c.alpha = {val.at(0).get<double>(), val.at(1).get<double>()};
      else if (key == "grid") {
        if (val.is_number_integer()) c.grid = {val.get<int>(), val.get<int>()};
        else c.grid = {val.at(0).get<int>(), val.at(1).get<int>()};
      } else if (key == "ray_angles") c.ray_angles = val.get<std::vector<double>>();
      else if (key == "d_eps_init") c.d_eps_init = val.get<double>();
      else if (key == "d_eps_min") c.d_eps_min = val.get<double>();
      else if (key == "step_growth") c.step_growth = val.get<double>();
      else if (key == "max_halvings") c.max_halvings = val.get<int>();
      else if (key == "max_double_grid_ratio") c.max_double_grid_ratio = val.get<double>();
      else if (key == "newton_tol") c.newton_tol = val.get<double>();
      else if (key == "newton_max_iters") c.newton_max_iters = val.get<int>();
      else if (key == "threshold_rel") c.threshold_rel = val.get<double>();
      else if (key == "band_fraction") c.band_fraction = val.get<double>();
      else if (key == "norm_orders") c.norm_orders = val.get<std::vector<double>>();
      else if (key == "output_dir") c.output_dir = val.get<std::string>();
      else if (key == "threads") c.threads = val.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError(std::string("bad config value: ") + err.what());
  }
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  return {
      {"model", c.model},
      {"omega", c.omega},
      {"alpha", {c.alpha[0], c.alpha[1]}},
      {"grid", {c.grid.n1, c.grid.n2}},
      {"ray_angles", c.ray_angles},
      {"d_eps_init", c.d_eps_init},
      {"d_eps_min", c.d_eps_min},
      {"step_growth", c.step_growth},
      {"max_halvings", c.max_halvings},
      {"max_double_grid_ratio", c.max_double_grid_ratio},
      {"newton_tol", c.newton_tol},
      {"newton_max_iters", c.newton_max_iters},
      {"threshold_rel", c.threshold_rel},
      {"band_fraction", c.band_fraction},
      {"norm_orders", c.norm_orders},
      {"output_dir", c.output_dir},
      {"threads", c.threads},
  };
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError("config " + path + ": " + err.what());
  }
  return config_from_json(j);
}

GridDims parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    std::size_t used = 0;
    if (x == std::string::npos) {
      const int n = std::stoi(text, &used);
      if (used != text.size()) throw ConfigError("");
      return {n, n};
    }
    const std::string a = text.substr(0, x);
    const std::string b = text.substr(x + 1);
    std::size_t ua = 0;
    std::size_t ub = 0;
    const GridDims d{std::stoi(a, &ua), std::stoi(b, &ub)};
    if (ua != a.size() || ub != b.size()) throw ConfigError("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad grid '" + text + "' (expected N or N1xN2)");
  }
}

// ---------------------------------------------------------------- ray CSV

void write_ray_csv(std::ostream& out, const RayResult& ray, const std::vector<double>& orders) {
  out << "idx,eps1,eps2,iters,residual_sup,residual_l2,lambda,h_mean";
  for (double r : orders) {
    for (NormDir d : kDirs) out << ',' << norm_column(d, r);
  }
  out << ",double_grid_ratio,active_modes\n";
  for (std::size_t i = 0; i < ray.records.size(); ++i) {
    const RayRecord& rec = ray.records[i];
    const TorusState& st = rec.state;
    const double mean = st.h.size() > 0 ? st.h.mean() : 0.0;
    out << i << ',' << g17(rec.eps1) << ',' << g17(rec.eps2) << ',' << st.iterations << ',' << g17(st.residual_sup)
        << ',' << g17(st.residual_l2) << ',' << g17(st.lambda) << ',' << g17(mean);
    for (double r : orders) {
      for (NormDir d : kDirs) {
        const auto it = rec.norms.find({r, d});
        out << ',' << (it != rec.norms.end() ? g17(it->second) : std::string("nan"));
      }
    }
    out << ',' << g17(rec.double_grid_ratio) << ',' << rec.active_modes << '\n';
  }
}

std::vector<RayRecord> read_ray_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("ray CSV: empty input");
  const std::vector<std::string> cols = split(line, ',');
  std::map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < cols.size(); ++i) at[cols[i]] = i;
  for (const char* need : {"idx", "eps1", "eps2", "iters", "residual_sup", "residual_l2", "lambda", "double_grid_ratio",
                           "active_modes"}) {
    if (!at.count(need)) throw ConfigError(std::string("ray CSV: missing column ") + need);
  }
  struct NormCol {
    std::size_t col;
    NormKey key;
  };
  std::vector<NormCol> norm_cols;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].rfind("norm_", 0) != 0) continue;
    const std::vector<std::string> parts = split(cols[i], '_');
    if (parts.size() != 3) throw ConfigError("ray CSV: bad norm column " + cols[i]);
    try {
      norm_cols.push_back({i, {parse_double(parts[2]), parse_norm_dir(parts[1])}});
    } catch (const FieldError&) {
      throw ConfigError("ray CSV: bad norm column " + cols[i]);
    }
  }

  std::vector<RayRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != cols.size()) throw ConfigError("ray CSV: row with " + std::to_string(f.size()) + " fields");
    RayRecord rec;
    rec.eps1 = parse_double(f[at["eps1"]]);
    rec.eps2 = parse_double(f[at["eps2"]]);
    rec.s = std::abs(rec.eps1);
    rec.state.eps1 = rec.eps1;
    rec.state.eps2 = rec.eps2;
    rec.state.iterations = static_cast<int>(parse_double(f[at["iters"]]));
    rec.state.residual_sup = parse_double(f[at["residual_sup"]]);
    rec.state.residual_l2 = parse_double(f[at["residual_l2"]]);
    rec.state.lambda = parse_double(f[at["lambda"]]);
    rec.double_grid_ratio = parse_double(f[at["double_grid_ratio"]]);
    rec.active_modes = static_cast<std::size_t>(parse_double(f[at["active_modes"]]));
    for (const NormCol& nc : norm_cols) {
      const double v = parse_double(f[nc.col]);
      if (!std::isnan(v)) rec.norms[nc.key] = v;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------- commands

namespace {

struct Common {
  std::string config_path;
  RunConfig flags;
  std::string grid;
  std::vector<double> alpha;
  std::vector<CLI::Option*> set_model, set_omega, set_alpha, set_grid, set_angles, set_d_init, set_d_min, set_growth,
      set_tol, set_iters, set_tau, set_band, set_orders, set_outdir, set_threads;
};

void add_common(CLI::App* app, Common& c, bool ray_flags) {
  app->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  c.set_model.push_back(app->add_option("--model", c.flags.model, "model1 or model2"));
  c.set_omega.push_back(app->add_option("--omega", c.flags.omega, "rotation number"));
  c.set_alpha.push_back(app->add_option("--alpha", c.alpha, "frequency direction (two reals)")->expected(2));
  c.set_grid.push_back(app->add_option("--grid", c.grid, "grid, N or N1xN2"));
  c.set_tol.push_back(app->add_option("--newton-tol", c.flags.newton_tol, "sup residual tolerance"));
  c.set_iters.push_back(app->add_option("--newton-max-iters", c.flags.newton_max_iters, "iteration cap"));
  c.set_tau.push_back(app->add_option("--threshold-rel", c.flags.threshold_rel, "relative mode threshold"));
  c.set_band.push_back(app->add_option("--band-fraction", c.flags.band_fraction, "dealiasing band, 1 disables"));
  c.set_outdir.push_back(app->add_option("--output-dir", c.flags.output_dir, "directory for output files"));
  if (ray_flags) {
    c.set_d_init.push_back(app->add_option("--d-eps-init", c.flags.d_eps_init, "initial ray step"));
    c.set_d_min.push_back(app->add_option("--d-eps-min", c.flags.d_eps_min, "minimum ray step"));
    c.set_growth.push_back(app->add_option("--step-growth", c.flags.step_growth, "step growth after success"));
    c.set_orders.push_back(app->add_option("--norm-orders", c.flags.norm_orders, "Sobolev orders to record"));
    c.set_threads.push_back(app->add_option("--threads", c.flags.threads, "worker threads (domain)"));
  }
}

bool given(const std::vector<CLI::Option*>& opts) {
  return std::any_of(opts.begin(), opts.end(), [](const CLI::Option* o) { return o->count() > 0; });
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  const RunConfig& f = c.flags;
  if (given(c.set_model)) cfg.model = f.model;
  if (given(c.set_omega)) cfg.omega = f.omega;
  if (given(c.set_alpha)) cfg.alpha = {c.alpha.at(0), c.alpha.at(1)};
  if (given(c.set_grid)) cfg.grid = parse_grid(c.grid);
  if (given(c.set_tol)) cfg.newton_tol = f.newton_tol;
  if (given(c.set_iters)) cfg.newton_max_iters = f.newton_max_iters;
  if (given(c.set_tau)) cfg.threshold_rel = f.threshold_rel;
  if (given(c.set_band)) cfg.band_fraction = f.band_fraction;
  if (given(c.set_outdir)) cfg.output_dir = f.output_dir;
  if (given(c.set_d_init)) cfg.d_eps_init = f.d_eps_init;
  if (given(c.set_d_min)) cfg.d_eps_min = f.d_eps_min;
  if (given(c.set_growth)) cfg.step_growth = f.step_growth;
  if (given(c.set_orders)) cfg.norm_orders = f.norm_orders;
  if (given(c.set_threads)) cfg.threads = f.threads;
  return cfg;
}

Frequency frequency_of(const RunConfig& cfg) { return Frequency(cfg.omega, cfg.alpha); }

fs::path output_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir) / name;
}

std::string summary_line(const TorusState& st) {
  std::ostringstream s;
  s << "eps1=" << g17(st.eps1) << " eps2=" << g17(st.eps2) << " iters=" << st.iterations
    << " residual_sup=" << g17(st.residual_sup) << " lambda=" << g17(st.lambda);
  return s.str();
}

struct RayFiles {
  fs::path csv, json, snapshot;
};

RayFiles ray_files(const RunConfig& cfg, const std::string& name) {
  return {output_path(cfg, name + ".csv"), output_path(cfg, name + ".json"), output_path(cfg, name + ".qphs")};
}

// Writes CSV, sidecar JSON and the last accepted state of one ray.
void emit_ray(const RunConfig& cfg, const RayResult& ray, const RayFiles& files) {
  {
    std::ofstream csv(files.csv);
    if (!csv) throw ConfigError("cannot write " + files.csv.string());
    write_ray_csv(csv, ray, cfg.norm_orders);
  }
  if (!ray.records.empty() && ray.records.back().state.h.size() > 0) save_snapshot(ray.records.back().state, files.snapshot);
  nlohmann::json side = {
      {"model", ray.model},
      {"theta", ray.theta_ray},
      {"direction", {ray.direction[0], ray.direction[1]}},
      {"eps_crit", {ray.eps_crit[0], ray.eps_crit[1]}},
      {"uncertainty", ray.eps_crit_uncertainty},
      {"final_step", ray.final_step},
      {"termination_reason", ray.termination_reason},
      {"records", ray.records.size()},
      {"solver_calls", ray.solver_calls},
      {"warnings", ray.warnings},
      {"snapshot", files.snapshot.filename().string()},
      {"config", config_to_json(cfg)},
  };
  std::ofstream js(files.json);
  if (!js) throw ConfigError("cannot write " + files.json.string());
  js << side.dump(2) << '\n';
}

bool ray_ok(const RayResult& ray) {
  return ray.termination_reason == "boundary" || ray.termination_reason == "eps-max";
}

int cmd_solve(const RunConfig& cfg, double eps1, double eps2, const std::string& init, const std::string& out_name,
              std::ostream& out, std::ostream& err) {
  const Frequency fr = frequency_of(cfg);
  const TrigPotential v = model_family(parse_model(cfg.model))(eps1, eps2);
  SpectralField h0(cfg.grid);
  double lambda0 = 0.0;
  if (!init.empty()) {
    LoadedSnapshot snap = load_snapshot(init);
    h0 = snap.state.h.dims() == cfg.grid ? snap.state.h : resample(snap.state.h, cfg.grid);
    lambda0 = snap.state.lambda;
  }
  SolveResult res = solve(v, fr, h0, lambda0, cfg.solver_options());
  res.state.model = cfg.model;
  const fs::path path = output_path(cfg, out_name.empty() ? "solve.qphs" : out_name);
  save_snapshot(res.state, path);
  if (!res.converged()) {
    err << "solve failed (" << to_string(*res.failure) << "): " << res.detail << '\n';
    out << "failed " << summary_line(res.state) << " snapshot=" << path.string() << '\n';
    return kExitFailure;
  }
  out << "converged " << summary_line(res.state) << " snapshot=" << path.string() << '\n';
  return kExitOk;
}

int cmd_ray(const RunConfig& cfg, const std::string& name, std::ostream& out, std::ostream& err) {
  if (cfg.ray_angles.size() != 1) throw ConfigError("ray: exactly one angle is required (use domain for sweeps)");
  const ModelKind kind = parse_model(cfg.model);
  const RayResult ray =
      continue_ray(model_family(kind), cfg.model, frequency_of(cfg), cfg.grid, cfg.ray_angles[0], cfg.ray_options());
  emit_ray(cfg, ray, ray_files(cfg, name));
  for (const std::string& w : ray.warnings) err << "warning: " << w << '\n';
  out << "eps_crit eps1=" << g17(ray.eps_crit[0]) << " eps2=" << g17(ray.eps_crit[1])
      << " uncertainty=" << g17(ray.eps_crit_uncertainty) << " records=" << ray.records.size()
      << " status=" << ray.termination_reason << '\n';
  return ray_ok(ray) ? kExitOk : kExitFailure;
}

int cmd_domain(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.ray_angles.empty()) throw ConfigError("domain: no ray angles");
  const ModelFamily family = model_family(parse_model(cfg.model));
  const Frequency fr = frequency_of(cfg);
  const RayOptions opts = cfg.ray_options();
  const std::size_t n = cfg.ray_angles.size();
  std::vector<RayResult> results(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  std::mutex io;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = continue_ray(family, cfg.model, fr, cfg.grid, cfg.ray_angles[i], opts);
        emit_ray(cfg, results[i], ray_files(cfg, "ray_" + std::to_string(i)));
        const std::lock_guard lock(io);
        out << "ray " << i << " theta=" << g17(cfg.ray_angles[i]) << " eps1=" << g17(results[i].eps_crit[0])
            << " eps2=" << g17(results[i].eps_crit[1]) << " status=" << results[i].termination_reason << '\n';
      } catch (const std::exception& e) {
        errors[i] = e.what();
        const std::lock_guard lock(io);
        err << "ray " << i << " failed: " << e.what() << '\n';
      }
    }
  };
  const int nt = std::min<int>(cfg.threads, static_cast<int>(n));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  const fs::path path = output_path(cfg, "domain.csv");
  std::ofstream csv(path);
  if (!csv) throw ConfigError("cannot write " + path.string());
  csv << "theta,eps1_crit,eps2_crit,uncertainty,status\n";
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const RayResult& r = results[i];
    const std::string status = errors[i].empty() ? r.termination_reason : "error";
    ok = ok && errors[i].empty() && ray_ok(r);
    csv << g17(cfg.ray_angles[i]) << ',' << g17(r.eps_crit[0]) << ',' << g17(r.eps_crit[1]) << ','
        << g17(r.eps_crit_uncertainty) << ',' << status << '\n';
  }
  out << "domain " << path.string() << '\n';
  return ok ? kExitOk : kExitFailure;
}

int cmd_analyze(const std::string& csv_path, std::string sidecar, std::string snapshot, std::vector<double> fit_orders,
                double tau, std::string prefix, std::ostream& out, std::ostream& err) {
  if (sidecar.empty()) sidecar = fs::path(csv_path).replace_extension(".json").string();
  if (prefix.empty()) prefix = (fs::path(csv_path).parent_path() / fs::path(csv_path).stem()).string() + "_analysis";

  RayResult ray;
  {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open " + csv_path);
    ray.records = read_ray_csv(in);
  }
  nlohmann::json side;
  {
    std::ifstream in(sidecar);
    if (!in) throw ConfigError("cannot open sidecar " + sidecar);
    try {
      side = nlohmann::json::parse(in);
      ray.eps_crit = {side.at("eps_crit").at(0).get<double>(), side.at("eps_crit").at(1).get<double>()};
      ray.eps_crit_uncertainty = side.at("uncertainty").get<double>();
      ray.theta_ray = side.at("theta").get<double>();
      ray.model = side.value("model", "");
      if (snapshot.empty() && side.contains("snapshot")) {
        snapshot = (fs::path(sidecar).parent_path() / side.at("snapshot").get<std::string>()).string();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad sidecar: ") + e.what());
    }
  }

  std::ofstream series_csv(prefix + "_series.csv");
  std::ofstream fits_csv(prefix + "_fits.csv");
  if (!series_csv || !fits_csv) throw ConfigError("cannot write analysis output with prefix " + prefix);
  series_csv << "dir,order,record,distance,norm\n";
  fits_csv << "dir,order,p,C,r_squared,n_points,window_first,window_last\n";

  nlohmann::json summary = {{"ray", csv_path}, {"eps_crit", {ray.eps_crit[0], ray.eps_crit[1]}}};
  for (NormDir dir : kDirs) {
    std::vector<std::pair<double, double>> pairs;
    for (double r : fit_orders) {
      const std::vector<SeriesPoint> series = norm_series(ray, r, dir);
      for (const SeriesPoint& p : series) {
        series_csv << to_string(dir) << ',' << order_label(r) << ',' << p.record << ',' << g17(p.distance) << ','
                   << g17(p.norm) << '\n';
      }
      try {
        const ExponentFit fit = fit_power_law(series);
        fits_csv << to_string(dir) << ',' << order_label(r) << ',' << g17(fit.p) << ',' << g17(fit.C) << ','
                 << g17(fit.r_squared) << ',' << fit.n_points << ',' << fit.window.first << ',' << fit.window.last
                 << '\n';
        pairs.emplace_back(r, fit.p);
      } catch (const AnalysisError& e) {
        err << "warning: " << to_string(dir) << " r=" << order_label(r) << ": " << e.what() << '\n';
      }
    }
    if (pairs.size() >= 3) {
      const ExponentLine line = fit_exponent_line(pairs);
      summary["exponents"][to_string(dir)] = {{"beta", line.beta}, {"gamma", line.gamma}, {"r_squared", line.r_squared}};
      out << "exponents " << to_string(dir) << " beta=" << g17(line.beta) << " gamma=" << g17(line.gamma)
          << " r_squared=" << g17(line.r_squared) << '\n';
    }
  }

  if (!snapshot.empty() && fs::exists(snapshot)) {
    const LoadedSnapshot snap = load_snapshot(snapshot);
    try {
      const SupportLine sl = support_line(snap.state.h, tau);
      summary["support_line"] = {{"slope", sl.slope},
                                 {"intercept", std::isnan(sl.intercept) ? nlohmann::json(nullptr) : nlohmann::json(sl.intercept)},
                                 {"captured_fraction", sl.captured_fraction},
                                 {"modes", sl.n_modes},
                                 {"tau_rel", tau}};
      out << "support_line slope=" << g17(sl.slope) << " intercept=" << g17(sl.intercept)
          << " captured_fraction=" << g17(sl.captured_fraction) << " modes=" << sl.n_modes << '\n';
    } catch (const AnalysisError& e) {
      err << "warning: support line: " << e.what() << '\n';
    }
  }
  std::ofstream js(prefix + "_summary.json");
  js << summary.dump(2) << '\n';
  out << "analysis " << prefix << "_{series.csv,fits.csv,summary.json}\n";
  return kExitOk;
}

int cmd_check(const std::string& path, int m, std::ostream& out, std::ostream& err) {
  LoadedSnapshot snap;
  try {
    snap = load_snapshot(path);
  } catch (const SnapshotError& e) {
    err << "error: " << path << ": " << e.what() << '\n';
    return kExitFailure;
  }
  for (const std::string& w : snap.warnings) err << "warning: " << w << '\n';
  const TorusState& st = snap.state;
  TrigPotential v = model_family(parse_model(st.model))(st.eps1, st.eps2);
  bool ok = snap.warnings.empty();

  const double ratio = double_grid_check(st, v, 2);
  const bool ratio_ok = ratio <= 10.0;
  out << "double_grid_ratio " << g17(ratio) << (ratio_ok ? " ok" : " SPURIOUS") << '\n';

  const double cres = oracle::config_residual(st, v, m);
  const double bound = 10.0 * st.residual_sup + 1e-12;
  const bool cres_ok = cres <= bound;
  out << "config_residual " << g17(cres) << " bound " << g17(bound) << (cres_ok ? " ok" : " EXCEEDED") << '\n';
  ok = ok && ratio_ok && cres_ok;

  const GridDims d = st.h.dims();
  if (d.n1 <= 32 && d.n2 <= 32) {
    try {
      const oracle::DenseSolveResult dense = oracle::dense_solve(v, st.fr, st.h, st.lambda, 1e-12, 20);
      const double dist = oracle::sup_distance(oracle::gauge_align(dense.h, st.h, st.fr), st.h);
      const bool dense_ok = dense.converged && dist <= 1e-9;
      out << "dense_oracle sup_diff " << g17(dist) << (dense_ok ? " ok" : " MISMATCH") << '\n';
      ok = ok && dense_ok;
    } catch (const SolverError& e) {
      out << "dense_oracle error " << e.what() << '\n';
      ok = false;
    }
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-periodic Frenkel-Kontorova hull functions: solve, continue, analyze", "qpfk"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  Common c_solve, c_ray, c_domain;
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::string init, solve_out;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one parameter point; writes a snapshot");
  add_common(solve_cmd, c_solve, false);
  solve_cmd->add_option("--eps1", eps1, "first coupling");
  solve_cmd->add_option("--eps2", eps2, "second coupling");
  solve_cmd->add_option("--init", init, "warm-start snapshot")->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", solve_out, "snapshot file name inside the output directory");

  double angle = 0.0;
  std::string ray_name = "ray";
  CLI::App* ray_cmd = app.add_subcommand("ray", "continue along one ray to breakdown");
  add_common(ray_cmd, c_ray, true);
  CLI::Option* angle_opt = ray_cmd->add_option("--angle", angle, "ray angle in radians");
  ray_cmd->add_option("--name", ray_name, "output file stem");

  std::vector<double> angles;
  CLI::App* domain_cmd = app.add_subcommand("domain", "sweep ray angles; writes the boundary CSV");
  add_common(domain_cmd, c_domain, true);
  CLI::Option* angles_opt = domain_cmd->add_option("--angles", angles, "ray angles in radians");

  std::string a_csv, a_sidecar, a_snapshot, a_prefix;
  std::vector<double> a_orders{4, 5, 6, 7, 8};
  double a_tau = 1e-6;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "norm series, exponent fits and support line of a ray");
  analyze_cmd->add_option("--ray", a_csv, "ray CSV")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--sidecar", a_sidecar, "ray sidecar JSON (default: CSV path with .json)");
  analyze_cmd->add_option("--snapshot", a_snapshot, "state for the support line (default: from sidecar)");
  analyze_cmd->add_option("--orders", a_orders, "Sobolev orders to fit");
  analyze_cmd->add_option("--tau", a_tau, "relative amplitude cut for the support line");
  analyze_cmd->add_option("--prefix", a_prefix, "output path prefix");

  std::string c_path;
  int c_m = 1000;
  CLI::App* check_cmd = app.add_subcommand("check", "verify a snapshot independently");
  check_cmd->add_option("snapshot", c_path, "snapshot file")->required();
  check_cmd->add_option("--m", c_m, "orbit half-length for the configuration residual")->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*solve_cmd) {
      RunConfig cfg = resolve(c_solve);
      validate(cfg);
      return cmd_solve(cfg, eps1, eps2, init, solve_out, out, err);
    }
    if (*ray_cmd) {
      RunConfig cfg = resolve(c_ray);
      if (angle_opt->count() > 0) cfg.ray_angles = {angle};
      validate(cfg);
      return cmd_ray(cfg, ray_name, out, err);
    }
    if (*domain_cmd) {
      RunConfig cfg = resolve(c_domain);
      if (angles_opt->count() > 0) cfg.ray_angles = angles;
      validate(cfg);
      return cmd_domain(cfg, out, err);
    }
    if (*analyze_cmd) return cmd_analyze(a_csv, a_sidecar, a_snapshot, a_orders, a_tau, a_prefix, out, err);
    if (*check_cmd) return cmd_check(c_path, c_m, out, err);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace qpfk
