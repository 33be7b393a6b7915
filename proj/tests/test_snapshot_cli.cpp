#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpfk/cli.hpp"
#include "qpfk/snapshot.hpp"
#include "support.hpp"

using namespace qpfk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(QPFK_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_coeffs(const SpectralField& a, const SpectralField& b) {
  return std::ranges::equal(a.coeffs(), b.coeffs());
}

TorusState converged_state() {
  const Frequency fr = cubic_frequency();
  const TrigPotential v = model2(1e-5, 2e-5);
  SolverOptions o;
  o.band_fraction = 1.0;
  SolveResult r = solve(v, fr, SpectralField(GridDims{32, 32}), 0.0, o);
  REQUIRE(r.converged());
  r.state.model = "model2";
  return r.state;
}

}  // namespace

TEST_SUITE("snapshot_cli") {

TEST_CASE("snapshot round trip is bit exact") {
  const TorusState st = converged_state();
  const std::vector<std::uint8_t> bytes = encode_snapshot(st);
  REQUIRE(bytes.size() > 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "QPHS");
  const std::uint32_t header_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (bytes[11] << 24);
  CHECK(bytes.size() == 12 + header_len + 16 * 1024);

  const LoadedSnapshot back = decode_snapshot(bytes);
  CHECK(back.warnings.empty());
  CHECK(back.state.h.dims() == st.h.dims());
  CHECK(same_coeffs(back.state.h, st.h));
  CHECK(back.state.lambda == st.lambda);
  CHECK(back.state.eps1 == st.eps1);
  CHECK(back.state.eps2 == st.eps2);
  CHECK(back.state.model == "model2");
  CHECK(back.state.fr.alpha() == st.fr.alpha());
  CHECK(back.header_residual_sup == st.residual_sup);
  CHECK(back.state.residual_sup == doctest::Approx(st.residual_sup).epsilon(1e-6));

  const fs::path dir = scratch("snap");
  save_snapshot(st, dir / "a.qphs");
  CHECK(same_coeffs(load_snapshot(dir / "a.qphs").state.h, st.h));
  CHECK_THROWS_AS(load_snapshot(dir / "missing.qphs"), SnapshotError);
}

TEST_CASE("corrupt snapshots are rejected") {
  const std::vector<std::uint8_t> good = encode_snapshot(converged_state());
  std::vector<std::uint8_t> b = good;
  b[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_snapshot(b), doctest::Contains("bad magic"), SnapshotError);
  b = good;
  b[4] = 7;
  CHECK_THROWS_WITH_AS(decode_snapshot(b), doctest::Contains("bad version"), SnapshotError);
  b.assign(good.begin(), good.end() - 8);
  CHECK_THROWS_WITH_AS(decode_snapshot(b), doctest::Contains("truncated"), SnapshotError);
  b.assign(good.begin(), good.begin() + 6);
  CHECK_THROWS_AS(decode_snapshot(b), SnapshotError);
  b = good;
  b.push_back(0);
  CHECK_THROWS_AS(decode_snapshot(b), SnapshotError);
  b = good;
  b[13] = '!';
  CHECK_THROWS_WITH_AS(decode_snapshot(b), doctest::Contains("malformed header"), SnapshotError);
}

TEST_CASE("a drifted residual raises a warning") {
  TorusState st = converged_state();
  st.h.set_mode(2, 1, st.h.at(2, 1) + 1e-6);
  const LoadedSnapshot back = decode_snapshot(encode_snapshot(st));
  CHECK(back.warnings.size() == 1);
  CHECK(back.state.residual_sup > 1e-8);
}

TEST_CASE("configuration JSON") {
  const RunConfig def;
  CHECK_NOTHROW(validate(def));
  const RunConfig round = config_from_json(config_to_json(def));
  CHECK(config_to_json(round) == config_to_json(def));

  const RunConfig c = config_from_json(nlohmann::json{{"model", "model2"}, {"grid", {64, 32}}, {"ray_angles", {0.1, 0.2}}});
  CHECK(c.model == "model2");
  CHECK(c.grid == GridDims{64, 32});
  CHECK(c.ray_angles.size() == 2);
  CHECK(c.d_eps_min == def.d_eps_min);

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"grdi", 64}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"grid", "big"}}), ConfigError);
  RunConfig bad;
  bad.grid = {96, 96};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = def;
  bad.newton_tol = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = def;
  bad.ray_angles = {std::numbers::pi / 2};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = def;
  bad.model = "model9";
  CHECK_THROWS_AS(validate(bad), ConfigError);

  CHECK(parse_grid("128") == GridDims{128, 128});
  CHECK(parse_grid("64x32") == GridDims{64, 32});
  CHECK_THROWS_AS(parse_grid("64y32"), ConfigError);
}

TEST_CASE("ray CSV round trip") {
  RayResult ray;
  RayRecord rec;
  rec.eps1 = 0.1 / 3;
  rec.eps2 = -1e-17;
  rec.state.iterations = 4;
  rec.state.residual_sup = 3e-12;
  rec.state.lambda = -2.5e-15;
  rec.double_grid_ratio = 1.25;
  rec.active_modes = 77;
  rec.norms[{1.0, NormDir::Iso}] = 1.0 / 7;
  rec.norms[{1.0, NormDir::Par}] = 2.0 / 7;
  rec.norms[{1.0, NormDir::Perp}] = 3.0 / 7;
  ray.records = {rec, rec};
  std::stringstream s;
  write_ray_csv(s, ray, {1.0});
  const std::vector<RayRecord> back = read_ray_csv(s);
  REQUIRE(back.size() == 2);
  CHECK(back[1].eps1 == rec.eps1);
  CHECK(back[1].eps2 == rec.eps2);
  CHECK(back[1].state.iterations == 4);
  CHECK(back[1].state.lambda == rec.state.lambda);
  CHECK(back[1].norms == rec.norms);
  CHECK(back[1].active_modes == 77);
  CHECK(back[1].double_grid_ratio == 1.25);
}

TEST_CASE("cli: solve, check and usage errors") {
  const fs::path dir = scratch("cli_solve");
  CliRun r = cli({"solve", "--grid", "16", "--output-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("converged", 0) == 0);
  CHECK(fs::exists(dir / "solve.qphs"));

  r = cli({"solve", "--grid", "16", "--eps1", "0.0005", "--eps2", "0.0005", "--band-fraction", "1", "--out", "b.qphs",
           "--output-dir", dir.string()});
  CHECK(r.code == 0);
  r = cli({"check", (dir / "b.qphs").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("config_residual") != std::string::npos);
  CHECK(r.out.find("dense_oracle") != std::string::npos);

  std::string bytes = slurp(dir / "b.qphs");
  bytes[0] = 'Z';
  std::ofstream(dir / "bad.qphs", std::ios::binary) << bytes;
  r = cli({"check", (dir / "bad.qphs").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad magic") != std::string::npos);

  CHECK(cli({"solve", "--bogus"}).code == 1);
  CHECK(cli({}).code == 1);
  CHECK(cli({"solve", "--grid", "96", "--output-dir", dir.string()}).code == 1);
  CHECK(cli({"solve", "--model", "model7", "--output-dir", dir.string()}).code == 1);
  CHECK(cli({"--help"}).code == 0);

  // Beyond breakdown: the state is still written, the exit code says failure.
  r = cli({"solve", "--grid", "16", "--eps1", "0.5", "--eps2", "0.5", "--out", "far.qphs", "--output-dir",
           dir.string()});
  CHECK(r.code == 2);
  CHECK(r.out.rfind("failed", 0) == 0);
}

TEST_CASE("cli: config file and flag precedence") {
  const fs::path dir = scratch("cli_config");
  nlohmann::json j = config_to_json(RunConfig{});
  j["grid"] = {16, 16};
  j["model"] = "model2";
  j["band_fraction"] = 1.0;
  j["output_dir"] = dir.string();
  std::ofstream(dir / "run.json") << j.dump();
  CliRun r = cli({"solve", "--config", (dir / "run.json").string(), "--eps1", "1e-5"});
  CHECK(r.code == 0);
  const LoadedSnapshot s = load_snapshot(dir / "solve.qphs");
  CHECK(s.state.model == "model2");
  CHECK(s.state.h.dims() == GridDims{16, 16});

  r = cli({"solve", "--config", (dir / "run.json").string(), "--grid", "32", "--eps1", "1e-5"});
  CHECK(r.code == 0);
  CHECK(load_snapshot(dir / "solve.qphs").state.h.dims() == GridDims{32, 32});

  std::ofstream(dir / "broken.json") << "{\"grid\": [16, 16], \"unknown_key\": 3}";
  CHECK(cli({"solve", "--config", (dir / "broken.json").string()}).code == 1);
}

TEST_CASE("cli: ray, analyze and domain") {
  const fs::path dir = scratch("cli_ray");
  const std::vector<std::string> common{"--grid", "32", "--d-eps-init", "0.001", "--d-eps-min", "0.0001",
                                        "--norm-orders", "1", "4", "5", "6", "--output-dir", dir.string()};
  std::vector<std::string> args{"ray", "--angle", "0.6283185307179586", "--name", "r"};
  args.insert(args.end(), common.begin(), common.end());
  CliRun r = cli(args);
  CHECK(r.code == 0);
  CHECK(r.out.find("status=boundary") != std::string::npos);
  REQUIRE(fs::exists(dir / "r.csv"));
  CHECK(fs::exists(dir / "r.json"));
  CHECK(fs::exists(dir / "r.qphs"));

  std::ifstream csv(dir / "r.csv");
  const std::vector<RayRecord> recs = read_ray_csv(csv);
  REQUIRE(recs.size() >= 4);
  for (const RayRecord& rec : recs) CHECK(rec.norms.size() == 12);

  r = cli({"analyze", "--ray", (dir / "r.csv").string(), "--orders", "4", "5", "6", "--tau", "1e-8"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "r_analysis_series.csv"));
  CHECK(fs::exists(dir / "r_analysis_fits.csv"));
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "r_analysis_summary.json"));
  CHECK(summary.contains("support_line"));

  // The series reproduces the norms of the stored final state.
  const LoadedSnapshot last = load_snapshot(dir / "r.qphs");
  const double expect = hull_norm(last.state.h, last.state.fr, 5.0, NormDir::Par);
  std::ifstream series(dir / "r_analysis_series.csv");
  std::string line;
  bool found = false;
  const std::string tag = "par,5," + std::to_string(recs.size() - 1) + ",";
  while (std::getline(series, line)) {
    if (line.rfind(tag, 0) != 0) continue;
    const double norm = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(std::abs(norm - expect) <= 1e-10 * expect);
    found = true;
  }
  CHECK(found);

  CHECK(cli({"analyze", "--ray", (dir / "nope.csv").string()}).code == 1);

  // Two workers give the same boundary as one.
  std::vector<std::string> dom{"domain", "--angles", "0.3", "-0.4", "--threads", "2"};
  dom.insert(dom.end(), common.begin(), common.end());
  r = cli(dom);
  CHECK(r.code == 0);
  const std::string first = slurp(dir / "domain.csv");
  dom[5] = "1";
  r = cli(dom);
  CHECK(r.code == 0);
  CHECK(slurp(dir / "domain.csv") == first);
  CHECK(first.rfind("theta,eps1_crit,eps2_crit,uncertainty,status\n", 0) == 0);
}

}  // TEST_SUITE
