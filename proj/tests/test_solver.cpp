#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpfk/oracle.hpp"
#include "qpfk/solver.hpp"
#include "support.hpp"

using namespace qpfk;
using qpfk::testing::max_abs_diff;
using qpfk::testing::random_field;

TEST_SUITE("solver") {

TEST_CASE("second difference equals the shift form") {
  const Frequency fr = cubic_frequency();
  const SpectralField h = random_field({32, 32}, 8, 1.0, 4);
  const Vec2 s = fr.par();
  const SpectralField direct = shift(h, s) + shift(h, {-s[0], -s[1]}) - 2.0 * h;
  CHECK(max_abs_diff(second_difference(h, fr), direct) < 1e-14);
}

TEST_CASE("zero coupling: h = 0 is an exact solution") {
  const TrigPotential v = model1(0.0, 0.0);
  const SolveResult r = solve(v, cubic_frequency(), SpectralField(GridDims{32, 32}), 0.0);
  REQUIRE(r.converged());
  CHECK(r.state.iterations == 0);
  CHECK(r.state.residual_sup == 0.0);
  CHECK(r.state.lambda == 0.0);
  CHECK(r.state.h.max_abs_coeff() == 0.0);

  const StepResult st = quasi_newton_step(v, cubic_frequency(), SpectralField(GridDims{16, 16}), 0.0);
  CHECK(st.h.max_abs_coeff() == 0.0);
  CHECK(st.lambda == 0.0);
}

TEST_CASE("cohomology solutions satisfy their difference equations") {
  const Frequency fr = cubic_frequency();
  const Vec2 s = fr.par();
  const Vec2 minus_s{-s[0], -s[1]};
  SpectralField b = random_field({32, 32}, 8, 1.0, 21);
  b.coeffs_mut()[0] = 0.0;
  const SpectralField w0 = solve_minus_cohomology(b, s).w;
  CHECK(max_abs_diff(w0 - shift(w0, minus_s), b) < 1e-12);
  CHECK(w0.mean() == 0.0);
  const SpectralField w = solve_plus_cohomology(b, s).w;
  CHECK(max_abs_diff(shift(w, s) - w, b) < 1e-12);
}

TEST_CASE("cohomology rejects a nonzero average and resonant shifts") {
  SpectralField b = random_field({16, 16}, 4, 1.0, 2);
  b.coeffs_mut()[0] = 0.5;
  try {
    solve_minus_cohomology(b, cubic_frequency().par());
    FAIL("expected an error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::UnsolvableCohomology);
  }
  b.coeffs_mut()[0] = 0.0;
  try {
    solve_plus_cohomology(b, {0.25, 0.5});
    FAIL("expected an error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::Resonance);
  }
}

TEST_CASE("one step from h = 0 reproduces first-order perturbation theory") {
  const Frequency fr = cubic_frequency();
  const GridDims d{128, 128};
  const TrigPotential v = model1(1e-4, 1e-4);
  const StepResult st = quasi_newton_step(v, fr, SpectralField(d), 0.0);
  const SpectralField lin = oracle::lindstedt1(v, fr, d);
  for (const Index2 k : {Index2{1, 0}, Index2{-1, 0}, Index2{0, 1}, Index2{0, -1}}) {
    const cplx expect = lin.at(k[0], k[1]);
    CHECK(std::abs(st.h.at(k[0], k[1]) - expect) <= 1e-3 * std::abs(expect));
  }
  CHECK(std::abs(st.lambda) < 1e-15);
}

TEST_CASE("superlinear convergence and vanishing lambda at an interior point") {
  const Frequency fr = cubic_frequency();
  const TrigPotential v = model1(0.002, 0.001);
  const SolveResult r = solve(v, fr, SpectralField(GridDims{64, 64}), 0.0);
  REQUIRE(r.converged());
  CHECK(r.state.residual_sup < 1e-11);
  CHECK(std::abs(r.state.lambda) <= 1e-9);
  CHECK(r.state.iterations <= 6);
  const auto& e = r.residual_history;
  // Each contraction factor beats the previous one until roundoff takes over.
  REQUIRE(e.size() >= 4);
  for (std::size_t i = 2; i < e.size() && e[i] > 1e-13; ++i) CHECK(e[i] / e[i - 1] < e[i - 1] / e[i - 2]);
  CHECK(std::abs(r.state.h.mean()) <= 1e-8);
}

TEST_CASE("warm start from a converged state reproduces it") {
  const Frequency fr = cubic_frequency();
  const TrigPotential v = model1(0.002, 0.002);
  const SolveResult a = solve(v, fr, SpectralField(GridDims{64, 64}), 0.0);
  REQUIRE(a.converged());
  const SolveResult b = solve(v, fr, a.state.h, a.state.lambda);
  REQUIRE(b.converged());
  CHECK(b.state.iterations <= 2);
  CHECK(oracle::sup_distance(a.state.h, b.state.h) < 1e-10);
}

TEST_CASE("gauge orbit: s + h(. + s alpha) solves the same equation") {
  const Frequency fr = cubic_frequency();
  const TrigPotential v = model1(0.003, 0.001);
  const SolveResult r = solve(v, fr, SpectralField(GridDims{64, 64}), 0.0);
  REQUIRE(r.converged());
  for (double s : {0.1, -0.37, 1.0 / 3.0}) {
    const SpectralField g = gauge_transform(r.state.h, fr, s);
    CHECK(residual(v, fr, g, r.state.lambda).sup < 1e-11);
    CHECK(g.mean() == doctest::Approx(r.state.h.mean() + s).epsilon(1e-14));
  }
  // For an arbitrary field the residual is carried along the orbit:
  // T[h_s](theta) = T[h](theta + s alpha).
  const SpectralField h = random_field({32, 32}, 3, 3e-4, 8);
  const Residual base = residual(v, fr, h, 0.0);
  const Residual moved = residual(v, fr, gauge_transform(h, fr, 0.25), 0.0);
  const SpectralField shifted = shift(transform(base.e), {0.25 * fr.alpha()[0], 0.25 * fr.alpha()[1]});
  CHECK(oracle::sup_distance(transform(moved.e), shifted) < 1e-12);
}

TEST_CASE("failure modes are reported, not thrown") {
  const GridDims d{16, 16};
  SUBCASE("resonant frequency") {
    const SolveResult r = solve(model1(0.01, 0.0), Frequency(1.0, {0.5, 0.25}), SpectralField(d), 0.0);
    REQUIRE_FALSE(r.converged());
    CHECK(*r.failure == FailureReason::Resonance);
  }
  SUBCASE("iteration cap") {
    SolverOptions opts;
    opts.max_iters = 1;
    opts.band_fraction = 1.0;
    const SolveResult r = solve(model1(0.001, 0.001), cubic_frequency(), SpectralField(d), 0.0, opts);
    REQUIRE_FALSE(r.converged());
    CHECK(*r.failure == FailureReason::MaxIters);
    CHECK(r.residual_history.size() == 2);
  }
  SUBCASE("far beyond breakdown") {
    const SolveResult r = solve(model1(0.5, 0.5), cubic_frequency(), SpectralField(GridDims{32, 32}), 0.0);
    REQUIRE_FALSE(r.converged());
    CHECK((*r.failure == FailureReason::ResidualIncrease || *r.failure == FailureReason::DegenerateL ||
           *r.failure == FailureReason::MaxIters));
    CHECK_FALSE(r.detail.empty());
  }
}

TEST_CASE("degenerate gauge generator is detected") {
  // h = A sin(2 pi theta1) with 1 + 2 pi alpha1 A = 0 makes l vanish on theta1 = 0.
  SpectralField h(GridDims{16, 16});
  h.set_mode(1, 0, cplx(0.0, 1.0 / (4.0 * std::numbers::pi * cubic_frequency().alpha()[0])));
  try {
    quasi_newton_step(model1(0.01, 0.01), cubic_frequency(), h, 0.0);
    FAIL("expected an error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::DegenerateL);
  }
  const SolveResult r = solve(model1(0.01, 0.01), cubic_frequency(), h, 0.0);
  CHECK(*r.failure == FailureReason::DegenerateL);
}

TEST_CASE("fix_mean keeps the iterate on the zero-mean gauge slice") {
  const Frequency fr = cubic_frequency();
  const TrigPotential v = model1(0.002, 0.001);
  SpectralField h = random_field({32, 32}, 3, 1e-4, 12);
  h.coeffs_mut()[0] = 0.01;
  const StepResult st = quasi_newton_step(v, fr, h, 0.0);
  CHECK(std::abs(st.h.mean()) < 1e-15);
  StepOptions keep;
  keep.fix_mean = false;
  CHECK(std::abs(quasi_newton_step(v, fr, h, 0.0, keep).h.mean()) > 1e-3);
}

TEST_CASE("failure reasons have stable names") {
  CHECK(to_string(FailureReason::MaxIters) == "max-iters");
  CHECK(to_string(FailureReason::ResidualIncrease) == "residual-increase");
  CHECK(to_string(FailureReason::DegenerateL) == "degenerate-l");
  CHECK(to_string(FailureReason::Resonance) == "resonance");
}

}  // TEST_SUITE
