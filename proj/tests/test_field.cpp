#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpfk/frequency.hpp"
#include "support.hpp"

using namespace qpfk;
using qpfk::testing::max_abs_diff;
using qpfk::testing::random_field;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_SUITE("field") {

TEST_CASE("grid dims must be positive and even") {
  CHECK_NOTHROW(validate_dims({16, 8}));
  CHECK_THROWS_AS(validate_dims({15, 16}), FieldError);
  CHECK_THROWS_AS(validate_dims({0, 16}), FieldError);
  CHECK_THROWS_AS(SpectralField(GridDims{16, 7}), FieldError);
  CHECK(is_power_of_two(256));
  CHECK_FALSE(is_power_of_two(96));
}

TEST_CASE("wave numbers and slots are inverse") {
  for (int n : {8, 16}) {
    for (int i = 0; i < n; ++i) CHECK(slot_of(wave_number(i, n), n) == i);
  }
  CHECK(wave_number(8, 16) == -8);
  CHECK(slot_of(-17, 16) == 15);
}

TEST_CASE("synthesis of a single mode is 2 Re(c e^{2 pi i k.theta})") {
  const GridDims d{16, 8};
  SpectralField f(d);
  const cplx c(0.3, -0.2);
  f.set_mode(2, -1, c);
  const GridValues g = synthesize(f);
  double worst = 0.0;
  for (int j1 = 0; j1 < d.n1; ++j1) {
    for (int j2 = 0; j2 < d.n2; ++j2) {
      const double phase = kTwoPi * (2.0 * j1 / d.n1 - 1.0 * j2 / d.n2);
      worst = std::max(worst, std::abs(g.at(j1, j2) - 2.0 * (c * std::polar(1.0, phase)).real()));
    }
  }
  CHECK(worst < 1e-15);
}

TEST_CASE("transform and synthesize round trip") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SpectralField f = random_field({32, 16}, 6, 1.0, seed);
    CHECK(max_abs_diff(transform(synthesize(f)), f) < 1e-15);
    CHECK(f.hermitian_defect() < 1e-15);
  }
}

TEST_CASE("Parseval: iso norm of order 0 equals the grid RMS") {
  const SpectralField f = random_field({32, 32}, 8, 0.5, 7);
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(synthesize(f).l2_norm()).epsilon(1e-13));
}

TEST_CASE("grid-aligned shift is an index roll") {
  const GridDims d{16, 16};
  const SpectralField f = random_field(d, 5, 1.0, 11);
  const GridValues g = synthesize(f);
  const GridValues s = synthesize(shift(f, {3.0 / 16, -5.0 / 16}));
  double worst = 0.0;
  for (int j1 = 0; j1 < d.n1; ++j1) {
    for (int j2 = 0; j2 < d.n2; ++j2) {
      worst = std::max(worst, std::abs(s.at(j1, j2) - g.at((j1 + 3) % 16, (j2 + 11) % 16)));
    }
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("shift by an irrational vector matches the closed form") {
  SpectralField f(GridDims{8, 8});
  f.set_mode(1, 2, cplx(0.5, 0.0));  // cos(2 pi (theta1 + 2 theta2))
  const Vec2 sigma{0.123456, std::numbers::sqrt2 / 10};
  const GridValues g = synthesize(shift(f, sigma));
  double worst = 0.0;
  for (int j1 = 0; j1 < 8; ++j1) {
    for (int j2 = 0; j2 < 8; ++j2) {
      const double x = kTwoPi * ((j1 / 8.0 + sigma[0]) + 2.0 * (j2 / 8.0 + sigma[1]));
      worst = std::max(worst, std::abs(g.at(j1, j2) - std::cos(x)));
    }
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("directional derivative of a cosine mode") {
  SpectralField f(GridDims{16, 16});
  f.set_mode(1, 0, cplx(0.5, 0.0));  // cos(2 pi theta1)
  const Vec2 v{1.3, -0.4};
  const GridValues d1 = synthesize(dir_derivative(f, v, 1));
  const GridValues d2 = synthesize(dir_derivative(f, v, 2));
  double w1 = 0.0;
  double w2 = 0.0;
  for (int j1 = 0; j1 < 16; ++j1) {
    const double x = kTwoPi * j1 / 16.0;
    for (int j2 = 0; j2 < 16; ++j2) {
      w1 = std::max(w1, std::abs(d1.at(j1, j2) + kTwoPi * v[0] * std::sin(x)));
      w2 = std::max(w2, std::abs(d2.at(j1, j2) + kTwoPi * kTwoPi * v[0] * v[0] * std::cos(x)));
    }
  }
  CHECK(w1 < 1e-13);
  CHECK(w2 < 1e-12);
  CHECK(max_abs_diff(dir_derivative(f, v, 0), f) == 0.0);
  CHECK_THROWS_AS(dir_derivative(f, v, -1), FieldError);
}

TEST_CASE("second derivative equals the first applied twice away from Nyquist") {
  const SpectralField f = random_field({32, 32}, 10, 1.0, 5);
  const Vec2 v{0.7, 0.2};
  CHECK(max_abs_diff(dir_derivative(f, v, 2), dir_derivative(dir_derivative(f, v, 1), v, 1)) < 1e-12);
}

TEST_CASE("parallel norm of A cos(2 pi theta1) is A (2 pi alpha1)^r / sqrt 2") {
  const Frequency fr = cubic_frequency();
  SpectralField f(GridDims{16, 16});
  const double a = 0.01;
  f.set_mode(1, 0, cplx(a / 2, 0.0));
  for (double r : {1.0, 2.5, 5.0}) {
    const double expect = a * std::pow(kTwoPi * fr.alpha()[0], r) / std::sqrt(2.0);
    CHECK(sobolev_dir_norm(f, r, fr.par()) == doctest::Approx(expect).epsilon(1e-13));
  }
  // The perpendicular direction (-a2, a1) sees only the k1 component through -a2.
  CHECK(sobolev_dir_norm(f, 1.0, fr.perp()) ==
        doctest::Approx(a * kTwoPi * fr.alpha()[1] / std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("threshold removes small modes and keeps the mean") {
  SpectralField f(GridDims{8, 8});
  f.coeffs_mut()[0] = 1e-20;
  f.set_mode(1, 0, 1.0);
  f.set_mode(0, 1, 1e-9);
  f.set_mode(2, 1, 1e-3);
  const ThresholdResult t = threshold(f, 1e-6);
  CHECK(t.removed == 2);
  CHECK(t.field.at(0, 1) == cplx{});
  CHECK(t.field.at(2, 1) == f.at(2, 1));
  CHECK(t.field.mean() == 1e-20);
  CHECK(active_modes(t.field) == 5);
  CHECK_THROWS_AS(threshold(f, 1.0), FieldError);
  CHECK_THROWS_AS(threshold(f, -0.1), FieldError);
}

TEST_CASE("resample pads and truncates") {
  const SpectralField f = random_field({16, 16}, 5, 1.0, 9);
  const SpectralField up = resample(f, {64, 32});
  CHECK(max_abs_diff(resample(up, {16, 16}), f) < 1e-16);
  const GridValues g = synthesize(f);
  const GridValues gu = synthesize(up);
  double worst = 0.0;
  for (int j1 = 0; j1 < 16; ++j1) {
    for (int j2 = 0; j2 < 16; ++j2) worst = std::max(worst, std::abs(gu.at(4 * j1, 2 * j2) - g.at(j1, j2)));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("Nyquist lines and band truncation") {
  const GridDims d{16, 16};
  SpectralField f(d);
  f.coeffs_mut()[f.slot(-8, 3)] = 1.0;
  f.coeffs_mut()[f.slot(2, -8)] = 1.0;
  f.set_mode(5, 5, 1.0);
  f.set_mode(6, 0, 1.0);
  const SpectralField n = drop_nyquist(f);
  CHECK(n.at(-8, 3) == cplx{});
  CHECK(n.at(2, -8) == cplx{});
  CHECK(n.at(5, 5) == cplx(1.0));
  const SpectralField b = truncate_band(f, 2.0 / 3.0);
  CHECK(b.at(5, 5) == cplx(1.0));
  CHECK(b.at(6, 0) == cplx{});
  CHECK(max_abs_diff(truncate_band(f, 1.0), f) == 0.0);
  CHECK_THROWS_AS(truncate_band(f, 0.0), FieldError);
}

TEST_CASE("multiply and field arithmetic") {
  const GridDims d{8, 8};
  const SpectralField a = random_field(d, 2, 1.0, 1);
  const SpectralField b = random_field(d, 2, 1.0, 2);
  const GridValues p = multiply(synthesize(a), synthesize(b));
  const GridValues ga = synthesize(a);
  const GridValues gb = synthesize(b);
  for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(p.values[i] == ga.values[i] * gb.values[i]);
  CHECK(max_abs_diff((a + b) - b, a) < 1e-15);
  CHECK(max_abs_diff(2.0 * a, a + a) == 0.0);
  CHECK_THROWS_AS(a + SpectralField(GridDims{16, 16}), FieldError);
}

}  // TEST_SUITE
