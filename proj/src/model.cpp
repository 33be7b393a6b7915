#include "qpfk/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qpfk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void add_cosine(std::vector<TrigTerm>& terms, Index2 k, double amplitude) {
  // amplitude * cos(2 pi k.phi) = amplitude/2 (e^{+} + e^{-})
  if (amplitude == 0.0) return;
  terms.push_back({k, cplx(amplitude / 2.0, 0.0)});
  terms.push_back({Index2{-k[0], -k[1]}, cplx(amplitude / 2.0, 0.0)});
}

// Sum over terms of (2 pi i alpha.k)^power c_k e^{2 pi i k.theta} e^{2 pi i (k.alpha) h}.
GridValues evaluate(const TrigPotential& v, const Frequency& fr, const GridValues& h, int power) {
  const GridDims d = h.dims;
  GridValues out(d);
  if (v.empty()) return out;
  const Vec2& alpha = fr.alpha();

  struct Prepared {
    Index2 k;
    double ka;
    cplx weight;
  };
  std::vector<Prepared> prep;
  prep.reserve(v.terms().size());
  for (const TrigTerm& t : v.terms()) {
    const double ka = dot(t.k, alpha);
    const cplx base(0.0, kTwoPi * ka);
    cplx w = t.c;
    for (int i = 0; i < power; ++i) w *= base;
    prep.push_back({t.k, ka, w});
  }

  for (int j1 = 0; j1 < d.n1; ++j1) {
    const double t1 = static_cast<double>(j1) / d.n1;
    for (int j2 = 0; j2 < d.n2; ++j2) {
      const double t2 = static_cast<double>(j2) / d.n2;
      const double hv = h.at(j1, j2);
      double acc = 0.0;
      for (const Prepared& p : prep) {
        const double phase = kTwoPi * (p.k[0] * t1 + p.k[1] * t2 + p.ka * hv);
        acc += p.weight.real() * std::cos(phase) - p.weight.imag() * std::sin(phase);
      }
      out.at(j1, j2) = acc;
    }
  }
  return out;
}

}  // namespace

TrigPotential::TrigPotential(std::vector<TrigTerm> terms, double eps1, double eps2)
    : terms_(std::move(terms)), eps1_(eps1), eps2_(eps2) {
  for (const TrigTerm& t : terms_) {
    if (t.k[0] == 0 && t.k[1] == 0) throw FieldError("potential: zero mode is not allowed");
    const bool paired = std::any_of(terms_.begin(), terms_.end(), [&](const TrigTerm& o) {
      return o.k[0] == -t.k[0] && o.k[1] == -t.k[1] && std::abs(o.c - std::conj(t.c)) <= 1e-15 * std::abs(t.c);
    });
    if (!paired) throw FieldError("potential: term without Hermitian partner");
  }
}

double TrigPotential::value(const Vec2& phi) const {
  double acc = 0.0;
  for (const TrigTerm& t : terms_) {
    const double phase = kTwoPi * dot(t.k, phi);
    acc += t.c.real() * std::cos(phase) - t.c.imag() * std::sin(phase);
  }
  return acc;
}

TrigPotential model1(double eps1, double eps2) {
  std::vector<TrigTerm> terms;
  add_cosine(terms, {1, 0}, -eps1 / (2.0 * kPi));
  add_cosine(terms, {0, 1}, -eps2 / (2.0 * kPi));
  return TrigPotential(std::move(terms), eps1, eps2);
}

TrigPotential model2(double eps1, double eps2) {
  std::vector<TrigTerm> terms;
  add_cosine(terms, {2, 2}, -eps1 / (4.0 * kPi));
  add_cosine(terms, {1, 0}, -eps2 / (2.0 * kPi));
  add_cosine(terms, {0, 1}, -eps2 / (2.0 * kPi));
  return TrigPotential(std::move(terms), eps1, eps2);
}

ModelKind parse_model(const std::string& name) {
  if (name == "model1") return ModelKind::Model1;
  if (name == "model2") return ModelKind::Model2;
  throw FieldError("unknown model '" + name + "' (expected model1 or model2)");
}

std::string model_name(ModelKind kind) { return kind == ModelKind::Model1 ? "model1" : "model2"; }

ModelFamily model_family(ModelKind kind) {
  if (kind == ModelKind::Model1) return [](double a, double b) { return model1(a, b); };
  return [](double a, double b) { return model2(a, b); };
}

GridValues force(const TrigPotential& v, const Frequency& fr, const GridValues& h) {
  return evaluate(v, fr, h, 1);
}

GridValues force(const TrigPotential& v, const Frequency& fr, const SpectralField& h) {
  return evaluate(v, fr, synthesize(h), 1);
}

GridValues curvature(const TrigPotential& v, const Frequency& fr, const GridValues& h) {
  return evaluate(v, fr, h, 2);
}

GridValues curvature(const TrigPotential& v, const Frequency& fr, const SpectralField& h) {
  return evaluate(v, fr, synthesize(h), 2);
}

}  // namespace qpfk
