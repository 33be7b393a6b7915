#pragma once

// Quasi-periodic substrate potentials V(phi) = sum_k c_k exp(2 pi i k.phi)
// restricted to finite trigonometric polynomials, so forces are exact.

#include <functional>
#include <string>
#include <vector>

#include "qpfk/field.hpp"
#include "qpfk/frequency.hpp"

namespace qpfk {

struct TrigTerm {
  Index2 k;
  cplx c;
};

class TrigPotential {
 public:
  TrigPotential() = default;
  /// Throws FieldError if a zero mode is present or a term lacks its
  /// conjugate partner (-k, conj(c)).
  TrigPotential(std::vector<TrigTerm> terms, double eps1, double eps2);

  const std::vector<TrigTerm>& terms() const { return terms_; }
  double eps1() const { return eps1_; }
  double eps2() const { return eps2_; }
  bool empty() const { return terms_.empty(); }

  double value(const Vec2& phi) const;

 private:
  std::vector<TrigTerm> terms_;
  double eps1_ = 0.0;
  double eps2_ = 0.0;
};

/// V = -eps1/(2 pi) cos(2 pi phi1) - eps2/(2 pi) cos(2 pi phi2).
TrigPotential model1(double eps1, double eps2);
/// V = -eps1/(4 pi) cos(4 pi (phi1 + phi2)) - eps2/(2 pi) (cos(2 pi phi1) + cos(2 pi phi2)).
TrigPotential model2(double eps1, double eps2);

enum class ModelKind { Model1, Model2 };

ModelKind parse_model(const std::string& name);
std::string model_name(ModelKind kind);

/// A one-parameter-pair family of potentials, e.g. model1.
using ModelFamily = std::function<TrigPotential(double eps1, double eps2)>;
ModelFamily model_family(ModelKind kind);

/// Grid samples of (alpha . grad) V at theta + alpha h(theta).
GridValues force(const TrigPotential& v, const Frequency& fr, const GridValues& h);
GridValues force(const TrigPotential& v, const Frequency& fr, const SpectralField& h);

/// Grid samples of (alpha . grad)^2 V at theta + alpha h(theta), the
/// derivative of force() with respect to h.
GridValues curvature(const TrigPotential& v, const Frequency& fr, const GridValues& h);
GridValues curvature(const TrigPotential& v, const Frequency& fr, const SpectralField& h);

}  // namespace qpfk
