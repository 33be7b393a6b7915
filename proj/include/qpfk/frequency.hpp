#pragma once

#include "qpfk/field.hpp"

namespace qpfk {

/// Rotation data of the hull equation: scalar omega and substrate vector alpha.
/// The orbit of the internal phase advances by omega*alpha per lattice site.
class Frequency {
 public:
  Frequency() = default;
  Frequency(double omega, const Vec2& alpha) : omega_(omega), alpha_(alpha) {}
  /// Same, but throws FieldError when omega k.alpha is within 1e-14 of an
  /// integer for some 0 < |k|_inf <= max(n1, n2)/2.
  Frequency(double omega, const Vec2& alpha, GridDims working_grid);

  double omega() const { return omega_; }
  const Vec2& alpha() const { return alpha_; }
  /// omega * alpha, the per-site phase advance.
  Vec2 par() const { return {omega_ * alpha_[0], omega_ * alpha_[1]}; }
  /// omega * (-alpha_2, alpha_1).
  Vec2 perp() const { return {-omega_ * alpha_[1], omega_ * alpha_[0]}; }

  /// Smallest distance of omega k.alpha to the integers over the band of
  /// `grid`, excluding k = 0.
  double min_resonance_distance(GridDims grid) const;
  void require_nonresonant(GridDims grid) const;

 private:
  double omega_ = 1.0;
  Vec2 alpha_{0.0, 0.0};
};

/// omega = 1, alpha = (1.246979603717467, 2.801937735804838). The components
/// are roots of x^3 + x^2 - 2x - 1 and x^3 - 4x^2 + 3x + 1 respectively.
Frequency cubic_frequency();

}  // namespace qpfk
