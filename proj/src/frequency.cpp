#include "qpfk/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qpfk {

Frequency::Frequency(double omega, const Vec2& alpha, GridDims working_grid)
    : omega_(omega), alpha_(alpha) {
  validate_dims(working_grid);
  require_nonresonant(working_grid);
}

double Frequency::min_resonance_distance(GridDims grid) const {
  const int kmax = std::max(grid.n1, grid.n2) / 2;
  const Vec2 v = par();
  double best = 1.0;
  for (int k1 = -kmax; k1 <= kmax; ++k1) {
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double x = dot(Index2{k1, k2}, v);
      best = std::min(best, std::abs(x - std::nearbyint(x)));
    }
  }
  return best;
}

void Frequency::require_nonresonant(GridDims grid) const {
  const double d = min_resonance_distance(grid);
  if (d < 1e-14) {
    std::ostringstream msg;
    msg << "resonant frequency: omega k.alpha is within " << d << " of an integer on the "
        << grid.n1 << "x" << grid.n2 << " band";
    throw FieldError(msg.str());
  }
}

Frequency cubic_frequency() { return Frequency(1.0, {1.246979603717467, 2.801937735804838}); }

}  // namespace qpfk
