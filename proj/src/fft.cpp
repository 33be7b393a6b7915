#include "qpfk/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace qpfk {

namespace detail {
void* fftw_aligned_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fftw_aligned_free(void* p) noexcept { fftw_free(p); }
}  // namespace detail

namespace {

// The FFTW planner is not reentrant; plan creation is serialized here while
// fftw_execute_dft on distinct arrays may run concurrently.
enum class PlanKind { Forward, Backward, RealForward, RealBackward };

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n1, int n2, PlanKind kind) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(n1, n2, kind);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    const std::size_t n = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
    auto* scratch = static_cast<fftw_complex*>(fftw_malloc(n * sizeof(fftw_complex)));
    auto* real = static_cast<double*>(fftw_malloc(n * sizeof(double)));
    if (scratch == nullptr || real == nullptr) {
      fftw_free(scratch);
      fftw_free(real);
      throw std::bad_alloc();
    }
    // ESTIMATE keeps the algorithm choice, and therefore the rounding, fixed
    // from run to run.
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::Forward:
        plan = fftw_plan_dft_2d(n1, n2, scratch, scratch, FFTW_FORWARD, FFTW_ESTIMATE);
        break;
      case PlanKind::Backward:
        plan = fftw_plan_dft_2d(n1, n2, scratch, scratch, FFTW_BACKWARD, FFTW_ESTIMATE);
        break;
      case PlanKind::RealForward:
        plan = fftw_plan_dft_r2c_2d(n1, n2, real, scratch, FFTW_ESTIMATE);
        break;
      case PlanKind::RealBackward:
        plan = fftw_plan_dft_c2r_2d(n1, n2, scratch, real, FFTW_ESTIMATE);
        break;
    }
    fftw_free(scratch);
    fftw_free(real);
    if (plan == nullptr) throw std::runtime_error("fft: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, PlanKind>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void fft2_inplace(ComplexBuffer& data, int n1, int n2, FftDirection dir) {
  if (data.size() != static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2)) {
    throw std::invalid_argument("fft: buffer size does not match shape");
  }
  fftw_plan plan = plan_cache().get(n1, n2, dir == FftDirection::Forward ? PlanKind::Forward : PlanKind::Backward);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

void fft2_r2c(const RealBuffer& in, ComplexBuffer& half, int n1, int n2) {
  const std::size_t n = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
  if (in.size() != n) throw std::invalid_argument("fft: buffer size does not match shape");
  half.resize(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2 / 2 + 1));
  fftw_plan plan = plan_cache().get(n1, n2, PlanKind::RealForward);
  // r2c leaves its input untouched.
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(half.data()));
}

void fft2_c2r(ComplexBuffer& half, RealBuffer& out, int n1, int n2) {
  if (half.size() != static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2 / 2 + 1)) {
    throw std::invalid_argument("fft: half-spectrum size does not match shape");
  }
  out.resize(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2));
  fftw_plan plan = plan_cache().get(n1, n2, PlanKind::RealBackward);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(half.data()), out.data());
}

}  // namespace qpfk
