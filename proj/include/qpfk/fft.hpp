#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace qpfk {

using cplx = std::complex<double>;

namespace detail {
void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p) noexcept;
}  // namespace detail

/// Allocator handing out SIMD-aligned storage so FFTW plans can run on any
/// buffer without alignment fallbacks.
template <class T>
struct FftwAllocator {
  using value_type = T;

  FftwAllocator() noexcept = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    void* p = detail::fftw_aligned_alloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { detail::fftw_aligned_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using ComplexBuffer = std::vector<cplx, FftwAllocator<cplx>>;
using RealBuffer = std::vector<double, FftwAllocator<double>>;

/// Direction of the unnormalized 2-D DFT.
///   Forward:  X_k = sum_j x_j exp(-2 pi i k.j/N)
///   Backward: x_j = sum_k X_k exp(+2 pi i k.j/N)
enum class FftDirection { Forward, Backward };

/// In-place 2-D complex DFT of a row-major n1 x n2 array (n1 slow index).
/// Plans are cached per shape and direction; execution is thread safe.
void fft2_inplace(ComplexBuffer& data, int n1, int n2, FftDirection dir);

/// Forward DFT of real data; `half` receives the n1 x (n2/2 + 1) non-redundant
/// coefficients, row-major. The input is preserved.
void fft2_r2c(const RealBuffer& in, ComplexBuffer& half, int n1, int n2);

/// Backward DFT of a Hermitian spectrum given by its n1 x (n2/2 + 1) half.
/// `half` is overwritten.
void fft2_c2r(ComplexBuffer& half, RealBuffer& out, int n1, int n2);

}  // namespace qpfk
