#pragma once

#include <cstddef>

// Data-parallel inner loops used by convolution, matmul and filtering. Each kernel has a
// scalar reference implementation plus AVX2/FMA (x86-64) and NEON (aarch64) variants; the
// variant is chosen once at runtime from the CPU feature set.
namespace ringkit::simd {

enum class Isa { kScalar, kAvx2, kNeon };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Testing hook: switch the active variant. Unsupported requests fall back to scalar.
void force_isa(Isa isa);

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] = fma(alpha, x[i], y[i])
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] = fma(a[i], b[i], y[i])
  void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);
  // y[i] = fma(alpha, x[i * stride], y[i]); gathers a strided source into a dense target
  void (*axpy_strided)(double alpha, const double* x, std::size_t stride, double* y,
                       std::size_t n);
};

const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);

inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  kernels().axpy(alpha, x, y, n);
}
inline void mul_acc(const double* a, const double* b, double* y, std::size_t n) {
  kernels().mul_acc(a, b, y, n);
}
inline void axpy_strided(double alpha, const double* x, std::size_t stride, double* y,
                         std::size_t n) {
  kernels().axpy_strided(alpha, x, stride, y, n);
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mul_acc(const double* a, const double* b, double* y, std::size_t n);
void axpy_strided(double alpha, const double* x, std::size_t stride, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mul_acc(const double* a, const double* b, double* y, std::size_t n);
void axpy_strided(double alpha, const double* x, std::size_t stride, double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mul_acc(const double* a, const double* b, double* y, std::size_t n);
void axpy_strided(double alpha, const double* x, std::size_t stride, double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace ringkit::simd
