#include <atomic>
#include <cstdlib>
#include <string_view>

#include "ringkit/simd.hpp"

namespace ringkit::simd {
namespace {

const KernelTable kScalarTable{&scalar::dot, &scalar::axpy, &scalar::mul_acc,
                               &scalar::axpy_strided};
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::mul_acc, &avx2::axpy_strided};
#endif
#if defined(__aarch64__)
const KernelTable kNeonTable{&neon::dot, &neon::axpy, &neon::mul_acc, &neon::axpy_strided};
#endif

Isa detect() {
  // RINGKIT_ISA=scalar pins the reference kernels.
  if (const char* env = std::getenv("RINGKIT_ISA"); env != nullptr) {
    const std::string_view v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && isa_supported(Isa::kAvx2)) return Isa::kAvx2;
    if (v == "neon" && isa_supported(Isa::kNeon)) return Isa::kNeon;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (isa_supported(Isa::kAvx2)) return Isa::kAvx2;
#endif
#if defined(__aarch64__)
  return Isa::kNeon;
#endif
  return Isa::kScalar;
}

std::atomic<const KernelTable*> g_table{nullptr};
std::atomic<Isa> g_isa{Isa::kScalar};

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
    case Isa::kScalar: break;
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) return kScalarTable;
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::kAvx2: return kAvx2Table;
#endif
#if defined(__aarch64__)
    case Isa::kNeon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

void force_isa(Isa isa) {
  const Isa effective = isa_supported(isa) ? isa : Isa::kScalar;
  g_isa.store(effective);
  g_table.store(&kernels_for(effective));
}

Isa active_isa() {
  kernels();
  return g_isa.load();
}

const KernelTable& kernels() {
  const KernelTable* t = g_table.load(std::memory_order_acquire);
  if (t == nullptr) {
    force_isa(detect());
    t = g_table.load(std::memory_order_acquire);
  }
  return *t;
}

}  // namespace ringkit::simd
