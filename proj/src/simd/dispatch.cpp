#include <atomic>
#include <cstdlib>
#include <cstring>

#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"

namespace dclkr::simd {

#ifndef DCLKR_HAVE_AVX2
void gram_block_avx2(const GramBlock& blk) { gram_block_scalar(blk); }
#endif

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("DCLKR_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::Scalar;
  }
  return detected_isa();
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

Isa detected_isa() {
#if defined(DCLKR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) {
    throw ConfigError("AVX2 Gram kernels are not available on this machine/build");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace dclkr::simd
