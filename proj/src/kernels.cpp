// Runtime backend selection. The choice is made once per process so seeded
// runs stay bit-reproducible.

#include "danet/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace danet::kernels {

const Ops* avx2_ops();  // kernels_avx2.cpp
const Ops* neon_ops();  // kernels_neon.cpp

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* pick() {
  if (const char* env = std::getenv("DANET_KERNELS")) {
    if (const Ops* t = backend(env)) return t;
    return &scalar();
  }
  if (const Ops* t = backend("avx2")) return t;
  if (const Ops* t = backend("neon")) return t;
  return &scalar();
}

}  // namespace

const Ops* backend(const char* name) {
  if (std::strcmp(name, "scalar") == 0) return &scalar();
  if (std::strcmp(name, "avx2") == 0) {
    return cpu_has_avx2() ? avx2_ops() : nullptr;
  }
  if (std::strcmp(name, "neon") == 0) return neon_ops();
  return nullptr;
}

const Ops& active() {
  static const Ops* chosen = pick();
  return *chosen;
}

}  // namespace danet::kernels
