#pragma once

#include <cstddef>

namespace danet::kernels {

// Data-parallel primitives behind the NN and DSP inner loops. A scalar
// reference implementation always exists; AVX2/NEON variants are selected
// once at process start from CPU capabilities. Override with
// DANET_KERNELS=scalar|avx2|neon (unavailable names fall back to scalar).
//
// SIMD variants may round differently from scalar (reassociated sums, FMA),
// so cross-backend agreement is tolerance-level, not bitwise. Within one
// process the selection is fixed, which keeps seeded runs bit-reproducible.
struct Ops {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  // out = a .* b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // acc += a .* b
  void (*madd)(const double* a, const double* b, double* acc, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // sum((a - b)^2)
  double (*sumsq_diff)(const double* a, const double* b, std::size_t n);
};

const Ops& scalar();

// Named backend table, or nullptr when not compiled in / not supported
// by the running CPU. Names: "scalar", "avx2", "neon".
const Ops* backend(const char* name);

const Ops& active();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) {
  active().scale(alpha, x, n);
}
inline void mul(const double* a, const double* b, double* out, std::size_t n) {
  active().mul(a, b, out, n);
}
inline void madd(const double* a, const double* b, double* acc, std::size_t n) {
  active().madd(a, b, acc, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sumsq_diff(const double* a, const double* b, std::size_t n) {
  return active().sumsq_diff(a, b, n);
}

}  // namespace danet::kernels
