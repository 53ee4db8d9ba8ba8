#pragma once

#include <cstddef>
#include <vector>

#include "danet/errors.hpp"
#include "danet/record.hpp"

namespace danet {

// Dense 64-bit value array, rank 1 (features) or rank 2 (channels, frames).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> s) {
    Tensor t;
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    t.shape = std::move(s);
    t.v.assign(n, 0.0);
    return t;
  }

  static Tensor vec(std::vector<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.v = std::move(values);
    return t;
  }

  std::size_t size() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t channels() const { return rank() == 2 ? shape[0] : 1; }
  std::size_t frames() const { return shape.empty() ? 0 : shape.back(); }

  double* row(std::size_t c) { return v.data() + c * frames(); }
  const double* row(std::size_t c) const { return v.data() + c * frames(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline Tensor tensor_from_record(const EcgRecord& rec) {
  Tensor t;
  t.shape = {rec.channels(), rec.frames};
  t.v = rec.samples;
  return t;
}

}  // namespace danet
