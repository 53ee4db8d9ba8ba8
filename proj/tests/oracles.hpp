// Test-side oracles, independent of the library's implementation paths:
// DFT tone amplitude, central finite differences, scratch directories.
#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace oracles {

// Amplitude of the f-Hz component over samples [t0, t1): plain projection
// onto the quadrature pair, valid when the window spans integer cycles.
inline double tone_amplitude(const std::vector<double>& x, double fs, double f, std::size_t t0,
                             std::size_t t1) {
  double c = 0.0, s = 0.0;
  const double w = 2.0 * 3.14159265358979323846 * f / fs;
  for (std::size_t t = t0; t < t1; ++t) {
    c += x[t] * std::cos(w * double(t));
    s += x[t] * std::sin(w * double(t));
  }
  const double n = double(t1 - t0);
  return 2.0 * std::sqrt(c * c + s * s) / n;
}

inline double db(double ratio) { return 20.0 * std::log10(ratio); }

// max relative error between analytic gradients and central differences
struct FdCheck {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline FdCheck finite_difference_check(std::vector<double*> values,
                                       const std::vector<double>& analytic_grad,
                                       const std::function<double()>& loss, double h = 1e-5) {
  FdCheck result;
  std::size_t flat = 0;
  for (double* v : values) {
    const double keep = *v;
    *v = keep + h;
    const double up = loss();
    *v = keep - h;
    const double down = loss();
    *v = keep;
    const double fd = (up - down) / (2.0 * h);
    const double g = analytic_grad[flat];
    const double denom = std::max({std::abs(fd), std::abs(g), 1e-8});
    result.max_rel_err = std::max(result.max_rel_err, std::abs(fd - g) / denom);
    ++result.checked;
    ++flat;
  }
  return result;
}

// unique scratch directory, removed on destruction
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("danet_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace oracles
