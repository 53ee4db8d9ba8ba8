// Reverse-mode numeric engine: conv1d (dilated, same-padded), max pooling,
// dense, activations, losses, Adam. Single-sample tensors; batching lives
// in the training loop. The conv inner loops run on the kernels backend.

#include "danet/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "danet/kernels.hpp"

namespace danet {

namespace {
constexpr double kProbEps = 1e-7;
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / double(fan_in + fan_out));
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t dilation,
               Rng& rng)
    : c_in_(c_in),
      c_out_(c_out),
      k_(k),
      d_(dilation),
      w_(Tensor::zeros({c_out, c_in, k})),
      b_(Tensor::zeros({c_out})) {
  if (k % 2 == 0) throw ConfigError("conv1d: kernel size must be odd");
  if (dilation < 1) throw ConfigError("conv1d: dilation must be >= 1");
  const double bound = glorot_bound(c_in * k, c_out * k);
  for (double& v : w_.value.v) v = rng.uniform(-bound, bound);
}

void Conv1d::zero_weights() {
  std::fill(w_.value.v.begin(), w_.value.v.end(), 0.0);
  std::fill(b_.value.v.begin(), b_.value.v.end(), 0.0);
}

void Conv1d::collect_params(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

Tensor Conv1d::forward(const Tensor& x) {
  if (x.rank() != 2 || x.channels() != c_in_) {
    throw ShapeError("conv1d: expected (" + std::to_string(c_in_) + ", n) input");
  }
  x_ = x;
  has_forward_ = true;

  const long n = static_cast<long>(x.frames());
  const long center = static_cast<long>((k_ - 1) / 2);
  Tensor y = Tensor::zeros({c_out_, x.frames()});

  for (std::size_t o = 0; o < c_out_; ++o) {
    double* yo = y.row(o);
    const double bias = b_.value.v[o];
    for (long t = 0; t < n; ++t) yo[t] = bias;
    for (std::size_t i = 0; i < c_in_; ++i) {
      const double* xi = x.row(i);
      const double* wij = w_.value.v.data() + (o * c_in_ + i) * k_;
      for (std::size_t j = 0; j < k_; ++j) {
        const long s = (static_cast<long>(j) - center) * static_cast<long>(d_);
        const long t0 = std::max<long>(0, -s);
        const long t1 = std::min<long>(n, n - s);
        if (t1 > t0) kernels::axpy(wij[j], xi + t0 + s, yo + t0, t1 - t0);
      }
    }
  }
  return y;
}

Tensor Conv1d::backward(const Tensor& dy) {
  require_forward("conv1d");
  if (dy.rank() != 2 || dy.channels() != c_out_ || dy.frames() != x_.frames()) {
    throw ShapeError("conv1d backward: gradient shape mismatch");
  }
  const long n = static_cast<long>(x_.frames());
  const long center = static_cast<long>((k_ - 1) / 2);
  Tensor dx = Tensor::zeros(x_.shape);

  for (std::size_t o = 0; o < c_out_; ++o) {
    const double* dyo = dy.row(o);
    b_.grad.v[o] += kernels::sum(dyo, x_.frames());
    for (std::size_t i = 0; i < c_in_; ++i) {
      const double* xi = x_.row(i);
      double* dxi = dx.row(i);
      const double* wij = w_.value.v.data() + (o * c_in_ + i) * k_;
      double* dwij = w_.grad.v.data() + (o * c_in_ + i) * k_;
      for (std::size_t j = 0; j < k_; ++j) {
        const long s = (static_cast<long>(j) - center) * static_cast<long>(d_);
        const long t0 = std::max<long>(0, -s);
        const long t1 = std::min<long>(n, n - s);
        if (t1 <= t0) continue;
        dwij[j] += kernels::dot(dyo + t0, xi + t0 + s, t1 - t0);
        kernels::axpy(wij[j], dyo + t0, dxi + t0 + s, t1 - t0);
      }
    }
  }
  return dx;
}

// -------------------------------------------------------------- MaxPool1d

MaxPool1d::MaxPool1d(std::size_t pool) : pool_(pool) {
  if (pool < 1) throw ConfigError("maxpool: pool must be >= 1");
}

Tensor MaxPool1d::forward(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("maxpool: expected rank-2 input");
  if (pool_ > x.frames()) throw ShapeError("maxpool: pool exceeds frame count");
  const std::size_t c = x.channels();
  const std::size_t out_n = x.frames() / pool_;  // trailing remainder dropped

  in_shape_ = x.shape;
  argmax_.assign(c * out_n, 0);
  has_forward_ = true;

  Tensor y = Tensor::zeros({c, out_n});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* xi = x.row(ch);
    double* yo = y.row(ch);
    for (std::size_t t = 0; t < out_n; ++t) {
      std::size_t best = t * pool_;
      for (std::size_t u = t * pool_ + 1; u < (t + 1) * pool_; ++u) {
        if (xi[u] > xi[best]) best = u;
      }
      yo[t] = xi[best];
      argmax_[ch * out_n + t] = best;
    }
  }
  return y;
}

Tensor MaxPool1d::backward(const Tensor& dy) {
  require_forward("maxpool");
  const std::size_t c = in_shape_[0];
  const std::size_t out_n = in_shape_[1] / pool_;
  if (dy.rank() != 2 || dy.channels() != c || dy.frames() != out_n) {
    throw ShapeError("maxpool backward: gradient shape mismatch");
  }
  Tensor dx = Tensor::zeros(in_shape_);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* dyo = dy.row(ch);
    double* dxi = dx.row(ch);
    for (std::size_t t = 0; t < out_n; ++t) dxi[argmax_[ch * out_n + t]] += dyo[t];
  }
  return dx;
}

// ------------------------------------------------------------------ Dense

Dense::Dense(std::size_t f_in, std::size_t f_out, Rng& rng)
    : f_in_(f_in),
      f_out_(f_out),
      w_(Tensor::zeros({f_out, f_in})),
      b_(Tensor::zeros({f_out})) {
  const double bound = glorot_bound(f_in, f_out);
  for (double& v : w_.value.v) v = rng.uniform(-bound, bound);
}

void Dense::collect_params(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

Tensor Dense::forward(const Tensor& x) {
  if (x.rank() != 1 || x.size() != f_in_) {
    throw ShapeError("dense: expected rank-1 input of size " + std::to_string(f_in_));
  }
  x_ = x;
  has_forward_ = true;
  Tensor y = Tensor::zeros({f_out_});
  for (std::size_t o = 0; o < f_out_; ++o) {
    y.v[o] = b_.value.v[o] + kernels::dot(w_.value.v.data() + o * f_in_, x.v.data(), f_in_);
  }
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  require_forward("dense");
  if (dy.rank() != 1 || dy.size() != f_out_) throw ShapeError("dense backward: shape mismatch");
  Tensor dx = Tensor::zeros({f_in_});
  for (std::size_t o = 0; o < f_out_; ++o) {
    const double g = dy.v[o];
    b_.grad.v[o] += g;
    kernels::axpy(g, x_.v.data(), w_.grad.v.data() + o * f_in_, f_in_);
    kernels::axpy(g, w_.value.v.data() + o * f_in_, dx.v.data(), f_in_);
  }
  return dx;
}

// ------------------------------------------------------------ activations

Tensor ReLU::forward(const Tensor& x) {
  x_ = x;
  has_forward_ = true;
  Tensor y = x;
  for (double& v : y.v) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  require_forward("relu");
  if (!dy.same_shape(x_)) throw ShapeError("relu backward: shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (x_.v[i] <= 0.0) dx.v[i] = 0.0;
  }
  return dx;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  // floor at the smallest normal: exp underflows past x ~ -708 and the
  // true value is not representable, but the output must stay positive
  return std::max(e / (1.0 + e), std::numeric_limits<double>::min());
}

Tensor Sigmoid::forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = stable_sigmoid(v);
  y_ = y;
  has_forward_ = true;
  return y;
}

Tensor Sigmoid::backward(const Tensor& dy) {
  require_forward("sigmoid");
  if (!dy.same_shape(y_)) throw ShapeError("sigmoid backward: shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx.v[i] *= y_.v[i] * (1.0 - y_.v[i]);
  }
  return dx;
}

// ---------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x) {
  in_shape_ = x.shape;
  has_forward_ = true;
  Tensor y = x;
  y.shape = {x.size()};
  return y;
}

Tensor Flatten::backward(const Tensor& dy) {
  require_forward("flatten");
  Tensor dx = dy;
  dx.shape = in_shape_;
  return dx;
}

// ------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x) {
  has_forward_ = true;
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur);
  return cur;
}

Tensor Sequential::backward(const Tensor& dy) {
  require_forward("sequential");
  Tensor cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

void Sequential::collect_params(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_params(out);
}

// ---------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(std::unique_ptr<Sequential> body, std::unique_ptr<Conv1d> projection)
    : body_(std::move(body)), projection_(std::move(projection)) {}

Tensor ResidualBlock::forward(const Tensor& x) {
  has_forward_ = true;
  Tensor y = body_->forward(x);
  const Tensor skip = projection_ ? projection_->forward(x) : x;
  if (!y.same_shape(skip)) throw ShapeError("residual block: branch shape mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += skip.v[i];
  return y;
}

Tensor ResidualBlock::backward(const Tensor& dy) {
  require_forward("residual block");
  Tensor dx = body_->backward(dy);
  if (projection_) {
    const Tensor dskip = projection_->backward(dy);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dskip.v[i];
  } else {
    for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dy.v[i];
  }
  return dx;
}

void ResidualBlock::collect_params(std::vector<Parameter*>& out) {
  body_->collect_params(out);
  if (projection_) projection_->collect_params(out);
}

// ----------------------------------------------------------------- losses

double bce_loss(double p, double y) {
  const double q = std::clamp(p, kProbEps, 1.0 - kProbEps);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double bce_grad(double p, double y) {
  const double q = std::clamp(p, kProbEps, 1.0 - kProbEps);
  return -y / q + (1.0 - y) / (1.0 - q);
}

double mse_loss(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("mse: shape mismatch");
  if (a.size() == 0) return 0.0;
  return kernels::sumsq_diff(a.v.data(), b.v.data(), a.size()) / double(a.size());
}

Tensor mse_grad(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("mse grad: shape mismatch");
  Tensor g = a;
  const double scale = 2.0 / double(a.size());
  for (std::size_t i = 0; i < g.size(); ++i) g.v[i] = scale * (a.v[i] - b.v[i]);
  return g;
}

// ------------------------------------------------------------------- Adam

void Adam::step(const std::vector<Parameter*>& params) {
  if (moments_.empty()) {
    moments_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      moments_[i].m.assign(params[i]->value.size(), 0.0);
      moments_[i].v.assign(params[i]->value.size(), 0.0);
    }
  }
  if (moments_.size() != params.size()) throw ShapeError("adam: parameter set changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, double(t_));
  const double bc2 = 1.0 - std::pow(beta2_, double(t_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.grad.v.size() != p.value.v.size() || moments_[i].m.size() != p.value.v.size()) {
      throw ShapeError("adam: moment/gradient shape mismatch");
    }
    if (!p.trainable) continue;  // value and moments untouched
    auto& m = moments_[i].m;
    auto& v = moments_[i].v;
    for (std::size_t j = 0; j < p.value.v.size(); ++j) {
      const double g = p.grad.v[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value.v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::reset() {
  t_ = 0;
  moments_.clear();
}

}  // namespace danet
