#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "danet/rng.hpp"
#include "danet/tensor.hpp"

namespace danet {

// Trainable value with an accumulated gradient. Frozen parameters still
// receive gradients from backward passes; the optimizer skips them.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;

  explicit Parameter(Tensor t) : value(std::move(t)) {
    grad = Tensor::zeros(value.shape);
  }
  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

// Reverse-mode layer. forward() records whatever backward() needs; calling
// backward() without a recorded forward raises StateError. Gradients
// accumulate into Parameter::grad (callers zero them per batch).
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(std::vector<Parameter*>& out) { (void)out; }

  std::vector<Parameter*> params() {
    std::vector<Parameter*> out;
    collect_params(out);
    return out;
  }

 protected:
  void require_forward(const char* who) const {
    if (!has_forward_) throw StateError(std::string(who) + ": backward without forward");
  }
  bool has_forward_ = false;
};

// 1-D convolution, zero same-padding, odd kernel, dilation d >= 1:
//   y[o][t] = b[o] + sum_{i,j} w[o][i][j] * x[i][t + (j-(k-1)/2)*d]
class Conv1d : public Layer {
 public:
  Conv1d(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t dilation, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Parameter*>& out) override;

  void zero_weights();  // debug hook for residual-identity checks
  std::size_t in_channels() const { return c_in_; }
  std::size_t out_channels() const { return c_out_; }

 private:
  std::size_t c_in_, c_out_, k_, d_;
  Parameter w_;  // (c_out, c_in, k)
  Parameter b_;  // (c_out)
  Tensor x_;
};

// Non-overlapping max pooling, stride == pool, floor semantics (trailing
// remainder frames dropped). Argmax positions route the backward pass.
class MaxPool1d : public Layer {
 public:
  explicit MaxPool1d(std::size_t pool);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::size_t pool_;
  std::vector<std::size_t> argmax_;
  std::vector<std::size_t> in_shape_;
};

class Dense : public Layer {
 public:
  Dense(std::size_t f_in, std::size_t f_out, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Parameter*>& out) override;

 private:
  std::size_t f_in_, f_out_;
  Parameter w_;  // (f_out, f_in)
  Parameter b_;  // (f_out)
  Tensor x_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor x_;
};

class Sigmoid : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor y_;
};

class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<std::size_t> in_shape_;
};

class Sequential : public Layer {
 public:
  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  void push(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Parameter*>& out) override;

  std::size_t depth() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// y = body(x) + skip(x); skip is identity, or a 1x1 projection conv when
// channel counts differ. With body weights zeroed an identity-skip block
// reproduces its input exactly.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(std::unique_ptr<Sequential> body, std::unique_ptr<Conv1d> projection);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Parameter*>& out) override;

  Sequential& body() { return *body_; }
  bool has_projection() const { return projection_ != nullptr; }

 private:
  std::unique_ptr<Sequential> body_;
  std::unique_ptr<Conv1d> projection_;  // null = identity skip
};

// Elementwise helpers / losses. Probabilities are clamped to
// [1e-7, 1 - 1e-7] before the logs.
double stable_sigmoid(double x);
double bce_loss(double p, double y);
double bce_grad(double p, double y);  // d loss / d p
double mse_loss(const Tensor& a, const Tensor& b);
Tensor mse_grad(const Tensor& a, const Tensor& b);  // d mean((a-b)^2) / da

// Bias-corrected Adam. Moments are lazily shaped on the first step; frozen
// parameters are skipped entirely (value and moments untouched).
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-7)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Parameter*>& params);
  void reset();
  std::int64_t steps() const { return t_; }
  double lr() const { return lr_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Moments> moments_;
};

// Glorot-uniform init bound, +-sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

}  // namespace danet
