// The three-stage learning framework plus DANet-h and baseline training.
// One shared batch loop drives every classifier-style stage so that
// "identical hyperparameters" comparisons are trajectory-exact.

#include "danet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "danet/kernels.hpp"

namespace danet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_finite(double loss, const char* stage, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw NumericError(std::string(stage) + ": non-finite loss at epoch " +
                       std::to_string(epoch + 1));
  }
}

std::vector<std::size_t> make_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

void maybe_shuffle(std::vector<std::size_t>& order, const TrainConfig& cfg, std::size_t epoch) {
  if (!cfg.shuffle) return;
  Rng rng(derive_seed(cfg.seed, 0x5u + epoch));
  rng.shuffle(order);
}

Tensor weighted_input(const Tensor& x, const std::vector<double>& w) {
  Tensor z = Tensor::zeros(x.shape);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    kernels::mul(x.row(c), w.data(), z.row(c), x.frames());
  }
  return z;
}

MetricsReport classifier_validation(Classifier& clf, const std::vector<Tensor>& x,
                                    const std::vector<double>& y) {
  std::vector<double> probs(x.size());
  std::vector<Label> labels(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probs[i] = clf.forward_prob(x[i]);
    labels[i] = y[i] > 0.5 ? Label::APC : Label::NonAPC;
  }
  return metrics(confusion(probs, labels));
}

// BCE training of a classifier over fixed input tensors. Shared by
// stage 2 (enhancer-weighted inputs), DANet-h, and the baseline.
StageReport train_classifier_core(Classifier& clf, const char* stage_name,
                                  const std::vector<Tensor>& x, const std::vector<double>& y,
                                  const std::vector<Tensor>* vx, const std::vector<double>* vy,
                                  const TrainConfig& cfg, const EpochHook& hook) {
  cfg.validate();
  const auto t0 = Clock::now();
  const std::size_t n = x.size();
  if (n == 0) throw DataError(std::string(stage_name) + ": empty training set");

  Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  const auto params = clf.params();
  auto order = make_order(n);

  StageReport report;
  report.stage = stage_name;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    maybe_shuffle(order, cfg, epoch);
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(n, b0 + cfg.batch_size);
      const double inv = 1.0 / double(b1 - b0);
      for (Parameter* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = b0; k < b1; ++k) {
        const std::size_t i = order[k];
        const double p = clf.forward_prob(x[i]);
        batch_loss += bce_loss(p, y[i]);
        clf.backward_prob(bce_grad(p, y[i]) * inv);
      }
      check_finite(batch_loss, stage_name, epoch);
      opt.step(params);
      loss_sum += batch_loss;
    }
    report.epoch_loss.push_back(loss_sum / double(n));
    if (hook && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      hook(epoch + 1);
    }
  }
  if (vx && vy) report.validation = classifier_validation(clf, *vx, *vy);
  report.wall_seconds = seconds_since(t0);
  return report;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train: learning rate must be positive");
}

StageReport pretrain_enhancer(Enhancer& model, const std::vector<PretrainSample>& train,
                              const std::vector<PretrainSample>* validation,
                              const TrainConfig& cfg, const EpochHook& hook) {
  cfg.validate();
  const auto t0 = Clock::now();
  if (train.empty()) throw DataError("pretrain: empty training set");
  for (const auto& s : train) {
    if (s.w1.size() != s.x.frames()) {
      throw DataError("pretrain: manual weight length does not match record frames");
    }
  }

  // augmentation draws come from a dedicated stream so the base loop's
  // shuffle pattern is unchanged when augmentation is off
  Rng aug_rng(derive_seed(cfg.seed, 0xA6));

  Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  const auto params = model.params();
  auto order = make_order(train.size());

  StageReport report;
  report.stage = "stage-1";
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    maybe_shuffle(order, cfg, epoch);
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < train.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(train.size(), b0 + cfg.batch_size);
      const double inv = 1.0 / double(b1 - b0);
      for (Parameter* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = b0; k < b1; ++k) {
        const PretrainSample& s = train[order[k]];
        Tensor x = s.x;
        Tensor target = Tensor::zeros({std::size_t{1}, s.w1.size()});
        std::copy(s.w1.begin(), s.w1.end(), target.v.begin());
        if (cfg.augment) {
          if (cfg.augment_noise_mv > 0.0) {
            for (double& v : x.v) v += cfg.augment_noise_mv * aug_rng.gaussian();
          }
          // segment cropping is skipped here: the enhancer is frame-count
          // agnostic but the paired target must stay aligned, so cropping
          // happens on both jointly
          if (cfg.augment_out_len > 0 && cfg.augment_out_len < x.frames()) {
            const std::size_t start = static_cast<std::size_t>(
                aug_rng.bounded(x.frames() - cfg.augment_out_len + 1));
            Tensor xc = Tensor::zeros({x.channels(), cfg.augment_out_len});
            for (std::size_t c = 0; c < x.channels(); ++c) {
              std::copy(x.row(c) + start, x.row(c) + start + cfg.augment_out_len, xc.row(c));
            }
            Tensor tc = Tensor::zeros({std::size_t{1}, cfg.augment_out_len});
            std::copy(target.v.begin() + start, target.v.begin() + start + cfg.augment_out_len,
                      tc.v.begin());
            x = std::move(xc);
            target = std::move(tc);
          }
        }
        const Tensor out = model.forward(x);
        batch_loss += mse_loss(out, target);
        Tensor g = mse_grad(out, target);
        kernels::scale(inv, g.v.data(), g.size());
        model.backward(g);
      }
      check_finite(batch_loss, "stage-1", epoch);
      opt.step(params);
      loss_sum += batch_loss;
    }
    report.epoch_loss.push_back(loss_sum / double(train.size()));
    if (hook && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      hook(epoch + 1);
    }
  }

  if (validation) {
    double mse = 0.0;
    for (const auto& s : *validation) {
      Tensor target = Tensor::zeros({std::size_t{1}, s.w1.size()});
      std::copy(s.w1.begin(), s.w1.end(), target.v.begin());
      mse += mse_loss(model.forward(s.x), target);
    }
    report.validation_mse = validation->empty() ? 0.0 : mse / double(validation->size());
  }

  model.stage = "stage-1";
  report.wall_seconds = seconds_since(t0);
  return report;
}

StageReport train_stage2(DanetModel& model, const std::vector<LabeledSample>& train,
                         const std::vector<LabeledSample>* validation, const TrainConfig& cfg,
                         const EpochHook& hook) {
  if (model.stage != "stage-1") {
    throw SequencingError("stage 2 requires a stage-1 model, got '" + model.stage + "'");
  }
  cfg.validate();
  if (train.empty()) throw DataError("stage-2: empty training set");

  // freeze the enhancer; its parameters must be bitwise unchanged after
  for (Parameter* p : model.enhancer.params()) p->trainable = false;

  // the frozen enhancer is a constant map, so its weights are computed once
  auto weighted = [&](const std::vector<LabeledSample>& set) {
    std::vector<Tensor> out;
    out.reserve(set.size());
    for (const auto& s : set) {
      const Tensor w2 = model.enhancer.forward(s.x);
      Tensor z = Tensor::zeros(s.x.shape);
      for (std::size_t c = 0; c < s.x.channels(); ++c) {
        kernels::mul(s.x.row(c), w2.row(0), z.row(c), s.x.frames());
      }
      out.push_back(std::move(z));
    }
    return out;
  };

  const std::vector<Tensor> zx = weighted(train);
  std::vector<double> y(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) y[i] = train[i].y;

  std::vector<Tensor> vzx;
  std::vector<double> vy;
  if (validation) {
    vzx = weighted(*validation);
    vy.resize(validation->size());
    for (std::size_t i = 0; i < validation->size(); ++i) vy[i] = (*validation)[i].y;
  }

  StageReport report = train_classifier_core(model.classifier, "stage-2", zx, y,
                                             validation ? &vzx : nullptr,
                                             validation ? &vy : nullptr, cfg, hook);
  model.stage = "stage-2";
  return report;
}

StageReport train_stage3(DanetModel& model, const std::vector<LabeledSample>& train,
                         const std::vector<LabeledSample>* validation, const TrainConfig& cfg,
                         const EpochHook& hook) {
  if (model.stage != "stage-2") {
    throw SequencingError("stage 3 requires a stage-2 model, got '" + model.stage + "'");
  }
  cfg.validate();
  const auto t0 = Clock::now();
  if (train.empty()) throw DataError("stage-3: empty training set");

  for (Parameter* p : model.params()) p->trainable = true;

  Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);  // fresh state at the stage boundary
  const auto params = model.params();
  auto order = make_order(train.size());

  auto validate_now = [&]() -> MetricsReport {
    std::vector<double> probs(validation->size());
    std::vector<Label> labels(validation->size());
    for (std::size_t i = 0; i < validation->size(); ++i) {
      probs[i] = danet_forward(model, (*validation)[i].x);
      labels[i] = (*validation)[i].y > 0.5 ? Label::APC : Label::NonAPC;
    }
    return metrics(confusion(probs, labels));
  };

  StageReport report;
  report.stage = "stage-3";
  double best_f = -1.0;
  std::vector<double> best_values;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    maybe_shuffle(order, cfg, epoch);
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < train.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(train.size(), b0 + cfg.batch_size);
      const double inv = 1.0 / double(b1 - b0);
      for (Parameter* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = b0; k < b1; ++k) {
        const LabeledSample& s = train[order[k]];
        const double p = danet_forward(model, s.x);
        batch_loss += bce_loss(p, s.y);
        danet_backward(model, bce_grad(p, s.y) * inv, /*into_enhancer=*/true);
      }
      check_finite(batch_loss, "stage-3", epoch);
      opt.step(params);
      loss_sum += batch_loss;
    }
    report.epoch_loss.push_back(loss_sum / double(train.size()));

    if (cfg.keep_best_on_validation && validation) {
      const MetricsReport m = validate_now();
      if (m.f_avg > best_f) {
        best_f = m.f_avg;
        best_values.clear();
        for (Parameter* p : params) {
          best_values.insert(best_values.end(), p->value.v.begin(), p->value.v.end());
        }
      }
    }
    if (hook && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      hook(epoch + 1);
    }
  }

  if (cfg.keep_best_on_validation && validation && !best_values.empty()) {
    std::size_t pos = 0;
    for (Parameter* p : params) {
      std::copy(best_values.begin() + pos, best_values.begin() + pos + p->value.v.size(),
                p->value.v.begin());
      pos += p->value.v.size();
    }
  }
  if (validation) report.validation = validate_now();

  model.stage = "stage-3";
  report.wall_seconds = seconds_since(t0);
  return report;
}

StageReport train_danet_h(Classifier& clf, const std::vector<WeightedSample>& train,
                          const std::vector<WeightedSample>* validation, const TrainConfig& cfg,
                          const EpochHook& hook) {
  if (train.empty()) throw DataError("danet-h: empty training set");
  for (const auto& s : train) {
    if (s.w1.size() != s.x.frames()) throw DataError("danet-h: missing or misaligned w1");
  }
  std::vector<Tensor> zx;
  std::vector<double> y;
  zx.reserve(train.size());
  for (const auto& s : train) {
    zx.push_back(weighted_input(s.x, s.w1));
    y.push_back(s.y);
  }
  std::vector<Tensor> vzx;
  std::vector<double> vy;
  if (validation) {
    for (const auto& s : *validation) {
      vzx.push_back(weighted_input(s.x, s.w1));
      vy.push_back(s.y);
    }
  }
  return train_classifier_core(clf, "danet-h", zx, y, validation ? &vzx : nullptr,
                               validation ? &vy : nullptr, cfg, hook);
}

StageReport train_baseline(Classifier& clf, const std::vector<LabeledSample>& train,
                           const std::vector<LabeledSample>* validation, const TrainConfig& cfg,
                           const EpochHook& hook) {
  if (train.empty()) throw DataError("baseline: empty training set");
  std::vector<Tensor> x;
  std::vector<double> y;
  x.reserve(train.size());
  for (const auto& s : train) {
    x.push_back(s.x);
    y.push_back(s.y);
  }
  std::vector<Tensor> vx;
  std::vector<double> vy;
  if (validation) {
    for (const auto& s : *validation) {
      vx.push_back(s.x);
      vy.push_back(s.y);
    }
  }
  return train_classifier_core(clf, "baseline", x, y, validation ? &vx : nullptr,
                               validation ? &vy : nullptr, cfg, hook);
}

}  // namespace danet
