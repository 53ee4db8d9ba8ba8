#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "danet/danet_models.hpp"
#include "danet/evaluation.hpp"
#include "danet/tensor.hpp"

namespace danet {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::size_t checkpoint_every = 0;       // 0 = only the final checkpoint
  bool keep_best_on_validation = false;   // stage 3: restore best-F_AVG epoch

  // Augmentation is implemented but off by default (parity with the
  // no-augmentation experiment).
  bool augment = false;
  std::size_t augment_out_len = 0;  // 0 = keep full length
  double augment_noise_mv = 0.0;

  void validate() const;
};

struct StageReport {
  std::string stage;
  std::vector<double> epoch_loss;  // length == epochs
  double wall_seconds = 0.0;
  std::optional<double> validation_mse;       // stage 1
  std::optional<MetricsReport> validation;    // classifier stages
};

struct PretrainSample {
  Tensor x;
  AttentionWeights w1;
};
struct LabeledSample {
  Tensor x;
  double y;  // 1 = APC
};
struct WeightedSample {
  Tensor x;
  AttentionWeights w1;
  double y;
};

// Called after the epochs selected by cfg.checkpoint_every (1-based index).
using EpochHook = std::function<void(std::size_t epoch)>;

// Stage 1: minimize MSE(enhancer(x), w1). Tags the enhancer "stage-1".
StageReport pretrain_enhancer(Enhancer& model, const std::vector<PretrainSample>& train,
                              const std::vector<PretrainSample>* validation,
                              const TrainConfig& cfg, const EpochHook& hook = {});

// Stage 2: freeze the enhancer (bitwise), train the classifier with BCE.
// Requires stage tag "stage-1"; leaves "stage-2".
StageReport train_stage2(DanetModel& model, const std::vector<LabeledSample>& train,
                         const std::vector<LabeledSample>* validation, const TrainConfig& cfg,
                         const EpochHook& hook = {});

// Stage 3: fine-tune everything end-to-end. Requires "stage-2"; leaves "stage-3".
StageReport train_stage3(DanetModel& model, const std::vector<LabeledSample>& train,
                         const std::vector<LabeledSample>* validation, const TrainConfig& cfg,
                         const EpochHook& hook = {});

// Hard-coding variant: classifier over x .* w1, single stage.
StageReport train_danet_h(Classifier& clf, const std::vector<WeightedSample>& train,
                          const std::vector<WeightedSample>* validation, const TrainConfig& cfg,
                          const EpochHook& hook = {});

// Plain classifier on the preprocessed records, same hyperparameters.
StageReport train_baseline(Classifier& clf, const std::vector<LabeledSample>& train,
                           const std::vector<LabeledSample>* validation, const TrainConfig& cfg,
                           const EpochHook& hook = {});

}  // namespace danet
