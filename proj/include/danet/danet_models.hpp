#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "danet/attention.hpp"
#include "danet/nn_core.hpp"

namespace danet {

// Waveform enhanced module: dilated residual conv stack -> 1x1 conv head
// -> sigmoid. Output is 1 x frames regardless of input channel count.
struct EnhancerConfig {
  std::size_t in_channels = 1;
  std::size_t n_dilated_layers = 4;  // grouped into residual pairs
  std::size_t filters = 6;
  std::size_t kernel = 9;
  std::size_t dilation = 7;
  std::size_t head_kernel = 1;
  bool zero_init_residual = false;  // debug: residual pairs start as identity

  void validate() const;
  // 1 + n_dilated_layers * (kernel - 1) * dilation
  std::size_t receptive_field() const {
    return 1 + n_dilated_layers * (kernel - 1) * dilation;
  }
};

// Classification module: alternating conv/max-pool stages, then
// dense(hidden) + dense(1) + sigmoid.
struct ClassifierConfig {
  struct Stage {
    std::size_t kernel;
    std::size_t filters;
    std::size_t pool;
  };
  std::size_t in_channels = 1;
  std::size_t in_frames = 1500;
  std::vector<Stage> stages = {{21, 6, 7}, {13, 7, 6}, {9, 5, 6}};
  std::size_t hidden = 50;
  bool linear_debug = false;  // drop activations; output is the raw logit

  void validate() const;
  // frame counts after each pooling stage, floor semantics
  std::vector<std::size_t> frame_chain() const;
  std::size_t flatten_features() const;
};

enum class LeadStrategy { single_lead, all_leads };

class Enhancer {
 public:
  Enhancer(const EnhancerConfig& cfg, std::uint64_t seed);

  // x: (channels, frames) -> (1, frames), values in (0,1)
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out);
  std::vector<Parameter*> params() { return net_.params(); }
  const EnhancerConfig& config() const { return cfg_; }

  std::string stage;  // "", then "stage-1" after pre-training

 private:
  EnhancerConfig cfg_;
  Sequential net_;
};

class Classifier {
 public:
  Classifier(const ClassifierConfig& cfg, std::uint64_t seed);

  double forward_prob(const Tensor& x);   // scalar in (0,1)
  void backward_prob(double d_prob);      // gradient w.r.t. the output
  Tensor backward_input(double d_prob);   // same, returning d loss / d x
  std::vector<Parameter*> params() { return net_.params(); }
  const ClassifierConfig& config() const { return cfg_; }

 private:
  ClassifierConfig cfg_;
  Sequential net_;
};

struct DanetModel {
  DanetModel(const EnhancerConfig& e, const ClassifierConfig& c, std::uint64_t seed,
             LeadStrategy strategy = LeadStrategy::single_lead);

  Enhancer enhancer;
  Classifier classifier;
  LeadStrategy strategy;
  std::string stage;  // "", "stage-1", "stage-2", "stage-3"

  std::vector<Parameter*> params();

  // forward cache consumed by danet_backward
  Tensor last_x, last_w2;
  bool has_forward = false;
};

Tensor enhancer_forward(Enhancer& model, const Tensor& x);
AttentionWeights enhancer_weights(Enhancer& model, const EcgRecord& rec);

// classifier(x .* broadcast(enhancer(x)))
double danet_forward(DanetModel& model, const Tensor& x);
// Backward for the last danet_forward. into_enhancer=false leaves the
// enhancer untouched beyond its (frozen) forward pass.
void danet_backward(DanetModel& model, double d_prob, bool into_enhancer);

// classifier(x .* broadcast(w1))
double danet_h_forward(Classifier& clf, const Tensor& x, const AttentionWeights& w1);

// Checkpoint container. On disk: magic "DANT", u32 version (LE), u32 header
// length (LE), JSON header, then all parameters as little-endian f64 in
// declaration order (enhancer first for kind "danet").
struct Checkpoint {
  std::string kind;   // "enhancer" | "classifier" | "danet"
  std::string stage;  // "stage-1" | "stage-2" | "stage-3" | "danet-h" | "baseline" | ""
  std::optional<EnhancerConfig> enhancer_cfg;
  std::optional<ClassifierConfig> classifier_cfg;
  std::vector<double> values;
};

void save_checkpoint(const std::filesystem::path& path, const DanetModel& model);
void save_checkpoint(const std::filesystem::path& path, const Enhancer& model);
void save_checkpoint(const std::filesystem::path& path, const Classifier& model,
                     const std::string& stage);

Checkpoint read_checkpoint(const std::filesystem::path& path);
std::string checkpoint_stage(const std::filesystem::path& path);

DanetModel load_danet(const std::filesystem::path& path);
std::unique_ptr<Enhancer> load_enhancer(const std::filesystem::path& path);
std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path,
                                            std::string* stage_out = nullptr);

}  // namespace danet
