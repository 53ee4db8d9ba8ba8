#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "danet/attention.hpp"
#include "danet/delineator.hpp"
#include "danet/record.hpp"
#include "danet/tensor.hpp"

namespace danet {

// APC is the positive class throughout.
struct ConfusionMatrix {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

// Predict APC iff prob > threshold (strict; ties go to NonAPC).
ConfusionMatrix confusion(const std::vector<double>& probs, const std::vector<Label>& labels,
                          double threshold = 0.5);

struct MetricsReport {
  double se = 0, sp = 0, acc = 0;
  double f_apc = 0, f_nonapc = 0, f_avg = 0;
  bool had_undefined = false;  // some 0/0 rate was defined as 0
};

MetricsReport metrics(const ConfusionMatrix& cm);

// "model  Se  Sp  Acc  F_APC  F_NonAPC  F_AVG", percentages, 2 decimals.
std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Preprocessed single-lead records ready for a model forward.
struct EvalDataset {
  double fs = 0.0;
  std::vector<std::string> ids;
  std::vector<Tensor> x;
  std::vector<Label> y;
};

struct EvalResult {
  std::string model_stage;
  MetricsReport report;
  std::vector<double> probs;  // aligned with dataset order
};

// Loads the checkpoint and runs the matching forward over the dataset:
// "baseline" -> plain classifier; "stage-2"/"stage-3" -> DANet;
// "danet-h" -> classifier over rule weights derived by the delineator.
EvalResult evaluate(const std::filesystem::path& checkpoint, const EvalDataset& ds,
                    const DiseaseRule& rule, const DelineatorConfig& dcfg = {},
                    int jobs = 1);

}  // namespace danet
