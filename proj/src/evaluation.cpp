// Confusion-matrix metrics (APC positive) and checkpoint evaluation.

#include "danet/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include "danet/danet_models.hpp"

namespace danet {

namespace {

// 0/0 rates are defined as 0 and flagged in the report
double ratio(double num, double den, bool& undefined) {
  if (den == 0.0) {
    if (num != 0.0) throw NumericError("metrics: impossible confusion counts");
    undefined = true;
    return 0.0;
  }
  return num / den;
}

double fscore(long tp, long fp, long fn, bool& undefined) {
  bool u = false;
  const double precision = ratio(double(tp), double(tp + fp), u);
  const double recall = ratio(double(tp), double(tp + fn), u);
  if (precision + recall == 0.0) {
    undefined = undefined || u;
    return 0.0;
  }
  undefined = undefined || u;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

ConfusionMatrix confusion(const std::vector<double>& probs, const std::vector<Label>& labels,
                          double threshold) {
  if (probs.size() != labels.size()) {
    throw ShapeError("confusion: probs and labels length mismatch");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred_apc = probs[i] > threshold;  // tie goes to NonAPC
    const bool is_apc = labels[i] == Label::APC;
    if (pred_apc && is_apc) ++cm.tp;
    else if (pred_apc && !is_apc) ++cm.fp;
    else if (!pred_apc && is_apc) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
  if (cm.tp < 0 || cm.fp < 0 || cm.tn < 0 || cm.fn < 0) {
    throw DataError("metrics: negative counts");
  }
  MetricsReport r;
  bool undefined = false;
  r.se = ratio(double(cm.tp), double(cm.tp + cm.fn), undefined);
  r.sp = ratio(double(cm.tn), double(cm.tn + cm.fp), undefined);
  r.acc = double(cm.tp + cm.tn) / double(cm.total());
  r.f_apc = fscore(cm.tp, cm.fp, cm.fn, undefined);
  // NonAPC as the positive class: tp'=tn, fp'=fn, fn'=fp
  r.f_nonapc = fscore(cm.tn, cm.fn, cm.fp, undefined);
  r.f_avg = 0.5 * (r.f_apc + r.f_nonapc);
  r.had_undefined = undefined;
  return r;
}

std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::string out = "Model            Se       Sp       Acc      F_APC    F_NonAPC F_AVG\n";
  char line[160];
  for (const auto& [name, m] : rows) {
    std::snprintf(line, sizeof line, "%-16s %6.2f%%  %6.2f%%  %6.2f%%  %6.2f%%  %6.2f%%  %6.2f%%\n",
                  name.c_str(), 100.0 * m.se, 100.0 * m.sp, 100.0 * m.acc, 100.0 * m.f_apc,
                  100.0 * m.f_nonapc, 100.0 * m.f_avg);
    out += line;
  }
  return out;
}

EvalResult evaluate(const std::filesystem::path& checkpoint, const EvalDataset& ds,
                    const DiseaseRule& rule, const DelineatorConfig& dcfg, int jobs) {
  if (ds.x.size() != ds.y.size()) throw ShapeError("evaluate: dataset x/y length mismatch");
  if (ds.x.empty()) throw DataError("evaluate: empty dataset");

  const Checkpoint ck = read_checkpoint(checkpoint);
  EvalResult result;
  result.model_stage = ck.stage;
  result.probs.assign(ds.x.size(), 0.0);

  // each worker owns a model instance; records are split by index so the
  // output is identical to a serial run
  const int n_jobs = std::max(1, jobs);
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    if (ck.kind == "danet") {
      DanetModel model = load_danet(checkpoint);
      for (std::size_t i = lo; i < hi; ++i) result.probs[i] = danet_forward(model, ds.x[i]);
    } else if (ck.stage == "danet-h") {
      auto clf = load_classifier(checkpoint);
      for (std::size_t i = lo; i < hi; ++i) {
        const Tensor& x = ds.x[i];
        const std::span<const double> lead0(x.row(0), x.frames());
        const FiducialSet fid = delineate(lead0, ds.fs, dcfg);
        const AttentionWeights w1 = manual_weights(fid, rule, x.frames());
        result.probs[i] = danet_h_forward(*clf, x, w1);
      }
    } else {
      auto clf = load_classifier(checkpoint);
      for (std::size_t i = lo; i < hi; ++i) result.probs[i] = clf->forward_prob(ds.x[i]);
    }
  };

  if (n_jobs == 1) {
    run_range(0, ds.x.size());
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (ds.x.size() + n_jobs - 1) / n_jobs;
    for (int w = 0; w < n_jobs; ++w) {
      const std::size_t lo = std::min(ds.x.size(), std::size_t(w) * chunk);
      const std::size_t hi = std::min(ds.x.size(), lo + chunk);
      if (lo < hi) workers.emplace_back(run_range, lo, hi);
    }
    for (auto& t : workers) t.join();
  }

  result.report = metrics(confusion(result.probs, ds.y));
  return result;
}

}  // namespace danet
