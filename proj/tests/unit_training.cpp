#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "danet/training.hpp"
#include "oracles.hpp"

using namespace danet;

namespace {

constexpr std::size_t kFrames = 36;

EnhancerConfig mini_enhancer() {
  EnhancerConfig cfg;
  cfg.n_dilated_layers = 2;
  cfg.filters = 3;
  cfg.kernel = 5;
  cfg.dilation = 2;
  return cfg;
}

ClassifierConfig mini_classifier() {
  ClassifierConfig cfg;
  cfg.in_frames = kFrames;
  cfg.stages = {{5, 2, 3}, {3, 3, 2}};
  cfg.hidden = 4;
  return cfg;
}

// learnable toy task: class decides where the bump sits
std::vector<LabeledSample> toy_labeled(std::size_t n, std::uint64_t seed,
                                       bool labels_random = false) {
  Rng rng(seed);
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = (i % 3 == 0) ? 1.0 : 0.0;
    Tensor x = Tensor::zeros({1, kFrames});
    for (double& v : x.v) v = 0.1 * rng.gaussian();
    const std::size_t at = y > 0.5 ? 8 : 26;
    for (std::size_t t = at - 3; t <= at + 3; ++t) x.v[t] += 1.0;
    const double label = labels_random ? ((rng.u64() % 10) < 3 ? 1.0 : 0.0) : y;
    out.push_back({std::move(x), label});
  }
  return out;
}

std::vector<PretrainSample> toy_pretrain(std::size_t n, std::uint64_t seed,
                                         bool constant_targets = false) {
  Rng rng(seed);
  std::vector<PretrainSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x = Tensor::zeros({1, kFrames});
    for (double& v : x.v) v = 0.1 * rng.gaussian();
    const std::size_t at = 6 + (i % 4) * 7;
    for (std::size_t t = at; t < at + 4; ++t) x.v[t] += 1.2;
    AttentionWeights w(kFrames, 0.3);
    if (!constant_targets) {
      for (std::size_t t = at; t < at + 4; ++t) w[t] = 1.0;
    }
    out.push_back({std::move(x), std::move(w)});
  }
  return out;
}

std::vector<double> flat_params(std::vector<Parameter*> params) {
  std::vector<double> out;
  for (const Parameter* p : params) {
    out.insert(out.end(), p->value.v.begin(), p->value.v.end());
  }
  return out;
}

TrainConfig fast_cfg(std::size_t epochs, std::uint64_t seed = 7) {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

DanetModel staged_danet(std::uint64_t seed) {
  DanetModel model(mini_enhancer(), mini_classifier(), seed);
  model.stage = "stage-1";
  model.enhancer.stage = "stage-1";
  return model;
}

}  // namespace

TEST_CASE("pretrain: overfitting one record reduces MSE") {
  Enhancer enh(mini_enhancer(), 17);
  const auto data = toy_pretrain(1, 4);
  const StageReport rep = pretrain_enhancer(enh, data, nullptr, fast_cfg(200));
  REQUIRE(rep.epoch_loss.size() == 200);
  CHECK(rep.epoch_loss.back() < rep.epoch_loss.front());
  CHECK(enh.stage == "stage-1");
  CHECK(rep.stage == "stage-1");
}

TEST_CASE("pretrain: constant 0.3 targets converge to constant output") {
  Enhancer enh(mini_enhancer(), 23);
  const auto data = toy_pretrain(8, 5, /*constant_targets=*/true);
  TrainConfig cfg = fast_cfg(400);
  cfg.lr = 1e-2;
  const StageReport rep = pretrain_enhancer(enh, data, nullptr, cfg);
  CHECK(rep.epoch_loss.back() < 1e-3);
}

TEST_CASE("pretrain: seeded determinism of the loss curve") {
  const auto data = toy_pretrain(6, 9);
  Enhancer a(mini_enhancer(), 31);
  Enhancer b(mini_enhancer(), 31);
  const StageReport ra = pretrain_enhancer(a, data, nullptr, fast_cfg(20, 3));
  const StageReport rb = pretrain_enhancer(b, data, nullptr, fast_cfg(20, 3));
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(flat_params(a.params()) == flat_params(b.params()));
}

TEST_CASE("pretrain: mismatched weight length raises DataError") {
  Enhancer enh(mini_enhancer(), 1);
  std::vector<PretrainSample> bad = toy_pretrain(1, 1);
  bad[0].w1.pop_back();
  CHECK_THROWS_AS(pretrain_enhancer(enh, bad, nullptr, fast_cfg(1)), DataError);
}

TEST_CASE("stage 2: freezes the enhancer bitwise, classifier moves") {
  DanetModel model = staged_danet(41);
  const auto data = toy_labeled(12, 2);

  const std::vector<double> enh_before = flat_params(model.enhancer.params());
  const std::vector<double> clf_before = flat_params(model.classifier.params());

  const StageReport rep = train_stage2(model, data, nullptr, fast_cfg(5));
  CHECK(rep.stage == "stage-2");
  CHECK(model.stage == "stage-2");

  CHECK(flat_params(model.enhancer.params()) == enh_before);  // bitwise
  CHECK(flat_params(model.classifier.params()) != clf_before);
}

TEST_CASE("stage 2: requires a stage-1 model") {
  DanetModel fresh(mini_enhancer(), mini_classifier(), 3);
  const auto data = toy_labeled(6, 2);
  CHECK_THROWS_AS(train_stage2(fresh, data, nullptr, fast_cfg(1)), SequencingError);

  DanetModel done = staged_danet(4);
  done.stage = "stage-3";
  CHECK_THROWS_AS(train_stage2(done, data, nullptr, fast_cfg(1)), SequencingError);
}

TEST_CASE("stage 2: loss decreases on a 20-record set (median over 5 seeds)") {
  std::vector<double> deltas;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DanetModel model = staged_danet(seed * 13);
    const auto data = toy_labeled(20, seed);
    const StageReport rep = train_stage2(model, data, nullptr, fast_cfg(100, seed));
    deltas.push_back(rep.epoch_loss.front() - rep.epoch_loss.back());
  }
  std::sort(deltas.begin(), deltas.end());
  CHECK(deltas[2] > 0.0);  // median improvement
}

TEST_CASE("stage 3: all parameters move, sequencing enforced") {
  DanetModel model = staged_danet(51);
  const auto data = toy_labeled(12, 3);
  train_stage2(model, data, nullptr, fast_cfg(3));

  const std::vector<double> enh_before = flat_params(model.enhancer.params());
  const StageReport rep = train_stage3(model, data, nullptr, fast_cfg(5));
  CHECK(rep.stage == "stage-3");
  CHECK(model.stage == "stage-3");
  CHECK(flat_params(model.enhancer.params()) != enh_before);  // unfrozen

  CHECK_THROWS_AS(train_stage3(model, data, nullptr, fast_cfg(1)), SequencingError);
}

TEST_CASE("stage 3: lr=0 leaves the stage-2 model untouched") {
  DanetModel model = staged_danet(61);
  const auto data = toy_labeled(9, 4);
  train_stage2(model, data, nullptr, fast_cfg(3));
  const std::vector<double> before = flat_params(model.params());

  TrainConfig cfg = fast_cfg(3);
  cfg.lr = 1e-300;  // null update (validate() requires lr > 0)
  train_stage3(model, data, nullptr, cfg);
  const std::vector<double> after = flat_params(model.params());
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
  }
}

TEST_CASE("danet-h with w1 == 1 matches the baseline trajectory bitwise") {
  const auto labeled = toy_labeled(15, 6);
  std::vector<WeightedSample> weighted;
  for (const auto& s : labeled) {
    weighted.push_back({s.x, AttentionWeights(kFrames, 1.0), s.y});
  }

  Classifier ch(mini_classifier(), 71);
  Classifier cb(mini_classifier(), 71);
  const StageReport rh = train_danet_h(ch, weighted, nullptr, fast_cfg(8, 5));
  const StageReport rb = train_baseline(cb, labeled, nullptr, fast_cfg(8, 5));

  CHECK(rh.epoch_loss == rb.epoch_loss);
  CHECK(flat_params(ch.params()) == flat_params(cb.params()));
}

TEST_CASE("danet-h: missing w1 raises DataError") {
  Classifier clf(mini_classifier(), 1);
  std::vector<WeightedSample> bad = {{Tensor::zeros({1, kFrames}), AttentionWeights{}, 1.0}};
  CHECK_THROWS_AS(train_danet_h(clf, bad, nullptr, fast_cfg(1)), DataError);
}

TEST_CASE("baseline: seeded runs are bit-identical; loss decreases") {
  const auto data = toy_labeled(18, 7);
  Classifier a(mini_classifier(), 81);
  Classifier b(mini_classifier(), 81);
  const StageReport ra = train_baseline(a, data, nullptr, fast_cfg(40, 9));
  const StageReport rb = train_baseline(b, data, nullptr, fast_cfg(40, 9));
  CHECK(flat_params(a.params()) == flat_params(b.params()));
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(ra.epoch_loss.back() < ra.epoch_loss.front());
}

TEST_CASE("baseline on label-independent data converges to majority rate") {
  // labels are random (30% positive), signal carries no class information
  const auto data = toy_labeled(60, 8, /*labels_random=*/true);
  Classifier clf(mini_classifier(), 91);
  train_baseline(clf, data, nullptr, fast_cfg(60, 11));

  std::size_t correct = 0, majority = 0;
  for (const auto& s : data) {
    const double p = clf.forward_prob(s.x);
    const bool pred_apc = p > 0.5;
    if (pred_apc == (s.y > 0.5)) ++correct;
    if (s.y < 0.5) ++majority;
  }
  const double acc = double(correct) / double(data.size());
  const double base = double(majority) / double(data.size());
  CHECK(acc == doctest::Approx(base).epsilon(0.06));
}

TEST_CASE("numeric blow-up aborts with NumericError") {
  Enhancer enh(mini_enhancer(), 3);
  const auto data = toy_pretrain(4, 2);
  TrainConfig cfg = fast_cfg(50);
  cfg.lr = 1e180;  // diverges to inf within a few steps
  CHECK_THROWS_AS(pretrain_enhancer(enh, data, nullptr, cfg), NumericError);
}

TEST_CASE("epoch hook fires on the checkpoint_every grid") {
  Enhancer enh(mini_enhancer(), 5);
  const auto data = toy_pretrain(4, 3);
  TrainConfig cfg = fast_cfg(10);
  cfg.checkpoint_every = 4;
  std::vector<std::size_t> fired;
  pretrain_enhancer(enh, data, nullptr, cfg, [&](std::size_t e) { fired.push_back(e); });
  CHECK(fired == std::vector<std::size_t>{4, 8});
}

TEST_CASE("validation reports: stage-1 MSE and stage-2 metrics") {
  Enhancer enh(mini_enhancer(), 7);
  const auto train = toy_pretrain(8, 5);
  const auto val = toy_pretrain(4, 6);
  const StageReport rep = pretrain_enhancer(enh, train, &val, fast_cfg(10));
  REQUIRE(rep.validation_mse.has_value());
  CHECK(*rep.validation_mse >= 0.0);

  DanetModel model = staged_danet(9);
  const auto ltrain = toy_labeled(12, 1);
  const auto lval = toy_labeled(6, 2);
  const StageReport r2 = train_stage2(model, ltrain, &lval, fast_cfg(5));
  REQUIRE(r2.validation.has_value());
  CHECK(r2.validation->acc >= 0.0);
  CHECK(r2.validation->acc <= 1.0);
}
