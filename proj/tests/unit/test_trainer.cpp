#include <doctest.h>

#include <cmath>

#include "scotti/labeler.hpp"
#include "scotti/trainer.hpp"

using namespace scotti;

namespace {

// small but full-frame model so it can consume generator output directly
ScottiConfig small_config(int window = 8) {
  ScottiConfig c;
  c.window = window;
  c.embed_dim = 32;
  c.joints = 19;
  c.conv1_channels = 4;
  c.conv2_channels = 8;
  c.layers = 1;
  c.heads = 2;
  c.ff_mult = 2;
  c.head_hidden = 16;
  return c;
}

SequenceSet tiny_dataset(const std::vector<std::string>& subjects,
                         const std::vector<ActionClass>& actions, int cycles, uint64_t seed) {
  SequenceSet set;
  for (size_t s = 0; s < subjects.size(); ++s) {
    SubjectStyle style = SubjectStyle::sample(seed, int(s));
    for (ActionClass action : actions) {
      auto gen = generate_synthetic(action, cycles, 16, style, Rng::mix(seed, s * 131 + int(action)),
                                    subjects[s]);
      SequenceRecord rec;
      rec.tactile = std::move(gen.tactile);
      rec.pose = std::move(gen.pose);
      rec.labels = label_sequence(rec.pose, action);
      set.records.push_back(std::move(rec));
    }
  }
  return set;
}

}  // namespace

TEST_CASE("lr schedule steps down by half every lr_step_epochs") {
  TrainConfig c;
  CHECK(c.lr_at(0) == doctest::Approx(1e-4));
  CHECK(c.lr_at(9) == doctest::Approx(1e-4));
  CHECK(c.lr_at(10) == doctest::Approx(5e-5));
  CHECK(c.lr_at(19) == doctest::Approx(5e-5));
  CHECK(c.lr_at(20) == doctest::Approx(2.5e-5));
}

TEST_CASE("train config json round-trip and validation") {
  TrainConfig c;
  c.epochs = 3;
  c.tasks.pose = false;
  c.weights.progress = 0.5;
  TrainConfig back = TrainConfig::from_json_string(c.to_json_string());
  CHECK(back.epochs == 3);
  CHECK_FALSE(back.tasks.pose);
  CHECK(back.weights.progress == 0.5);

  TrainConfig bad;
  bad.tasks = {false, false, false};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.lr = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  auto model = ScottiModel::init(small_config(), 1);
  auto state = AdamState::init(model);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  auto before = model.conv1_w.values();
  for (auto& [name, t] : model.params()) t->ensure_grad();  // all-zero grads
  adam_step(model, state, cfg, cfg.lr);
  CHECK(model.conv1_w.values() == before);
}

TEST_CASE("adam: first-step magnitude is the learning rate") {
  auto model = ScottiModel::init(small_config(), 2);
  auto state = AdamState::init(model);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.0;
  auto before = model.proj_w.values();
  for (auto& [name, t] : model.params()) {
    t->ensure_grad();
    for (int64_t i = 0; i < t->numel(); ++i) t->grad()[i] = 1e-3f;  // constant gradient
  }
  adam_step(model, state, cfg, cfg.lr);
  for (int64_t i = 0; i < 40; ++i) {
    const double step = double(before[size_t(i)]) - double(model.proj_w[i]);
    CHECK(std::abs(step - cfg.lr) < 1e-6);
  }
}

TEST_CASE("adam: converges on a quadratic bowl") {
  auto model = ScottiModel::init(small_config(), 3);
  auto state = AdamState::init(model);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.0;
  // use one small parameter tensor as the optimization variable
  Tensor& x = model.conv2_b;  // 8 elements
  double norm = 0;
  Rng rng(5);
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = float(rng.uniform(-1, 1));
  for (int64_t i = 0; i < x.numel(); ++i) norm += x[i] * x[i];
  const float inv = float(1.0 / std::sqrt(norm));
  for (int64_t i = 0; i < x.numel(); ++i) x[i] *= inv;  // start at unit norm

  for (int step = 0; step < 500; ++step) {
    x.ensure_grad();
    for (int64_t i = 0; i < x.numel(); ++i) x.grad()[i] = 2.0f * x[i];
    adam_step(model, state, cfg, cfg.lr);
    x.zero_grad();
  }
  norm = 0;
  for (int64_t i = 0; i < x.numel(); ++i) norm += x[i] * x[i];
  CHECK(std::sqrt(norm) < 1e-3);
}

TEST_CASE("adam: non-finite gradients raise a numeric error naming the parameter") {
  auto model = ScottiModel::init(small_config(), 4);
  auto state = AdamState::init(model);
  TrainConfig cfg;
  model.cls_token.ensure_grad();
  model.cls_token.grad()[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam_step(model, state, cfg, cfg.lr), doctest::Contains("cls_token"),
                       NumericError);
}

TEST_CASE("overfitting a handful of samples collapses the loss") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::Walking, ActionClass::Squatting}, 3, 11);
  auto all = build_samples(set, 8);
  REQUIRE(all.size() >= 4);
  all.resize(4);

  auto model = ScottiModel::init(small_config(), 7);
  TrainConfig cfg;
  cfg.epochs = 200;  // one batch per epoch -> 200 steps
  cfg.batch_size = 4;
  cfg.lr = 1e-2;
  cfg.augment = false;
  cfg.seed = 5;
  RunReport report = train(model, set, all, cfg);
  REQUIRE(report.epochs.size() == 200);
  const double first = report.epochs.front().total;
  const double last = report.epochs.back().total;
  CHECK_MESSAGE(last * 10.0 <= first, "loss went from " << first << " to " << last);
}

TEST_CASE("task masking: disabled heads receive no gradient and no reads") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::Walking, ActionClass::Jumping}, 3, 13);
  auto samples = build_samples(set, 8);
  REQUIRE(!samples.empty());

  auto model = ScottiModel::init(small_config(), 9);
  const auto pose_w_before = model.pose_head.w1.values();
  const auto prog_w_before = model.progress_head.w1.values();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.tasks = {false, true, false};  // action only
  cfg.seed = 3;
  RunReport report = train(model, set, samples, cfg);

  CHECK(report.label_reads.pose == 0);
  CHECK(report.label_reads.progress == 0);
  CHECK(report.label_reads.action > 0);
  // untouched heads keep their exact initial values
  CHECK(model.pose_head.w1.values() == pose_w_before);
  CHECK(model.progress_head.w1.values() == prog_w_before);
}

TEST_CASE("explicit zero weights and task masks produce identical training") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::Walking}, 3, 17);
  auto samples = build_samples(set, 8);
  TrainConfig base;
  base.epochs = 2;
  base.seed = 21;

  auto model_a = ScottiModel::init(small_config(), 31);
  TrainConfig cfg_a = base;
  cfg_a.weights = {0.0, 1.0, 0.0};  // zero weights drop the terms outright
  train(model_a, set, samples, cfg_a);

  auto model_b = ScottiModel::init(small_config(), 31);
  TrainConfig cfg_b = base;
  cfg_b.tasks = {false, true, false};
  train(model_b, set, samples, cfg_b);

  auto pa = model_a.params(), pb = model_b.params();
  for (size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i].second->values() == pb[i].second->values());
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::StepUp}, 3, 19);
  auto samples = build_samples(set, 8);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 77;

  auto model_a = ScottiModel::init(small_config(), 1);
  RunReport rep_a = train(model_a, set, samples, cfg);
  auto model_b = ScottiModel::init(small_config(), 1);
  RunReport rep_b = train(model_b, set, samples, cfg);

  CHECK(rep_a.to_json_string() == rep_b.to_json_string());
  auto pa = model_a.params(), pb = model_b.params();
  for (size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i].second->values() == pb[i].second->values());
}

TEST_CASE("evaluation metrics are independent of sample order") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::Walking, ActionClass::Lunging}, 3, 23);
  auto samples = build_samples(set, 8);
  auto model = ScottiModel::init(small_config(), 13);

  EvalMetrics a = evaluate(model, set, samples, 8);
  std::vector<Sample> reversed(samples.rbegin(), samples.rend());
  EvalMetrics b = evaluate(model, set, reversed, 8);
  CHECK(a.mpjpe_mm == b.mpjpe_mm);
  CHECK(a.accuracy_pct == b.accuracy_pct);
  CHECK(a.progress_mse == b.progress_mse);
  CHECK(a.app == b.app);
}

TEST_CASE("run_protocol holds test subjects out and averages exactly") {
  std::vector<std::string> subjects{"S00", "S01", "S02"};
  SequenceSet set = tiny_dataset(subjects, {ActionClass::Walking, ActionClass::Jumping}, 3, 29);
  ScottiConfig mcfg = small_config();
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.seed = 9;

  ProtocolReport rep = run_protocol(set, 2, mcfg, tcfg);
  REQUIRE(rep.runs.size() == 2);
  for (size_t p = 0; p < rep.splits.size(); ++p) {
    for (const auto& t : rep.splits[p].test_subjects) CHECK_FALSE(rep.splits[p].in_train(t));
    CHECK(rep.splits[p].train_subjects.size() == 2);
    CHECK(rep.splits[p].test_subjects.size() == 1);
  }
  double mean = 0;
  for (const auto& r : rep.runs) mean += r.final.mpjpe_mm;
  CHECK(rep.average.mpjpe_mm == mean / double(rep.runs.size()));
}

TEST_CASE("region importance zeroes out exactly for never-loaded regions") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::Walking}, 3, 31);
  auto samples = build_samples(set, 8);
  auto model = ScottiModel::init(small_config(), 15);

  RegionReport rep = region_importance(model, set, samples, 4, 4, LossWeights{});
  REQUIRE(rep.regions.size() == 32);

  // the generator keeps rows 0..7 / 24..31 and cols 0..5 / 17..21 of each
  // foot identically zero; masking them is a no-op
  for (const auto& r : rep.regions) {
    const bool never_loaded = r.row_band == 0 || r.row_band == 3 || r.col_band == 0;
    if (never_loaded) CHECK(r.importance == 0.0);
  }
  // loaded central regions must matter on a fresh random model too
  double max_imp = 0;
  for (const auto& r : rep.regions) max_imp = std::max(max_imp, std::abs(r.importance));
  CHECK(max_imp > 0.0);
}

TEST_CASE("masking a full foot equals zeroing that half of the input") {
  SequenceSet set = tiny_dataset({"S00"}, {ActionClass::InPlaceWalking}, 3, 37);
  auto samples = build_samples(set, 8);
  auto model = ScottiModel::init(small_config(), 17);

  RegionReport rep = region_importance(model, set, samples, 1, 1, LossWeights{});
  REQUIRE(rep.regions.size() == 2);

  // zero the left half directly in the data and compare the baseline loss
  SequenceSet zeroed = set;
  for (auto& rec : zeroed.records)
    for (int64_t t = 0; t < rec.tactile.n; ++t)
      for (int64_t r = 0; r < rec.tactile.h; ++r)
        for (int64_t c = 0; c < rec.tactile.w2 / 2; ++c) rec.tactile.at(t, r, c) = 0.0f;
  auto zeroed_samples = build_samples(zeroed, 8);
  const double direct = eval_total_loss(model, zeroed, zeroed_samples, LossWeights{});
  CHECK(rep.regions[0].masked_loss == direct);
}

TEST_CASE("config hash is stable and sensitive") {
  ScottiConfig mcfg = small_config();
  TrainConfig tcfg;
  const std::string h1 = config_hash(mcfg, tcfg);
  CHECK(h1 == config_hash(mcfg, tcfg));
  tcfg.lr = 2e-4;
  CHECK(h1 != config_hash(mcfg, tcfg));
  CHECK(h1.size() == 16);
}
