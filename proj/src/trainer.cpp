#include "scotti/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "scotti/log.hpp"

namespace scotti {

double TrainConfig::lr_at(int epoch) const {
  double rate = lr;
  for (int e = lr_step_epochs; e <= epoch; e += lr_step_epochs) rate *= lr_decay;
  return rate;
}

void TrainConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (lr_step_epochs < 1) throw ConfigError("lr_step_epochs must be positive");
  if (!(lr_decay > 0)) throw ConfigError("lr_decay must be positive");
  if (max_shift < 0) throw ConfigError("max_shift must be >= 0");
  if (!tasks.any()) throw ConfigError("at least one task must be enabled");
}

std::string TrainConfig::to_json_string() const {
  nlohmann::json j;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["lr_step_epochs"] = lr_step_epochs;
  j["lr_decay"] = lr_decay;
  j["seed"] = seed;
  j["weights"] = {{"pose", weights.pose}, {"action", weights.action}, {"progress", weights.progress}};
  j["tasks"] = {{"pose", tasks.pose}, {"action", tasks.action}, {"progress", tasks.progress}};
  j["augment"] = augment;
  j["max_shift"] = max_shift;
  return j.dump();
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config json: ") + e.what());
  }
  TrainConfig c;
  auto get = [&](const nlohmann::json& src, const char* key, auto& into) {
    if (src.contains(key)) into = src.at(key).get<std::decay_t<decltype(into)>>();
  };
  get(j, "lr", c.lr);
  get(j, "weight_decay", c.weight_decay);
  get(j, "epochs", c.epochs);
  get(j, "batch_size", c.batch_size);
  get(j, "beta1", c.beta1);
  get(j, "beta2", c.beta2);
  get(j, "adam_eps", c.adam_eps);
  get(j, "lr_step_epochs", c.lr_step_epochs);
  get(j, "lr_decay", c.lr_decay);
  get(j, "seed", c.seed);
  if (j.contains("weights")) {
    get(j["weights"], "pose", c.weights.pose);
    get(j["weights"], "action", c.weights.action);
    get(j["weights"], "progress", c.weights.progress);
  }
  if (j.contains("tasks")) {
    get(j["tasks"], "pose", c.tasks.pose);
    get(j["tasks"], "action", c.tasks.action);
    get(j["tasks"], "progress", c.tasks.progress);
  }
  get(j, "augment", c.augment);
  get(j, "max_shift", c.max_shift);
  c.validate();
  return c;
}

AdamState AdamState::init(ScottiModel& model) {
  AdamState s;
  for (auto& [name, t] : model.params()) {
    s.m.emplace_back(size_t(t->numel()), 0.0f);
    s.v.emplace_back(size_t(t->numel()), 0.0f);
  }
  return s;
}

void adam_step(ScottiModel& model, AdamState& state, const TrainConfig& config, double lr_now) {
  auto named = model.params();
  if (named.size() != state.m.size()) throw ContractError("adam_step: state/model mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, double(state.step));
  for (size_t i = 0; i < named.size(); ++i) {
    auto& [name, tensor] = named[i];
    if (!tensor->has_grad()) continue;  // parameter did not participate this step
    float* p = tensor->data();
    const float* g = tensor->grad();
    float* m = state.m[i].data();
    float* v = state.v[i].data();
    const int64_t n = tensor->numel();
    for (int64_t j = 0; j < n; ++j) {
      if (!std::isfinite(g[j]))
        throw NumericError("non-finite gradient in parameter '" + name + "'");
      if (config.weight_decay != 0.0) p[j] -= float(lr_now * config.weight_decay) * p[j];
      m[j] = float(config.beta1) * m[j] + float(1.0 - config.beta1) * g[j];
      v[j] = float(config.beta2) * v[j] + float(1.0 - config.beta2) * g[j] * g[j];
      const double mhat = double(m[j]) / bc1;
      const double vhat = double(v[j]) / bc2;
      p[j] -= float(lr_now * mhat / (std::sqrt(vhat) + config.adam_eps));
    }
    if (!all_finite(*tensor))
      throw NumericError("non-finite value in parameter '" + name + "' after update");
  }
}

std::vector<Sample> build_samples(const SequenceSet& set, int window) {
  std::vector<Sample> out;
  for (size_t i = 0; i < set.records.size(); ++i) {
    const SequenceRecord& rec = set.records[i];
    auto samples = make_windows(rec.tactile, rec.pose, rec.labels, window, int(i));
    out.insert(out.end(), samples.begin(), samples.end());
  }
  return out;
}

std::vector<Sample> filter_by_subjects(const SequenceSet& set, const std::vector<Sample>& samples,
                                       const std::vector<std::string>& subjects) {
  std::vector<Sample> out;
  for (const Sample& s : samples) {
    const std::string& subject = set.records[size_t(s.seq)].tactile.subject_id;
    if (std::find(subjects.begin(), subjects.end(), subject) != subjects.end()) out.push_back(s);
  }
  return out;
}

namespace {

struct RegionMask {
  int foot = 0;
  int64_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;  // cols within the foot half
};

struct BatchData {
  Tensor input;
  Tensor pose_target;
  std::vector<int> class_targets;
  Tensor progress_target;
  int64_t count = 0;
};

BatchData assemble_batch(const SequenceSet& set, const std::vector<Sample>& samples,
                         const std::vector<int64_t>& order, size_t begin, size_t count,
                         const ScottiConfig& mcfg, const TaskMask& tasks, LabelReads* reads,
                         Rng* aug_rng, int max_shift, const RegionMask* region) {
  BatchData out;
  out.count = int64_t(count);
  const int64_t t = mcfg.window, h = mcfg.frame_h, w2 = mcfg.frame_w2();
  out.input = Tensor::zeros({int64_t(count), t, h, w2});
  out.pose_target = Tensor::zeros({int64_t(count), mcfg.joints, 3});
  out.progress_target = Tensor::zeros({int64_t(count)});
  out.class_targets.assign(count, 0);

  for (size_t b = 0; b < count; ++b) {
    const Sample& s = samples[size_t(order[begin + b])];
    const TactileSequence& seq = set.records[size_t(s.seq)].tactile;
    int dy = 0, dx = 0;
    if (aug_rng && max_shift > 0) {
      dy = int(aug_rng->uniform_int(-max_shift, max_shift));
      dx = int(aug_rng->uniform_int(-max_shift, max_shift));
    }
    float* dst = out.input.data() + int64_t(b) * t * h * w2;
    copy_window_shifted(seq, s.t, int(t), dy, dx, dst);
    if (region) {
      const int64_t base_c = region->foot * (w2 / 2);
      for (int64_t f = 0; f < t; ++f)
        for (int64_t r = region->r0; r < region->r1; ++r)
          for (int64_t c = region->c0; c < region->c1; ++c)
            dst[(f * h + r) * w2 + base_c + c] = 0.0f;
    }
    if (tasks.pose) {
      std::copy(s.pose_target.begin(), s.pose_target.end(),
                out.pose_target.data() + int64_t(b) * mcfg.joints * 3);
      if (reads) reads->pose += 1;
    }
    if (tasks.action) {
      out.class_targets[b] = s.action;
      if (reads) reads->action += 1;
    }
    if (tasks.progress) {
      out.progress_target[int64_t(b)] = s.progress;
      if (reads) reads->progress += 1;
    }
  }
  return out;
}

LossWeights effective_weights(const LossWeights& w, const TaskMask& tasks) {
  LossWeights e = w;
  if (!tasks.pose) e.pose = 0.0;
  if (!tasks.action) e.action = 0.0;
  if (!tasks.progress) e.progress = 0.0;
  return e;
}

}  // namespace

RunReport train(ScottiModel& model, const SequenceSet& set, const std::vector<Sample>& samples,
                const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw ContractError("train: no samples");
  const ScottiConfig& mcfg = model.config;
  const LossWeights weights = effective_weights(config.weights, config.tasks);
  if (weights.pose == 0.0 && weights.action == 0.0 && weights.progress == 0.0)
    throw ConfigError("train: every enabled task has weight zero");

  RunReport report;
  report.seed = config.seed;
  report.config_hash = config_hash(mcfg, config);

  AdamState state = AdamState::init(model);
  std::vector<int64_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int64_t(i);

  Rng dropout_rng(Rng::mix(config.seed, 0x44524fULL));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr_now = config.lr_at(epoch);
    Rng shuffle_rng(Rng::mix(config.seed, 0x534855ULL + uint64_t(epoch)));
    shuffle_rng.shuffle(order.begin(), order.end());
    Rng aug_rng(Rng::mix(config.seed, 0x415547ULL + uint64_t(epoch)));

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_now;
    int64_t seen = 0;
    for (size_t begin = 0; begin < samples.size(); begin += size_t(config.batch_size)) {
      const size_t count = std::min(size_t(config.batch_size), samples.size() - begin);
      BatchData batch = assemble_batch(set, samples, order, begin, count, mcfg, config.tasks,
                                       &report.label_reads,
                                       config.augment ? &aug_rng : nullptr, config.max_shift,
                                       nullptr);
      try {
        Tape tape;
        ForwardResult<float> fwd =
            model.forward(&tape, batch.input, mcfg.dropout > 0.0 ? &dropout_rng : nullptr);
        LossBreakdown<float> loss =
            total_loss(&tape, fwd.pose, fwd.logits, fwd.progress, batch.pose_target,
                       batch.class_targets, batch.progress_target, weights);
        tape.backward(loss.total);
        adam_step(model, state, config, lr_now);
        model.zero_grads();
        const double w = double(count);
        stats.total += double(loss.total.item()) * w;
        stats.pose += loss.pose * w;
        stats.action += loss.action_ce * w;
        stats.progress += loss.progress_mse * w;
        seen += int64_t(count);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                           ", batch starting at sample " + std::to_string(begin) + ")");
      }
    }
    stats.total /= double(seen);
    stats.pose /= double(seen);
    stats.action /= double(seen);
    stats.progress /= double(seen);
    report.epochs.push_back(stats);
    log_info("epoch " + std::to_string(epoch) + " total " + std::to_string(stats.total) + " lr " +
             std::to_string(lr_now));
  }
  return report;
}

namespace {

double sorted_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / double(values.size());
}

EvalMetrics evaluate_masked(const ScottiModel& model, const SequenceSet& set,
                            const std::vector<Sample>& samples, int batch_size,
                            const RegionMask* region) {
  if (samples.empty()) throw ContractError("evaluate: no samples");
  const ScottiConfig& mcfg = model.config;
  std::vector<int64_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int64_t(i);

  std::vector<double> per_sample_mpjpe;
  std::vector<double> progress_pred, progress_target;
  std::vector<double> logits_all;
  std::vector<int> targets_all;
  TaskMask all_tasks;

  for (size_t begin = 0; begin < samples.size(); begin += size_t(batch_size)) {
    const size_t count = std::min(size_t(batch_size), samples.size() - begin);
    BatchData batch = assemble_batch(set, samples, order, begin, count, mcfg, all_tasks, nullptr,
                                     nullptr, 0, region);
    ForwardResult<float> fwd = const_cast<ScottiModel&>(model).forward(nullptr, batch.input);
    for (size_t b = 0; b < count; ++b) {
      const Sample& s = samples[begin + b];
      std::vector<double> pred(size_t(mcfg.joints) * 3), target(size_t(mcfg.joints) * 3);
      for (int64_t k = 0; k < mcfg.joints * 3; ++k) {
        pred[size_t(k)] = double(fwd.pose[int64_t(b) * mcfg.joints * 3 + k]);
        target[size_t(k)] = double(s.pose_target[size_t(k)]);
      }
      per_sample_mpjpe.push_back(mpjpe(pred, target, mcfg.joints));
      for (int c = 0; c < mcfg.n_classes; ++c)
        logits_all.push_back(double(fwd.logits[int64_t(b) * mcfg.n_classes + c]));
      targets_all.push_back(s.action);
      progress_pred.push_back(double(fwd.progress[int64_t(b)]));
      progress_target.push_back(double(s.progress));
    }
  }

  EvalMetrics out;
  out.n_samples = int64_t(samples.size());
  out.mpjpe_mm = sorted_mean(per_sample_mpjpe);
  ClassificationReport rep = classification_report(logits_all, mcfg.n_classes, targets_all);
  out.accuracy_pct = 100.0 * rep.accuracy;
  out.confusion = std::move(rep.confusion);
  std::vector<double> sq(progress_pred.size());
  for (size_t i = 0; i < sq.size(); ++i) {
    const double d = progress_pred[i] - progress_target[i];
    sq[i] = d * d;
  }
  out.progress_mse = sorted_mean(sq);
  out.pm_curve = app_curve(progress_pred, progress_target);
  out.app = out.pm_curve.app;
  return out;
}

double mean_total_loss(const ScottiModel& model, const SequenceSet& set,
                       const std::vector<Sample>& samples, int batch_size,
                       const LossWeights& weights, const RegionMask* region) {
  if (samples.empty()) throw ContractError("mean_total_loss: no samples");
  const ScottiConfig& mcfg = model.config;
  std::vector<int64_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int64_t(i);
  TaskMask all_tasks;
  double acc = 0.0;
  for (size_t begin = 0; begin < samples.size(); begin += size_t(batch_size)) {
    const size_t count = std::min(size_t(batch_size), samples.size() - begin);
    BatchData batch = assemble_batch(set, samples, order, begin, count, mcfg, all_tasks, nullptr,
                                     nullptr, 0, region);
    ForwardResult<float> fwd = const_cast<ScottiModel&>(model).forward(nullptr, batch.input);
    LossBreakdown<float> loss =
        total_loss<float>(nullptr, fwd.pose, fwd.logits, fwd.progress, batch.pose_target,
                          batch.class_targets, batch.progress_target, weights);
    acc += double(loss.total.item()) * double(count);
  }
  return acc / double(samples.size());
}

nlohmann::json metrics_json(const EvalMetrics& m) {
  nlohmann::json j;
  j["mpjpe_mm"] = m.mpjpe_mm;
  j["accuracy_pct"] = m.accuracy_pct;
  j["app"] = m.app;
  j["progress_mse"] = m.progress_mse;
  j["n_samples"] = m.n_samples;
  return j;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EvalMetrics evaluate(const ScottiModel& model, const SequenceSet& set,
                     const std::vector<Sample>& samples, int batch_size) {
  return evaluate_masked(model, set, samples, batch_size, nullptr);
}

double eval_total_loss(const ScottiModel& model, const SequenceSet& set,
                       const std::vector<Sample>& samples, const LossWeights& weights,
                       int batch_size) {
  return mean_total_loss(model, set, samples, batch_size, weights, nullptr);
}

std::string RunReport::to_json_string() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["split_id"] = split_id;
  j["config_hash"] = config_hash;
  j["epochs"] = nlohmann::json::array();
  for (const EpochStats& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"total", e.total},
                           {"pose", e.pose},
                           {"action", e.action},
                           {"progress", e.progress},
                           {"lr", e.lr}});
  }
  j["final"] = metrics_json(final);
  j["label_reads"] = {{"pose", label_reads.pose},
                      {"action", label_reads.action},
                      {"progress", label_reads.progress}};
  return j.dump(2) + "\n";
}

std::string RunReport::loss_csv() const {
  std::ostringstream os;
  os << "epoch,total,pose,action,progress,lr\n";
  for (const EpochStats& e : epochs)
    os << e.epoch << "," << fmt_double(e.total) << "," << fmt_double(e.pose) << ","
       << fmt_double(e.action) << "," << fmt_double(e.progress) << "," << fmt_double(e.lr) << "\n";
  return os.str();
}

ProtocolReport run_protocol(const SequenceSet& set, int n_partitions, const ScottiConfig& mcfg,
                            const TrainConfig& tcfg,
                            const std::function<void(const RunReport&)>& on_split) {
  std::vector<std::string> subjects;
  for (const SequenceRecord& r : set.records) subjects.push_back(r.tactile.subject_id);
  ProtocolReport report;
  report.splits = split_subjects(subjects, n_partitions, tcfg.seed);
  std::vector<Sample> samples = build_samples(set, mcfg.window);

  for (int p = 0; p < n_partitions; ++p) {
    const SubjectSplit& split = report.splits[size_t(p)];
    std::vector<Sample> train_samples = filter_by_subjects(set, samples, split.train_subjects);
    std::vector<Sample> test_samples = filter_by_subjects(set, samples, split.test_subjects);
    if (train_samples.empty() || test_samples.empty())
      throw ContractError("run_protocol: split " + std::to_string(p) +
                          " has an empty train or test side");
    log_info("partition " + std::to_string(p) + ": " + std::to_string(train_samples.size()) +
             " train / " + std::to_string(test_samples.size()) + " test samples");
    ScottiModel model = ScottiModel::init(mcfg, Rng::mix(tcfg.seed, 1000003ULL * uint64_t(p + 1)));
    RunReport run = train(model, set, train_samples, tcfg);
    run.split_id = p;
    run.final = evaluate(model, set, test_samples, tcfg.batch_size);
    if (on_split) on_split(run);
    report.runs.push_back(std::move(run));
  }

  for (const RunReport& r : report.runs) {
    report.average.mpjpe_mm += r.final.mpjpe_mm;
    report.average.accuracy_pct += r.final.accuracy_pct;
    report.average.app += r.final.app;
    report.average.progress_mse += r.final.progress_mse;
    report.average.n_samples += r.final.n_samples;
  }
  const double n = double(report.runs.size());
  report.average.mpjpe_mm /= n;
  report.average.accuracy_pct /= n;
  report.average.app /= n;
  report.average.progress_mse /= n;
  return report;
}

std::string ProtocolReport::to_json_string() const {
  nlohmann::json j;
  j["columns"] = {"mpjpe_mm", "accuracy_pct", "app", "progress_mse"};
  j["average"] = metrics_json(average);
  j["average"].erase("n_samples");
  j["partitions"] = nlohmann::json::array();
  for (size_t p = 0; p < runs.size(); ++p) {
    nlohmann::json run = nlohmann::json::parse(runs[p].to_json_string());
    run["train_subjects"] = splits[p].train_subjects;
    run["test_subjects"] = splits[p].test_subjects;
    j["partitions"].push_back(run);
  }
  return j.dump(2) + "\n";
}

AblationTable task_ablation(const SequenceSet& set, int n_partitions, const ScottiConfig& mcfg,
                            const TrainConfig& tcfg) {
  struct Setup {
    const char* name;
    TaskMask mask;
  };
  const Setup setups[4] = {
      {"pose-only", {true, false, false}},
      {"action-only", {false, true, false}},
      {"progress-only", {false, false, true}},
      {"all-tasks", {true, true, true}},
  };
  AblationTable table;
  for (const Setup& s : setups) {
    TrainConfig cfg = tcfg;
    cfg.tasks = s.mask;
    log_info(std::string("ablation: ") + s.name);
    ProtocolReport rep = run_protocol(set, n_partitions, mcfg, cfg);
    table.rows.push_back({s.name, s.mask, rep.average});
  }
  const EvalMetrics& multi = table.rows[3].metrics;
  auto direction = [](double multi_v, double single_v, bool lower_better) {
    const bool better = lower_better ? multi_v <= single_v : multi_v >= single_v;
    return std::string(better ? "improves on" : "trails");
  };
  table.notes.push_back("all-tasks MPJPE " + fmt_double(multi.mpjpe_mm) + " " +
                        direction(multi.mpjpe_mm, table.rows[0].metrics.mpjpe_mm, true) +
                        " pose-only " + fmt_double(table.rows[0].metrics.mpjpe_mm));
  table.notes.push_back("all-tasks accuracy " + fmt_double(multi.accuracy_pct) + " " +
                        direction(multi.accuracy_pct, table.rows[1].metrics.accuracy_pct, false) +
                        " action-only " + fmt_double(table.rows[1].metrics.accuracy_pct));
  table.notes.push_back("all-tasks APP " + fmt_double(multi.app) + " " +
                        direction(multi.app, table.rows[2].metrics.app, false) +
                        " progress-only " + fmt_double(table.rows[2].metrics.app));
  table.notes.push_back("all-tasks progress MSE " + fmt_double(multi.progress_mse) + " " +
                        direction(multi.progress_mse, table.rows[2].metrics.progress_mse, true) +
                        " progress-only " + fmt_double(table.rows[2].metrics.progress_mse));
  return table;
}

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  os << "model,mpjpe_mm,accuracy_pct,app,progress_mse\n";
  for (const AblationRow& r : rows) {
    os << r.name << ",";
    os << (r.mask.pose ? fmt_double(r.metrics.mpjpe_mm) : "-") << ",";
    os << (r.mask.action ? fmt_double(r.metrics.accuracy_pct) : "-") << ",";
    os << (r.mask.progress ? fmt_double(r.metrics.app) : "-") << ",";
    os << (r.mask.progress ? fmt_double(r.metrics.progress_mse) : "-") << "\n";
  }
  return os.str();
}

std::string AblationTable::to_json_string() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const AblationRow& r : rows) {
    nlohmann::json row;
    row["name"] = r.name;
    row["tasks"] = {{"pose", r.mask.pose}, {"action", r.mask.action}, {"progress", r.mask.progress}};
    nlohmann::json metrics;
    if (r.mask.pose) metrics["mpjpe_mm"] = r.metrics.mpjpe_mm;
    if (r.mask.action) metrics["accuracy_pct"] = r.metrics.accuracy_pct;
    if (r.mask.progress) {
      metrics["app"] = r.metrics.app;
      metrics["progress_mse"] = r.metrics.progress_mse;
    }
    row["metrics"] = metrics;
    j["rows"].push_back(row);
  }
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

RegionReport region_importance(const ScottiModel& model, const SequenceSet& set,
                               const std::vector<Sample>& samples, int grid_rows, int grid_cols,
                               const LossWeights& weights, int batch_size) {
  if (grid_rows < 1 || grid_cols < 1) throw ConfigError("region grid must be at least 1x1");
  const ScottiConfig& mcfg = model.config;
  RegionReport report;
  report.baseline_loss = mean_total_loss(model, set, samples, batch_size, weights, nullptr);
  for (int foot = 0; foot < 2; ++foot)
    for (int rb = 0; rb < grid_rows; ++rb)
      for (int cb = 0; cb < grid_cols; ++cb) {
        RegionMask mask;
        mask.foot = foot;
        mask.r0 = int64_t(rb) * mcfg.frame_h / grid_rows;
        mask.r1 = int64_t(rb + 1) * mcfg.frame_h / grid_rows;
        mask.c0 = int64_t(cb) * mcfg.foot_w / grid_cols;
        mask.c1 = int64_t(cb + 1) * mcfg.foot_w / grid_cols;
        const double masked = mean_total_loss(model, set, samples, batch_size, weights, &mask);
        RegionImportance ri;
        ri.foot = foot;
        ri.row_band = rb;
        ri.col_band = cb;
        ri.r0 = mask.r0;
        ri.r1 = mask.r1;
        ri.c0 = mask.c0;
        ri.c1 = mask.c1;
        ri.masked_loss = masked;
        ri.importance = masked - report.baseline_loss;
        report.regions.push_back(ri);
      }
  return report;
}

std::string RegionReport::to_csv() const {
  std::ostringstream os;
  os << "# baseline_loss=" << fmt_double(baseline_loss) << "\n";
  os << "foot,row_band,col_band,rows,cols,importance\n";
  for (const RegionImportance& r : regions)
    os << (r.foot == 0 ? "left" : "right") << "," << r.row_band << "," << r.col_band << ","
       << r.r0 << ":" << r.r1 << "," << r.c0 << ":" << r.c1 << "," << fmt_double(r.importance)
       << "\n";
  return os.str();
}

std::string config_hash(const ScottiConfig& mcfg, const TrainConfig& tcfg) {
  const std::string text = mcfg.to_json_string() + "\n" + tcfg.to_json_string();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace scotti
