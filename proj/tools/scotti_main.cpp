// scotti command line: synthetic data generation, progress labeling,
// training, evaluation and the ablation experiments, all file-driven.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scotti/dataset.hpp"
#include "scotti/labeler.hpp"
#include "scotti/log.hpp"
#include "scotti/losses.hpp"
#include "scotti/model.hpp"
#include "scotti/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scotti;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << text;
  if (!out) throw FormatError(path + ": write failed");
}

std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Every subcommand records its resolved configuration and input hashes before
// doing any work; re-running with the same manifest inputs reproduces the
// outputs byte for byte.
void write_manifest(const std::string& out_dir_or_file, bool out_is_dir,
                    const std::string& subcommand, const json& resolved_config, uint64_t seed,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_paths) {
  json m;
  m["tool_version"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["config"] = resolved_config;
  m["seed"] = seed;
  m["inputs"] = json::array();
  for (const std::string& p : input_paths)
    m["inputs"].push_back({{"path", p}, {"hash", "fnv1a:" + fnv1a_hex(read_text(p))}});
  m["outputs"] = output_paths;
  const std::string path =
      out_is_dir ? (fs::path(out_dir_or_file) / "manifest.json").string()
                 : out_dir_or_file + ".manifest.json";
  write_text(path, m.dump(2) + "\n");
}

struct LoadedConfig {
  ScottiConfig model;
  TrainConfig train;
  json resolved;
};

LoadedConfig load_config(const std::string& path) {
  LoadedConfig out;
  json j;
  if (!path.empty()) {
    try {
      j = json::parse(read_text(path));
    } catch (const json::exception& e) {
      throw ConfigError(path + ": bad config json: " + std::string(e.what()));
    }
  } else {
    j = json::object();
  }
  out.model = ScottiConfig::from_json_string(j.contains("model") ? j["model"].dump() : "{}");
  out.train = TrainConfig::from_json_string(j.contains("train") ? j["train"].dump() : "{}");
  out.resolved = {{"model", json::parse(out.model.to_json_string())},
                  {"train", json::parse(out.train.to_json_string())}};
  return out;
}

std::vector<std::string> list_tactile_files(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) throw FormatError(dir + ": not a directory");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tact")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError(dir + ": no .tact files found");
  return files;
}

std::string stem_of(const std::string& tact_path) {
  fs::path p(tact_path);
  return (p.parent_path() / p.stem()).string();
}

// tactile + pose + relabeled progress for every sequence in the directory
SequenceSet load_directory(const std::string& dir, std::vector<std::string>* manifest_inputs) {
  SequenceSet set;
  for (const std::string& tact : list_tactile_files(dir)) {
    const std::string stem = stem_of(tact);
    SequenceRecord rec;
    rec.tactile = read_tactile(tact);
    rec.pose = read_pose(stem + ".pose");
    if (rec.pose.n != rec.tactile.n)
      throw FormatError(stem + ": tactile and pose frame counts differ");
    rec.labels = label_sequence(rec.pose, rec.tactile.action);
    if (manifest_inputs) {
      manifest_inputs->push_back(tact);
      manifest_inputs->push_back(stem + ".json");
      manifest_inputs->push_back(stem + ".pose");
    }
    set.records.push_back(std::move(rec));
  }
  return set;
}

std::string metrics_json_text(const EvalMetrics& m) {
  json j;
  j["mpjpe_mm"] = m.mpjpe_mm;
  j["accuracy_pct"] = m.accuracy_pct;
  j["app"] = m.app;
  j["progress_mse"] = m.progress_mse;
  j["n_samples"] = m.n_samples;
  return j.dump(2) + "\n";
}

// ---- subcommands ----

int cmd_gen(const std::string& action_arg, int subjects, int cycles, int fpc, uint64_t seed,
            const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<ActionClass> actions =
      action_arg == "all" ? all_actions() : std::vector<ActionClass>{action_from_name(action_arg)};

  json cfg{{"action", action_arg},
           {"subjects", subjects},
           {"cycles", cycles},
           {"frames_per_cycle", fpc}};
  std::vector<std::string> outputs;
  for (int s = 0; s < subjects; ++s) {
    char sid[16];
    std::snprintf(sid, sizeof(sid), "S%02d", s);
    for (ActionClass a : actions) {
      const std::string stem = (fs::path(out_dir) / (std::string(action_name(a)) + "_" + sid)).string();
      outputs.push_back(stem + ".tact");
      outputs.push_back(stem + ".json");
      outputs.push_back(stem + ".pose");
      outputs.push_back(stem + ".phase.json");
    }
  }
  write_manifest(out_dir, true, "gen", cfg, seed, {}, outputs);

  for (int s = 0; s < subjects; ++s) {
    char sid[16];
    std::snprintf(sid, sizeof(sid), "S%02d", s);
    const SubjectStyle style = SubjectStyle::sample(seed, s);
    for (ActionClass a : actions) {
      auto gen = generate_synthetic(a, cycles, fpc, style,
                                    Rng::mix(seed, uint64_t(s) * 131 + uint64_t(int(a))), sid);
      const std::string stem = (fs::path(out_dir) / (std::string(action_name(a)) + "_" + sid)).string();
      write_tactile(gen.tactile, stem + ".tact");
      write_pose(gen.pose, stem + ".pose");
      json phase = json::array();
      for (double p : gen.analytic_progress) phase.push_back(p);
      write_text(stem + ".phase.json", phase.dump() + "\n");
      log_info("wrote " + stem + ".{tact,json,pose,phase.json}");
    }
  }
  return 0;
}

int cmd_label(const std::string& poses, const std::string& action_arg, const std::string& out) {
  const ActionClass action = action_from_name(action_arg);
  write_manifest(out, false, "label", json{{"action", action_arg}, {"poses", poses}}, 0, {poses},
                 {out});
  PoseSequence pose = read_pose(poses);
  IndicatorSeries h = compute_indicator(pose, action);
  auto cycles = detect_cycles(h);
  ProgressLabels labels = assign_progress(h, cycles);

  json arr = json::array();
  for (int64_t t = 0; t < labels.size(); ++t)
    arr.push_back({{"frame", t},
                   {"progress", labels.progress[size_t(t)]},
                   {"valid", bool(labels.valid[size_t(t)])},
                   {"cycle_index", labels.cycle_index[size_t(t)]}});
  write_text(out, arr.dump(2) + "\n");
  log_info("labeled " + std::to_string(labels.size()) + " frames, " +
           std::to_string(cycles.size()) + " cycles");
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, bool print_metrics) {
  fs::create_directories(out_dir);
  LoadedConfig cfg = load_config(config_path);
  std::vector<std::string> inputs;
  if (!config_path.empty()) inputs.push_back(config_path);
  SequenceSet set = load_directory(data_dir, &inputs);
  const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
  const std::string report_path = (fs::path(out_dir) / "report.json").string();
  const std::string loss_path = (fs::path(out_dir) / "loss.csv").string();
  write_manifest(out_dir, true, "train", cfg.resolved, cfg.train.seed, inputs,
                 {ckpt, report_path, loss_path});

  std::vector<Sample> samples = build_samples(set, cfg.model.window);
  log_info("training on " + std::to_string(samples.size()) + " samples");
  ScottiModel model = ScottiModel::init(cfg.model, cfg.train.seed);
  RunReport report = train(model, set, samples, cfg.train);
  report.final = evaluate(model, set, samples, cfg.train.batch_size);

  save_checkpoint(model, ckpt);
  write_text(report_path, report.to_json_string());
  write_text(loss_path, report.loss_csv());
  if (print_metrics) std::cout << metrics_json_text(report.final);
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& out_dir,
             bool print_metrics) {
  fs::create_directories(out_dir);
  std::vector<std::string> inputs{ckpt};
  SequenceSet set = load_directory(data_dir, &inputs);
  const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
  const std::string pm_path = (fs::path(out_dir) / "pm_curve.csv").string();
  const std::string conf_path = (fs::path(out_dir) / "confusion.csv").string();
  ScottiModel model = load_checkpoint<float>(ckpt);
  write_manifest(out_dir, true, "eval",
                 json{{"model", json::parse(model.config.to_json_string())}}, 0, inputs,
                 {metrics_path, pm_path, conf_path});

  std::vector<Sample> samples = build_samples(set, model.config.window);
  EvalMetrics metrics = evaluate(model, set, samples);
  write_text(metrics_path, metrics_json_text(metrics));
  write_text(pm_path, pm_curve_csv(metrics.pm_curve));
  write_text(conf_path, confusion_csv(metrics.confusion));
  if (print_metrics) std::cout << metrics_json_text(metrics);
  return 0;
}

int cmd_protocol(const std::string& data_dir, int partitions, const std::string& config_path,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  LoadedConfig cfg = load_config(config_path);
  std::vector<std::string> inputs;
  if (!config_path.empty()) inputs.push_back(config_path);
  SequenceSet set = load_directory(data_dir, &inputs);
  const std::string report_path = (fs::path(out_dir) / "protocol_report.json").string();
  json resolved = cfg.resolved;
  resolved["partitions"] = partitions;
  write_manifest(out_dir, true, "protocol", resolved, cfg.train.seed, inputs, {report_path});

  // per-split reports land on disk as they finish
  ProtocolReport report =
      run_protocol(set, partitions, cfg.model, cfg.train, [&](const RunReport& run) {
        const std::string p =
            (fs::path(out_dir) / ("split_" + std::to_string(run.split_id) + ".json")).string();
        write_text(p, run.to_json_string());
      });
  write_text(report_path, report.to_json_string());
  return 0;
}

int cmd_ablate_tasks(const std::string& data_dir, int partitions, const std::string& config_path,
                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  LoadedConfig cfg = load_config(config_path);
  std::vector<std::string> inputs;
  if (!config_path.empty()) inputs.push_back(config_path);
  SequenceSet set = load_directory(data_dir, &inputs);
  const std::string csv_path = (fs::path(out_dir) / "ablation.csv").string();
  const std::string json_path = (fs::path(out_dir) / "ablation.json").string();
  json resolved = cfg.resolved;
  resolved["partitions"] = partitions;
  write_manifest(out_dir, true, "ablate-tasks", resolved, cfg.train.seed, inputs,
                 {csv_path, json_path});

  AblationTable table = task_ablation(set, partitions, cfg.model, cfg.train);
  write_text(csv_path, table.to_csv());
  write_text(json_path, table.to_json_string());
  return 0;
}

int cmd_ablate_regions(const std::string& ckpt, const std::string& data_dir,
                       const std::string& grid, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto x = grid.find('x');
  if (x == std::string::npos) throw ConfigError("grid must look like 4x4");
  const int rows = std::stoi(grid.substr(0, x));
  const int cols = std::stoi(grid.substr(x + 1));

  std::vector<std::string> inputs{ckpt};
  SequenceSet set = load_directory(data_dir, &inputs);
  const std::string csv_path = (fs::path(out_dir) / "importance.csv").string();
  ScottiModel model = load_checkpoint<float>(ckpt);
  write_manifest(out_dir, true, "ablate-regions",
                 json{{"grid", grid}, {"model", json::parse(model.config.to_json_string())}}, 0,
                 inputs, {csv_path});

  std::vector<Sample> samples = build_samples(set, model.config.window);
  RegionReport report = region_importance(model, set, samples, rows, cols, LossWeights{});
  write_text(csv_path, report.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scotti: multi-task tactile inference (pose, action, progress)"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic tactile/pose dataset");
  std::string gen_action = "all";
  int gen_subjects = 2, gen_cycles = 5, gen_fpc = 16;
  uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--action", gen_action, "action name or 'all'");
  gen->add_option("--subjects", gen_subjects, "number of synthetic subjects");
  gen->add_option("--cycles", gen_cycles, "action repetitions per sequence");
  gen->add_option("--frames-per-cycle", gen_fpc, "frames per repetition (>= 16)");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // label
  auto* label = app.add_subcommand("label", "compute progress labels from a pose file");
  std::string label_poses, label_action, label_out;
  label->add_option("--poses", label_poses, "pose file")->required();
  label->add_option("--action", label_action, "action name")->required();
  label->add_option("--out", label_out, "output json path")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model on a data directory");
  std::string train_data, train_config, train_out;
  bool train_print = false;
  train_cmd->add_option("--data", train_data, "data directory")->required();
  train_cmd->add_option("--config", train_config, "json config file");
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_flag("--print-metrics", train_print, "print final train metrics to stdout");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a data directory");
  std::string eval_ckpt, eval_data, eval_out;
  bool eval_print = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "data directory")->required();
  eval_cmd->add_option("--out", eval_out, "output directory")->required();
  eval_cmd->add_flag("--print-metrics", eval_print, "print metrics to stdout");

  // protocol
  auto* proto = app.add_subcommand("protocol", "subject-split train/test protocol");
  std::string proto_data, proto_config, proto_out;
  int proto_partitions = 3;
  proto->add_option("--data", proto_data, "data directory")->required();
  proto->add_option("--partitions", proto_partitions, "number of train/test partitions");
  proto->add_option("--config", proto_config, "json config file");
  proto->add_option("--out", proto_out, "output directory")->required();

  // ablate-tasks
  auto* abl_tasks = app.add_subcommand("ablate-tasks", "single-task vs multi-task comparison");
  std::string at_data, at_config, at_out;
  int at_partitions = 3;
  abl_tasks->add_option("--data", at_data, "data directory")->required();
  abl_tasks->add_option("--partitions", at_partitions, "number of partitions");
  abl_tasks->add_option("--config", at_config, "json config file");
  abl_tasks->add_option("--out", at_out, "output directory")->required();

  // ablate-regions
  auto* abl_regions = app.add_subcommand("ablate-regions", "foot-region importance map");
  std::string ar_ckpt, ar_data, ar_grid = "4x4", ar_out;
  abl_regions->add_option("--checkpoint", ar_ckpt, "checkpoint file")->required();
  abl_regions->add_option("--data", ar_data, "data directory")->required();
  abl_regions->add_option("--grid", ar_grid, "tiles per foot, e.g. 4x4");
  abl_regions->add_option("--out", ar_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_action, gen_subjects, gen_cycles, gen_fpc, gen_seed, gen_out);
    if (label->parsed()) return cmd_label(label_poses, label_action, label_out);
    if (train_cmd->parsed()) return cmd_train(train_data, train_config, train_out, train_print);
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_out, eval_print);
    if (proto->parsed()) return cmd_protocol(proto_data, proto_partitions, proto_config, proto_out);
    if (abl_tasks->parsed()) return cmd_ablate_tasks(at_data, at_partitions, at_config, at_out);
    if (abl_regions->parsed()) return cmd_ablate_regions(ar_ckpt, ar_data, ar_grid, ar_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
