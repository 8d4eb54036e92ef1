#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scotti/rng.hpp"
#include "scotti/tensor.hpp"

namespace scotti {

// The eight supported actions, in canonical index order.
enum class ActionClass : int {
  Squatting = 0,
  Lunging,
  StepUp,
  Jumping,
  SideWalking,
  InPlaceWalking,
  BackwardWalking,
  Walking,
};

constexpr int kNumActions = 8;

const char* action_name(ActionClass a);
ActionClass action_from_name(const std::string& name);
std::vector<ActionClass> all_actions();

// Named keypoints; the default 19-joint layout keeps the mid-hip (needed by
// the progress indicators) and drops the small toes.
struct JointLayout {
  std::vector<std::string> names;

  static const JointLayout& default19();
  int count() const { return int(names.size()); }
  int index(const std::string& name) const;  // ConfigError when absent
};

// Pressure frames for both feet, concatenated along width: [n, h, 2w].
// Values are normalized to [0,1].
struct TactileSequence {
  int64_t n = 0;
  int64_t h = 32;
  int64_t w2 = 44;
  std::vector<float> frames;
  float fps = 16.0f;
  std::string subject_id;
  ActionClass action = ActionClass::Squatting;

  float at(int64_t t, int64_t r, int64_t c) const { return frames[size_t((t * h + r) * w2 + c)]; }
  float& at(int64_t t, int64_t r, int64_t c) { return frames[size_t((t * h + r) * w2 + c)]; }
  // summed pressure of one foot half (0 = left, 1 = right) at frame t
  double foot_sum(int64_t t, int foot) const;
};

// Frame-aligned keypoints in millimetres: [n, j, 3].
struct PoseSequence {
  int64_t n = 0;
  int j = 19;
  std::vector<float> keypoints;

  double kp(int64_t t, int joint, int axis) const {
    return keypoints[size_t((t * j + joint) * 3 + axis)];
  }
  float& kp_ref(int64_t t, int joint, int axis) {
    return keypoints[size_t((t * j + joint) * 3 + axis)];
  }
};

struct ProgressLabels {
  std::vector<double> progress;
  std::vector<uint8_t> valid;
  std::vector<int> cycle_index;  // -1 outside any cycle

  int64_t size() const { return int64_t(progress.size()); }
};

// One training window: tactile frames [t-T, t) predict targets at frame t.
// The window itself is materialized from the owning sequence at batch time.
struct Sample {
  int seq = 0;
  int64_t t = 0;
  std::vector<float> pose_target;  // j*3 mm
  int action = 0;
  float progress = 0.0f;
};

struct SequenceRecord {
  TactileSequence tactile;
  PoseSequence pose;
  ProgressLabels labels;
};

struct SequenceSet {
  std::vector<SequenceRecord> records;
};

struct SubjectSplit {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  uint64_t partition_seed = 0;

  bool in_train(const std::string& s) const;
  bool in_test(const std::string& s) const;
};

// ---- file formats (little-endian throughout) ----
// tactile: "SCTI" u32 version u32 n u16 h u16 2w, then n*h*2w f32; metadata
// (subject_id, action, fps) lives in a JSON sidecar with the same stem.
// pose:    "SCPO" u32 version u32 n u16 j, then n*j*3 f32 (mm).
void write_tactile(const TactileSequence& seq, const std::string& path);
TactileSequence read_tactile(const std::string& path);
void write_pose(const PoseSequence& seq, const std::string& path);
PoseSequence read_pose(const std::string& path);

// sliding windows, stride 1; a sample exists for each t in [T, n) whose
// target frame carries a valid progress label
std::vector<Sample> make_windows(const TactileSequence& tactile, const PoseSequence& pose,
                                 const ProgressLabels& labels, int window, int seq_index = 0);

// copies frames [t-T, t) of the sequence into dst (size T*h*2w), shifting
// both foot halves by the same (dy, dx) with zero fill
void copy_window_shifted(const TactileSequence& seq, int64_t t, int window, int dy, int dx,
                         float* dst);

// in-place randomized shift of a materialized window; both halves move
// together, labels are untouched by construction
void random_shift(std::vector<float>& window, int t_frames, int64_t h, int64_t w2, int max_shift,
                  Rng& rng);

// ---- deterministic synthetic data with analytic ground truth ----
struct SubjectStyle {
  // dyadic scale factors keep the analytic progress checks exact
  double height_scale = 1.0;
  double motion_scale = 1.0;
  double amp_scale = 0.8125;
  double sigma = 1.375;
  int blob_row_offset = 0;
  int blob_col_offset = 0;

  static SubjectStyle sample(uint64_t seed, int subject_index);
};

struct SyntheticResult {
  TactileSequence tactile;
  PoseSequence pose;
  std::vector<double> analytic_progress;
};

// Pressure blobs and piecewise-linear kinematics driven by the latent phase
// (t mod P)/P; the per-action indicator series is triangular by construction,
// so Eq-style relabeling recovers the analytic progress.
SyntheticResult generate_synthetic(ActionClass action, int n_cycles, int frames_per_cycle,
                                   const SubjectStyle& style, uint64_t seed,
                                   const std::string& subject_id = "S00");

// random splits at the 10/5 ratio (proportional for other subject counts)
std::vector<SubjectSplit> split_subjects(std::vector<std::string> subjects, int n_partitions,
                                         uint64_t seed);

}  // namespace scotti
