#include "scotti/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "scotti/log.hpp"

namespace scotti {

namespace {

const char* kActionNames[kNumActions] = {
    "squatting", "lunging",          "step-up",          "jumping",
    "side-walking", "in-place-walking", "backward-walking", "walking",
};

}  // namespace

const char* action_name(ActionClass a) { return kActionNames[int(a)]; }

ActionClass action_from_name(const std::string& name) {
  for (int i = 0; i < kNumActions; ++i)
    if (name == kActionNames[i]) return ActionClass(i);
  throw ConfigError("unknown action '" + name + "'");
}

std::vector<ActionClass> all_actions() {
  std::vector<ActionClass> v;
  for (int i = 0; i < kNumActions; ++i) v.push_back(ActionClass(i));
  return v;
}

const JointLayout& JointLayout::default19() {
  static const JointLayout layout{{
      "head",       "neck",        "left_shoulder", "right_shoulder", "left_elbow",
      "right_elbow", "left_wrist", "right_wrist",   "mid_hip",        "left_hip",
      "right_hip",  "left_knee",   "right_knee",    "left_ankle",     "right_ankle",
      "left_heel",  "right_heel",  "left_big_toe",  "right_big_toe",
  }};
  return layout;
}

int JointLayout::index(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return int(i);
  throw ConfigError("joint '" + name + "' is not in the layout");
}

double TactileSequence::foot_sum(int64_t t, int foot) const {
  const int64_t w = w2 / 2;
  const int64_t c0 = foot == 0 ? 0 : w;
  double acc = 0.0;
  for (int64_t r = 0; r < h; ++r)
    for (int64_t c = c0; c < c0 + w; ++c) acc += at(t, r, c);
  return acc;
}

bool SubjectSplit::in_train(const std::string& s) const {
  return std::find(train_subjects.begin(), train_subjects.end(), s) != train_subjects.end();
}

bool SubjectSplit::in_test(const std::string& s) const {
  return std::find(test_subjects.begin(), test_subjects.end(), s) != test_subjects.end();
}

// ------------------------------ file io ------------------------------

namespace {

void put_u16(std::string& buf, uint16_t v) {
  buf.push_back(char(v & 0xff));
  buf.push_back(char((v >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

struct Reader {
  std::string bytes;
  size_t off = 0;
  std::string path;

  void need(size_t n, const char* what) const {
    if (off + n > bytes.size())
      throw FormatError(path + ": truncated " + what + " at byte offset " + std::to_string(off));
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = uint16_t(uint8_t(bytes[off])) | uint16_t(uint8_t(bytes[off + 1])) << 8;
    off += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(bytes[off + size_t(i)])) << (8 * i);
    off += 4;
    return v;
  }
  float f32(const char* what) {
    uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

Reader read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  Reader r;
  r.path = path;
  r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw FormatError(path + ": write failed");
}

void check_magic(Reader& r, const char* magic) {
  r.need(4, "magic");
  if (std::memcmp(r.bytes.data(), magic, 4) != 0)
    throw FormatError(r.path + ": bad magic at byte offset 0, expected \"" + magic + "\"");
  r.off = 4;
  const uint32_t version = r.u32("version");
  if (version != 1)
    throw FormatError(r.path + ": unsupported version " + std::to_string(version) +
                      " at byte offset 4");
}

std::string sidecar_path(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + ".json";
  return path.substr(0, dot) + ".json";
}

}  // namespace

void write_tactile(const TactileSequence& seq, const std::string& path) {
  if (seq.n < 1)
    throw ContractError("tactile sequence is empty; downstream windowing needs n >= T+1 frames");
  if (int64_t(seq.frames.size()) != seq.n * seq.h * seq.w2)
    throw ContractError("tactile frame buffer does not match n*h*2w");
  for (float v : seq.frames)
    if (!(v >= 0.0f && v <= 1.0f))
      throw ContractError("tactile values must lie in [0,1] (got " + std::to_string(v) + ")");

  std::string buf;
  buf.reserve(16 + seq.frames.size() * 4);
  buf += "SCTI";
  put_u32(buf, 1);
  put_u32(buf, uint32_t(seq.n));
  put_u16(buf, uint16_t(seq.h));
  put_u16(buf, uint16_t(seq.w2));
  for (float v : seq.frames) put_f32(buf, v);
  write_file(path, buf);

  nlohmann::json meta;
  meta["action"] = action_name(seq.action);
  meta["fps"] = seq.fps;
  meta["subject_id"] = seq.subject_id;
  write_file(sidecar_path(path), meta.dump(2) + "\n");
}

TactileSequence read_tactile(const std::string& path) {
  Reader r = read_file(path);
  check_magic(r, "SCTI");
  TactileSequence seq;
  seq.n = r.u32("frame count");
  seq.h = r.u16("height");
  seq.w2 = r.u16("width");
  if (seq.n < 1 || seq.h < 1 || seq.w2 < 2)
    throw FormatError(path + ": implausible extents in header");
  const int64_t count = seq.n * seq.h * seq.w2;
  r.need(size_t(count) * 4, "frame payload");
  seq.frames.resize(size_t(count));
  for (int64_t i = 0; i < count; ++i) seq.frames[size_t(i)] = r.f32("frame payload");
  if (r.off != r.bytes.size())
    throw FormatError(path + ": trailing bytes at offset " + std::to_string(r.off));

  const std::string side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw FormatError(side + ": metadata sidecar missing");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side + ": bad metadata json: " + e.what());
  }
  seq.action = action_from_name(meta.at("action").get<std::string>());
  seq.fps = meta.at("fps").get<float>();
  seq.subject_id = meta.at("subject_id").get<std::string>();
  return seq;
}

void write_pose(const PoseSequence& seq, const std::string& path) {
  if (seq.n < 1) throw ContractError("pose sequence is empty");
  if (int64_t(seq.keypoints.size()) != seq.n * seq.j * 3)
    throw ContractError("pose buffer does not match n*j*3");
  for (float v : seq.keypoints)
    if (!std::isfinite(v)) throw ContractError("pose coordinates must be finite");
  std::string buf;
  buf.reserve(14 + seq.keypoints.size() * 4);
  buf += "SCPO";
  put_u32(buf, 1);
  put_u32(buf, uint32_t(seq.n));
  put_u16(buf, uint16_t(seq.j));
  for (float v : seq.keypoints) put_f32(buf, v);
  write_file(path, buf);
}

PoseSequence read_pose(const std::string& path) {
  Reader r = read_file(path);
  check_magic(r, "SCPO");
  PoseSequence seq;
  seq.n = r.u32("frame count");
  seq.j = r.u16("joint count");
  if (seq.n < 1 || seq.j < 1) throw FormatError(path + ": implausible extents in header");
  const int64_t count = seq.n * seq.j * 3;
  r.need(size_t(count) * 4, "keypoint payload");
  seq.keypoints.resize(size_t(count));
  for (int64_t i = 0; i < count; ++i) seq.keypoints[size_t(i)] = r.f32("keypoint payload");
  if (r.off != r.bytes.size())
    throw FormatError(path + ": trailing bytes at offset " + std::to_string(r.off));
  return seq;
}

// --------------------------- windows & shift ---------------------------

std::vector<Sample> make_windows(const TactileSequence& tactile, const PoseSequence& pose,
                                 const ProgressLabels& labels, int window, int seq_index) {
  if (tactile.n != pose.n || labels.size() != tactile.n)
    throw ContractError("make_windows: tactile/pose/label lengths differ (" +
                        std::to_string(tactile.n) + "/" + std::to_string(pose.n) + "/" +
                        std::to_string(labels.size()) + ")");
  if (window < 1 || int64_t(window) >= tactile.n)
    throw ContractError("make_windows: need window in [1, n)");
  std::vector<Sample> out;
  for (int64_t t = window; t < tactile.n; ++t) {
    if (!labels.valid[size_t(t)]) continue;
    Sample s;
    s.seq = seq_index;
    s.t = t;
    s.action = int(tactile.action);
    s.progress = float(labels.progress[size_t(t)]);
    s.pose_target.resize(size_t(pose.j) * 3);
    std::memcpy(s.pose_target.data(), pose.keypoints.data() + t * pose.j * 3,
                s.pose_target.size() * sizeof(float));
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

// shift one h x w half-frame by (dy, dx) with zero fill
void shift_half(const float* src, float* dst, int64_t h, int64_t w, int dy, int dx) {
  for (int64_t r = 0; r < h; ++r)
    for (int64_t c = 0; c < w; ++c) {
      const int64_t sr = r - dy, sc = c - dx;
      dst[r * w + c] =
          (sr >= 0 && sr < h && sc >= 0 && sc < w) ? src[sr * w + sc] : 0.0f;
    }
}

}  // namespace

void copy_window_shifted(const TactileSequence& seq, int64_t t, int window, int dy, int dx,
                         float* dst) {
  const int64_t w = seq.w2 / 2;
  std::vector<float> half(size_t(seq.h * w));
  std::vector<float> shifted(size_t(seq.h * w));
  for (int i = 0; i < window; ++i) {
    const int64_t frame = t - window + i;
    const float* src = seq.frames.data() + frame * seq.h * seq.w2;
    float* out = dst + int64_t(i) * seq.h * seq.w2;
    for (int foot = 0; foot < 2; ++foot) {
      const int64_t c0 = foot * w;
      for (int64_t r = 0; r < seq.h; ++r)
        std::memcpy(half.data() + r * w, src + r * seq.w2 + c0, size_t(w) * sizeof(float));
      shift_half(half.data(), shifted.data(), seq.h, w, dy, dx);
      for (int64_t r = 0; r < seq.h; ++r)
        std::memcpy(out + r * seq.w2 + c0, shifted.data() + r * w, size_t(w) * sizeof(float));
    }
  }
}

void random_shift(std::vector<float>& window, int t_frames, int64_t h, int64_t w2, int max_shift,
                  Rng& rng) {
  const int64_t w = w2 / 2;
  if (max_shift < 0 || int64_t(max_shift) >= std::min(h, w))
    throw ContractError("random_shift: max_shift must satisfy 0 <= max_shift < min(H, W)");
  if (int64_t(window.size()) != int64_t(t_frames) * h * w2)
    throw ContractError("random_shift: window buffer size mismatch");
  const int dy = int(rng.uniform_int(-max_shift, max_shift));
  const int dx = int(rng.uniform_int(-max_shift, max_shift));
  if (dy == 0 && dx == 0) return;
  std::vector<float> half(size_t(h * w));
  std::vector<float> shifted(size_t(h * w));
  for (int i = 0; i < t_frames; ++i) {
    float* frame = window.data() + int64_t(i) * h * w2;
    for (int foot = 0; foot < 2; ++foot) {
      const int64_t c0 = foot * w;
      for (int64_t r = 0; r < h; ++r)
        std::memcpy(half.data() + r * w, frame + r * w2 + c0, size_t(w) * sizeof(float));
      shift_half(half.data(), shifted.data(), h, w, dy, dx);
      for (int64_t r = 0; r < h; ++r)
        std::memcpy(frame + r * w2 + c0, shifted.data() + r * w, size_t(w) * sizeof(float));
    }
  }
}

// --------------------------- synthetic data ---------------------------

SubjectStyle SubjectStyle::sample(uint64_t seed, int subject_index) {
  Rng rng(Rng::mix(seed ^ 0x5375626aULL, uint64_t(subject_index)));
  SubjectStyle s;
  // dyadic grids: exact products in both float and double
  s.height_scale = double(28 + rng.uniform_int(0, 8)) / 32.0;  // 0.875 .. 1.125
  s.motion_scale = double(28 + rng.uniform_int(0, 8)) / 32.0;
  s.amp_scale = 0.70 + 0.05 * double(rng.uniform_int(0, 5));
  s.sigma = 1.25 + 0.125 * double(rng.uniform_int(0, 3));
  s.blob_row_offset = int(rng.uniform_int(-1, 1));
  s.blob_col_offset = int(rng.uniform_int(-1, 1));
  return s;
}

namespace {

constexpr int64_t kFrameH = 32;
constexpr int64_t kFootW = 22;
// pressure support; tiles outside this box stay identically zero
constexpr int64_t kBoxR0 = 8, kBoxR1 = 24;   // rows [8, 24)
constexpr int64_t kBoxC0 = 6, kBoxC1 = 17;   // cols [6, 17) within each foot

// joint indices of the default layout
enum Joint : int {
  jHead = 0, jNeck, jLSh, jRSh, jLElb, jRElb, jLWr, jRWr, jMidHip, jLHip, jRHip,
  jLKnee, jRKnee, jLAnkle, jRAnkle, jLHeel, jRHeel, jLToe, jRToe,
};

// base standing pose in dyadic millimetres; the capture frame is centred on
// the standing mid-hip, as a root-centred mocap export would be
const double kBasePose[19][3] = {
    {0, 0, 736},      {0, 0, 544},     {-192, 0, 480},  {192, 0, 480},  {-224, 0, 224},
    {224, 0, 224},    {-240, 0, -32},  {240, 0, -32},   {0, 0, 0},      {-96, 0, 0},
    {96, 0, 0},       {-96, 0, -416},  {96, 0, -416},   {-96, 0, -800}, {96, 0, -800},
    {-96, -32, -864}, {96, -32, -864}, {-96, 160, -896}, {96, 160, -896},
};

struct Blob {
  double row, col, amp;
};

// triangle wave on the latent phase: 1 at cycle boundaries, 0 at the midpoint
double tri_of(int64_t t, int64_t p) {
  const int64_t k = t % p;
  return double(std::abs(p - 2 * k)) / double(p);
}

void add_blob(std::vector<float>& frame, int foot, double row, double col, double sigma,
              double amp) {
  if (amp <= 0.0) return;
  const int64_t c_base = foot * kFootW;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int64_t r = kBoxR0; r < kBoxR1; ++r)
    for (int64_t c = kBoxC0; c < kBoxC1; ++c) {
      const double d2 = (double(r) - row) * (double(r) - row) + (double(c) - col) * (double(c) - col);
      const double v = amp * std::exp(-d2 * inv);
      if (v > 1e-6) frame[size_t(r * (2 * kFootW) + c_base + c)] += float(v);
    }
}

struct FootLoad {
  double amp = 0.0;        // overall amplitude
  double heel_w = 0.5;     // heel vs forefoot balance
  double row_drift = 0.0;  // blob centre drift along the foot axis
  double col_drift = 0.0;  // lateral drift
};

}  // namespace

SyntheticResult generate_synthetic(ActionClass action, int n_cycles, int frames_per_cycle,
                                   const SubjectStyle& style, uint64_t seed,
                                   const std::string& subject_id) {
  if (frames_per_cycle < 16)
    throw ConfigError("generate_synthetic: frames_per_cycle must be >= 16");
  if (n_cycles < 1) throw ConfigError("generate_synthetic: n_cycles must be >= 1");

  const int64_t P = frames_per_cycle;
  const int64_t N = int64_t(n_cycles) * P;
  const double hs = style.height_scale;
  const double ms = style.motion_scale;

  SyntheticResult out;
  out.pose.n = N;
  out.pose.j = 19;
  out.pose.keypoints.assign(size_t(N) * 19 * 3, 0.0f);
  out.tactile.n = N;
  out.tactile.h = kFrameH;
  out.tactile.w2 = 2 * kFootW;
  out.tactile.frames.assign(size_t(N * kFrameH * 2 * kFootW), 0.0f);
  out.tactile.fps = 16.0f;
  out.tactile.subject_id = subject_id;
  out.tactile.action = action;
  out.analytic_progress.resize(size_t(N));

  Rng noise_rng(Rng::mix(seed, uint64_t(int(action)) * 131 + 7));

  for (int64_t t = 0; t < N; ++t) {
    const int64_t k = t % P;
    const double tri = tri_of(t, P);
    const double dep = 1.0 - tri;

    // latent phase; backward-walking's rolling-max indicator flattens the
    // peak over 5 frames, so its phase origin sits at the plateau centre
    if (action == ActionClass::BackwardWalking) {
      out.analytic_progress[size_t(t)] = double(((t - 2) % P + P) % P) / double(P);
    } else {
      out.analytic_progress[size_t(t)] = double(k) / double(P);
    }

    // ---- pose ----
    double pose[19][3];
    for (int jnt = 0; jnt < 19; ++jnt)
      for (int ax = 0; ax < 3; ++ax) pose[jnt][ax] = kBasePose[jnt][ax] * hs;

    const int trunk[] = {jHead, jNeck, jLSh, jRSh, jLElb, jRElb, jLWr, jRWr, jMidHip, jLHip, jRHip};
    switch (action) {
      case ActionClass::Squatting: {
        const double dz = 256.0 * ms * dep;
        for (int jnt : trunk) pose[jnt][2] -= dz;
        pose[jLKnee][2] -= 128.0 * ms * dep;
        pose[jRKnee][2] -= 128.0 * ms * dep;
        pose[jLKnee][1] += 64.0 * ms * dep;
        pose[jRKnee][1] += 64.0 * ms * dep;
        break;
      }
      case ActionClass::Lunging: {
        const double dz = 192.0 * ms * dep;
        for (int jnt : trunk) pose[jnt][2] -= dz;
        const double fwd = 256.0 * ms * dep;
        for (int jnt : {jLKnee, jLAnkle, jLHeel, jLToe}) pose[jnt][1] += fwd;
        break;
      }
      case ActionClass::StepUp: {
        const double dz = 224.0 * ms * dep;
        for (int jnt : trunk) pose[jnt][2] -= dz;
        pose[jLWr][1] += 128.0 * ms * dep;
        pose[jRWr][1] += 128.0 * ms * dep;
        for (int jnt : {jLHeel, jLAnkle, jLToe}) pose[jnt][2] += 96.0 * ms * dep;
        break;
      }
      case ActionClass::Jumping: {
        const double rise = 192.0 * ms * dep;
        for (int jnt = 0; jnt < 19; ++jnt) pose[jnt][2] += rise;
        break;
      }
      case ActionClass::Walking:
      case ActionClass::BackwardWalking: {
        // heel separation along y only, so the heel distance is exactly
        // the triangular sep(t)
        const double sep = (64.0 + 384.0 * tri) * ms;
        const double toe_dir = action == ActionClass::Walking ? 160.0 : -160.0;
        for (int side = 0; side < 2; ++side) {
          const double sgn = side == 0 ? 1.0 : -1.0;
          const int heel = side == 0 ? jLHeel : jRHeel;
          const int ankle = side == 0 ? jLAnkle : jRAnkle;
          const int toe = side == 0 ? jLToe : jRToe;
          pose[heel][0] = 0.0;
          pose[heel][1] = sgn * sep / 2.0;
          pose[ankle][0] = 0.0;
          pose[ankle][1] = sgn * sep / 2.0;
          pose[toe][0] = 0.0;
          pose[toe][1] = sgn * sep / 2.0 + toe_dir * hs;
        }
        break;
      }
      case ActionClass::SideWalking: {
        const double sep = (64.0 + 384.0 * tri) * ms;
        for (int side = 0; side < 2; ++side) {
          const double sgn = side == 0 ? -1.0 : 1.0;  // left foot to negative x
          const int heel = side == 0 ? jLHeel : jRHeel;
          const int ankle = side == 0 ? jLAnkle : jRAnkle;
          const int toe = side == 0 ? jLToe : jRToe;
          pose[heel][0] = sgn * sep / 2.0;
          pose[ankle][0] = sgn * sep / 2.0;
          pose[toe][0] = sgn * sep / 2.0;
        }
        break;
      }
      case ActionClass::InPlaceWalking: {
        const double lift = 192.0 * ms * tri;
        pose[jLHeel][2] += lift;
        pose[jLAnkle][2] += lift;
        pose[jLToe][2] += 96.0 * ms * tri;
        break;
      }
    }
    for (int jnt = 0; jnt < 19; ++jnt)
      for (int ax = 0; ax < 3; ++ax) out.pose.kp_ref(t, jnt, ax) = float(pose[jnt][ax]);

    // ---- tactile ----
    FootLoad load[2];
    const bool first_half = 2 * k < P;   // phase in [0, 0.5)
    const double stance = first_half ? double(2 * k) / double(P) : double(2 * k - P) / double(P);
    const double A = style.amp_scale;
    switch (action) {
      case ActionClass::Squatting:
        load[0].amp = load[1].amp = A * (0.55 + 0.45 * dep);
        load[0].heel_w = load[1].heel_w = 0.2 + 0.6 * tri;
        break;
      case ActionClass::Lunging:
        load[0].amp = A * 0.95;
        load[0].heel_w = 0.25;
        load[1].amp = A * (0.35 + 0.2 * tri);
        load[1].heel_w = 0.7;
        break;
      case ActionClass::StepUp:
        load[0].amp = A * (0.25 + 0.75 * dep);
        load[1].amp = A * (0.25 + 0.75 * tri);
        load[0].heel_w = load[1].heel_w = 0.35;
        load[0].row_drift = -2.0 * dep;
        load[1].row_drift = -2.0 * tri;
        break;
      case ActionClass::Jumping: {
        const bool airborne = 16 * k >= 7 * P && 16 * k <= 9 * P;
        const bool landed = 16 * k > 9 * P && 16 * k <= 12 * P;
        const double amp = airborne ? 0.0 : A * (0.3 + 0.7 * tri);
        load[0].amp = load[1].amp = amp;
        load[0].heel_w = load[1].heel_w = landed ? 0.8 : 0.4;
        break;
      }
      case ActionClass::SideWalking: {
        load[first_half ? 0 : 1].amp = A * 0.85;
        load[first_half ? 1 : 0].amp = A * 0.25;
        load[0].heel_w = load[1].heel_w = 0.5;
        load[0].col_drift = 2.0 * (1.0 - 2.0 * stance) * (first_half ? -1.0 : 1.0);
        load[1].col_drift = -load[0].col_drift;
        break;
      }
      case ActionClass::InPlaceWalking:
        load[0].amp = A * (0.15 + 0.85 * dep);
        load[1].amp = A * (0.15 + 0.85 * tri);
        load[0].heel_w = load[1].heel_w = 0.5;
        break;
      case ActionClass::BackwardWalking: {
        load[first_half ? 0 : 1].amp = A * 0.85;
        load[first_half ? 1 : 0].amp = A * 0.25;
        load[0].heel_w = load[1].heel_w = 0.45;
        const double drift = -4.0 + 8.0 * stance;  // toe -> heel roll
        load[first_half ? 0 : 1].row_drift = drift;
        break;
      }
      case ActionClass::Walking: {
        load[first_half ? 0 : 1].amp = A * 0.85;
        load[first_half ? 1 : 0].amp = A * 0.25;
        load[0].heel_w = load[1].heel_w = 0.45;
        const double drift = 4.0 - 8.0 * stance;  // heel -> toe roll
        load[first_half ? 0 : 1].row_drift = drift;
        break;
      }
    }

    std::vector<float> frame(size_t(kFrameH * 2 * kFootW), 0.0f);
    const double r_off = style.blob_row_offset;
    const double c_off = style.blob_col_offset;
    for (int foot = 0; foot < 2; ++foot) {
      const FootLoad& fl = load[foot];
      if (fl.amp <= 0.0) continue;
      const double heel_amp = fl.amp * fl.heel_w;
      const double fore_amp = fl.amp * (1.0 - fl.heel_w);
      const double rr = r_off + fl.row_drift;
      const double cc = c_off + fl.col_drift;
      add_blob(frame, foot, 20.0 + rr, 11.0 + cc, style.sigma, heel_amp);
      add_blob(frame, foot, 12.0 + rr, 9.0 + cc, style.sigma, fore_amp * 0.55);
      add_blob(frame, foot, 12.0 + rr, 13.5 + cc, style.sigma, fore_amp * 0.45);
      add_blob(frame, foot, 9.5 + rr, 11.0 + cc, style.sigma * 0.85, fore_amp * 0.35);
    }
    // light sensor noise inside the support box only
    for (int foot = 0; foot < 2; ++foot) {
      const int64_t c_base = foot * kFootW;
      for (int64_t r = kBoxR0; r < kBoxR1; ++r)
        for (int64_t c = kBoxC0; c < kBoxC1; ++c) {
          float& cell = frame[size_t(r * 2 * kFootW + c_base + c)];
          cell += float(0.01 * noise_rng.uniform());
          cell = std::clamp(cell, 0.0f, 1.0f);
        }
    }
    std::memcpy(out.tactile.frames.data() + t * kFrameH * 2 * kFootW, frame.data(),
                frame.size() * sizeof(float));
  }
  return out;
}

std::vector<SubjectSplit> split_subjects(std::vector<std::string> subjects, int n_partitions,
                                         uint64_t seed) {
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  if (int64_t(subjects.size()) < 3)
    throw ConfigError("split_subjects: need at least 3 subjects, got " +
                      std::to_string(subjects.size()));
  if (n_partitions < 1) throw ConfigError("split_subjects: need at least 1 partition");
  // 10/5 train/test ratio, proportionally rounded
  const int n_test = std::max<int>(1, int(std::llround(double(subjects.size()) / 3.0)));
  if (n_test >= int(subjects.size()))
    throw ConfigError("split_subjects: test split would consume every subject");

  std::vector<SubjectSplit> out;
  for (int p = 0; p < n_partitions; ++p) {
    std::vector<std::string> pool = subjects;
    Rng rng(Rng::mix(seed, uint64_t(p)));
    rng.shuffle(pool.begin(), pool.end());
    SubjectSplit split;
    split.partition_seed = Rng::mix(seed, uint64_t(p));
    split.test_subjects.assign(pool.begin(), pool.begin() + n_test);
    split.train_subjects.assign(pool.begin() + n_test, pool.end());
    std::sort(split.test_subjects.begin(), split.test_subjects.end());
    std::sort(split.train_subjects.begin(), split.train_subjects.end());
    out.push_back(std::move(split));
  }
  return out;
}

}  // namespace scotti
