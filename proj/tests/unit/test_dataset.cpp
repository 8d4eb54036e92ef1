#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "scotti/dataset.hpp"
#include "scotti/labeler.hpp"
#include "scotti/rng.hpp"

using namespace scotti;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "scotti_dataset_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

TactileSequence small_tactile(uint64_t seed, int64_t n = 6) {
  Rng rng(seed);
  TactileSequence seq;
  seq.n = n;
  seq.h = 8;
  seq.w2 = 12;
  seq.frames.resize(size_t(n * seq.h * seq.w2));
  for (auto& v : seq.frames) v = float(rng.uniform());
  seq.subject_id = "S02";
  seq.action = ActionClass::Jumping;
  return seq;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("action names round-trip and unknown names fail") {
  for (ActionClass a : all_actions()) CHECK(action_from_name(action_name(a)) == a);
  CHECK(action_name(ActionClass::StepUp) == std::string("step-up"));
  CHECK_THROWS_AS(action_from_name("moonwalk"), ConfigError);
}

TEST_CASE("tactile file round-trip is bit exact") {
  const auto path = (temp_dir() / "roundtrip.tact").string();
  TactileSequence seq = small_tactile(3);
  write_tactile(seq, path);
  TactileSequence back = read_tactile(path);
  CHECK(back.frames == seq.frames);
  CHECK(back.n == seq.n);
  CHECK(back.h == seq.h);
  CHECK(back.w2 == seq.w2);
  CHECK(back.subject_id == seq.subject_id);
  CHECK(back.action == seq.action);
  CHECK(back.fps == seq.fps);

  // write -> read -> write produces byte-identical files
  const auto path2 = (temp_dir() / "roundtrip2.tact").string();
  write_tactile(back, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("tactile write rejects invalid sequences") {
  TactileSequence empty;
  CHECK_THROWS_AS(write_tactile(empty, (temp_dir() / "empty.tact").string()), ContractError);

  TactileSequence bad = small_tactile(4);
  bad.frames[3] = 1.5f;  // outside [0,1]
  CHECK_THROWS_AS(write_tactile(bad, (temp_dir() / "bad.tact").string()), ContractError);
}

TEST_CASE("tactile read reports malformed files with byte offsets") {
  const auto path = (temp_dir() / "malformed.tact").string();
  TactileSequence seq = small_tactile(5);
  write_tactile(seq, path);

  SUBCASE("bad magic") {
    std::string bytes = slurp(path);
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_WITH_AS(read_tactile(path), doctest::Contains("byte offset 0"), FormatError);
  }
  SUBCASE("bad version") {
    std::string bytes = slurp(path);
    bytes[4] = 9;
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_WITH_AS(read_tactile(path), doctest::Contains("version"), FormatError);
  }
  SUBCASE("truncated payload") {
    std::string bytes = slurp(path);
    bytes.resize(bytes.size() - 7);
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(read_tactile(path), FormatError);
  }
  SUBCASE("missing sidecar") {
    fs::remove(temp_dir() / "malformed.json");
    CHECK_THROWS_AS(read_tactile(path), FormatError);
  }
}

TEST_CASE("pose file round-trip preserves millimetres exactly") {
  PoseSequence pose;
  pose.n = 3;
  pose.j = 19;
  Rng rng(9);
  pose.keypoints.resize(size_t(pose.n) * 19 * 3);
  for (auto& v : pose.keypoints) v = float(rng.uniform(-1000, 2000));
  const auto path = (temp_dir() / "pose.pose").string();
  write_pose(pose, path);
  PoseSequence back = read_pose(path);
  CHECK(back.keypoints == pose.keypoints);
  CHECK(back.j == 19);

  const auto path2 = (temp_dir() / "pose2.pose").string();
  write_pose(back, path2);
  CHECK(slurp(path) == slurp(path2));

  SUBCASE("payload size mismatch against the header joint count") {
    std::string bytes = slurp(path);
    bytes[12] = 7;  // claim j=7 while the payload holds 19 joints
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(read_pose(path), FormatError);
  }
}

TEST_CASE("make_windows counts and indexing") {
  auto make_record = [](int64_t n) {
    SequenceRecord rec;
    rec.tactile = small_tactile(11, n);
    rec.pose.n = n;
    rec.pose.j = 19;
    rec.pose.keypoints.assign(size_t(n) * 19 * 3, 1.0f);
    rec.labels.progress.assign(size_t(n), 0.25);
    rec.labels.valid.assign(size_t(n), 1);
    rec.labels.cycle_index.assign(size_t(n), 0);
    return rec;
  };

  SUBCASE("n=41, T=40 gives exactly one sample targeting frame 40") {
    SequenceRecord rec = make_record(41);
    auto samples = make_windows(rec.tactile, rec.pose, rec.labels, 40);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].t == 40);
  }
  SUBCASE("n=100, T=40 gives 60 samples") {
    SequenceRecord rec = make_record(100);
    auto samples = make_windows(rec.tactile, rec.pose, rec.labels, 40);
    CHECK(samples.size() == 60);
  }
  SUBCASE("window k ends at frame T+k-1 for every k") {
    SequenceRecord rec = make_record(60);
    auto samples = make_windows(rec.tactile, rec.pose, rec.labels, 40);
    for (size_t k = 0; k < samples.size(); ++k) {
      CHECK(samples[k].t == int64_t(40 + k));  // inputs cover [t-40, t)
    }
  }
  SUBCASE("invalid frames produce no samples") {
    SequenceRecord rec = make_record(50);
    rec.labels.valid.assign(50, 0);
    CHECK(make_windows(rec.tactile, rec.pose, rec.labels, 40).empty());
  }
  SUBCASE("misaligned lengths are a contract error") {
    SequenceRecord rec = make_record(50);
    rec.labels.progress.resize(49);
    rec.labels.valid.resize(49);
    rec.labels.cycle_index.resize(49);
    CHECK_THROWS_AS(make_windows(rec.tactile, rec.pose, rec.labels, 40), ContractError);
  }
}

TEST_CASE("random_shift basics") {
  const int64_t h = 8, w2 = 12, t = 2;

  SUBCASE("zero max_shift is the identity") {
    Rng rng(1);
    std::vector<float> window(size_t(t * h * w2));
    for (size_t i = 0; i < window.size(); ++i) window[i] = float(i % 7) * 0.1f;
    auto copy = window;
    random_shift(window, int(t), h, w2, 0, rng);
    CHECK(window == copy);
  }

  SUBCASE("a (1,0) shift moves a hot pixel down one row") {
    // drive the rng until it yields (dy,dx) == (1,0)
    uint64_t seed = 0;
    for (;; ++seed) {
      Rng probe(seed);
      if (probe.uniform_int(-1, 1) == 1 && probe.uniform_int(-1, 1) == 0) break;
    }
    std::vector<float> window(size_t(t * h * w2), 0.0f);
    window[5 * w2 + 5] = 1.0f;  // frame 0, row 5, col 5 (left half)
    Rng rng(seed);
    random_shift(window, int(t), h, w2, 1, rng);
    CHECK(window[6 * w2 + 5] == 1.0f);
    CHECK(window[5 * w2 + 5] == 0.0f);
  }

  SUBCASE("pressure mass is conserved while support stays in bounds") {
    Rng rng(12);
    std::vector<float> window(size_t(t * h * w2), 0.0f);
    // support at least max_shift away from every border of each half
    for (int64_t f = 0; f < t; ++f)
      for (int64_t r = 3; r < 5; ++r)
        for (int64_t c : {2, 3, 8, 9}) window[size_t((f * h + r) * w2 + c)] = 0.5f;
    double before = 0;
    for (float v : window) before += v;
    for (int iter = 0; iter < 10; ++iter) {
      auto copy = window;
      random_shift(copy, int(t), h, w2, 2, rng);
      double after = 0;
      for (float v : copy) after += v;
      CHECK(after == doctest::Approx(before));
    }
  }

  SUBCASE("halves never leak into each other") {
    uint64_t seed = 0;
    for (;; ++seed) {
      Rng probe(seed);
      if (probe.uniform_int(-2, 2) == 0 && probe.uniform_int(-2, 2) == 2) break;
    }
    std::vector<float> window(size_t(1 * h * w2), 0.0f);
    const int64_t w = w2 / 2;
    window[2 * w2 + (w - 1)] = 1.0f;  // right edge of the left half
    Rng rng(seed);
    random_shift(window, 1, h, w2, 2, rng);
    // shifted out of the left half, not into the right one
    for (int64_t c = w; c < w2; ++c) CHECK(window[2 * w2 + c] == 0.0f);
  }

  SUBCASE("max_shift must stay below the half width") {
    Rng rng(1);
    std::vector<float> window(size_t(t * h * w2), 0.0f);
    CHECK_THROWS_AS(random_shift(window, int(t), h, w2, 6, rng), ContractError);
  }
}

TEST_CASE("synthetic generator determinism") {
  SubjectStyle style = SubjectStyle::sample(5, 0);
  auto a = generate_synthetic(ActionClass::Walking, 3, 16, style, 42);
  auto b = generate_synthetic(ActionClass::Walking, 3, 16, style, 42);
  CHECK(a.tactile.frames == b.tactile.frames);
  CHECK(a.pose.keypoints == b.pose.keypoints);
  CHECK(a.analytic_progress == b.analytic_progress);
  auto c = generate_synthetic(ActionClass::Walking, 3, 16, style, 43);
  CHECK(a.tactile.frames != c.tactile.frames);
}

TEST_CASE("synthetic walking loads the left foot during the first half cycle") {
  SubjectStyle style = SubjectStyle::sample(7, 1);
  const int p = 16;
  auto gen = generate_synthetic(ActionClass::Walking, 4, p, style, 9);
  for (int64_t t = 0; t < gen.tactile.n; ++t) {
    const int64_t k = t % p;
    const double left = gen.tactile.foot_sum(t, 0);
    const double right = gen.tactile.foot_sum(t, 1);
    if (2 * k < p)
      CHECK(left > right);
    else
      CHECK(right > left);
  }
}

TEST_CASE("synthetic values stay in range and keep a clean border") {
  for (ActionClass action : all_actions()) {
    SubjectStyle style = SubjectStyle::sample(11, 2);
    auto gen = generate_synthetic(action, 2, 16, style, 3);
    for (float v : gen.tactile.frames) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    // rows 0..7 and 24..31 never load, nor do the outer columns of each foot
    for (int64_t t = 0; t < gen.tactile.n; ++t)
      for (int64_t r = 0; r < gen.tactile.h; ++r)
        for (int64_t c = 0; c < gen.tactile.w2; ++c) {
          const int64_t fc = c % 22;
          const bool border = r < 8 || r >= 24 || fc < 6 || fc >= 17;
          if (border) CHECK(gen.tactile.at(t, r, c) == 0.0f);
        }
  }
}

TEST_CASE("synthetic pose keeps the mid-hip at the hip midpoint") {
  SubjectStyle style = SubjectStyle::sample(13, 3);
  auto gen = generate_synthetic(ActionClass::Squatting, 2, 16, style, 1);
  const auto& L = JointLayout::default19();
  const int mid = L.index("mid_hip"), lh = L.index("left_hip"), rh = L.index("right_hip");
  for (int64_t t = 0; t < gen.pose.n; ++t)
    for (int a = 0; a < 3; ++a)
      CHECK(gen.pose.kp(t, mid, a) ==
            doctest::Approx(0.5 * (gen.pose.kp(t, lh, a) + gen.pose.kp(t, rh, a))).epsilon(1e-9));
}

TEST_CASE("labeling the generator's pose recovers the analytic progress") {
  const int p = 16;
  for (ActionClass action : all_actions()) {
    SubjectStyle style = SubjectStyle::sample(3, 1);
    auto gen = generate_synthetic(action, 6, p, style, 21);
    ProgressLabels labels = label_sequence(gen.pose, action);
    int64_t checked = 0;
    for (int64_t t = 0; t < gen.tactile.n; ++t) {
      if (!labels.valid[size_t(t)]) continue;
      const double err = std::abs(labels.progress[size_t(t)] - gen.analytic_progress[size_t(t)]);
      const double circ = std::min(err, 1.0 - err);
      CHECK_MESSAGE(circ <= 2.0 / p, action_name(action)
                                         << " frame " << t << " label "
                                         << labels.progress[size_t(t)] << " phase "
                                         << gen.analytic_progress[size_t(t)]);
      ++checked;
    }
    CHECK(checked > 3 * p);  // several full cycles were labeled
  }
}

TEST_CASE("split_subjects honors the 10/5 ratio") {
  std::vector<std::string> subjects;
  for (int i = 0; i < 15; ++i) subjects.push_back("S" + std::to_string(i));
  auto splits = split_subjects(subjects, 3, 7);
  REQUIRE(splits.size() == 3);
  for (const auto& s : splits) {
    CHECK(s.train_subjects.size() == 10);
    CHECK(s.test_subjects.size() == 5);
    for (const auto& sub : s.test_subjects) CHECK_FALSE(s.in_train(sub));
  }
  // deterministic per seed
  auto again = split_subjects(subjects, 3, 7);
  for (int p = 0; p < 3; ++p) {
    CHECK(splits[p].train_subjects == again[p].train_subjects);
    CHECK(splits[p].test_subjects == again[p].test_subjects);
  }

  auto three = split_subjects({"a", "b", "c"}, 1, 0);
  CHECK(three[0].train_subjects.size() == 2);
  CHECK(three[0].test_subjects.size() == 1);

  CHECK_THROWS_AS(split_subjects({"a", "b"}, 1, 0), ConfigError);
}
