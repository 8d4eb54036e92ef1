#include <doctest.h>

#include <array>
#include <cmath>

#include "scotti/labeler.hpp"
#include "scotti/rng.hpp"

using namespace scotti;

namespace {

PoseSequence pose_with_midhip_z(const std::vector<double>& z) {
  PoseSequence p;
  p.n = int64_t(z.size());
  p.j = 19;
  p.keypoints.assign(size_t(p.n) * 19 * 3, 0.0f);
  const int midhip = JointLayout::default19().index("mid_hip");
  for (int64_t t = 0; t < p.n; ++t) p.kp_ref(t, midhip, 2) = float(z[size_t(t)]);
  return p;
}

PoseSequence pose_with_heels(const std::vector<std::array<double, 6>>& heels) {
  PoseSequence p;
  p.n = int64_t(heels.size());
  p.j = 19;
  p.keypoints.assign(size_t(p.n) * 19 * 3, 0.0f);
  const int lh = JointLayout::default19().index("left_heel");
  const int rh = JointLayout::default19().index("right_heel");
  for (int64_t t = 0; t < p.n; ++t) {
    for (int a = 0; a < 3; ++a) {
      p.kp_ref(t, lh, a) = float(heels[size_t(t)][size_t(a)]);
      p.kp_ref(t, rh, a) = float(heels[size_t(t)][size_t(3 + a)]);
    }
  }
  return p;
}

// triangle wave with maxima at multiples of p; a half-cycle tail keeps the
// final apex's prominence unclipped by the boundary
std::vector<double> triangle(int cycles, int p, double lo = 0.0, double hi = 1.0) {
  std::vector<double> h(size_t(cycles * p + p / 2 + 1));
  for (size_t t = 0; t < h.size(); ++t) {
    const int64_t k = int64_t(t) % p;
    const double tri = double(std::abs(p - 2 * int64_t(k))) / double(p);
    h[t] = lo + (hi - lo) * tri;
  }
  return h;
}

}  // namespace

TEST_CASE("indicator: squatting passes mid-hip z through") {
  auto pose = pose_with_midhip_z({900, 800, 700});
  auto h = compute_indicator(pose, ActionClass::Squatting);
  CHECK(h.values == std::vector<double>{900, 800, 700});
  auto hj = compute_indicator(pose, ActionClass::Jumping);
  CHECK(hj.values == std::vector<double>{-900, -800, -700});
}

TEST_CASE("indicator: walking heel distance is Euclidean") {
  auto pose = pose_with_heels({{0, 0, 0, 300, 400, 0}});
  auto h = compute_indicator(pose, ActionClass::Walking);
  CHECK(h.values[0] == doctest::Approx(500.0));
}

TEST_CASE("indicator: in-place walking takes the higher heel") {
  auto pose = pose_with_heels({{0, 0, 120, 0, 0, 80}});
  auto h = compute_indicator(pose, ActionClass::InPlaceWalking);
  CHECK(h.values[0] == doctest::Approx(120.0));
}

TEST_CASE("indicator: backward walking rolls a 5-frame max") {
  // heel distances 1,5,2,2,2,2,2 along x
  std::vector<std::array<double, 6>> heels;
  for (double d : {1.0, 5.0, 2.0, 2.0, 2.0, 2.0, 2.0}) heels.push_back({0, 0, 0, d, 0, 0});
  auto pose = pose_with_heels(heels);
  auto h = compute_indicator(pose, ActionClass::BackwardWalking);
  CHECK(h.values == std::vector<double>{1, 5, 5, 5, 5, 5, 2});
}

TEST_CASE("indicator: missing joint is a configuration error") {
  JointLayout layout{{"head", "neck"}};
  auto pose = pose_with_midhip_z({1, 2, 3});
  pose.j = 19;
  CHECK_THROWS_AS(compute_indicator(pose, ActionClass::Squatting, layout), ConfigError);
}

TEST_CASE("detect_cycles: clean triangle yields exact apex indices") {
  IndicatorSeries h;
  h.values = triangle(3, 16);
  auto cycles = detect_cycles(h);
  REQUIRE(cycles.size() == 2);  // boundary peaks at 0 and 48 have no outer neighbors
  CHECK(cycles[0].t_start == 16);
  CHECK(cycles[0].t_mid == 24);
  CHECK(cycles[0].t_end == 32);
  CHECK(cycles[1].t_start == 32);
  CHECK(cycles[1].t_mid == 40);
  CHECK(cycles[1].t_end == 48);
  CHECK(cycles[0].h_max == doctest::Approx(1.0));
  CHECK(cycles[0].h_min == doctest::Approx(0.0));

  // with one extra leading/trailing period the interior count is exact
  IndicatorSeries h5;
  h5.values = triangle(5, 16);
  CHECK(detect_cycles(h5).size() == 4);
}

TEST_CASE("detect_cycles: monotone series has no cycles") {
  IndicatorSeries h;
  for (int i = 0; i < 40; ++i) h.values.push_back(double(i));
  CHECK(detect_cycles(h).empty());
}

TEST_CASE("detect_cycles: flat series has no cycles") {
  IndicatorSeries h;
  h.values.assign(40, 3.0);
  CHECK(detect_cycles(h).empty());
}

TEST_CASE("detect_cycles: noise below the prominence threshold is ignored") {
  Rng rng(77);
  IndicatorSeries h;
  h.values = triangle(5, 32, 100.0, 200.0);
  for (auto& v : h.values) v += rng.uniform(-0.05 * 100.0, 0.05 * 100.0);
  auto cycles = detect_cycles(h);
  REQUIRE(cycles.size() == 4);
  for (size_t k = 0; k < cycles.size(); ++k) {
    CHECK(std::abs(cycles[k].t_start - int64_t(32 * (k + 1))) <= 2);
    CHECK(std::abs(cycles[k].t_mid - int64_t(32 * (k + 1) + 16)) <= 2);
  }
}

TEST_CASE("assign_progress: endpoints and midpoint are exact") {
  IndicatorSeries h;
  h.values = triangle(3, 16, 50.0, 150.0);
  auto cycles = detect_cycles(h);
  REQUIRE(cycles.size() == 2);
  auto labels = assign_progress(h, cycles);

  // last cycle keeps its endpoint value 1; earlier boundaries are overwritten
  // by the next cycle's start
  CHECK(labels.progress[16] == 0.0);
  CHECK(labels.progress[24] == 0.5);
  CHECK(labels.progress[32] == 0.0);
  CHECK(labels.progress[40] == 0.5);
  CHECK(labels.progress[48] == 1.0);
  CHECK(labels.valid[16] == 1);
  CHECK(labels.valid[15] == 0);  // before the first complete cycle
  CHECK(labels.cycle_index[17] == 0);
  CHECK(labels.cycle_index[33] == 1);

  // halfway values on each branch
  CHECK(labels.progress[20] == doctest::Approx(0.25));
  CHECK(labels.progress[28] == doctest::Approx(0.75));
}

TEST_CASE("assign_progress: triangular indicator recovers linear progress") {
  const int p = 64;
  IndicatorSeries h;
  h.values = triangle(4, p, 10.0, 20.0);
  auto labels = assign_progress(h, detect_cycles(h));
  for (int64_t t = p; t <= 3 * p; ++t) {
    REQUIRE(labels.valid[size_t(t)] == 1);
    const double phase = double((t - p) % p) / double(p);
    const double err = std::abs(labels.progress[size_t(t)] - phase);
    const double circ = std::min(err, 1.0 - err);
    CHECK(circ <= 1.0 / p);
  }
}

TEST_CASE("assign_progress: labels are invariant to positive affine rescaling") {
  // dyadic samples and a dyadic transform keep the arithmetic exact
  IndicatorSeries h;
  h.values = triangle(4, 16, 1.0, 3.0);
  IndicatorSeries g;
  g.action = h.action;
  for (double v : h.values) g.values.push_back(2.0 * v - 3.0);
  auto lh = assign_progress(h, detect_cycles(h));
  auto lg = assign_progress(g, detect_cycles(g));
  CHECK(lh.progress == lg.progress);
  CHECK(lh.valid == lg.valid);
}

TEST_CASE("assign_progress: degenerate cycles are skipped") {
  IndicatorSeries h;
  h.values = triangle(3, 16);
  auto cycles = detect_cycles(h);
  REQUIRE(cycles.size() == 2);
  cycles[0].h_max = cycles[0].h_min = 1.0;  // force a flat cycle
  auto labels = assign_progress(h, cycles);
  CHECK(labels.valid[20] == 0);
  CHECK(labels.valid[40] == 1);
}

TEST_CASE("assign_progress: clamps out-of-range values") {
  IndicatorSeries h;
  h.values = triangle(3, 16, 0.0, 1.0);
  auto cycles = detect_cycles(h);
  // shrink the recorded extrema so the formula would exceed [0,1]
  for (auto& c : cycles) {
    c.h_max = 0.9;
    c.h_min = 0.1;
  }
  auto labels = assign_progress(h, cycles);
  for (size_t t = 0; t < labels.progress.size(); ++t) {
    CHECK(labels.progress[t] >= 0.0);
    CHECK(labels.progress[t] <= 1.0);
  }
}
