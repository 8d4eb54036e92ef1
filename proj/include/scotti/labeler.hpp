#pragma once

#include <cstdint>
#include <vector>

#include "scotti/dataset.hpp"

namespace scotti {

// Per-action scalar series whose extrema delimit action cycles.
struct IndicatorSeries {
  std::vector<double> values;
  ActionClass action = ActionClass::Squatting;
};

// One repetition: indicator maxima at both ends, minimum in the middle.
struct ActionCycle {
  int64_t t_start = 0;
  int64_t t_mid = 0;
  int64_t t_end = 0;
  double h_max = 0.0;
  double h_min = 0.0;
};

struct PeakParams {
  double prominence_frac = 0.2;  // of the global value range
  int min_distance = 8;          // frames, between peaks of the same kind
  bool smooth = false;           // optional width-3 moving average
};

// Indicator definitions:
//   squatting / lunging / step-up : mid-hip z
//   jumping                       : negated mid-hip z
//   walking / side-walking        : Euclidean heel distance
//   in-place-walking              : max heel z
//   backward-walking              : rolling max of heel distance over the
//                                   last 5 frames (prefix-truncated)
IndicatorSeries compute_indicator(const PoseSequence& pose, ActionClass action,
                                  const JointLayout& layout = JointLayout::default19());

// local maxima of h with prominence and spacing filters; plateaus report
// their first index (exposed separately for tests)
std::vector<int64_t> find_peaks(const std::vector<double>& h, const PeakParams& params);

std::vector<ActionCycle> detect_cycles(const IndicatorSeries& h, const PeakParams& params = {});

// progress via the two-branch ratio of each cycle's extrema, clamped to
// [0,1]; frames outside any cycle are masked invalid
ProgressLabels assign_progress(const IndicatorSeries& h, const std::vector<ActionCycle>& cycles);

// convenience: indicator -> cycles -> labels
ProgressLabels label_sequence(const PoseSequence& pose, ActionClass action,
                              const PeakParams& params = {},
                              const JointLayout& layout = JointLayout::default19());

}  // namespace scotti
