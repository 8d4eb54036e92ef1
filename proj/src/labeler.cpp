#include "scotti/labeler.hpp"

#include <algorithm>
#include <cmath>

#include "scotti/log.hpp"

namespace scotti {

namespace {

double heel_distance(const PoseSequence& pose, int64_t t, int lheel, int rheel) {
  const double dx = pose.kp(t, lheel, 0) - pose.kp(t, rheel, 0);
  const double dy = pose.kp(t, lheel, 1) - pose.kp(t, rheel, 1);
  const double dz = pose.kp(t, lheel, 2) - pose.kp(t, rheel, 2);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

IndicatorSeries compute_indicator(const PoseSequence& pose, ActionClass action,
                                  const JointLayout& layout) {
  IndicatorSeries out;
  out.action = action;
  out.values.resize(size_t(pose.n));
  switch (action) {
    case ActionClass::Squatting:
    case ActionClass::Lunging:
    case ActionClass::StepUp: {
      const int midhip = layout.index("mid_hip");
      for (int64_t t = 0; t < pose.n; ++t) out.values[size_t(t)] = pose.kp(t, midhip, 2);
      break;
    }
    case ActionClass::Jumping: {
      const int midhip = layout.index("mid_hip");
      for (int64_t t = 0; t < pose.n; ++t) out.values[size_t(t)] = -pose.kp(t, midhip, 2);
      break;
    }
    case ActionClass::Walking:
    case ActionClass::SideWalking: {
      const int lh = layout.index("left_heel"), rh = layout.index("right_heel");
      for (int64_t t = 0; t < pose.n; ++t) out.values[size_t(t)] = heel_distance(pose, t, lh, rh);
      break;
    }
    case ActionClass::InPlaceWalking: {
      const int lh = layout.index("left_heel"), rh = layout.index("right_heel");
      for (int64_t t = 0; t < pose.n; ++t)
        out.values[size_t(t)] = std::max(pose.kp(t, lh, 2), pose.kp(t, rh, 2));
      break;
    }
    case ActionClass::BackwardWalking: {
      const int lh = layout.index("left_heel"), rh = layout.index("right_heel");
      // rolling max of the heel distance over the last 5 frames; the first
      // frames use whatever prefix is available
      for (int64_t t = 0; t < pose.n; ++t) {
        double best = 0.0;
        const int64_t lo = std::max<int64_t>(0, t - 4);
        for (int64_t s = lo; s <= t; ++s) best = std::max(best, heel_distance(pose, s, lh, rh));
        out.values[size_t(t)] = best;
      }
      break;
    }
  }
  return out;
}

namespace {

std::vector<double> moving_average3(const std::vector<double>& h) {
  const int64_t n = int64_t(h.size());
  std::vector<double> out(h.size());
  for (int64_t i = 0; i < n; ++i) {
    double acc = h[size_t(i)];
    int cnt = 1;
    if (i > 0) { acc += h[size_t(i - 1)]; ++cnt; }
    if (i + 1 < n) { acc += h[size_t(i + 1)]; ++cnt; }
    out[size_t(i)] = acc / cnt;
  }
  return out;
}

// prominence of a local maximum: height above the higher of the two valley
// floors between this peak and the nearest taller point (or boundary)
double prominence_at(const std::vector<double>& h, int64_t p) {
  const int64_t n = int64_t(h.size());
  const double hp = h[size_t(p)];
  double left = hp, right = hp;
  for (int64_t i = p - 1; i >= 0; --i) {
    if (h[size_t(i)] > hp) break;
    left = std::min(left, h[size_t(i)]);
  }
  for (int64_t i = p + 1; i < n; ++i) {
    if (h[size_t(i)] > hp) break;
    right = std::min(right, h[size_t(i)]);
  }
  return hp - std::max(left, right);
}

}  // namespace

std::vector<int64_t> find_peaks(const std::vector<double>& h, const PeakParams& params) {
  const int64_t n = int64_t(h.size());
  std::vector<int64_t> candidates;
  int64_t i = 1;
  while (i < n) {
    if (h[size_t(i)] > h[size_t(i - 1)]) {
      int64_t j = i;
      while (j + 1 < n && h[size_t(j + 1)] == h[size_t(i)]) ++j;
      if (j + 1 < n && h[size_t(j + 1)] < h[size_t(i)]) candidates.push_back(i);  // plateau start
      i = j + 1;
    } else {
      ++i;
    }
  }
  if (candidates.empty()) return candidates;

  double gmin = h[0], gmax = h[0];
  for (double v : h) {
    gmin = std::min(gmin, v);
    gmax = std::max(gmax, v);
  }
  const double range = gmax - gmin;
  if (range <= 0.0) return {};
  const double min_prom = params.prominence_frac * range;

  std::vector<int64_t> prominent;
  for (int64_t p : candidates)
    if (prominence_at(h, p) >= min_prom) prominent.push_back(p);

  // enforce spacing, keeping taller peaks first
  std::vector<int64_t> order = prominent;
  std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    if (h[size_t(a)] != h[size_t(b)]) return h[size_t(a)] > h[size_t(b)];
    return a < b;
  });
  std::vector<int64_t> kept;
  for (int64_t p : order) {
    bool ok = true;
    for (int64_t q : kept)
      if (std::abs(p - q) < params.min_distance) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<ActionCycle> detect_cycles(const IndicatorSeries& h, const PeakParams& params) {
  const std::vector<double>& raw = h.values;
  if (int64_t(raw.size()) < 3) throw ContractError("detect_cycles: need at least 3 frames");
  const std::vector<double> series = params.smooth ? moving_average3(raw) : raw;

  std::vector<int64_t> maxima = find_peaks(series, params);
  std::vector<double> negated(series.size());
  for (size_t i = 0; i < series.size(); ++i) negated[i] = -series[i];
  std::vector<int64_t> minima = find_peaks(negated, params);

  std::vector<ActionCycle> cycles;
  for (size_t m = 0; m + 1 < maxima.size(); ++m) {
    const int64_t a = maxima[m], b = maxima[m + 1];
    int64_t best_min = -1;
    for (int64_t q : minima) {
      if (q <= a || q >= b) continue;
      if (best_min < 0 || series[size_t(q)] < series[size_t(best_min)]) best_min = q;
    }
    if (best_min < 0) continue;
    ActionCycle c;
    c.t_start = a;
    c.t_mid = best_min;
    c.t_end = b;
    c.h_max = raw[size_t(a)];
    c.h_min = raw[size_t(best_min)];
    for (int64_t t = a; t <= b; ++t) {
      c.h_max = std::max(c.h_max, raw[size_t(t)]);
      c.h_min = std::min(c.h_min, raw[size_t(t)]);
    }
    cycles.push_back(c);
  }
  return cycles;
}

ProgressLabels assign_progress(const IndicatorSeries& h, const std::vector<ActionCycle>& cycles) {
  const int64_t n = int64_t(h.values.size());
  ProgressLabels out;
  out.progress.assign(size_t(n), 0.0);
  out.valid.assign(size_t(n), 0);
  out.cycle_index.assign(size_t(n), -1);

  for (size_t k = 0; k < cycles.size(); ++k) {
    const ActionCycle& c = cycles[k];
    if (!(c.t_start < c.t_mid && c.t_mid < c.t_end))
      throw ContractError("assign_progress: malformed cycle ordering");
    const double range = c.h_max - c.h_min;
    if (!(range > 0.0)) {
      log_warn("degenerate cycle (flat indicator) at frames " + std::to_string(c.t_start) + ".." +
               std::to_string(c.t_end) + ", skipped");
      continue;
    }
    for (int64_t t = c.t_start; t <= c.t_end; ++t) {
      const double v = h.values[size_t(t)];
      double p;
      if (t <= c.t_mid)
        p = 0.5 * (c.h_max - v) / range;
      else
        p = 0.5 + 0.5 * (v - c.h_min) / range;
      p = std::clamp(p, 0.0, 1.0);
      out.progress[size_t(t)] = p;
      out.valid[size_t(t)] = 1;
      out.cycle_index[size_t(t)] = int(k);
    }
  }
  return out;
}

ProgressLabels label_sequence(const PoseSequence& pose, ActionClass action,
                              const PeakParams& params, const JointLayout& layout) {
  IndicatorSeries h = compute_indicator(pose, action, layout);
  return assign_progress(h, detect_cycles(h, params));
}

}  // namespace scotti
