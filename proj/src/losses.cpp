#include "scotti/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "scotti/dataset.hpp"

namespace scotti {

const Skeleton& Skeleton::default19() {
  // indices follow JointLayout::default19()
  static const Skeleton s{{
      {0, 1},    // head - neck
      {1, 2},  {1, 3},    // neck - shoulders
      {2, 4},  {4, 6},    // left arm
      {3, 5},  {5, 7},    // right arm
      {1, 8},             // neck - mid hip
      {8, 9},  {8, 10},   // mid hip - hips
      {9, 11}, {11, 13}, {13, 15}, {15, 17},  // left leg to big toe
      {10, 12}, {12, 14}, {14, 16}, {16, 18}, // right leg to big toe
  }};
  return s;
}

double mpjpe(const std::vector<double>& pred, const std::vector<double>& target, int joints) {
  if (pred.size() != target.size() || int(pred.size()) != joints * 3)
    throw DimensionError("mpjpe: expects matching [J,3] buffers");
  double acc = 0.0;
  for (int j = 0; j < joints; ++j) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = pred[size_t(j * 3 + a)] - target[size_t(j * 3 + a)];
      d2 += d * d;
    }
    acc += std::sqrt(d2);
  }
  return acc / joints;
}

double mpjae_deg(const std::vector<double>& pred, const std::vector<double>& target, int joints,
                 const Skeleton& skeleton) {
  if (pred.size() != target.size() || int(pred.size()) != joints * 3)
    throw DimensionError("mpjae: expects matching [J,3] buffers");
  double acc = 0.0;
  int used = 0;
  for (auto [a, b] : skeleton.edges) {
    if (a >= joints || b >= joints) throw DimensionError("mpjae: skeleton edge outside layout");
    double u[3], v[3], nu = 0.0, nv = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      u[ax] = pred[size_t(b * 3 + ax)] - pred[size_t(a * 3 + ax)];
      v[ax] = target[size_t(b * 3 + ax)] - target[size_t(a * 3 + ax)];
      nu += u[ax] * u[ax];
      nv += v[ax] * v[ax];
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    if (nu < 1e-6 || nv < 1e-6) continue;  // degenerate bone
    double dot = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (nu * nv);
    dot = std::clamp(dot, -1.0, 1.0);
    acc += std::acos(dot);
    ++used;
  }
  if (used == 0) throw NumericError("mpjae: every bone is degenerate, metric undefined");
  return acc / used * (180.0 / M_PI);
}

ClassificationReport classification_report(const std::vector<double>& logits, int n_classes,
                                           const std::vector<int>& targets) {
  const size_t n = targets.size();
  if (n == 0) throw ContractError("classification_report: empty input");
  if (logits.size() != n * size_t(n_classes))
    throw DimensionError("classification_report: logits/targets size mismatch");
  ClassificationReport rep;
  rep.confusion.assign(size_t(n_classes), std::vector<int64_t>(size_t(n_classes), 0));
  int64_t correct = 0;
  for (size_t i = 0; i < n; ++i) {
    const int t = targets[i];
    if (t < 0 || t >= n_classes) throw ContractError("classification_report: target out of range");
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
      if (logits[i * size_t(n_classes) + size_t(c)] > logits[i * size_t(n_classes) + size_t(best)])
        best = c;  // strict: ties keep the lowest index
    rep.confusion[size_t(t)][size_t(best)] += 1;
    if (best == t) ++correct;
  }
  rep.accuracy = double(correct) / double(n);
  return rep;
}

PMCurve app_curve(const std::vector<double>& pred, const std::vector<double>& target, int grid) {
  if (pred.empty() || pred.size() != target.size())
    throw ContractError("app_curve: need equally sized, non-empty inputs");
  if (grid < 2) throw ContractError("app_curve: grid must have at least 2 points");
  std::vector<double> errs(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) errs[i] = std::abs(pred[i] - target[i]);
  std::sort(errs.begin(), errs.end());

  PMCurve curve;
  curve.margins.resize(size_t(grid));
  curve.precision.resize(size_t(grid));
  for (int g = 0; g < grid; ++g) {
    const double m = double(g) / double(grid - 1);
    // success is strict: |err| < m
    const auto it = std::lower_bound(errs.begin(), errs.end(), m);
    curve.margins[size_t(g)] = m;
    curve.precision[size_t(g)] = double(it - errs.begin()) / double(errs.size());
  }
  double area = 0.0;
  for (int g = 1; g < grid; ++g)
    area += 0.5 * (curve.precision[size_t(g)] + curve.precision[size_t(g - 1)]) *
            (curve.margins[size_t(g)] - curve.margins[size_t(g - 1)]);
  curve.app = area;
  return curve;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string pm_curve_csv(const PMCurve& curve) {
  std::ostringstream os;
  os << "margin,precision\n";
  for (size_t i = 0; i < curve.margins.size(); ++i)
    os << fmt_double(curve.margins[i]) << "," << fmt_double(curve.precision[i]) << "\n";
  os << "# APP=" << fmt_double(curve.app) << "\n";
  return os.str();
}

std::string confusion_csv(const std::vector<std::vector<int64_t>>& confusion) {
  std::ostringstream os;
  for (size_t c = 0; c < confusion.size(); ++c) {
    os << (c ? "," : "") << action_name(ActionClass(int(c)));
  }
  os << "\n";
  for (const auto& row : confusion) {
    for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
  return os.str();
}

template <typename T>
TensorT<T> mpjpe_loss(TapeT<T>* tape, const TensorT<T>& pred, const TensorT<T>& target) {
  if (pred.shape() != target.shape() || pred.rank() != 3 || pred.dim(2) != 3)
    throw DimensionError("mpjpe_loss: expects matching [B,J,3]");
  TensorT<T> d = sub(tape, pred, target);
  TensorT<T> dist = sqrt_eps(tape, sum_last(tape, mul(tape, d, d)), T(1e-12));
  return mean_all(tape, dist);
}

template <typename T>
TensorT<T> mpjae_loss_rad(TapeT<T>* tape, const TensorT<T>& pred, const TensorT<T>& target,
                          const Skeleton& skeleton) {
  if (pred.shape() != target.shape() || pred.rank() != 3 || pred.dim(2) != 3)
    throw DimensionError("mpjae_loss_rad: expects matching [B,J,3]");
  std::vector<int> from, to;
  from.reserve(skeleton.edges.size());
  to.reserve(skeleton.edges.size());
  for (auto [a, b] : skeleton.edges) {
    from.push_back(a);
    to.push_back(b);
  }
  TensorT<T> u = sub(tape, gather_rows(tape, pred, to), gather_rows(tape, pred, from));
  // target directions carry no gradient
  TensorT<T> v = sub<T>(nullptr, gather_rows<T>(nullptr, target, to),
                        gather_rows<T>(nullptr, target, from));
  TensorT<T> nu = sqrt_eps(tape, sum_last(tape, mul(tape, u, u)), T(1e-12));
  TensorT<T> nv = sqrt_eps<T>(nullptr, sum_last<T>(nullptr, mul<T>(nullptr, v, v)), T(1e-12));
  TensorT<T> cosang = divide(tape, sum_last(tape, mul(tape, u, v)), mul(tape, nu, nv));
  return mean_all(tape, acos_clamped(tape, cosang));
}

template <typename T>
TensorT<T> progress_mse_loss(TapeT<T>* tape, const TensorT<T>& pred, const TensorT<T>& target) {
  if (pred.shape() != target.shape())
    throw DimensionError("progress_mse_loss: shape mismatch");
  TensorT<T> d = sub(tape, pred, target);
  return mean_all(tape, mul(tape, d, d));
}

template <typename T>
LossBreakdown<T> total_loss(TapeT<T>* tape, const TensorT<T>& pose_pred, const TensorT<T>& logits,
                            const TensorT<T>& progress_pred, const TensorT<T>& pose_target,
                            const std::vector<int>& class_targets,
                            const TensorT<T>& progress_target, const LossWeights& weights,
                            const Skeleton& skeleton) {
  if (weights.pose < 0 || weights.action < 0 || weights.progress < 0)
    throw ConfigError("total_loss: weights must be non-negative");
  LossBreakdown<T> out;
  TensorT<T> acc;
  auto accumulate = [&](const TensorT<T>& term, double w) {
    TensorT<T> weighted = scale(tape, term, T(w));
    acc = acc.defined() ? add(tape, acc, weighted) : weighted;
  };
  if (weights.pose != 0.0) {
    TensorT<T> pe = mpjpe_loss(tape, pose_pred, pose_target);
    TensorT<T> ae = mpjae_loss_rad(tape, pose_pred, pose_target, skeleton);
    out.mpjpe_mm = double(pe.item());
    out.mpjae_deg = double(ae.item()) * 180.0 / M_PI;
    out.pose = double(pe.item()) + double(ae.item());
    if (!std::isfinite(out.pose)) throw NumericError("total_loss: pose term is not finite");
    accumulate(add(tape, pe, ae), weights.pose);
  }
  if (weights.action != 0.0) {
    TensorT<T> ce = cross_entropy(tape, logits, class_targets);
    out.action_ce = double(ce.item());
    if (!std::isfinite(out.action_ce)) throw NumericError("total_loss: action term is not finite");
    accumulate(ce, weights.action);
  }
  if (weights.progress != 0.0) {
    TensorT<T> mse = progress_mse_loss(tape, progress_pred, progress_target);
    out.progress_mse = double(mse.item());
    if (!std::isfinite(out.progress_mse))
      throw NumericError("total_loss: progress term is not finite");
    accumulate(mse, weights.progress);
  }
  if (!acc.defined()) throw ConfigError("total_loss: every task weight is zero");
  out.total = acc;
  return out;
}

#define SCOTTI_INSTANTIATE_LOSSES(T)                                                            \
  template TensorT<T> mpjpe_loss<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);           \
  template TensorT<T> mpjae_loss_rad<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,        \
                                        const Skeleton&);                                       \
  template TensorT<T> progress_mse_loss<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);    \
  template LossBreakdown<T> total_loss<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,      \
                                          const TensorT<T>&, const TensorT<T>&,                 \
                                          const std::vector<int>&, const TensorT<T>&,           \
                                          const LossWeights&, const Skeleton&);

SCOTTI_INSTANTIATE_LOSSES(float)
SCOTTI_INSTANTIATE_LOSSES(double)

#undef SCOTTI_INSTANTIATE_LOSSES

}  // namespace scotti
