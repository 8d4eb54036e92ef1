#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scotti/ops.hpp"
#include "scotti/tensor.hpp"

namespace scotti {

// Eq-style weighted sum; a weight of exactly 0 drops that task's term from
// the graph, so disabled tasks contribute exactly zero gradient.
struct LossWeights {
  double pose = 0.01;
  double action = 1.0;
  double progress = 1.0;
};

// Bone edges over the default 19-joint layout; needed to turn keypoints into
// direction vectors for the angle metric.
struct Skeleton {
  std::vector<std::pair<int, int>> edges;

  static const Skeleton& default19();
  int count() const { return int(edges.size()); }
};

// ---- reported metrics (plain double, no tape) ----

// mean Euclidean distance over joints, millimetres; no alignment
double mpjpe(const std::vector<double>& pred, const std::vector<double>& target, int joints);

// mean angle between corresponding bone directions, degrees; bones shorter
// than 1e-6 mm are skipped, and an all-degenerate skeleton is an error
double mpjae_deg(const std::vector<double>& pred, const std::vector<double>& target, int joints,
                 const Skeleton& skeleton = Skeleton::default19());

struct ClassificationReport {
  double accuracy = 0.0;
  std::vector<std::vector<int64_t>> confusion;  // [true][predicted]
};

// argmax prediction, ties to the lowest index
ClassificationReport classification_report(const std::vector<double>& logits, int n_classes,
                                           const std::vector<int>& targets);

struct PMCurve {
  std::vector<double> margins;
  std::vector<double> precision;
  double app = 0.0;  // trapezoidal area under the curve
};

// precision(m) = fraction of |pred - target| strictly below the margin
PMCurve app_curve(const std::vector<double>& pred, const std::vector<double>& target,
                  int grid = 101);

std::string pm_curve_csv(const PMCurve& curve);
std::string confusion_csv(const std::vector<std::vector<int64_t>>& confusion);

// ---- differentiable loss terms ----

template <typename T>
TensorT<T> mpjpe_loss(TapeT<T>* tape, const TensorT<T>& pred, const TensorT<T>& target);

// radians (the reported metric stays in degrees)
template <typename T>
TensorT<T> mpjae_loss_rad(TapeT<T>* tape, const TensorT<T>& pred, const TensorT<T>& target,
                          const Skeleton& skeleton = Skeleton::default19());

template <typename T>
TensorT<T> progress_mse_loss(TapeT<T>* tape, const TensorT<T>& pred, const TensorT<T>& target);

template <typename T>
struct LossBreakdown {
  TensorT<T> total;       // scalar on the tape
  double pose = 0.0;      // mpjpe + mpjae (radians), unweighted
  double mpjpe_mm = 0.0;
  double mpjae_deg = 0.0;
  double action_ce = 0.0;
  double progress_mse = 0.0;
};

// L = w_pose * (MPJPE + MPJAE) + w_action * CE + w_progress * MSE, batch mean
template <typename T>
LossBreakdown<T> total_loss(TapeT<T>* tape, const TensorT<T>& pose_pred,
                            const TensorT<T>& logits, const TensorT<T>& progress_pred,
                            const TensorT<T>& pose_target, const std::vector<int>& class_targets,
                            const TensorT<T>& progress_target, const LossWeights& weights,
                            const Skeleton& skeleton = Skeleton::default19());

}  // namespace scotti
