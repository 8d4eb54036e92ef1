#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scotti/tensor.hpp"

namespace scotti {

struct GradCheckResult {
  bool pass = false;
  bool nan_seen = false;
  double max_rel_err = 0.0;
  int64_t checked = 0;
  std::string worst;  // location and values of the worst element

  std::string summary() const;
};

// Central-difference check of reverse-mode gradients. f must map the inputs
// to a scalar and be smooth at the evaluation point (keep inputs away from
// relu kinks and pool ties). Only inputs flagged requires_grad are perturbed.
//
// The per-element relative error uses a denominator floored at a small
// fraction of the largest gradient magnitude, so near-zero entries are
// effectively compared absolutely on the tensor's own scale.
template <typename T>
GradCheckResult grad_check(
    const std::function<TensorT<T>(TapeT<T>*, std::vector<TensorT<T>>&)>& f,
    std::vector<TensorT<T>> inputs, double step, double tol);

}  // namespace scotti
