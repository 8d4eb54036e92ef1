#include "scotti/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace scotti {

std::string GradCheckResult::summary() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << " (max rel err " << max_rel_err << " over " << checked
     << " elements";
  if (nan_seen) os << ", NaN seen";
  if (!worst.empty()) os << ", worst at " << worst;
  os << ")";
  return os.str();
}

template <typename T>
GradCheckResult grad_check(
    const std::function<TensorT<T>(TapeT<T>*, std::vector<TensorT<T>>&)>& f,
    std::vector<TensorT<T>> inputs, double step, double tol) {
  GradCheckResult res;

  // analytic pass
  TapeT<T> tape;
  TensorT<T> loss = f(&tape, inputs);
  if (loss.numel() != 1) throw ContractError("grad_check: f must return a scalar");
  tape.backward(loss);

  std::vector<std::vector<T>> analytic(inputs.size());
  double gmax = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    inputs[i].ensure_grad();
    analytic[i].assign(inputs[i].grad(), inputs[i].grad() + inputs[i].numel());
    for (T g : analytic[i]) {
      if (!std::isfinite(double(g))) res.nan_seen = true;
      gmax = std::max(gmax, std::abs(double(g)));
    }
  }

  // Elements far below the difference quotient's own rounding noise
  // (eps*|f|/h) cannot be certified relatively; they are compared against
  // this floor instead, which keeps the check meaningful at both precisions.
  const double eps_t = double(std::numeric_limits<T>::epsilon());
  const double f0 = std::abs(double(loss.item()));
  const double noise_floor = eps_t * std::max(1.0, f0) / step / tol;
  const double floor = std::max(1e-6 * std::max(1.0, gmax), noise_floor);
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    TensorT<T>& x = inputs[i];
    for (int64_t j = 0; j < x.numel(); ++j) {
      const T orig = x[j];
      const double h = step * std::max(1.0, std::abs(double(orig)));
      x[j] = T(double(orig) + h);
      const double fp = double(f(nullptr, inputs).item());
      x[j] = T(double(orig) - h);
      const double fm = double(f(nullptr, inputs).item());
      x[j] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = double(analytic[i][size_t(j)]);
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        res.nan_seen = true;
        res.max_rel_err = std::numeric_limits<double>::infinity();
        continue;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        std::ostringstream os;
        os << "input " << i << " flat " << j << ": analytic=" << a << " numeric=" << numeric;
        res.worst = os.str();
      }
    }
  }
  res.pass = !res.nan_seen && res.max_rel_err < tol;
  return res;
}

template GradCheckResult grad_check<float>(
    const std::function<TensorT<float>(TapeT<float>*, std::vector<TensorT<float>>&)>&,
    std::vector<TensorT<float>>, double, double);
template GradCheckResult grad_check<double>(
    const std::function<TensorT<double>(TapeT<double>*, std::vector<TensorT<double>>&)>&,
    std::vector<TensorT<double>>, double, double);

}  // namespace scotti
