#include "scotti/tensor.hpp"

#include <malloc.h>

#include <atomic>
#include <cmath>
#include <sstream>

namespace scotti {

namespace {

// Activation buffers churn hundreds of megabytes per training step. Keep
// freed blocks inside the heap instead of handing them back to the kernel,
// or every step pays the page faults again.
struct HeapTuning {
  HeapTuning() {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  }
};
const HeapTuning g_heap_tuning;

}  // namespace

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

template <typename T>
TensorT<T> TensorT<T>::zeros(Shape shape) {
  for (int64_t d : shape)
    if (d <= 0) throw DimensionError("tensor extent must be positive, got " + shape_str(shape));
  TensorT t;
  t.shape_ = std::move(shape);
  t.payload_ = std::make_shared<Payload>();
  t.payload_->v.assign(size_t(shape_numel(t.shape_)), T(0));
  return t;
}

template <typename T>
TensorT<T> TensorT<T>::full(Shape shape, T value) {
  TensorT t = zeros(std::move(shape));
  for (auto& x : t.payload_->v) x = value;
  return t;
}

template <typename T>
TensorT<T> TensorT<T>::from(Shape shape, std::vector<T> values) {
  if (int64_t(values.size()) != shape_numel(shape))
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
  TensorT t;
  t.shape_ = std::move(shape);
  t.payload_ = std::make_shared<Payload>();
  t.payload_->v = std::move(values);
  return t;
}

template <typename T>
int64_t TensorT<T>::dim(int i) const {
  if (i < 0) i += rank();
  if (i < 0 || i >= rank()) throw DimensionError("axis out of range");
  return shape_[size_t(i)];
}

template <typename T>
int64_t TensorT<T>::numel() const {
  return payload_ ? int64_t(payload_->v.size()) : 0;
}

template <typename T>
T* TensorT<T>::data() {
  return payload_->v.data();
}

template <typename T>
const T* TensorT<T>::data() const {
  return payload_->v.data();
}

template <typename T>
std::vector<T>& TensorT<T>::values() {
  return payload_->v;
}

template <typename T>
const std::vector<T>& TensorT<T>::values() const {
  return payload_->v;
}

template <typename T>
T TensorT<T>::item() const {
  if (numel() != 1) throw ContractError("item() requires a scalar, got " + shape_str(shape_));
  return payload_->v[0];
}

template <typename T>
bool TensorT<T>::requires_grad() const {
  return payload_ && payload_->requires_grad;
}

template <typename T>
TensorT<T>& TensorT<T>::set_requires_grad(bool b) {
  payload_->requires_grad = b;
  return *this;
}

template <typename T>
bool TensorT<T>::has_grad() const {
  return payload_ && !payload_->g.empty();
}

template <typename T>
T* TensorT<T>::grad() {
  return payload_->g.empty() ? nullptr : payload_->g.data();
}

template <typename T>
const T* TensorT<T>::grad() const {
  return payload_->g.empty() ? nullptr : payload_->g.data();
}

template <typename T>
std::vector<T>& TensorT<T>::grad_values() {
  ensure_grad();
  return payload_->g;
}

template <typename T>
void TensorT<T>::ensure_grad() {
  if (payload_->g.empty()) payload_->g.assign(payload_->v.size(), T(0));
}

template <typename T>
void TensorT<T>::zero_grad() {
  for (auto& g : payload_->g) g = T(0);
}

template <typename T>
TensorT<T> TensorT<T>::reshaped(Shape new_shape) const {
  if (shape_numel(new_shape) != numel())
    throw DimensionError("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
                         " changes element count");
  TensorT t = *this;
  t.shape_ = std::move(new_shape);
  return t;
}

template <typename T>
T TensorT<T>::at(std::initializer_list<int64_t> idx) const {
  if (int(idx.size()) != rank()) throw DimensionError("index rank mismatch");
  int64_t flat = 0;
  int i = 0;
  for (int64_t ix : idx) {
    if (ix < 0 || ix >= shape_[size_t(i)]) throw DimensionError("index out of range");
    flat = flat * shape_[size_t(i)] + ix;
    ++i;
  }
  return payload_->v[size_t(flat)];
}

namespace {
std::atomic<uint64_t> g_next_tape_id{1};
}

template <typename T>
TapeT<T>::TapeT() : id_(g_next_tape_id.fetch_add(1)) {}

template <typename T>
int64_t TapeT<T>::record(std::function<void()> backward_step) {
  if (consumed_) throw StateError("cannot record on a consumed tape");
  steps_.push_back(std::move(backward_step));
  return int64_t(steps_.size()) - 1;
}

template <typename T>
void TapeT<T>::backward(TensorT<T>& loss) {
  if (consumed_) throw StateError("backward already ran on this tape");
  if (loss.numel() != 1) throw ContractError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  if (loss.tape_id != id_ || loss.node < 0)
    throw ContractError("loss was not recorded on this tape");
  consumed_ = true;
  loss.ensure_grad();
  loss.grad()[0] = T(1);
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

template <typename T>
bool all_finite(const TensorT<T>& t) {
  for (const T& x : t.values())
    if (!std::isfinite(double(x))) return false;
  return true;
}

template <typename T>
void check_finite(const TensorT<T>& t, const char* what) {
  if (!all_finite(t)) throw NumericError(std::string("non-finite values in ") + what);
}

template class TensorT<float>;
template class TensorT<double>;
template class TapeT<float>;
template class TapeT<double>;
template bool all_finite<float>(const TensorT<float>&);
template bool all_finite<double>(const TensorT<double>&);
template void check_finite<float>(const TensorT<float>&, const char*);
template void check_finite<double>(const TensorT<double>&, const char*);

}  // namespace scotti
