#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "scotti/errors.hpp"

namespace scotti {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major tensor. Copies share storage; ops never mutate their
// inputs, so sharing is observationally value-semantic. The gradient buffer
// lives next to the data and is shared by reshaped views, which is what lets
// adjoints flow through metadata-only reshapes without a tape node.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  static TensorT zeros(Shape shape);
  static TensorT full(Shape shape, T value);
  static TensorT from(Shape shape, std::vector<T> values);
  static TensorT scalar(T value) { return from({1}, {value}); }

  bool defined() const { return payload_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int rank() const { return int(shape_.size()); }
  int64_t dim(int i) const;
  int64_t numel() const;

  T* data();
  const T* data() const;
  std::vector<T>& values();
  const std::vector<T>& values() const;
  T item() const;

  bool requires_grad() const;
  TensorT& set_requires_grad(bool b);

  bool has_grad() const;
  T* grad();
  const T* grad() const;
  std::vector<T>& grad_values();
  void ensure_grad();
  void zero_grad();

  // Shares data and grad storage; shapes must agree in element count.
  TensorT reshaped(Shape new_shape) const;

  T operator[](int64_t i) const { return values()[size_t(i)]; }
  T& operator[](int64_t i) { return values()[size_t(i)]; }
  T at(std::initializer_list<int64_t> idx) const;

  // tape linkage, set by recorded ops
  int64_t node = -1;
  uint64_t tape_id = 0;

 private:
  struct Payload {
    std::vector<T> v;
    std::vector<T> g;  // empty until ensure_grad()
    bool requires_grad = false;
  };
  Shape shape_;
  std::shared_ptr<Payload> payload_;
};

// Reverse-mode tape. Owned by exactly one training step; backward() may run
// once, after which the tape is consumed.
template <typename T>
class TapeT {
 public:
  TapeT();
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  uint64_t id() const { return id_; }
  int64_t record(std::function<void()> backward_step);
  size_t size() const { return steps_.size(); }
  bool consumed() const { return consumed_; }

  // Seeds d(loss)/d(loss)=1 and runs every recorded step in reverse order.
  void backward(TensorT<T>& loss);

 private:
  std::vector<std::function<void()>> steps_;
  uint64_t id_ = 0;
  bool consumed_ = false;
};

template <typename T>
bool all_finite(const TensorT<T>& t);

template <typename T>
void check_finite(const TensorT<T>& t, const char* what);

using Tensor = TensorT<float>;
using Tape = TapeT<float>;

}  // namespace scotti
