#pragma once

#include <vector>

#include "scotti/tensor.hpp"

namespace scotti {

// Differentiable primitives. Every op takes the tape as its first argument;
// passing nullptr runs plain forward (inference). A backward step is recorded
// only when the tape is present and at least one input participates in the
// gradient. Outputs are freshly allocated; inputs are never mutated.

// elementwise, same shape
template <typename T> TensorT<T> add(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> divide(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

template <typename T> TensorT<T> scale(TapeT<T>* tape, const TensorT<T>& x, T c);

// y = sqrt(x + eps); eps keeps the derivative finite at x == 0
template <typename T> TensorT<T> sqrt_eps(TapeT<T>* tape, const TensorT<T>& x, T eps);

// y = acos(clamp(x, -c, c)) with c = 1 - 1e-7; zero gradient in the clamped range
template <typename T> TensorT<T> acos_clamped(TapeT<T>* tape, const TensorT<T>& x);

// b's shape must be a trailing suffix of x's shape (bias rows, positional tables)
template <typename T> TensorT<T> add_broadcast(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& b);

// x: [N,C,H,W], b: [C]
template <typename T> TensorT<T> add_channel_bias(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& b);

enum class Activation { Relu, Sigmoid };
template <typename T> TensorT<T> activation(TapeT<T>* tape, const TensorT<T>& x, Activation kind);
template <typename T> TensorT<T> relu(TapeT<T>* tape, const TensorT<T>& x);
template <typename T> TensorT<T> sigmoid(TapeT<T>* tape, const TensorT<T>& x);

// a: [m,k], b: [k,n]
template <typename T> TensorT<T> matmul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

// a: [B,m,k]; b: [B,k,n], or [B,n,k] when trans_b
template <typename T> TensorT<T> bmm(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b, bool trans_b = false);

// x: [rows,in], w: [in,out], b: [out]
template <typename T> TensorT<T> linear(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b);

// x: [N,C,H,W], kernel: [F,C,kh,kw]; cross-correlation, no kernel flip
template <typename T> TensorT<T> conv2d(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& kernel,
                                        int stride, int padding);

// window/stride over both spatial axes; gradient routes to the argmax only,
// ties resolved toward the lowest flat index
template <typename T> TensorT<T> maxpool2d(TapeT<T>* tape, const TensorT<T>& x, int window, int stride);

// normalization over the last axis, then affine with gain/bias of that extent
template <typename T> TensorT<T> layer_norm(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& gain,
                                            const TensorT<T>& bias, T eps = T(1e-5));

// softmax over the last axis, max-subtracted
template <typename T> TensorT<T> softmax(TapeT<T>* tape, const TensorT<T>& x);

// mean cross-entropy of [n,C] logits against integer class targets
template <typename T> TensorT<T> cross_entropy(TapeT<T>* tape, const TensorT<T>& logits,
                                               const std::vector<int>& targets);

// shape plumbing
template <typename T> TensorT<T> prepend_row(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& row);
template <typename T> TensorT<T> slice_tokens(TapeT<T>* tape, const TensorT<T>& x, int64_t start, int64_t len);
template <typename T> TensorT<T> split_heads(TapeT<T>* tape, const TensorT<T>& x, int heads);
template <typename T> TensorT<T> merge_heads(TapeT<T>* tape, const TensorT<T>& x, int heads);

// rows gathered along the second-to-last axis: [J,D] or [B,J,D]
template <typename T> TensorT<T> gather_rows(TapeT<T>* tape, const TensorT<T>& x, const std::vector<int>& idx);

// reductions
template <typename T> TensorT<T> sum_last(TapeT<T>* tape, const TensorT<T>& x);
template <typename T> TensorT<T> sum_all(TapeT<T>* tape, const TensorT<T>& x);
template <typename T> TensorT<T> mean_all(TapeT<T>* tape, const TensorT<T>& x);

// out[b,:] = sum_l w[l] * tokens[b,l,:]
template <typename T> TensorT<T> weighted_sum_rows(TapeT<T>* tape, const TensorT<T>& tokens, const TensorT<T>& w);

// multi-head scaled dot-product attention over already-projected q/k/v.
// attention_core returns the concatenated head outputs; attention applies the
// output projection as well. q/k/v are [L,E] or [B,L,E].
template <typename T> TensorT<T> attention_core(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                                                const TensorT<T>& v, int heads);
template <typename T> TensorT<T> attention(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                                           const TensorT<T>& v, int heads, const TensorT<T>& w_out,
                                           const TensorT<T>& b_out);

// softmax(w)-weighted convex combination of token rows; [L,E] or [B,L,E]
template <typename T> TensorT<T> pool_weighted(TapeT<T>* tape, const TensorT<T>& tokens, const TensorT<T>& w);

}  // namespace scotti
