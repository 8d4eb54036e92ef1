#include "scotti/ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace scotti {

namespace {

void gemm_rm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, float alpha, const float* a,
             int64_t lda, const float* b, int64_t ldb, float beta, float* c, int64_t ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              int(m), int(n), int(k), alpha, a, int(lda), b, int(ldb), beta, c, int(ldc));
}

void gemm_rm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, double alpha, const double* a,
             int64_t lda, const double* b, int64_t ldb, double beta, double* c, int64_t ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              int(m), int(n), int(k), alpha, a, int(lda), b, int(ldb), beta, c, int(ldc));
}

template <typename T>
bool rec_needed(TapeT<T>* tape, const TensorT<T>& a) {
  return tape && a.requires_grad();
}

template <typename T>
bool rec_needed(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return tape && (a.requires_grad() || b.requires_grad());
}

template <typename T>
bool rec_needed(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b, const TensorT<T>& c) {
  return tape && (a.requires_grad() || b.requires_grad() || c.requires_grad());
}

template <typename T, typename Fn>
void attach(TapeT<T>* tape, TensorT<T>& out, Fn step) {
  out.node = tape->record(std::function<void()>(std::move(step)));
  out.tape_id = tape->id();
  out.set_requires_grad(true);
}

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

// generic same-shape binary op; dfa/dfb produce the two input adjoint increments
template <typename T, typename Fwd, typename Dfa, typename Dfb>
TensorT<T> ew_binary(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b, const char* name,
                     Fwd fwd, Dfa dfa, Dfb dfb) {
  require_same_shape(a, b, name);
  TensorT<T> out = TensorT<T>::zeros(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], pb[i]);
  if (rec_needed(tape, a, b)) {
    TensorT<T> ac = a, bc = b, oc = out;
    attach(tape, out, [ac, bc, oc, dfa, dfb]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      const T* pa = ac.data();
      const T* pb = bc.data();
      const T* py = oc.data();
      const int64_t n = ac.numel();
      if (ac.requires_grad()) {
        ac.ensure_grad();
        T* ga = ac.grad();
        for (int64_t i = 0; i < n; ++i) ga[i] += dfa(gy[i], pa[i], pb[i], py[i]);
      }
      if (bc.requires_grad()) {
        bc.ensure_grad();
        T* gb = bc.grad();
        for (int64_t i = 0; i < n; ++i) gb[i] += dfb(gy[i], pa[i], pb[i], py[i]);
      }
    });
  }
  return out;
}

template <typename T, typename Fwd, typename Dfx>
TensorT<T> ew_unary(TapeT<T>* tape, const TensorT<T>& x, Fwd fwd, Dfx dfx) {
  TensorT<T> out = TensorT<T>::zeros(x.shape());
  const T* px = x.data();
  T* po = out.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = fwd(px[i]);
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, dfx]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      const T* px = xc.data();
      const T* py = oc.data();
      xc.ensure_grad();
      T* gx = xc.grad();
      const int64_t n = xc.numel();
      for (int64_t i = 0; i < n; ++i) gx[i] += dfx(gy[i], px[i], py[i]);
    });
  }
  return out;
}

}  // namespace

template <typename T>
TensorT<T> add(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(
      tape, a, b, "add", [](T x, T y) { return x + y; },
      [](T gy, T, T, T) { return gy; }, [](T gy, T, T, T) { return gy; });
}

template <typename T>
TensorT<T> sub(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(
      tape, a, b, "sub", [](T x, T y) { return x - y; },
      [](T gy, T, T, T) { return gy; }, [](T gy, T, T, T) { return -gy; });
}

template <typename T>
TensorT<T> mul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(
      tape, a, b, "mul", [](T x, T y) { return x * y; },
      [](T gy, T, T y, T) { return gy * y; }, [](T gy, T x, T, T) { return gy * x; });
}

template <typename T>
TensorT<T> divide(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(
      tape, a, b, "divide", [](T x, T y) { return x / y; },
      [](T gy, T, T y, T) { return gy / y; },
      [](T gy, T, T y, T out) { return -gy * out / y; });
}

template <typename T>
TensorT<T> scale(TapeT<T>* tape, const TensorT<T>& x, T c) {
  return ew_unary(
      tape, x, [c](T v) { return v * c; }, [c](T gy, T, T) { return gy * c; });
}

template <typename T>
TensorT<T> sqrt_eps(TapeT<T>* tape, const TensorT<T>& x, T eps) {
  return ew_unary(
      tape, x, [eps](T v) { return std::sqrt(v + eps); },
      [](T gy, T, T y) { return gy * T(0.5) / y; });
}

template <typename T>
TensorT<T> acos_clamped(TapeT<T>* tape, const TensorT<T>& x) {
  const T lim = T(1) - T(1e-7);
  return ew_unary(
      tape, x,
      [lim](T v) { return std::acos(std::clamp(v, -lim, lim)); },
      [lim](T gy, T v, T) {
        if (v <= -lim || v >= lim) return T(0);
        return -gy / std::sqrt(T(1) - v * v);
      });
}

template <typename T>
TensorT<T> add_broadcast(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& b) {
  const int64_t nb = b.numel();
  if (nb == 0 || x.numel() % nb != 0 || x.rank() < b.rank())
    throw DimensionError("add_broadcast: " + shape_str(b.shape()) + " is not a suffix of " +
                         shape_str(x.shape()));
  for (int i = 0; i < b.rank(); ++i)
    if (b.dim(i) != x.dim(x.rank() - b.rank() + i))
      throw DimensionError("add_broadcast: trailing extents differ");
  TensorT<T> out = TensorT<T>::zeros(x.shape());
  const T* px = x.data();
  const T* pb = b.data();
  T* po = out.data();
  const int64_t reps = x.numel() / nb;
  for (int64_t r = 0; r < reps; ++r)
    for (int64_t j = 0; j < nb; ++j) po[r * nb + j] = px[r * nb + j] + pb[j];
  if (rec_needed(tape, x, b)) {
    TensorT<T> xc = x, bc = b, oc = out;
    attach(tape, out, [xc, bc, oc, reps, nb]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      if (xc.requires_grad()) {
        xc.ensure_grad();
        T* gx = xc.grad();
        const int64_t n = xc.numel();
        for (int64_t i = 0; i < n; ++i) gx[i] += gy[i];
      }
      if (bc.requires_grad()) {
        bc.ensure_grad();
        T* gb = bc.grad();
        for (int64_t r = 0; r < reps; ++r)
          for (int64_t j = 0; j < nb; ++j) gb[j] += gy[r * nb + j];
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> add_channel_bias(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& b) {
  if (x.rank() != 4 || b.rank() != 1 || b.dim(0) != x.dim(1))
    throw DimensionError("add_channel_bias: need [N,C,H,W] and [C]");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  TensorT<T> out = TensorT<T>::zeros(x.shape());
  const T* px = x.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const T bias = pb[ch];
      const int64_t base = (i * c + ch) * hw;
      for (int64_t s = 0; s < hw; ++s) po[base + s] = px[base + s] + bias;
    }
  if (rec_needed(tape, x, b)) {
    TensorT<T> xc = x, bc = b, oc = out;
    attach(tape, out, [xc, bc, oc, n, c, hw]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      if (xc.requires_grad()) {
        xc.ensure_grad();
        T* gx = xc.grad();
        const int64_t total = xc.numel();
        for (int64_t i = 0; i < total; ++i) gx[i] += gy[i];
      }
      if (bc.requires_grad()) {
        bc.ensure_grad();
        T* gb = bc.grad();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t ch = 0; ch < c; ++ch) {
            const int64_t base = (i * c + ch) * hw;
            T acc = T(0);
            for (int64_t s = 0; s < hw; ++s) acc += gy[base + s];
            gb[ch] += acc;
          }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> relu(TapeT<T>* tape, const TensorT<T>& x) {
  // relu'(0) == 0: the mask tests y > 0
  return ew_unary(
      tape, x, [](T v) { return v > T(0) ? v : T(0); },
      [](T gy, T, T y) { return y > T(0) ? gy : T(0); });
}

template <typename T>
TensorT<T> sigmoid(TapeT<T>* tape, const TensorT<T>& x) {
  return ew_unary(
      tape, x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T gy, T, T y) { return gy * y * (T(1) - y); });
}

template <typename T>
TensorT<T> activation(TapeT<T>* tape, const TensorT<T>& x, Activation kind) {
  return kind == Activation::Relu ? relu(tape, x) : sigmoid(tape, x);
}

template <typename T>
TensorT<T> matmul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul: expects rank-2 inputs, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  TensorT<T> out = TensorT<T>::zeros({m, n});
  gemm_rm(false, false, m, n, k, T(1), a.data(), k, b.data(), n, T(0), out.data(), n);
  if (rec_needed(tape, a, b)) {
    TensorT<T> ac = a, bc = b, oc = out;
    attach(tape, out, [ac, bc, oc, m, n, k]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      if (ac.requires_grad()) {
        ac.ensure_grad();
        gemm_rm(false, true, m, k, n, T(1), gy, n, bc.data(), n, T(1), ac.grad(), k);
      }
      if (bc.requires_grad()) {
        bc.ensure_grad();
        gemm_rm(true, false, k, n, m, T(1), ac.data(), k, gy, n, T(1), bc.grad(), n);
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> bmm(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b, bool trans_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0))
    throw DimensionError("bmm: expects [B,m,k] with matching batch");
  const int64_t bs = a.dim(0), m = a.dim(1), k = a.dim(2);
  const int64_t n = trans_b ? b.dim(1) : b.dim(2);
  if ((trans_b ? b.dim(2) : b.dim(1)) != k)
    throw DimensionError("bmm: inner extents differ");
  TensorT<T> out = TensorT<T>::zeros({bs, m, n});
  const int64_t sa = m * k, sb = b.dim(1) * b.dim(2), so = m * n;
  for (int64_t i = 0; i < bs; ++i)
    gemm_rm(false, trans_b, m, n, k, T(1), a.data() + i * sa, k, b.data() + i * sb,
            trans_b ? k : n, T(0), out.data() + i * so, n);
  if (rec_needed(tape, a, b)) {
    TensorT<T> ac = a, bc = b, oc = out;
    attach(tape, out, [ac, bc, oc, bs, m, n, k, sa, sb, so, trans_b]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      if (ac.requires_grad()) {
        ac.ensure_grad();
        for (int64_t i = 0; i < bs; ++i) {
          // no trans: dA = dC * B^T ; trans_b: dA = dC * B
          gemm_rm(false, !trans_b, m, k, n, T(1), gy + i * so, n, bc.data() + i * sb,
                  trans_b ? k : n, T(1), ac.grad() + i * sa, k);
        }
      }
      if (bc.requires_grad()) {
        bc.ensure_grad();
        for (int64_t i = 0; i < bs; ++i) {
          if (trans_b) {
            // B stored [n,k]; dB = dC^T * A
            gemm_rm(true, false, n, k, m, T(1), gy + i * so, n, ac.data() + i * sa, k, T(1),
                    bc.grad() + i * sb, k);
          } else {
            gemm_rm(true, false, k, n, m, T(1), ac.data() + i * sa, k, gy + i * so, n, T(1),
                    bc.grad() + i * sb, n);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> linear(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
  return add_broadcast(tape, matmul(tape, x, w), b);
}

namespace {

struct ConvDims {
  int64_t n, c, h, w, f, kh, kw, oh, ow, ckk, ohw;
  int stride, pad;
};

template <typename T>
ConvDims conv_dims(const TensorT<T>& x, const TensorT<T>& ker, int stride, int pad) {
  if (x.rank() != 4 || ker.rank() != 4)
    throw DimensionError("conv2d: expects [N,C,H,W] input and [F,C,kh,kw] kernel");
  if (ker.dim(1) != x.dim(1)) throw DimensionError("conv2d: channel mismatch");
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (pad < 0) throw DimensionError("conv2d: padding must be >= 0");
  ConvDims d;
  d.n = x.dim(0); d.c = x.dim(1); d.h = x.dim(2); d.w = x.dim(3);
  d.f = ker.dim(0); d.kh = ker.dim(2); d.kw = ker.dim(3);
  d.stride = stride; d.pad = pad;
  if (d.kh > d.h + 2 * pad || d.kw > d.w + 2 * pad)
    throw DimensionError("conv2d: kernel larger than padded input");
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  d.ckk = d.c * d.kh * d.kw;
  d.ohw = d.oh * d.ow;
  return d;
}

// col is [ckk x ohw] for one image, row-major
template <typename T>
void im2col(const T* img, const ConvDims& d, T* col) {
  for (int64_t c = 0; c < d.c; ++c)
    for (int64_t ki = 0; ki < d.kh; ++ki)
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        T* row = col + ((c * d.kh + ki) * d.kw + kj) * d.ohw;
        for (int64_t oy = 0; oy < d.oh; ++oy) {
          const int64_t iy = oy * d.stride + ki - d.pad;
          for (int64_t ox = 0; ox < d.ow; ++ox) {
            const int64_t ix = ox * d.stride + kj - d.pad;
            row[oy * d.ow + ox] =
                (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w) ? img[(c * d.h + iy) * d.w + ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_acc(const T* col, const ConvDims& d, T* gimg) {
  for (int64_t c = 0; c < d.c; ++c)
    for (int64_t ki = 0; ki < d.kh; ++ki)
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        const T* row = col + ((c * d.kh + ki) * d.kw + kj) * d.ohw;
        for (int64_t oy = 0; oy < d.oh; ++oy) {
          const int64_t iy = oy * d.stride + ki - d.pad;
          if (iy < 0 || iy >= d.h) continue;
          for (int64_t ox = 0; ox < d.ow; ++ox) {
            const int64_t ix = ox * d.stride + kj - d.pad;
            if (ix < 0 || ix >= d.w) continue;
            gimg[(c * d.h + iy) * d.w + ix] += row[oy * d.ow + ox];
          }
        }
      }
}

}  // namespace

namespace {

// images per gemm call; keeps the column buffer near 32 MB
template <typename T>
int64_t conv_chunk(const ConvDims& d) {
  const int64_t per_image = d.ckk * d.ohw * int64_t(sizeof(T));
  return std::clamp<int64_t>((32 << 20) / std::max<int64_t>(per_image, 1), 1, 128);
}

// col layout [ckk x chunk*ohw] with one column block per image
template <typename T>
void im2col_chunk(const T* x, const ConvDims& d, int64_t begin, int64_t count, T* col) {
  for (int64_t i = 0; i < count; ++i)
    for (int64_t c = 0; c < d.c; ++c)
      for (int64_t ki = 0; ki < d.kh; ++ki)
        for (int64_t kj = 0; kj < d.kw; ++kj) {
          const T* img = x + (begin + i) * d.c * d.h * d.w;
          T* row = col + ((c * d.kh + ki) * d.kw + kj) * (count * d.ohw) + i * d.ohw;
          for (int64_t oy = 0; oy < d.oh; ++oy) {
            const int64_t iy = oy * d.stride + ki - d.pad;
            for (int64_t ox = 0; ox < d.ow; ++ox) {
              const int64_t ix = ox * d.stride + kj - d.pad;
              row[oy * d.ow + ox] = (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                                        ? img[(c * d.h + iy) * d.w + ix]
                                        : T(0);
            }
          }
        }
}

}  // namespace

template <typename T>
TensorT<T> conv2d(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& kernel, int stride,
                  int padding) {
  const ConvDims d = conv_dims(x, kernel, stride, padding);
  TensorT<T> out = TensorT<T>::zeros({d.n, d.f, d.oh, d.ow});
  const int64_t chunk = conv_chunk<T>(d);
  std::vector<T> col(size_t(d.ckk * chunk * d.ohw));
  std::vector<T> big(size_t(d.f * chunk * d.ohw));
  const int64_t out_stride = d.f * d.ohw;
  for (int64_t begin = 0; begin < d.n; begin += chunk) {
    const int64_t count = std::min(chunk, d.n - begin);
    im2col_chunk(x.data(), d, begin, count, col.data());
    gemm_rm(false, false, d.f, count * d.ohw, d.ckk, T(1), kernel.data(), d.ckk, col.data(),
            count * d.ohw, T(0), big.data(), count * d.ohw);
    for (int64_t i = 0; i < count; ++i)
      for (int64_t f = 0; f < d.f; ++f)
        std::memcpy(out.data() + (begin + i) * out_stride + f * d.ohw,
                    big.data() + f * (count * d.ohw) + i * d.ohw, size_t(d.ohw) * sizeof(T));
  }
  if (rec_needed(tape, x, kernel)) {
    TensorT<T> xc = x, kc = kernel, oc = out;
    attach(tape, out, [xc, kc, oc, d, out_stride, chunk]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      const bool dx = xc.requires_grad();
      const bool dk = kc.requires_grad();
      if (dx) xc.ensure_grad();
      if (dk) kc.ensure_grad();
      std::vector<T> col(size_t(d.ckk * chunk * d.ohw));
      std::vector<T> gy_big(size_t(d.f * chunk * d.ohw));
      std::vector<T> dcol;
      if (dx) dcol.resize(size_t(d.ckk * chunk * d.ohw));
      const int64_t in_stride = d.c * d.h * d.w;
      for (int64_t begin = 0; begin < d.n; begin += chunk) {
        const int64_t count = std::min(chunk, d.n - begin);
        for (int64_t i = 0; i < count; ++i)
          for (int64_t f = 0; f < d.f; ++f)
            std::memcpy(gy_big.data() + f * (count * d.ohw) + i * d.ohw,
                        gy + (begin + i) * out_stride + f * d.ohw, size_t(d.ohw) * sizeof(T));
        if (dk) {
          im2col_chunk(xc.data(), d, begin, count, col.data());
          gemm_rm(false, true, d.f, d.ckk, count * d.ohw, T(1), gy_big.data(), count * d.ohw,
                  col.data(), count * d.ohw, T(1), kc.grad(), d.ckk);
        }
        if (dx) {
          gemm_rm(true, false, d.ckk, count * d.ohw, d.f, T(1), kc.data(), d.ckk, gy_big.data(),
                  count * d.ohw, T(0), dcol.data(), count * d.ohw);
          for (int64_t i = 0; i < count; ++i) {
            // gather one image's columns back into a contiguous [ckk x ohw] view
            for (int64_t r = 0; r < d.ckk; ++r)
              std::memcpy(col.data() + r * d.ohw, dcol.data() + r * (count * d.ohw) + i * d.ohw,
                          size_t(d.ohw) * sizeof(T));
            col2im_acc(col.data(), d, xc.grad() + (begin + i) * in_stride);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> maxpool2d(TapeT<T>* tape, const TensorT<T>& x, int window, int stride) {
  if (x.rank() != 4) throw DimensionError("maxpool2d: expects [N,C,H,W]");
  if (window < 1 || stride < 1) throw DimensionError("maxpool2d: window/stride must be >= 1");
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (window > h || window > w) throw DimensionError("maxpool2d: window exceeds input extents");
  const int64_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  TensorT<T> out = TensorT<T>::zeros({n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<int64_t>>(size_t(out.numel()));
  const T* px = x.data();
  T* po = out.data();
  int64_t oi = 0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* plane = px + (i * c + ch) * h * w;
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox, ++oi) {
          T best = plane[(oy * stride) * w + ox * stride];
          int64_t best_at = (oy * stride) * w + ox * stride;
          for (int64_t ki = 0; ki < window; ++ki)
            for (int64_t kj = 0; kj < window; ++kj) {
              const int64_t at = (oy * stride + ki) * w + ox * stride + kj;
              if (plane[at] > best) {  // strict: ties keep the lowest flat index
                best = plane[at];
                best_at = at;
              }
            }
          po[oi] = best;
          (*argmax)[size_t(oi)] = (i * c + ch) * h * w + best_at;
        }
    }
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, argmax]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      T* gx = xc.grad();
      const T* gy = oc.grad();
      const int64_t total = oc.numel();
      for (int64_t i = 0; i < total; ++i) gx[(*argmax)[size_t(i)]] += gy[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> layer_norm(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& gain,
                      const TensorT<T>& bias, T eps) {
  if (x.rank() < 1) throw DimensionError("layer_norm: rank must be >= 1");
  const int64_t e = x.dim(-1);
  if (gain.numel() != e || bias.numel() != e)
    throw DimensionError("layer_norm: gain/bias extent " + std::to_string(gain.numel()) + "/" +
                         std::to_string(bias.numel()) + " != " + std::to_string(e));
  const int64_t rows = x.numel() / e;
  TensorT<T> out = TensorT<T>::zeros(x.shape());
  auto mu = std::make_shared<std::vector<T>>(size_t(rows));
  auto inv_s = std::make_shared<std::vector<T>>(size_t(rows));
  const T* px = x.data();
  const T* pg = gain.data();
  const T* pb = bias.data();
  T* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = px + r * e;
    T m = T(0);
    for (int64_t j = 0; j < e; ++j) m += row[j];
    m /= T(e);
    T var = T(0);
    for (int64_t j = 0; j < e; ++j) {
      const T dlt = row[j] - m;
      var += dlt * dlt;
    }
    var /= T(e);
    const T is = T(1) / std::sqrt(var + eps);
    (*mu)[size_t(r)] = m;
    (*inv_s)[size_t(r)] = is;
    T* orow = po + r * e;
    for (int64_t j = 0; j < e; ++j) orow[j] = (row[j] - m) * is * pg[j] + pb[j];
  }
  if (rec_needed(tape, x, gain, bias)) {
    TensorT<T> xc = x, gc = gain, bc = bias, oc = out;
    attach(tape, out, [xc, gc, bc, oc, mu, inv_s, rows, e]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      const T* px = xc.data();
      const T* pg = gc.data();
      const bool dx = xc.requires_grad(), dg = gc.requires_grad(), db = bc.requires_grad();
      if (dx) xc.ensure_grad();
      if (dg) gc.ensure_grad();
      if (db) bc.ensure_grad();
      auto xhat = std::vector<T>(size_t(e));
      for (int64_t r = 0; r < rows; ++r) {
        const T m = (*mu)[size_t(r)];
        const T is = (*inv_s)[size_t(r)];
        const T* row = px + r * e;
        const T* gyr = gy + r * e;
        for (int64_t j = 0; j < e; ++j) xhat[size_t(j)] = (row[j] - m) * is;
        if (db) {
          T* gb = bc.grad();
          for (int64_t j = 0; j < e; ++j) gb[j] += gyr[j];
        }
        if (dg) {
          T* gg = gc.grad();
          for (int64_t j = 0; j < e; ++j) gg[j] += gyr[j] * xhat[size_t(j)];
        }
        if (dx) {
          T m1 = T(0), m2 = T(0);
          for (int64_t j = 0; j < e; ++j) {
            const T dxh = gyr[j] * pg[j];
            m1 += dxh;
            m2 += dxh * xhat[size_t(j)];
          }
          m1 /= T(e);
          m2 /= T(e);
          T* gx = xc.grad() + r * e;
          for (int64_t j = 0; j < e; ++j)
            gx[j] += is * (gyr[j] * pg[j] - m1 - xhat[size_t(j)] * m2);
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> softmax(TapeT<T>* tape, const TensorT<T>& x) {
  const int64_t n = x.dim(-1);
  const int64_t rows = x.numel() / n;
  TensorT<T> out = TensorT<T>::zeros(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = px + r * n;
    T* orow = po + r * n;
    T m = row[0];
    for (int64_t j = 1; j < n; ++j) m = std::max(m, row[j]);
    T z = T(0);
    for (int64_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - m);
      z += orow[j];
    }
    const T iz = T(1) / z;
    for (int64_t j = 0; j < n; ++j) orow[j] *= iz;
  }
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, rows, n]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      T* gx = xc.grad();
      const T* gy = oc.grad();
      const T* py = oc.data();
      for (int64_t r = 0; r < rows; ++r) {
        const T* yr = py + r * n;
        const T* gr = gy + r * n;
        T dot = T(0);
        for (int64_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
        T* gxr = gx + r * n;
        for (int64_t j = 0; j < n; ++j) gxr[j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> cross_entropy(TapeT<T>* tape, const TensorT<T>& logits, const std::vector<int>& targets) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: expects [n,C] logits");
  const int64_t n = logits.dim(0), c = logits.dim(1);
  if (int64_t(targets.size()) != n)
    throw ContractError("cross_entropy: target count " + std::to_string(targets.size()) +
                        " != rows " + std::to_string(n));
  for (int t : targets)
    if (t < 0 || t >= c) throw ContractError("cross_entropy: class index out of range");
  const T* px = logits.data();
  T loss = T(0);
  for (int64_t r = 0; r < n; ++r) {
    const T* row = px + r * c;
    T m = row[0];
    for (int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    T z = T(0);
    for (int64_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
    loss += (m + std::log(z)) - row[targets[size_t(r)]];
  }
  TensorT<T> out = TensorT<T>::scalar(loss / T(n));
  if (rec_needed(tape, logits)) {
    TensorT<T> xc = logits, oc = out;
    auto tgt = std::make_shared<std::vector<int>>(targets);
    attach(tape, out, [xc, oc, tgt, n, c]() mutable {
      if (!oc.has_grad()) return;
      const T g = oc.grad()[0] / T(n);
      xc.ensure_grad();
      T* gx = xc.grad();
      const T* px = xc.data();
      for (int64_t r = 0; r < n; ++r) {
        const T* row = px + r * c;
        T m = row[0];
        for (int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        T z = T(0);
        for (int64_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
        const T iz = T(1) / z;
        T* gxr = gx + r * c;
        for (int64_t j = 0; j < c; ++j) {
          const T p = std::exp(row[j] - m) * iz;
          gxr[j] += g * (p - T(j == (*tgt)[size_t(r)] ? 1 : 0));
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> prepend_row(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& row) {
  if (x.rank() != 3 || row.rank() != 1 || row.dim(0) != x.dim(2))
    throw DimensionError("prepend_row: expects [B,L,E] and [E]");
  const int64_t b = x.dim(0), l = x.dim(1), e = x.dim(2);
  TensorT<T> out = TensorT<T>::zeros({b, l + 1, e});
  const T* px = x.data();
  const T* pr = row.data();
  T* po = out.data();
  for (int64_t i = 0; i < b; ++i) {
    std::memcpy(po + i * (l + 1) * e, pr, size_t(e) * sizeof(T));
    std::memcpy(po + i * (l + 1) * e + e, px + i * l * e, size_t(l * e) * sizeof(T));
  }
  if (rec_needed(tape, x, row)) {
    TensorT<T> xc = x, rc = row, oc = out;
    attach(tape, out, [xc, rc, oc, b, l, e]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      if (rc.requires_grad()) {
        rc.ensure_grad();
        T* gr = rc.grad();
        for (int64_t i = 0; i < b; ++i) {
          const T* g0 = gy + i * (l + 1) * e;
          for (int64_t j = 0; j < e; ++j) gr[j] += g0[j];
        }
      }
      if (xc.requires_grad()) {
        xc.ensure_grad();
        T* gx = xc.grad();
        for (int64_t i = 0; i < b; ++i) {
          const T* gi = gy + i * (l + 1) * e + e;
          T* gxi = gx + i * l * e;
          for (int64_t j = 0; j < l * e; ++j) gxi[j] += gi[j];
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> slice_tokens(TapeT<T>* tape, const TensorT<T>& x, int64_t start, int64_t len) {
  if (x.rank() != 3) throw DimensionError("slice_tokens: expects [B,L,E]");
  const int64_t b = x.dim(0), l = x.dim(1), e = x.dim(2);
  if (start < 0 || len < 1 || start + len > l) throw DimensionError("slice_tokens: range out of bounds");
  TensorT<T> out = TensorT<T>::zeros({b, len, e});
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < b; ++i)
    std::memcpy(po + i * len * e, px + (i * l + start) * e, size_t(len * e) * sizeof(T));
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, b, l, e, start, len]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      T* gx = xc.grad();
      const T* gy = oc.grad();
      for (int64_t i = 0; i < b; ++i) {
        const T* gi = gy + i * len * e;
        T* gxi = gx + (i * l + start) * e;
        for (int64_t j = 0; j < len * e; ++j) gxi[j] += gi[j];
      }
    });
  }
  return out;
}

namespace {

// [B,L,E] -> [B*h,L,dh] when fwd, inverse otherwise
template <typename T>
void head_permute(const T* src, T* dst, int64_t b, int64_t l, int64_t h, int64_t dh, bool fwd) {
  for (int64_t i = 0; i < b; ++i)
    for (int64_t j = 0; j < h; ++j)
      for (int64_t t = 0; t < l; ++t) {
        const int64_t split_at = ((i * h + j) * l + t) * dh;
        const int64_t full_at = (i * l + t) * (h * dh) + j * dh;
        if (fwd)
          std::memcpy(dst + split_at, src + full_at, size_t(dh) * sizeof(T));
        else
          std::memcpy(dst + full_at, src + split_at, size_t(dh) * sizeof(T));
      }
}

// accumulate variant for the backward pass
template <typename T>
void head_permute_acc(const T* src, T* dst, int64_t b, int64_t l, int64_t h, int64_t dh, bool fwd) {
  for (int64_t i = 0; i < b; ++i)
    for (int64_t j = 0; j < h; ++j)
      for (int64_t t = 0; t < l; ++t) {
        const int64_t split_at = ((i * h + j) * l + t) * dh;
        const int64_t full_at = (i * l + t) * (h * dh) + j * dh;
        for (int64_t d = 0; d < dh; ++d) {
          if (fwd)
            dst[split_at + d] += src[full_at + d];
          else
            dst[full_at + d] += src[split_at + d];
        }
      }
}

}  // namespace

template <typename T>
TensorT<T> split_heads(TapeT<T>* tape, const TensorT<T>& x, int heads) {
  if (x.rank() != 3) throw DimensionError("split_heads: expects [B,L,E]");
  const int64_t b = x.dim(0), l = x.dim(1), e = x.dim(2);
  if (heads < 1 || e % heads != 0)
    throw ConfigError("split_heads: embedding " + std::to_string(e) + " not divisible by heads " +
                      std::to_string(heads));
  const int64_t dh = e / heads;
  TensorT<T> out = TensorT<T>::zeros({b * heads, l, dh});
  head_permute(x.data(), out.data(), b, l, heads, dh, true);
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, b, l, heads, dh]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      head_permute_acc(oc.grad(), xc.grad(), b, l, int64_t(heads), dh, false);
    });
  }
  return out;
}

template <typename T>
TensorT<T> merge_heads(TapeT<T>* tape, const TensorT<T>& x, int heads) {
  if (x.rank() != 3) throw DimensionError("merge_heads: expects [B*h,L,dh]");
  if (heads < 1 || x.dim(0) % heads != 0) throw ConfigError("merge_heads: batch not divisible by heads");
  const int64_t b = x.dim(0) / heads, l = x.dim(1), dh = x.dim(2);
  TensorT<T> out = TensorT<T>::zeros({b, l, int64_t(heads) * dh});
  head_permute(x.data(), out.data(), b, l, int64_t(heads), dh, false);
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, b, l, heads, dh]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      head_permute_acc(oc.grad(), xc.grad(), b, l, int64_t(heads), dh, true);
    });
  }
  return out;
}

template <typename T>
TensorT<T> gather_rows(TapeT<T>* tape, const TensorT<T>& x, const std::vector<int>& idx) {
  if (x.rank() != 2 && x.rank() != 3) throw DimensionError("gather_rows: expects [J,D] or [B,J,D]");
  const bool batched = x.rank() == 3;
  const int64_t b = batched ? x.dim(0) : 1;
  const int64_t j = x.dim(batched ? 1 : 0), d = x.dim(-1);
  for (int i : idx)
    if (i < 0 || int64_t(i) >= j) throw DimensionError("gather_rows: index out of range");
  const int64_t k = int64_t(idx.size());
  Shape oshape = batched ? Shape{b, k, d} : Shape{k, d};
  TensorT<T> out = TensorT<T>::zeros(oshape);
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < b; ++i)
    for (int64_t r = 0; r < k; ++r)
      std::memcpy(po + (i * k + r) * d, px + (i * j + idx[size_t(r)]) * d, size_t(d) * sizeof(T));
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    auto ic = std::make_shared<std::vector<int>>(idx);
    attach(tape, out, [xc, oc, ic, b, j, d, k]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      T* gx = xc.grad();
      const T* gy = oc.grad();
      for (int64_t i = 0; i < b; ++i)
        for (int64_t r = 0; r < k; ++r) {
          const T* gr = gy + (i * k + r) * d;
          T* gxr = gx + (i * j + (*ic)[size_t(r)]) * d;
          for (int64_t s = 0; s < d; ++s) gxr[s] += gr[s];
        }
    });
  }
  return out;
}

template <typename T>
TensorT<T> sum_last(TapeT<T>* tape, const TensorT<T>& x) {
  const int64_t n = x.dim(-1);
  const int64_t rows = x.numel() / n;
  Shape oshape(x.shape().begin(), x.shape().end() - 1);
  if (oshape.empty()) oshape = {1};
  TensorT<T> out = TensorT<T>::zeros(oshape);
  const T* px = x.data();
  T* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    T acc = T(0);
    for (int64_t j = 0; j < n; ++j) acc += px[r * n + j];
    po[r] = acc;
  }
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, rows, n]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      T* gx = xc.grad();
      const T* gy = oc.grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < n; ++j) gx[r * n + j] += gy[r];
    });
  }
  return out;
}

template <typename T>
TensorT<T> sum_all(TapeT<T>* tape, const TensorT<T>& x) {
  T acc = T(0);
  const T* px = x.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) acc += px[i];
  TensorT<T> out = TensorT<T>::scalar(acc);
  if (rec_needed(tape, x)) {
    TensorT<T> xc = x, oc = out;
    attach(tape, out, [xc, oc, n]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      T* gx = xc.grad();
      const T g = oc.grad()[0];
      for (int64_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

template <typename T>
TensorT<T> mean_all(TapeT<T>* tape, const TensorT<T>& x) {
  return scale(tape, sum_all(tape, x), T(1) / T(x.numel()));
}

template <typename T>
TensorT<T> weighted_sum_rows(TapeT<T>* tape, const TensorT<T>& tokens, const TensorT<T>& w) {
  if (tokens.rank() != 3 || w.rank() != 1 || w.dim(0) != tokens.dim(1))
    throw DimensionError("weighted_sum_rows: expects [B,L,E] tokens and [L] weights");
  const int64_t b = tokens.dim(0), l = tokens.dim(1), e = tokens.dim(2);
  TensorT<T> out = TensorT<T>::zeros({b, e});
  const T* pt = tokens.data();
  const T* pw = w.data();
  T* po = out.data();
  for (int64_t i = 0; i < b; ++i)
    for (int64_t t = 0; t < l; ++t) {
      const T wt = pw[t];
      const T* row = pt + (i * l + t) * e;
      T* orow = po + i * e;
      for (int64_t j = 0; j < e; ++j) orow[j] += wt * row[j];
    }
  if (rec_needed(tape, tokens, w)) {
    TensorT<T> tc = tokens, wc = w, oc = out;
    attach(tape, out, [tc, wc, oc, b, l, e]() mutable {
      if (!oc.has_grad()) return;
      const T* gy = oc.grad();
      const T* pt = tc.data();
      const T* pw = wc.data();
      if (tc.requires_grad()) {
        tc.ensure_grad();
        T* gt = tc.grad();
        for (int64_t i = 0; i < b; ++i)
          for (int64_t t = 0; t < l; ++t) {
            const T wt = pw[t];
            const T* gr = gy + i * e;
            T* gtr = gt + (i * l + t) * e;
            for (int64_t j = 0; j < e; ++j) gtr[j] += wt * gr[j];
          }
      }
      if (wc.requires_grad()) {
        wc.ensure_grad();
        T* gw = wc.grad();
        for (int64_t i = 0; i < b; ++i)
          for (int64_t t = 0; t < l; ++t) {
            const T* row = pt + (i * l + t) * e;
            const T* gr = gy + i * e;
            T acc = T(0);
            for (int64_t j = 0; j < e; ++j) acc += row[j] * gr[j];
            gw[t] += acc;
          }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> attention_core(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                          const TensorT<T>& v, int heads) {
  const bool batched = q.rank() == 3;
  if (!batched && q.rank() != 2) throw DimensionError("attention_core: expects [L,E] or [B,L,E]");
  require_same_shape(q, k, "attention_core(q,k)");
  require_same_shape(q, v, "attention_core(q,v)");
  TensorT<T> q3 = batched ? q : q.reshaped({1, q.dim(0), q.dim(1)});
  TensorT<T> k3 = batched ? k : k.reshaped({1, k.dim(0), k.dim(1)});
  TensorT<T> v3 = batched ? v : v.reshaped({1, v.dim(0), v.dim(1)});
  const int64_t e = q3.dim(2);
  if (heads < 1 || e % heads != 0)
    throw ConfigError("attention_core: embedding " + std::to_string(e) +
                      " not divisible by heads " + std::to_string(heads));
  const int64_t dh = e / heads;
  TensorT<T> qh = split_heads(tape, q3, heads);
  TensorT<T> kh = split_heads(tape, k3, heads);
  TensorT<T> vh = split_heads(tape, v3, heads);
  TensorT<T> scores = scale(tape, bmm(tape, qh, kh, /*trans_b=*/true), T(1) / T(std::sqrt(double(dh))));
  TensorT<T> attn = softmax(tape, scores);
  TensorT<T> ctx = merge_heads(tape, bmm(tape, attn, vh), heads);
  return batched ? ctx : ctx.reshaped({ctx.dim(1), ctx.dim(2)});
}

template <typename T>
TensorT<T> attention(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                     int heads, const TensorT<T>& w_out, const TensorT<T>& b_out) {
  TensorT<T> ctx = attention_core(tape, q, k, v, heads);
  const bool batched = ctx.rank() == 3;
  const int64_t e = ctx.dim(-1);
  TensorT<T> flat = batched ? ctx.reshaped({ctx.dim(0) * ctx.dim(1), e}) : ctx;
  TensorT<T> proj = linear(tape, flat, w_out, b_out);
  return batched ? proj.reshaped({ctx.dim(0), ctx.dim(1), proj.dim(1)}) : proj;
}

template <typename T>
TensorT<T> pool_weighted(TapeT<T>* tape, const TensorT<T>& tokens, const TensorT<T>& w) {
  const bool batched = tokens.rank() == 3;
  if (!batched && tokens.rank() != 2)
    throw DimensionError("pool_weighted: expects [L,E] or [B,L,E]");
  const int64_t l = tokens.dim(batched ? 1 : 0);
  if (w.rank() != 1 || w.dim(0) != l)
    throw DimensionError("pool_weighted: weight length " + std::to_string(w.numel()) + " != " +
                         std::to_string(l) + " tokens");
  TensorT<T> t3 = batched ? tokens : tokens.reshaped({1, l, tokens.dim(1)});
  TensorT<T> sm = softmax(tape, w);
  TensorT<T> pooled = weighted_sum_rows(tape, t3, sm);
  return batched ? pooled : pooled.reshaped({pooled.dim(1)});
}

#define SCOTTI_INSTANTIATE_OPS(T)                                                                  \
  template TensorT<T> add<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template TensorT<T> sub<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template TensorT<T> mul<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template TensorT<T> divide<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                  \
  template TensorT<T> scale<T>(TapeT<T>*, const TensorT<T>&, T);                                   \
  template TensorT<T> sqrt_eps<T>(TapeT<T>*, const TensorT<T>&, T);                                \
  template TensorT<T> acos_clamped<T>(TapeT<T>*, const TensorT<T>&);                               \
  template TensorT<T> add_broadcast<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);           \
  template TensorT<T> add_channel_bias<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);        \
  template TensorT<T> relu<T>(TapeT<T>*, const TensorT<T>&);                                       \
  template TensorT<T> sigmoid<T>(TapeT<T>*, const TensorT<T>&);                                    \
  template TensorT<T> activation<T>(TapeT<T>*, const TensorT<T>&, Activation);                     \
  template TensorT<T> matmul<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                  \
  template TensorT<T> bmm<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&, bool);               \
  template TensorT<T> linear<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,                   \
                                const TensorT<T>&);                                                \
  template TensorT<T> conv2d<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&, int, int);        \
  template TensorT<T> maxpool2d<T>(TapeT<T>*, const TensorT<T>&, int, int);                        \
  template TensorT<T> layer_norm<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,               \
                                    const TensorT<T>&, T);                                         \
  template TensorT<T> softmax<T>(TapeT<T>*, const TensorT<T>&);                                    \
  template TensorT<T> cross_entropy<T>(TapeT<T>*, const TensorT<T>&, const std::vector<int>&);     \
  template TensorT<T> prepend_row<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);             \
  template TensorT<T> slice_tokens<T>(TapeT<T>*, const TensorT<T>&, int64_t, int64_t);             \
  template TensorT<T> split_heads<T>(TapeT<T>*, const TensorT<T>&, int);                           \
  template TensorT<T> merge_heads<T>(TapeT<T>*, const TensorT<T>&, int);                           \
  template TensorT<T> gather_rows<T>(TapeT<T>*, const TensorT<T>&, const std::vector<int>&);       \
  template TensorT<T> sum_last<T>(TapeT<T>*, const TensorT<T>&);                                   \
  template TensorT<T> sum_all<T>(TapeT<T>*, const TensorT<T>&);                                    \
  template TensorT<T> mean_all<T>(TapeT<T>*, const TensorT<T>&);                                   \
  template TensorT<T> weighted_sum_rows<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> attention_core<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,           \
                                        const TensorT<T>&, int);                                   \
  template TensorT<T> attention<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,                \
                                   const TensorT<T>&, int, const TensorT<T>&, const TensorT<T>&);  \
  template TensorT<T> pool_weighted<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);

SCOTTI_INSTANTIATE_OPS(float)
SCOTTI_INSTANTIATE_OPS(double)

#undef SCOTTI_INSTANTIATE_OPS

}  // namespace scotti
