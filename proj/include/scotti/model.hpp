#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scotti/ops.hpp"
#include "scotti/rng.hpp"
#include "scotti/tensor.hpp"

namespace scotti {

// Architecture hyperparameters. The defaults are the full-size network; tests
// shrink them for gradient checks.
struct ScottiConfig {
  int window = 40;      // frames per input window (T)
  int embed_dim = 512;  // token width (E)
  int frame_h = 32;
  int foot_w = 22;  // per foot; tactile frames are [frame_h, 2*foot_w]
  int joints = 19;
  int n_classes = 8;
  int conv1_channels = 32;
  int conv2_channels = 64;
  int kernel = 3;
  int conv_stride = 1;
  int conv_padding = 1;
  int pool = 2;
  int pool_stride = 2;
  int layers = 4;
  int heads = 8;
  int ff_mult = 4;
  int head_hidden = 256;
  // fixed multiplier on the pose head so millimetre-scale coordinates stay
  // reachable within Adam's per-parameter step budget
  double pose_scale = 256.0;
  bool pool_class_token = true;  // pooling covers the class token too
  double dropout = 0.0;

  int frame_w2() const { return 2 * foot_w; }
  int conv_h() const;        // spatial height after both conv/pool stages
  int conv_w() const;
  int flat_dim() const;      // conv2_channels * conv_h * conv_w
  int tokens() const { return window + 1; }
  int pool_len() const { return pool_class_token ? window + 1 : window; }

  void validate() const;  // ConfigError on nonsense
  std::string to_json_string() const;
  static ScottiConfig from_json_string(const std::string& text);
  bool operator==(const ScottiConfig&) const = default;
};

template <typename T>
struct ForwardResult {
  TensorT<T> pose;      // [B, J, 3] millimetres
  TensorT<T> logits;    // [B, n_classes], unnormalized
  TensorT<T> progress;  // [B], sigmoid-squashed into (0,1)
  TensorT<T> shared;    // [B, E] pooled representation feeding all heads
};

template <typename T>
struct ScottiModelT {
  struct Block {
    TensorT<T> ln1_g, ln1_b;
    TensorT<T> wq, bq, wk, bk, wv, bv, wo, bo;
    TensorT<T> ln2_g, ln2_b;
    TensorT<T> ff1_w, ff1_b, ff2_w, ff2_b;
  };
  struct Head {
    TensorT<T> w1, b1, w2, b2;
  };

  ScottiConfig config;
  TensorT<T> conv1_w, conv1_b, conv2_w, conv2_b;
  TensorT<T> proj_w, proj_b;
  TensorT<T> cls_token;  // [E]
  TensorT<T> pos_enc;    // [T+1, E]
  std::vector<Block> blocks;
  TensorT<T> final_ln_g, final_ln_b;
  TensorT<T> pool_w;  // [pool_len]
  Head pose_head, action_head, progress_head;

  static ScottiModelT init(const ScottiConfig& config, uint64_t seed);

  // fixed declaration order; checkpoint records and the optimizer follow it
  std::vector<std::pair<std::string, TensorT<T>*>> params();
  std::vector<std::pair<std::string, const TensorT<T>*>> params() const;
  int64_t param_count() const;
  void set_requires_grad(bool b);
  void zero_grads();

  // per-frame CNN + projection: [N, H, 2W] -> [N, E]; frames are independent
  TensorT<T> frame_embeddings(TapeT<T>* tape, const TensorT<T>& frames) const;

  // windows: [B, T, H, 2W] (or [T, H, 2W] for a single sample).
  // dropout_rng enables dropout when the config asks for it (training only).
  ForwardResult<T> forward(TapeT<T>* tape, const TensorT<T>& windows,
                           Rng* dropout_rng = nullptr) const;
};

using ScottiModel = ScottiModelT<float>;

// checkpoint: "SCKP" u32 version u32 record count, then per parameter
// {u16 name length, name, u8 rank, u32 extents..., f32 little-endian values},
// then u32 json length + config json
template <typename T>
void save_checkpoint(const ScottiModelT<T>& model, const std::string& path);
template <typename T>
ScottiModelT<T> load_checkpoint(const std::string& path);

}  // namespace scotti
