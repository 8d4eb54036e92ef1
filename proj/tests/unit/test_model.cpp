#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "scotti/gradcheck.hpp"
#include "scotti/losses.hpp"
#include "scotti/model.hpp"
#include "scotti/rng.hpp"

using namespace scotti;
namespace fs = std::filesystem;

namespace {

ScottiConfig tiny_config() {
  ScottiConfig c;
  c.window = 4;
  c.embed_dim = 16;
  c.frame_h = 8;
  c.foot_w = 6;
  c.joints = 4;
  c.conv1_channels = 4;
  c.conv2_channels = 8;
  c.layers = 1;
  c.heads = 2;
  c.ff_mult = 2;
  c.head_hidden = 8;
  return c;
}

template <typename T>
TensorT<T> random_windows(const ScottiConfig& c, int batch, uint64_t seed) {
  Rng rng(seed);
  auto t = TensorT<T>::zeros({batch, c.window, c.frame_h, c.frame_w2()});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = T(rng.uniform());
  return t;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config arithmetic") {
  ScottiConfig full;  // defaults
  CHECK(full.conv_h() == 8);
  CHECK(full.conv_w() == 11);
  CHECK(full.flat_dim() == 5632);
  CHECK(full.tokens() == 41);

  ScottiConfig tiny = tiny_config();
  CHECK(tiny.frame_w2() == 12);
  CHECK(tiny.conv_h() == 2);
  CHECK(tiny.conv_w() == 3);
  CHECK(tiny.flat_dim() == 48);

  ScottiConfig bad = tiny;
  bad.heads = 3;  // 16 % 3 != 0
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny;
  bad.window = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config json round-trip") {
  ScottiConfig tiny = tiny_config();
  tiny.pool_class_token = false;
  ScottiConfig back = ScottiConfig::from_json_string(tiny.to_json_string());
  CHECK(back == tiny);
  CHECK_THROWS_AS(ScottiConfig::from_json_string("{nope"), ConfigError);
}

TEST_CASE("init is deterministic per seed") {
  auto a = ScottiModel::init(tiny_config(), 7);
  auto b = ScottiModel::init(tiny_config(), 7);
  auto c = ScottiModel::init(tiny_config(), 8);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  bool all_equal = true, any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].second->values() != pb[i].second->values()) all_equal = false;
    if (pa[i].second->values() != pc[i].second->values()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("parameter count matches the closed-form shape sum") {
  const ScottiConfig c = tiny_config();
  auto model = ScottiModel::init(c, 1);
  const int64_t e = c.embed_dim, ff = int64_t(c.ff_mult) * e, k = c.kernel;
  int64_t expect = 0;
  expect += c.conv1_channels * 1 * k * k + c.conv1_channels;
  expect += int64_t(c.conv2_channels) * c.conv1_channels * k * k + c.conv2_channels;
  expect += int64_t(c.flat_dim()) * e + e;     // projection
  expect += e;                                 // class token
  expect += int64_t(c.tokens()) * e;           // positional encodings
  expect += c.layers * (2 * e                  // ln1
                        + 4 * (e * e + e)      // q,k,v,out projections
                        + 2 * e                // ln2
                        + e * ff + ff          // ff1
                        + ff * e + e);         // ff2
  expect += 2 * e;                             // final layer norm
  expect += c.pool_len();                      // pooling weights
  const int64_t head = e * c.head_hidden + c.head_hidden;
  expect += head + int64_t(c.head_hidden) * (c.joints * 3) + c.joints * 3;
  expect += head + int64_t(c.head_hidden) * c.n_classes + c.n_classes;
  expect += head + int64_t(c.head_hidden) * 1 + 1;
  CHECK(model.param_count() == expect);
}

TEST_CASE("forward output contract") {
  const ScottiConfig c = tiny_config();
  auto model = ScottiModel::init(c, 3);
  auto w = random_windows<float>(c, 2, 5);
  auto out = model.forward(nullptr, w);
  CHECK(out.pose.shape() == Shape{2, c.joints, 3});
  CHECK(out.logits.shape() == Shape{2, c.n_classes});
  CHECK(out.progress.shape() == Shape{2});
  CHECK(out.shared.shape() == Shape{2, c.embed_dim});
  for (int64_t i = 0; i < 2; ++i) {
    CHECK(out.progress[i] > 0.0f);
    CHECK(out.progress[i] < 1.0f);
  }

  // single window without the batch axis
  auto single = random_windows<float>(c, 1, 6).reshaped({c.window, c.frame_h, c.frame_w2()});
  auto out1 = model.forward(nullptr, single);
  CHECK(out1.pose.shape() == Shape{1, c.joints, 3});

  // identical windows give bit-identical outputs
  auto out_a = model.forward(nullptr, w);
  auto out_b = model.forward(nullptr, w);
  CHECK(out_a.pose.values() == out_b.pose.values());
  CHECK(out_a.logits.values() == out_b.logits.values());
  CHECK(out_a.progress.values() == out_b.progress.values());
  CHECK(out_a.shared.values() == out_b.shared.values());

  auto bad = TensorT<float>::zeros({2, c.window, c.frame_h, c.frame_w2() + 2});
  CHECK_THROWS_AS(model.forward(nullptr, bad), DimensionError);
}

TEST_CASE("frame embeddings are frame-independent") {
  const ScottiConfig c = tiny_config();
  auto model = ScottiModel::init(c, 9);
  Rng rng(4);
  auto frames = TensorT<float>::zeros({3, c.frame_h, c.frame_w2()});
  for (int64_t i = 0; i < frames.numel(); ++i) frames[i] = float(rng.uniform());
  auto base = model.frame_embeddings(nullptr, frames);

  // zero frames map to one constant embedding
  auto zeros = TensorT<float>::zeros({2, c.frame_h, c.frame_w2()});
  auto ze = model.frame_embeddings(nullptr, zeros);
  for (int64_t j = 0; j < c.embed_dim; ++j) CHECK(ze[j] == ze[c.embed_dim + j]);

  // modifying frame 1 leaves embeddings 0 and 2 untouched
  auto modified = TensorT<float>::from(frames.shape(), frames.values());
  const int64_t fsz = c.frame_h * c.frame_w2();
  for (int64_t i = 0; i < fsz; ++i) modified[fsz + i] = float(rng.uniform());
  auto emb2 = model.frame_embeddings(nullptr, modified);
  for (int64_t j = 0; j < c.embed_dim; ++j) {
    CHECK(emb2[j] == base[j]);
    CHECK(emb2[2 * c.embed_dim + j] == base[2 * c.embed_dim + j]);
  }
  bool frame1_changed = false;
  for (int64_t j = 0; j < c.embed_dim; ++j)
    if (emb2[c.embed_dim + j] != base[c.embed_dim + j]) frame1_changed = true;
  CHECK(frame1_changed);

  // permuting frames permutes embeddings (up to gemm panel rounding, which
  // depends on the row position inside the batch)
  auto swapped = TensorT<float>::from(frames.shape(), frames.values());
  for (int64_t i = 0; i < fsz; ++i) std::swap(swapped[i], swapped[2 * fsz + i]);
  auto emb3 = model.frame_embeddings(nullptr, swapped);
  for (int64_t j = 0; j < c.embed_dim; ++j) {
    CHECK(emb3[j] == doctest::Approx(base[2 * c.embed_dim + j]).epsilon(1e-5));
    CHECK(emb3[2 * c.embed_dim + j] == doctest::Approx(base[j]).epsilon(1e-5));
  }
}

TEST_CASE("pool_weighted model-level behavior") {
  Rng rng(8);
  auto tokens = TensorT<float>::zeros({5, 3});
  for (int64_t i = 0; i < tokens.numel(); ++i) tokens[i] = float(rng.uniform(-2, 2));

  SUBCASE("zero weights give the arithmetic mean") {
    auto pooled = pool_weighted<float>(nullptr, tokens, TensorT<float>::zeros({5}));
    for (int64_t j = 0; j < 3; ++j) {
      double mean = 0;
      for (int64_t l = 0; l < 5; ++l) mean += tokens[l * 3 + j];
      mean /= 5;
      CHECK(pooled[j] == doctest::Approx(mean).epsilon(1e-6));
    }
  }
  SUBCASE("a dominant weight selects its token") {
    auto w = TensorT<float>::from({5}, {50, -50, -50, -50, -50});
    auto pooled = pool_weighted<float>(nullptr, tokens, w);
    for (int64_t j = 0; j < 3; ++j) CHECK(pooled[j] == doctest::Approx(tokens[j]).epsilon(1e-5));
  }
  SUBCASE("output stays inside the per-coordinate hull of the tokens") {
    for (int trial = 0; trial < 20; ++trial) {
      auto w = TensorT<float>::zeros({5});
      for (int64_t i = 0; i < 5; ++i) w[i] = float(rng.uniform(-3, 3));
      auto pooled = pool_weighted<float>(nullptr, tokens, w);
      for (int64_t j = 0; j < 3; ++j) {
        float lo = tokens[j], hi = tokens[j];
        for (int64_t l = 1; l < 5; ++l) {
          lo = std::min(lo, tokens[l * 3 + j]);
          hi = std::max(hi, tokens[l * 3 + j]);
        }
        CHECK(pooled[j] >= lo - 1e-6f);
        CHECK(pooled[j] <= hi + 1e-6f);
      }
    }
  }
}

TEST_CASE("untrained logits sit near the uniform cross-entropy") {
  const ScottiConfig c = tiny_config();
  double acc = 0;
  int n = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto model = ScottiModel::init(c, seed);
    auto w = random_windows<float>(c, 8, 100 + seed);
    auto out = model.forward(nullptr, w);
    for (int64_t b = 0; b < 8; ++b) {
      // CE of a uniform-random true class equals mean CE over classes
      double lse = 0, mx = -1e30;
      for (int k = 0; k < c.n_classes; ++k) mx = std::max(mx, double(out.logits[b * 8 + k]));
      for (int k = 0; k < c.n_classes; ++k) lse += std::exp(double(out.logits[b * 8 + k]) - mx);
      lse = mx + std::log(lse);
      for (int k = 0; k < c.n_classes; ++k) acc += lse - double(out.logits[b * 8 + k]);
      n += c.n_classes;
    }
  }
  CHECK(acc / n == doctest::Approx(std::log(8.0)).epsilon(0.1));  // within 0.2 absolute
}

TEST_CASE("pooling can exclude the class token") {
  ScottiConfig c = tiny_config();
  c.pool_class_token = false;
  auto model = ScottiModel::init(c, 2);
  CHECK(model.pool_w.numel() == c.window);
  auto out = model.forward(nullptr, random_windows<float>(c, 1, 3));
  CHECK(out.shared.shape() == Shape{1, c.embed_dim});
}

TEST_CASE("checkpoint round-trip is byte identical") {
  const auto dir = fs::temp_directory_path() / "scotti_model_tests";
  fs::create_directories(dir);
  const std::string p1 = (dir / "a.ckpt").string();
  const std::string p2 = (dir / "b.ckpt").string();

  auto model = ScottiModel::init(tiny_config(), 17);
  save_checkpoint(model, p1);
  auto loaded = load_checkpoint<float>(p1);
  save_checkpoint(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.config == model.config);

  // loaded model reproduces outputs bit-for-bit
  auto w = random_windows<float>(tiny_config(), 2, 19);
  auto a = model.forward(nullptr, w);
  auto b = loaded.forward(nullptr, w);
  CHECK(a.pose.values() == b.pose.values());
  CHECK(a.logits.values() == b.logits.values());

  SUBCASE("corrupted magic is a format error") {
    std::string bytes = slurp(p1);
    bytes[0] = 'Z';
    std::ofstream(p1, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint<float>(p1), FormatError);
  }
  SUBCASE("truncation is a format error") {
    std::string bytes = slurp(p1);
    bytes.resize(bytes.size() / 2);
    std::ofstream(p1, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint<float>(p1), FormatError);
  }
}

TEST_CASE("end-to-end gradients match finite differences on the tiny model") {
  Skeleton skel{{{0, 1}, {1, 2}, {2, 3}}};
  Rng rng(33);

  const ScottiConfig c = tiny_config();
  auto model64 = ScottiModelT<double>::init(c, 23);
  auto windows64 = random_windows<double>(c, 2, 31);
  auto pose_tgt64 = TensorT<double>::zeros({2, c.joints, 3});
  for (int64_t i = 0; i < pose_tgt64.numel(); ++i) pose_tgt64[i] = rng.uniform(-5, 5);
  auto progress_tgt64 = TensorT<double>::zeros({2});
  progress_tgt64[0] = 0.3;
  progress_tgt64[1] = 0.8;
  const std::vector<int> cls{2, 6};

  using Fn64 = std::function<TensorT<double>(TapeT<double>*, std::vector<TensorT<double>>&)>;
  Fn64 f64 = [&](TapeT<double>* tape, std::vector<TensorT<double>>&) {
    auto out = model64.forward(tape, windows64);
    auto lb = total_loss(tape, out.pose, out.logits, out.progress, pose_tgt64, cls, progress_tgt64,
                         {0.01, 1.0, 1.0}, skel);
    return lb.total;
  };

  SUBCASE("64-bit, tolerance 1e-5") {
    std::vector<TensorT<double>> inputs;
    for (auto& [name, t] : model64.params()) inputs.push_back(*t);  // shares storage
    auto res = grad_check<double>(f64, inputs, 1e-5, 1e-5);
    CHECK_MESSAGE(res.pass, res.summary());
  }

  SUBCASE("32-bit analytic gradients against 64-bit finite differences, 1e-3") {
    // f32 loss values are too quantized for per-element difference quotients,
    // so the numeric oracle runs the same architecture in f64 at bitwise
    // identical parameter values
    auto model32 = ScottiModelT<float>::init(c, 23);
    auto params32 = model32.params();
    auto params64 = model64.params();
    for (size_t i = 0; i < params64.size(); ++i)
      for (int64_t j = 0; j < params64[i].second->numel(); ++j)
        (*params32[i].second)[j] = float((*params64[i].second)[j]);
    auto windows32 = TensorT<float>::zeros(windows64.shape());
    for (int64_t i = 0; i < windows64.numel(); ++i) windows32[i] = float(windows64[i]);
    auto pose_tgt32 = TensorT<float>::zeros(pose_tgt64.shape());
    for (int64_t i = 0; i < pose_tgt64.numel(); ++i) pose_tgt32[i] = float(pose_tgt64[i]);
    auto progress_tgt32 = TensorT<float>::from({2}, {0.3f, 0.8f});

    TapeT<float> tape;
    auto out32 = model32.forward(&tape, windows32);
    auto lb32 = total_loss(&tape, out32.pose, out32.logits, out32.progress, pose_tgt32, cls,
                           progress_tgt32, {0.01, 1.0, 1.0}, skel);
    tape.backward(lb32.total);

    double gmax = 0.0;
    for (auto& [name, t] : params32)
      for (int64_t j = 0; j < t->numel(); ++j)
        gmax = std::max(gmax, std::abs(double(t->grad()[j])));
    const double floor = 1e-3 * std::max(1.0, gmax);

    double max_rel = 0.0;
    const double h = 1e-5;
    for (size_t i = 0; i < params64.size(); ++i) {
      TensorT<double>& p = *params64[i].second;
      for (int64_t j = 0; j < p.numel(); ++j) {
        const double orig = p[j];
        const double step = h * std::max(1.0, std::abs(orig));
        p[j] = orig + step;
        std::vector<TensorT<double>> unused;
        const double fp = f64(nullptr, unused).item();
        p[j] = orig - step;
        const double fm = f64(nullptr, unused).item();
        p[j] = orig;
        const double numeric = (fp - fm) / (2.0 * step);
        const double analytic = double(params32[i].second->grad()[j]);
        const double rel =
            std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
        max_rel = std::max(max_rel, rel);
      }
    }
    CHECK_MESSAGE(max_rel < 1e-3, "max rel err " << max_rel);
  }
}
