#include "scotti/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace scotti {

namespace {

int pooled_extent(int d, int window, int stride) { return (d - window) / stride + 1; }

int conv_extent(int d, int kernel, int stride, int padding) {
  return (d + 2 * padding - kernel) / stride + 1;
}

}  // namespace

int ScottiConfig::conv_h() const {
  int d = conv_extent(frame_h, kernel, conv_stride, conv_padding);
  d = pooled_extent(d, pool, pool_stride);
  d = conv_extent(d, kernel, conv_stride, conv_padding);
  return pooled_extent(d, pool, pool_stride);
}

int ScottiConfig::conv_w() const {
  int d = conv_extent(frame_w2(), kernel, conv_stride, conv_padding);
  d = pooled_extent(d, pool, pool_stride);
  d = conv_extent(d, kernel, conv_stride, conv_padding);
  return pooled_extent(d, pool, pool_stride);
}

int ScottiConfig::flat_dim() const { return conv2_channels * conv_h() * conv_w(); }

void ScottiConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(window, "window");
  positive(embed_dim, "embed_dim");
  positive(frame_h, "frame_h");
  positive(foot_w, "foot_w");
  positive(joints, "joints");
  positive(n_classes, "n_classes");
  positive(conv1_channels, "conv1_channels");
  positive(conv2_channels, "conv2_channels");
  positive(kernel, "kernel");
  positive(conv_stride, "conv_stride");
  positive(pool, "pool");
  positive(pool_stride, "pool_stride");
  positive(layers, "layers");
  positive(heads, "heads");
  positive(ff_mult, "ff_mult");
  positive(head_hidden, "head_hidden");
  if (conv_padding < 0) throw ConfigError("conv_padding must be >= 0");
  if (embed_dim % heads != 0)
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " not divisible by heads " +
                      std::to_string(heads));
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0,1)");
  if (!(pose_scale > 0)) throw ConfigError("pose_scale must be positive");
  if (conv_h() < 1 || conv_w() < 1)
    throw ConfigError("conv/pool stages consume the whole frame; enlarge frames or shrink kernels");
}

std::string ScottiConfig::to_json_string() const {
  nlohmann::json j;
  j["window"] = window;
  j["embed_dim"] = embed_dim;
  j["frame_h"] = frame_h;
  j["foot_w"] = foot_w;
  j["joints"] = joints;
  j["n_classes"] = n_classes;
  j["conv1_channels"] = conv1_channels;
  j["conv2_channels"] = conv2_channels;
  j["kernel"] = kernel;
  j["conv_stride"] = conv_stride;
  j["conv_padding"] = conv_padding;
  j["pool"] = pool;
  j["pool_stride"] = pool_stride;
  j["layers"] = layers;
  j["heads"] = heads;
  j["ff_mult"] = ff_mult;
  j["head_hidden"] = head_hidden;
  j["pose_scale"] = pose_scale;
  j["pool_class_token"] = pool_class_token;
  j["dropout"] = dropout;
  return j.dump();
}

ScottiConfig ScottiConfig::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config json: ") + e.what());
  }
  ScottiConfig c;
  auto get = [&](const char* key, auto& into) {
    if (j.contains(key)) into = j.at(key).get<std::decay_t<decltype(into)>>();
  };
  get("window", c.window);
  get("embed_dim", c.embed_dim);
  get("frame_h", c.frame_h);
  get("foot_w", c.foot_w);
  get("joints", c.joints);
  get("n_classes", c.n_classes);
  get("conv1_channels", c.conv1_channels);
  get("conv2_channels", c.conv2_channels);
  get("kernel", c.kernel);
  get("conv_stride", c.conv_stride);
  get("conv_padding", c.conv_padding);
  get("pool", c.pool);
  get("pool_stride", c.pool_stride);
  get("layers", c.layers);
  get("heads", c.heads);
  get("ff_mult", c.ff_mult);
  get("head_hidden", c.head_hidden);
  get("pose_scale", c.pose_scale);
  get("pool_class_token", c.pool_class_token);
  get("dropout", c.dropout);
  c.validate();
  return c;
}

namespace {

template <typename T>
TensorT<T> fan_in_uniform(Shape shape, int64_t fan_in, Rng& rng) {
  auto t = TensorT<T>::zeros(shape);
  const double limit = 1.0 / std::sqrt(double(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = T(rng.uniform(-limit, limit));
  return t;
}

template <typename T>
TensorT<T> small_normal(Shape shape, Rng& rng, double stddev = 0.02) {
  auto t = TensorT<T>::zeros(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = T(rng.normal(0.0, stddev));
  return t;
}

}  // namespace

template <typename T>
ScottiModelT<T> ScottiModelT<T>::init(const ScottiConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(Rng::mix(seed, 0x53434f54ULL));
  ScottiModelT<T> m;
  m.config = config;
  const int64_t e = config.embed_dim;
  const int64_t k = config.kernel;
  const int64_t ff = int64_t(config.ff_mult) * e;

  m.conv1_w = fan_in_uniform<T>({config.conv1_channels, 1, k, k}, k * k, rng);
  m.conv1_b = TensorT<T>::zeros({config.conv1_channels});
  m.conv2_w =
      fan_in_uniform<T>({config.conv2_channels, config.conv1_channels, k, k},
                        int64_t(config.conv1_channels) * k * k, rng);
  m.conv2_b = TensorT<T>::zeros({config.conv2_channels});
  m.proj_w = fan_in_uniform<T>({config.flat_dim(), e}, config.flat_dim(), rng);
  m.proj_b = TensorT<T>::zeros({e});
  m.cls_token = small_normal<T>({e}, rng);
  m.pos_enc = small_normal<T>({config.tokens(), e}, rng);

  m.blocks.resize(size_t(config.layers));
  for (auto& b : m.blocks) {
    b.ln1_g = TensorT<T>::full({e}, T(1));
    b.ln1_b = TensorT<T>::zeros({e});
    b.wq = fan_in_uniform<T>({e, e}, e, rng);
    b.bq = TensorT<T>::zeros({e});
    b.wk = fan_in_uniform<T>({e, e}, e, rng);
    b.bk = TensorT<T>::zeros({e});
    b.wv = fan_in_uniform<T>({e, e}, e, rng);
    b.bv = TensorT<T>::zeros({e});
    b.wo = fan_in_uniform<T>({e, e}, e, rng);
    b.bo = TensorT<T>::zeros({e});
    b.ln2_g = TensorT<T>::full({e}, T(1));
    b.ln2_b = TensorT<T>::zeros({e});
    b.ff1_w = fan_in_uniform<T>({e, ff}, e, rng);
    b.ff1_b = TensorT<T>::zeros({ff});
    b.ff2_w = fan_in_uniform<T>({ff, e}, ff, rng);
    b.ff2_b = TensorT<T>::zeros({e});
  }
  m.final_ln_g = TensorT<T>::full({e}, T(1));
  m.final_ln_b = TensorT<T>::zeros({e});
  m.pool_w = TensorT<T>::zeros({config.pool_len()});  // softmax-uniform at init

  auto make_head = [&](int out_dim) {
    Head h;
    h.w1 = fan_in_uniform<T>({e, config.head_hidden}, e, rng);
    h.b1 = TensorT<T>::zeros({config.head_hidden});
    h.w2 = fan_in_uniform<T>({config.head_hidden, out_dim}, config.head_hidden, rng);
    h.b2 = TensorT<T>::zeros({out_dim});
    return h;
  };
  m.pose_head = make_head(config.joints * 3);
  m.action_head = make_head(config.n_classes);
  m.progress_head = make_head(1);

  m.set_requires_grad(true);
  return m;
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>*>> ScottiModelT<T>::params() {
  std::vector<std::pair<std::string, TensorT<T>*>> out;
  out.emplace_back("conv1.w", &conv1_w);
  out.emplace_back("conv1.b", &conv1_b);
  out.emplace_back("conv2.w", &conv2_w);
  out.emplace_back("conv2.b", &conv2_b);
  out.emplace_back("proj.w", &proj_w);
  out.emplace_back("proj.b", &proj_b);
  out.emplace_back("cls_token", &cls_token);
  out.emplace_back("pos_enc", &pos_enc);
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    Block& b = blocks[i];
    out.emplace_back(p + "ln1.g", &b.ln1_g);
    out.emplace_back(p + "ln1.b", &b.ln1_b);
    out.emplace_back(p + "attn.wq", &b.wq);
    out.emplace_back(p + "attn.bq", &b.bq);
    out.emplace_back(p + "attn.wk", &b.wk);
    out.emplace_back(p + "attn.bk", &b.bk);
    out.emplace_back(p + "attn.wv", &b.wv);
    out.emplace_back(p + "attn.bv", &b.bv);
    out.emplace_back(p + "attn.wo", &b.wo);
    out.emplace_back(p + "attn.bo", &b.bo);
    out.emplace_back(p + "ln2.g", &b.ln2_g);
    out.emplace_back(p + "ln2.b", &b.ln2_b);
    out.emplace_back(p + "ff1.w", &b.ff1_w);
    out.emplace_back(p + "ff1.b", &b.ff1_b);
    out.emplace_back(p + "ff2.w", &b.ff2_w);
    out.emplace_back(p + "ff2.b", &b.ff2_b);
  }
  out.emplace_back("final_ln.g", &final_ln_g);
  out.emplace_back("final_ln.b", &final_ln_b);
  out.emplace_back("pool.w", &pool_w);
  auto head = [&](const char* name, Head& h) {
    const std::string p = std::string(name) + ".";
    out.emplace_back(p + "w1", &h.w1);
    out.emplace_back(p + "b1", &h.b1);
    out.emplace_back(p + "w2", &h.w2);
    out.emplace_back(p + "b2", &h.b2);
  };
  head("pose_head", pose_head);
  head("action_head", action_head);
  head("progress_head", progress_head);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const TensorT<T>*>> ScottiModelT<T>::params() const {
  auto mutable_params = const_cast<ScottiModelT<T>*>(this)->params();
  std::vector<std::pair<std::string, const TensorT<T>*>> out;
  out.reserve(mutable_params.size());
  for (auto& [name, t] : mutable_params) out.emplace_back(name, t);
  return out;
}

template <typename T>
int64_t ScottiModelT<T>::param_count() const {
  int64_t n = 0;
  for (auto& [name, t] : params()) n += t->numel();
  return n;
}

template <typename T>
void ScottiModelT<T>::set_requires_grad(bool b) {
  for (auto& [name, t] : params()) t->set_requires_grad(b);
}

template <typename T>
void ScottiModelT<T>::zero_grads() {
  for (auto& [name, t] : params()) t->zero_grad();
}

template <typename T>
TensorT<T> ScottiModelT<T>::frame_embeddings(TapeT<T>* tape, const TensorT<T>& frames) const {
  if (frames.rank() != 3 || frames.dim(1) != config.frame_h || frames.dim(2) != config.frame_w2())
    throw DimensionError("frame_embeddings: expects [N, " + std::to_string(config.frame_h) + ", " +
                         std::to_string(config.frame_w2()) + "], got " + shape_str(frames.shape()));
  const int64_t n = frames.dim(0);
  TensorT<T> x = frames.reshaped({n, 1, config.frame_h, config.frame_w2()});
  x = conv2d(tape, x, conv1_w, config.conv_stride, config.conv_padding);
  x = relu(tape, add_channel_bias(tape, x, conv1_b));
  x = maxpool2d(tape, x, config.pool, config.pool_stride);
  x = conv2d(tape, x, conv2_w, config.conv_stride, config.conv_padding);
  x = relu(tape, add_channel_bias(tape, x, conv2_b));
  x = maxpool2d(tape, x, config.pool, config.pool_stride);
  return linear(tape, x.reshaped({n, config.flat_dim()}), proj_w, proj_b);
}

namespace {

// inverted dropout recorded directly on the tape
template <typename T>
TensorT<T> dropout_op(TapeT<T>* tape, const TensorT<T>& x, double rate, Rng& rng) {
  auto mask = std::make_shared<std::vector<T>>(size_t(x.numel()));
  const T keep_scale = T(1.0 / (1.0 - rate));
  for (auto& m : *mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  TensorT<T> out = TensorT<T>::zeros(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] * (*mask)[size_t(i)];
  if (tape && x.requires_grad()) {
    TensorT<T> xc = x, oc = out;
    out.node = tape->record([xc, oc, mask]() mutable {
      if (!oc.has_grad()) return;
      xc.ensure_grad();
      for (int64_t i = 0; i < xc.numel(); ++i) xc.grad()[i] += oc.grad()[i] * (*mask)[size_t(i)];
    });
    out.tape_id = tape->id();
    out.set_requires_grad(true);
  }
  return out;
}

}  // namespace

template <typename T>
ForwardResult<T> ScottiModelT<T>::forward(TapeT<T>* tape, const TensorT<T>& windows,
                                          Rng* dropout_rng) const {
  TensorT<T> w = windows;
  if (w.rank() == 3) w = w.reshaped({1, w.dim(0), w.dim(1), w.dim(2)});
  if (w.rank() != 4 || w.dim(1) != config.window || w.dim(2) != config.frame_h ||
      w.dim(3) != config.frame_w2())
    throw DimensionError("forward: expects [B, " + std::to_string(config.window) + ", " +
                         std::to_string(config.frame_h) + ", " + std::to_string(config.frame_w2()) +
                         "], got " + shape_str(windows.shape()));
  const int64_t batch = w.dim(0);
  const int64_t t = config.window, e = config.embed_dim;
  const bool use_dropout = tape && dropout_rng && config.dropout > 0.0;

  TensorT<T> emb =
      frame_embeddings(tape, w.reshaped({batch * t, config.frame_h, config.frame_w2()}));
  check_finite(emb, "cnn embeddings");

  TensorT<T> tokens = prepend_row(tape, emb.reshaped({batch, t, e}), cls_token);
  tokens = add_broadcast(tape, tokens, pos_enc);

  for (size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    const int64_t rows = batch * (t + 1);
    // pre-norm attention sublayer
    TensorT<T> nrm = layer_norm(tape, tokens, b.ln1_g, b.ln1_b);
    TensorT<T> flat = nrm.reshaped({rows, e});
    TensorT<T> q = linear(tape, flat, b.wq, b.bq).reshaped({batch, t + 1, e});
    TensorT<T> k = linear(tape, flat, b.wk, b.bk).reshaped({batch, t + 1, e});
    TensorT<T> v = linear(tape, flat, b.wv, b.bv).reshaped({batch, t + 1, e});
    TensorT<T> ctx = attention_core(tape, q, k, v, config.heads);
    TensorT<T> proj = linear(tape, ctx.reshaped({rows, e}), b.wo, b.bo);
    if (use_dropout) proj = dropout_op(tape, proj, config.dropout, *dropout_rng);
    tokens = add(tape, tokens, proj.reshaped({batch, t + 1, e}));
    // pre-norm feedforward sublayer
    TensorT<T> nrm2 = layer_norm(tape, tokens, b.ln2_g, b.ln2_b);
    TensorT<T> f1 = relu(tape, linear(tape, nrm2.reshaped({rows, e}), b.ff1_w, b.ff1_b));
    TensorT<T> f2 = linear(tape, f1, b.ff2_w, b.ff2_b);
    if (use_dropout) f2 = dropout_op(tape, f2, config.dropout, *dropout_rng);
    tokens = add(tape, tokens, f2.reshaped({batch, t + 1, e}));
    check_finite(tokens, ("transformer block " + std::to_string(i)).c_str());
  }

  tokens = layer_norm(tape, tokens, final_ln_g, final_ln_b);
  TensorT<T> pool_in = config.pool_class_token ? tokens : slice_tokens(tape, tokens, 1, t);
  TensorT<T> shared = pool_weighted(tape, pool_in, pool_w);
  check_finite(shared, "pooled representation");

  auto run_head = [&](const Head& h) {
    TensorT<T> hidden = relu(tape, linear(tape, shared, h.w1, h.b1));
    return linear(tape, hidden, h.w2, h.b2);
  };
  ForwardResult<T> out;
  out.shared = shared;
  out.pose =
      scale(tape, run_head(pose_head), T(config.pose_scale)).reshaped({batch, config.joints, 3});
  out.logits = run_head(action_head);
  out.progress = sigmoid(tape, run_head(progress_head)).reshaped({batch});
  check_finite(out.pose, "pose head");
  check_finite(out.logits, "action head");
  check_finite(out.progress, "progress head");
  return out;
}

// ------------------------------ checkpoint ------------------------------

namespace {

void put_u16(std::string& buf, uint16_t v) {
  buf.push_back(char(v & 0xff));
  buf.push_back(char((v >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

struct CkptReader {
  std::string bytes;
  size_t off = 0;
  std::string path;

  void need(size_t n, const char* what) const {
    if (off + n > bytes.size())
      throw FormatError(path + ": truncated " + what + " at byte offset " + std::to_string(off));
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = uint16_t(uint8_t(bytes[off])) | uint16_t(uint8_t(bytes[off + 1])) << 8;
    off += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(bytes[off + size_t(i)])) << (8 * i);
    off += 4;
    return v;
  }
  float f32(const char* what) {
    uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(size_t n, const char* what) {
    need(n, what);
    std::string s = bytes.substr(off, n);
    off += n;
    return s;
  }
};

}  // namespace

template <typename T>
void save_checkpoint(const ScottiModelT<T>& model, const std::string& path) {
  auto named = model.params();
  std::string buf;
  buf += "SCKP";
  put_u32(buf, 1);
  put_u32(buf, uint32_t(named.size()));
  for (auto& [name, tensor] : named) {
    put_u16(buf, uint16_t(name.size()));
    buf += name;
    buf.push_back(char(tensor->rank()));
    for (int i = 0; i < tensor->rank(); ++i) put_u32(buf, uint32_t(tensor->dim(i)));
    for (int64_t i = 0; i < tensor->numel(); ++i) put_f32(buf, float((*tensor)[i]));
  }
  const std::string cfg = model.config.to_json_string();
  put_u32(buf, uint32_t(cfg.size()));
  buf += cfg;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw FormatError(path + ": write failed");
}

template <typename T>
ScottiModelT<T> load_checkpoint(const std::string& path) {
  CkptReader r;
  r.path = path;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  r.need(4, "magic");
  if (r.bytes.compare(0, 4, "SCKP") != 0)
    throw FormatError(path + ": bad magic at byte offset 0, expected \"SCKP\"");
  r.off = 4;
  const uint32_t version = r.u32("version");
  if (version != 1)
    throw FormatError(path + ": unsupported version " + std::to_string(version) +
                      " at byte offset 4");
  const uint32_t count = r.u32("record count");

  struct Record {
    std::string name;
    Shape shape;
    std::vector<T> values;
  };
  std::vector<Record> records;
  records.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Record rec;
    const uint16_t len = r.u16("name length");
    rec.name = r.str(len, "name");
    const uint8_t rank = uint8_t(r.str(1, "rank")[0]);
    int64_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      rec.shape.push_back(int64_t(r.u32("extent")));
      numel *= rec.shape.back();
    }
    rec.values.resize(size_t(numel));
    for (int64_t v = 0; v < numel; ++v) rec.values[size_t(v)] = T(r.f32("values"));
    records.push_back(std::move(rec));
  }
  const uint32_t cfg_len = r.u32("config length");
  const std::string cfg = r.str(cfg_len, "config json");
  if (r.off != r.bytes.size())
    throw FormatError(path + ": trailing bytes at offset " + std::to_string(r.off));

  ScottiModelT<T> model = ScottiModelT<T>::init(ScottiConfig::from_json_string(cfg), 0);
  auto named = model.params();
  if (named.size() != records.size())
    throw FormatError(path + ": parameter count differs from the config's architecture");
  for (size_t i = 0; i < named.size(); ++i) {
    auto& [name, tensor] = named[i];
    const Record& rec = records[i];
    if (rec.name != name)
      throw FormatError(path + ": unexpected parameter '" + rec.name + "', wanted '" + name + "'");
    if (rec.shape != tensor->shape())
      throw FormatError(path + ": parameter '" + name + "' has shape " + shape_str(rec.shape) +
                        ", wanted " + shape_str(tensor->shape()));
    std::copy(rec.values.begin(), rec.values.end(), tensor->values().begin());
  }
  return model;
}

template struct ScottiModelT<float>;
template struct ScottiModelT<double>;
template void save_checkpoint<float>(const ScottiModelT<float>&, const std::string&);
template void save_checkpoint<double>(const ScottiModelT<double>&, const std::string&);
template ScottiModelT<float> load_checkpoint<float>(const std::string&);
template ScottiModelT<double> load_checkpoint<double>(const std::string&);

}  // namespace scotti
