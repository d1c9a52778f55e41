#include "unifield/velocity_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "unifield/flow.hpp"
#include "unifield/kernels.hpp"

namespace unifield {

namespace {

constexpr std::size_t kTaps = 27;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// y = W x + b with W stored row-major [rows][cols].
void affine(std::span<const double> p, std::size_t w, std::size_t b, std::size_t rows,
            std::size_t cols, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = p[b + r];
    for (std::size_t c = 0; c < cols; ++c) acc += p[w + r * cols + c] * x[c];
    y[r] = acc;
  }
}

// Backward of affine(): accumulates dW, db and (optionally) dx.
void affine_backward(std::span<const double> p, std::span<double> g, std::size_t w,
                     std::size_t b, std::size_t rows, std::size_t cols, std::span<const double> x,
                     std::span<const double> dy, std::span<double> dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    g[b + r] += dy[r];
    for (std::size_t c = 0; c < cols; ++c) {
      g[w + r * cols + c] += dy[r] * x[c];
      if (!dx.empty()) dx[c] += p[w + r * cols + c] * dy[r];
    }
  }
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  if (channels.size() < 2) throw InvalidArgument("model needs at least one conv layer");
  if (channels.front() != 2) throw InvalidArgument("model input must have 2 channels");
  if (channels.back() != 1) throw InvalidArgument("model output must have 1 channel");
  for (auto c : channels)
    if (c == 0) throw InvalidArgument("model channel counts must be positive");
  if (embed_dim == 0 || time_freqs == 0)
    throw InvalidArgument("embed_dim and time_freqs must be positive");
}

std::string ModelConfig::encode() const {
  std::ostringstream os;
  os << "channels=";
  for (std::size_t i = 0; i < channels.size(); ++i) os << (i ? "," : "") << channels[i];
  os << ";embed_dim=" << embed_dim << ";time_freqs=" << time_freqs;
  if (volume_shape.nx != 0)
    os << ";shape=" << volume_shape.nx << "," << volume_shape.ny << "," << volume_shape.nz;
  return os.str();
}

ModelConfig ModelConfig::decode(const std::string& s) {
  ModelConfig cfg;
  cfg.channels.clear();
  std::istringstream is(s);
  std::string item;
  bool seen[3] = {false, false, false};
  while (std::getline(is, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("bad model config entry '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    try {
      if (key == "channels") {
        std::istringstream cs(val);
        std::string c;
        while (std::getline(cs, c, ',')) cfg.channels.push_back(std::stoul(c));
        seen[0] = true;
      } else if (key == "embed_dim") {
        cfg.embed_dim = std::stoul(val);
        seen[1] = true;
      } else if (key == "time_freqs") {
        cfg.time_freqs = std::stoul(val);
        seen[2] = true;
      } else if (key == "shape") {
        std::istringstream cs(val);
        std::string c;
        std::vector<std::size_t> d;
        while (std::getline(cs, c, ',')) d.push_back(std::stoul(c));
        if (d.size() != 3) throw InvalidArgument("bad model shape '" + val + "'");
        cfg.volume_shape = {d[0], d[1], d[2]};
      } else {
        throw InvalidArgument("unknown model config key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidArgument*>(&e)) throw;
      throw InvalidArgument("bad model config value '" + val + "' for " + key);
    }
  }
  if (!seen[0] || !seen[1] || !seen[2]) throw InvalidArgument("incomplete model config");
  cfg.validate();
  return cfg;
}

ParamLayout::ParamLayout(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t e = cfg.embed_dim, f = 2 * cfg.time_freqs;
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t off = at;
    at += n;
    return off;
  };
  embed = take(FieldTask::kCount * e);
  time_w = take(e * f);
  time_b = take(e);
  for (std::size_t l = 0; l < cfg.layers(); ++l) {
    const std::size_t ci = cfg.channels[l], co = cfg.channels[l + 1];
    Conv c;
    c.w = take(co * ci * kTaps);
    c.b = take(co);
    conv.push_back(c);
  }
  for (std::size_t l = 0; l + 1 < cfg.layers(); ++l) {
    const std::size_t c = cfg.channels[l + 1];
    Film fl;
    fl.scale_w = take(c * e);
    fl.scale_b = take(c);
    fl.shift_w = take(c * e);
    fl.shift_b = take(c);
    film.push_back(fl);
  }
  skip_w = take(2 * e);
  skip_b = take(2);
  total = at;
}

std::vector<double> time_features(double t, std::size_t n_freqs) {
  // Geometric frequencies pi/4 * 2^j; covers one slow quarter-wave up to fast
  // oscillations over t in [0, 1].
  std::vector<double> f(2 * n_freqs);
  for (std::size_t j = 0; j < n_freqs; ++j) {
    const double w = std::numbers::pi / 4.0 * std::ldexp(1.0, int(j));
    f[2 * j] = std::sin(w * t);
    f[2 * j + 1] = std::cos(w * t);
  }
  return f;
}

VelocityModel::VelocityModel(ModelConfig cfg, std::vector<double> params)
    : cfg_(std::move(cfg)), layout_(cfg_), params_(std::move(params)) {
  if (params_.size() != layout_.total)
    throw InvalidArgument("parameter count " + std::to_string(params_.size()) +
                          " does not match model config (" + std::to_string(layout_.total) + ")");
  grads_.assign(params_.size(), 0.0);
  adam_m_.assign(params_.size(), 0.0);
  adam_v_.assign(params_.size(), 0.0);
}

VelocityModel VelocityModel::zeros(ModelConfig cfg) {
  const ParamLayout layout(cfg);
  return VelocityModel(std::move(cfg), std::vector<double>(layout.total, 0.0));
}

VelocityModel::VelocityModel(ModelConfig cfg, std::uint64_t seed)
    : VelocityModel(zeros(std::move(cfg))) {
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t off, std::size_t n, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = double(rng() >> 11) * 0x1.0p-53;
      params_[off + i] = bound * (2.0 * u - 1.0);
    }
  };
  const std::size_t e = cfg_.embed_dim, f = 2 * cfg_.time_freqs;
  // Embedding rows are one-hot lookups: fan-in 1.
  fill(layout_.embed, FieldTask::kCount * e, 1.0);
  fill(layout_.time_w, e * f, double(f));
  for (std::size_t l = 0; l < cfg_.layers(); ++l) {
    const std::size_t ci = cfg_.channels[l], co = cfg_.channels[l + 1];
    fill(layout_.conv[l].w, co * ci * kTaps, double(ci * kTaps));
  }
  for (std::size_t l = 0; l < layout_.film.size(); ++l) {
    const std::size_t c = cfg_.channels[l + 1];
    fill(layout_.film[l].scale_w, c * e, double(e));
    fill(layout_.film[l].shift_w, c * e, double(e));
  }
  fill(layout_.skip_w, 2 * e, double(e));
}

Volume3D VelocityModel::run(const Volume3D& z_t, const Volume3D& x_lf, const FieldTask& task,
                            double t, ForwardCache* cache) const {
  require_same_shape(z_t.shape(), x_lf.shape(), "velocity forward");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("velocity forward: t must lie in [0, 1]");
  const Shape shape = z_t.shape();
  const std::size_t n = shape.size(), e = cfg_.embed_dim, f = 2 * cfg_.time_freqs;
  const std::span<const double> p = params_;

  // Condition vector: silu(embed[task] + W_t * features(t) + b_t).
  const std::vector<double> feats = time_features(t, cfg_.time_freqs);
  std::vector<double> cond_pre(e), cond(e);
  affine(p, layout_.time_w, layout_.time_b, e, f, feats, cond_pre);
  const std::size_t row = task.index();
  for (std::size_t i = 0; i < e; ++i) {
    cond_pre[i] += p[layout_.embed + row * e + i];
    cond[i] = silu(cond_pre[i]);
  }

  std::vector<double> h(2 * n);
  std::copy(z_t.data().begin(), z_t.data().end(), h.begin());
  std::copy(x_lf.data().begin(), x_lf.data().end(), h.begin() + n);

  if (cache) {
    cache->shape = shape;
    cache->task = row;
    cache->time_features = feats;
    cache->cond_pre = cond_pre;
    cache->cond = cond;
    cache->film_scale.clear();
    cache->film_shift.clear();
    cache->layer_in.clear();
    cache->conv_out.clear();
    cache->modulated.clear();
  }

  const std::size_t layers = cfg_.layers();
  std::vector<double> out;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t ci = cfg_.channels[l], co = cfg_.channels[l + 1];
    const kernels::ConvDims dims{ci, co, shape};
    std::vector<double> pre(co * n);
    kernels::conv3d_forward(dims, h, p.subspan(layout_.conv[l].w, co * ci * kTaps),
                            p.subspan(layout_.conv[l].b, co), pre);
    if (cache) cache->layer_in.push_back(std::move(h));
    if (l + 1 == layers) {
      out = std::move(pre);
      break;
    }
    const auto& fl = layout_.film[l];
    std::vector<double> scale(co), shift(co);
    affine(p, fl.scale_w, fl.scale_b, co, e, cond, scale);
    affine(p, fl.shift_w, fl.shift_b, co, e, cond, shift);
    std::vector<double> mod(co * n), next(co * n);
    const long long cc = static_cast<long long>(co);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < cc; ++c) {
      const double a = 1.0 + scale[c], b = shift[c];
      for (std::size_t i = c * n; i < (c + 1) * n; ++i) {
        mod[i] = a * pre[i] + b;
        next[i] = silu(mod[i]);
      }
    }
    if (cache) {
      cache->film_scale.push_back(std::move(scale));
      cache->film_shift.push_back(std::move(shift));
      cache->conv_out.push_back(std::move(pre));
      cache->modulated.push_back(std::move(mod));
    }
    h = std::move(next);
  }

  std::vector<double> gain(2);
  affine(p, layout_.skip_w, layout_.skip_b, 2, e, cond, gain);
  for (std::size_t i = 0; i < n; ++i) out[i] += gain[0] * z_t[i] + gain[1] * x_lf[i];
  if (cache) cache->skip_gain = gain;

  return Volume3D(shape, z_t.spacing(), std::move(out));
}

Volume3D VelocityModel::predict(const Volume3D& z_t, const Volume3D& x_lf, const FieldTask& task,
                                double t) const {
  return run(z_t, x_lf, task, t, nullptr);
}

Volume3D VelocityModel::forward(const Volume3D& z_t, const Volume3D& x_lf, const FieldTask& task,
                                double t) {
  ForwardCache cache;
  Volume3D out = run(z_t, x_lf, task, t, &cache);
  cache_ = std::move(cache);
  return out;
}

void VelocityModel::backward(const Volume3D& loss_grad) {
  if (!cache_) throw std::logic_error("backward called without a cached forward pass");
  const ForwardCache& c = *cache_;
  require_same_shape(loss_grad.shape(), c.shape, "velocity backward");
  const Shape shape = c.shape;
  const std::size_t n = shape.size(), e = cfg_.embed_dim, f = 2 * cfg_.time_freqs;
  const std::span<const double> p = params_;
  const std::span<double> g = grads_;
  const std::span<const double> dout = loss_grad.data();

  std::vector<double> dcond(e, 0.0);

  // Skip path: out += g_z * z_t + g_x * x_lf, inputs are channels 0/1 of layer_in[0].
  {
    const std::vector<double>& in0 = c.layer_in[0];
    std::vector<double> dgain(2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      dgain[0] += dout[i] * in0[i];
      dgain[1] += dout[i] * in0[n + i];
    }
    affine_backward(p, g, layout_.skip_w, layout_.skip_b, 2, e, c.cond, dgain, dcond);
  }

  std::vector<double> dpre(dout.begin(), dout.end());
  for (std::size_t l = cfg_.layers(); l-- > 0;) {
    const std::size_t ci = cfg_.channels[l], co = cfg_.channels[l + 1];
    const kernels::ConvDims dims{ci, co, shape};
    kernels::conv3d_backward_params(dims, c.layer_in[l], dpre, g.subspan(layout_.conv[l].w, co * ci * kTaps),
                                    g.subspan(layout_.conv[l].b, co));
    if (l == 0) break;

    std::vector<double> dh(ci * n, 0.0);
    kernels::conv3d_backward_input(dims, p.subspan(layout_.conv[l].w, co * ci * kTaps), dpre, dh);

    // Hidden layer l-1: h = silu(mod), mod = (1 + scale) * pre + shift.
    const std::size_t hl = l - 1;
    const auto& pre = c.conv_out[hl];
    const auto& mod = c.modulated[hl];
    const auto& scale = c.film_scale[hl];
    std::vector<double> dscale(ci, 0.0), dshift(ci, 0.0);
    std::vector<double> dprev(ci * n);
    const long long cc = static_cast<long long>(ci);
#pragma omp parallel for schedule(static)
    for (long long ch = 0; ch < cc; ++ch) {
      double ds = 0.0, dsh = 0.0;
      const double a = 1.0 + scale[ch];
      for (std::size_t i = ch * n; i < (ch + 1) * n; ++i) {
        const double dm = dh[i] * silu_grad(mod[i]);
        ds += dm * pre[i];
        dsh += dm;
        dprev[i] = dm * a;
      }
      dscale[ch] = ds;
      dshift[ch] = dsh;
    }
    const auto& fl = layout_.film[hl];
    affine_backward(p, g, fl.scale_w, fl.scale_b, ci, e, c.cond, dscale, dcond);
    affine_backward(p, g, fl.shift_w, fl.shift_b, ci, e, c.cond, dshift, dcond);
    dpre = std::move(dprev);
  }

  std::vector<double> dpre_cond(e);
  for (std::size_t i = 0; i < e; ++i) {
    dpre_cond[i] = dcond[i] * silu_grad(c.cond_pre[i]);
    g[layout_.embed + c.task * e + i] += dpre_cond[i];
  }
  affine_backward(p, g, layout_.time_w, layout_.time_b, e, f, c.time_features, dpre_cond, {});
}

void VelocityModel::zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

Volume3D forward(VelocityModel& model, const Volume3D& z_t, const Volume3D& x_lf,
                 const FieldTask& task, double t) {
  return model.forward(z_t, x_lf, task, t);
}

void backward(VelocityModel& model, const Volume3D& loss_grad) { model.backward(loss_grad); }

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw InvalidArgument("train.lr0 must be positive");
  if (total_iters < 1) throw InvalidArgument("train.total_iters must be >= 1");
  const long ds = resolved_decay_start();
  if (!(ds > 0 && ds <= total_iters))
    throw InvalidArgument("train.decay_start must satisfy 0 < decay_start <= total_iters");
  if (batch_size != 1) throw InvalidArgument("train.batch_size must be 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("train.epsilon must be positive");
}

double learning_rate(const TrainConfig& cfg, long iter) {
  const long ds = cfg.resolved_decay_start();
  if (iter <= ds || ds == cfg.total_iters) return cfg.lr0;
  const double frac = double(cfg.total_iters - iter) / double(cfg.total_iters - ds);
  return cfg.lr0 * std::max(frac, 0.0);
}

void adam_step(VelocityModel& model, const TrainConfig& cfg, long iter) {
  const double lr = learning_rate(cfg, iter);
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(iter));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(iter));
  auto p = model.params();
  auto g = model.grads();
  auto m = model.adam_m();
  auto v = model.adam_v();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mh = m[i] / bc1, vh = v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + cfg.epsilon);
  }
  model.zero_grads();
}

TrainingLog train(VelocityModel& model, std::span<const PairedItem> dataset,
                  const TrainConfig& cfg, const FasrmConfig& fasrm_cfg) {
  if (dataset.empty()) throw InvalidArgument("train: dataset is empty");
  cfg.validate();
  fasrm_cfg.validate();
  const Shape shape = dataset.front().hf.shape();
  for (const auto& item : dataset) {
    require_same_shape(item.hf.shape(), shape, "train dataset");
    require_same_shape(item.lf.shape(), shape, "train dataset");
  }
  if (model.config().volume_shape.nx != 0)
    require_same_shape(shape, model.config().volume_shape, "train dataset vs model");
  const BandSpec bands = build_bands(shape, fasrm_cfg.cutoffs[0], fasrm_cfg.cutoffs[1]);

  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&] { return double(rng() >> 11) * 0x1.0p-53; };

  TrainingLog log;
  log.reserve(cfg.total_iters);
  model.zero_grads();
  for (long iter = 1; iter <= cfg.total_iters; ++iter) {
    const auto pick = static_cast<std::size_t>(uniform() * double(dataset.size()));
    const PairedItem& item = dataset[std::min(pick, dataset.size() - 1)];
    const double t = uniform();
    const std::uint64_t noise_seed = rng();

    const Volume3D z1 = sample_noise(shape, noise_seed, item.hf.spacing());
    const FlowState zt = interpolate(item.hf, z1, t);
    const Volume3D target = velocity_target(item.hf, z1);
    const Volume3D pred = model.forward(zt.z, item.lf, item.task, t);
    FasflEval eval = fasfl_evaluate(pred, target, item.task, fasrm_cfg, bands);
    if (!std::isfinite(eval.loss.total))
      throw DivergedError("training diverged: non-finite loss at iteration " +
                              std::to_string(iter), iter);
    model.backward(eval.grad);
    const double lr = learning_rate(cfg, iter);
    adam_step(model, cfg, iter);
    log.push_back({iter, eval.loss, lr});
  }
  return log;
}

void save_checkpoint(const VelocityModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(kCheckpointMagic, 8);
  const std::string cfg = model.config().encode();
  put_u32(os, static_cast<std::uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put_u64(os, model.param_count());
  for (double v : model.params()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

VelocityModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) {
    return IoError("invalid checkpoint " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw fail("bad magic");
  const std::size_t cfg_len = get_le(bytes.data() + 8, 4);
  if (bytes.size() < 12 + cfg_len + 8) throw fail("truncated header");
  const std::string cfg_text(bytes.begin() + 12, bytes.begin() + 12 + long(cfg_len));
  ModelConfig cfg;
  try {
    cfg = ModelConfig::decode(cfg_text);
  } catch (const InvalidArgument& e) {
    throw fail(e.what());
  }
  const std::size_t at = 12 + cfg_len;
  const std::uint64_t count = get_le(bytes.data() + at, 8);
  if (count != ParamLayout(cfg).total) throw fail("parameter count does not match config");
  if (bytes.size() != at + 8 + count * 8) throw fail("parameter section has wrong length");
  std::vector<double> params(count);
  for (std::size_t i = 0; i < count; ++i)
    params[i] = std::bit_cast<double>(get_le(bytes.data() + at + 8 + 8 * i, 8));
  return VelocityModel(std::move(cfg), std::move(params));
}

}  // namespace unifield
