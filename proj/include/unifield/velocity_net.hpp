#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "unifield/dataset.hpp"
#include "unifield/fasrm.hpp"
#include "unifield/task.hpp"
#include "unifield/volume.hpp"

namespace unifield {

struct ModelConfig {
  /// Conv channel plan; first entry must be 2 (z_t, x_lf), last must be 1.
  std::vector<std::size_t> channels{2, 16, 16, 16, 1};
  std::size_t embed_dim = 16;
  /// Number of sinusoid frequencies; the time feature vector has twice this.
  std::size_t time_freqs = 8;
  /// Volume shape the weights were trained on; all-zero extents mean unrecorded.
  Shape volume_shape{0, 0, 0};

  std::size_t layers() const { return channels.size() - 1; }
  void validate() const;
  std::string encode() const;
  static ModelConfig decode(const std::string& s);
  bool operator==(const ModelConfig&) const = default;
};

/// Offsets of every parameter tensor inside the flat parameter array.
struct ParamLayout {
  struct Conv { std::size_t w, b; };
  struct Film { std::size_t scale_w, scale_b, shift_w, shift_b; };

  std::size_t embed = 0;   // [task][embed_dim]
  std::size_t time_w = 0;  // [embed_dim][2 * time_freqs]
  std::size_t time_b = 0;  // [embed_dim]
  std::vector<Conv> conv;  // per layer: [cout][cin][27], [cout]
  std::vector<Film> film;  // per hidden layer: [c][embed_dim] x2, [c] x2
  std::size_t skip_w = 0;  // [2][embed_dim]: gains on z_t and x_lf
  std::size_t skip_b = 0;  // [2]
  std::size_t total = 0;

  explicit ParamLayout(const ModelConfig& cfg);
};

/// Activations saved by a training forward pass.
struct ForwardCache {
  Shape shape;
  std::size_t task = 0;
  std::vector<double> time_features;
  std::vector<double> cond_pre, cond;
  std::vector<std::vector<double>> film_scale, film_shift;
  std::vector<std::vector<double>> layer_in;  // input to conv l, channel-major
  std::vector<std::vector<double>> conv_out;  // conv l output before modulation
  std::vector<std::vector<double>> modulated; // FiLM output before activation
  std::vector<double> skip_gain;
};

/// Conditioned velocity network F(z_t, x_lf, task, t).
///
/// A stack of 3x3x3 convolutions over the two input channels. Every hidden
/// layer is modulated by (1 + scale) * h + shift, where scale and shift are
/// affine in a condition vector built from a learned per-task embedding plus
/// projected sinusoidal time features. The last conv layer is linear and is
/// summed with a conditioned linear skip g_z(c) * z_t + g_x(c) * x_lf.
/// Activation is SiLU everywhere.
class VelocityModel {
 public:
  VelocityModel(ModelConfig cfg, std::uint64_t seed);
  static VelocityModel zeros(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> grads() { return grads_; }
  std::span<const double> grads() const { return grads_; }
  std::span<double> adam_m() { return adam_m_; }
  std::span<double> adam_v() { return adam_v_; }

  /// Read-only inference; safe to call concurrently.
  Volume3D predict(const Volume3D& z_t, const Volume3D& x_lf, const FieldTask& task,
                   double t) const;

  /// Training forward; caches activations for backward().
  Volume3D forward(const Volume3D& z_t, const Volume3D& x_lf, const FieldTask& task, double t);

  /// Accumulates dLoss/dparams into grads() given dLoss/doutput.
  void backward(const Volume3D& loss_grad);

  void zero_grads();
  bool has_cache() const { return cache_.has_value(); }

 private:
  VelocityModel(ModelConfig cfg, std::vector<double> params);
  Volume3D run(const Volume3D& z_t, const Volume3D& x_lf, const FieldTask& task, double t,
               ForwardCache* cache) const;

  ModelConfig cfg_;
  ParamLayout layout_;
  std::vector<double> params_, grads_, adam_m_, adam_v_;
  std::optional<ForwardCache> cache_;

  friend VelocityModel load_checkpoint(const std::filesystem::path&);
};

Volume3D forward(VelocityModel& model, const Volume3D& z_t, const Volume3D& x_lf,
                 const FieldTask& task, double t);
void backward(VelocityModel& model, const Volume3D& loss_grad);

std::vector<double> time_features(double t, std::size_t n_freqs);

struct TrainConfig {
  double lr0 = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long total_iters = 1000;
  /// 0 means total_iters / 2.
  long decay_start = 0;
  long batch_size = 1;
  std::uint64_t seed = 0;

  long resolved_decay_start() const { return decay_start > 0 ? decay_start : total_iters / 2; }
  void validate() const;
};

/// lr0 up to decay_start, then linear to zero at total_iters.
double learning_rate(const TrainConfig& cfg, long iter);

/// Bias-corrected Adam at learning_rate(cfg, iter); zeroes grads afterwards.
void adam_step(VelocityModel& model, const TrainConfig& cfg, long iter);

struct IterationLog {
  long iter;
  LossBreakdown loss;
  double lr;
  bool operator==(const IterationLog& o) const {
    return iter == o.iter && lr == o.lr && loss.total == o.loss.total &&
           loss.spatial_l1 == o.loss.spatial_l1 && loss.freq_per_band == o.loss.freq_per_band;
  }
};

using TrainingLog = std::vector<IterationLog>;

TrainingLog train(VelocityModel& model, std::span<const PairedItem> dataset,
                  const TrainConfig& cfg, const FasrmConfig& fasrm_cfg);

void save_checkpoint(const VelocityModel& model, const std::filesystem::path& path);
VelocityModel load_checkpoint(const std::filesystem::path& path);

inline constexpr char kCheckpointMagic[9] = "UFLD0001";

}  // namespace unifield
