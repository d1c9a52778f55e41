#include "unifield/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace unifield {

FlowState interpolate(const Volume3D& z0, const Volume3D& z1, double t) {
  require_same_shape(z0.shape(), z1.shape(), "interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("interpolate: t must lie in [0, 1]");
  Volume3D z(z0.shape(), z0.spacing());
  if (t == 0.0) {
    z = z0;
  } else if (t == 1.0) {
    z = z1;
    z.set_spacing(z0.spacing());
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (1.0 - t) * z0[i] + t * z1[i];
  }
  return {std::move(z), t};
}

Volume3D velocity_target(const Volume3D& z0, const Volume3D& z1) {
  require_same_shape(z0.shape(), z1.shape(), "velocity_target");
  Volume3D v(z0.shape(), z0.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = z1[i] - z0[i];
  return v;
}

Volume3D sample_noise(Shape shape, std::uint64_t seed, Spacing spacing) {
  Volume3D out(shape, spacing);
  std::mt19937_64 rng(seed);
  // 53-bit uniforms in (0, 1]; the open lower end keeps log() finite.
  auto uniform = [&] { return (double(rng() >> 11) + 1.0) * 0x1.0p-53; };
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    out[i] = r * std::cos(phi);
    if (i + 1 < n) out[i + 1] = r * std::sin(phi);
  }
  return out;
}

Volume3D euler_enhance(const VelocityField& field, const Volume3D& x_lf, const FieldTask& task,
                       const SamplerConfig& cfg, const LatentCodec& codec, Volume3D* unclamped) {
  if (cfg.steps < 1) throw InvalidArgument("euler_enhance: steps must be >= 1");
  const Volume3D cond = codec.encode(x_lf);
  Volume3D z = sample_noise(cond.shape(), cfg.seed, cond.spacing());
  const double h = 1.0 / double(cfg.steps);
  for (long i = 0; i < cfg.steps; ++i) {
    const double t = 1.0 - double(i) / double(cfg.steps);
    const Volume3D v = field(z, cond, task, t);
    require_same_shape(v.shape(), z.shape(), "euler_enhance velocity");
    for (std::size_t k = 0; k < z.size(); ++k) z[k] -= h * v[k];
    if (!z.all_finite())
      throw DivergedError("sampler diverged: non-finite state after step " + std::to_string(i), i);
  }
  Volume3D out = codec.decode(z);
  if (unclamped) *unclamped = out;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Volume3D euler_enhance(const VelocityModel& model, const Volume3D& x_lf, const FieldTask& task,
                       const SamplerConfig& cfg) {
  auto field = [&model](const Volume3D& z, const Volume3D& cond, const FieldTask& tk, double t) {
    return model.predict(z, cond, tk, t);
  };
  return euler_enhance(field, x_lf, task, cfg);
}

}  // namespace unifield
