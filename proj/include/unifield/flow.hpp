#pragma once

#include <cstdint>
#include <functional>

#include "unifield/task.hpp"
#include "unifield/velocity_net.hpp"
#include "unifield/volume.hpp"

namespace unifield {

/// Point on the straight path z_t = (1 - t) z_0 + t z_1; t = 0 is data, t = 1 noise.
struct FlowState {
  Volume3D z;
  double t;
};

struct SamplerConfig {
  long steps = 20;
  std::uint64_t seed = 0;
};

FlowState interpolate(const Volume3D& z0, const Volume3D& z1, double t);

/// d z_t / dt = z_1 - z_0, constant along the path.
Volume3D velocity_target(const Volume3D& z0, const Volume3D& z1);

/// I.i.d. N(0, 1) voxels from mt19937_64 + Box-Muller; same seed, same volume.
Volume3D sample_noise(Shape shape, std::uint64_t seed, Spacing spacing = {});

/// Maps volumes to and from the space the flow runs in.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual Volume3D encode(const Volume3D& x) const = 0;
  virtual Volume3D decode(const Volume3D& z) const = 0;
};

class IdentityCodec final : public LatentCodec {
 public:
  Volume3D encode(const Volume3D& x) const override { return x; }
  Volume3D decode(const Volume3D& z) const override { return z; }
};

using VelocityField =
    std::function<Volume3D(const Volume3D& z, const Volume3D& cond, const FieldTask&, double t)>;

/// Euler integration of dz/dt = F(z, E(x_lf), task, t) from t = 1 down to 0,
/// starting from seeded noise. Output is decoded and clamped to [0, 1].
/// If `unclamped` is given it receives the decoded volume before clamping.
Volume3D euler_enhance(const VelocityField& field, const Volume3D& x_lf, const FieldTask& task,
                       const SamplerConfig& cfg, const LatentCodec& codec = IdentityCodec{},
                       Volume3D* unclamped = nullptr);

Volume3D euler_enhance(const VelocityModel& model, const Volume3D& x_lf, const FieldTask& task,
                       const SamplerConfig& cfg);

}  // namespace unifield
