#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "unifield/task.hpp"
#include "unifield/volume.hpp"

namespace unifield {

enum Band : std::uint8_t { kLow = 0, kMid = 1, kHigh = 2 };
inline constexpr std::size_t kNumBands = 3;

/// Radial low/mid/high partition of a full 3D spectrum.
///
/// Frequency index k is classified by r(k) = |k_signed| / |k_max| where
/// k_signed uses centered per-axis coordinates and k_max = (nx/2, ny/2, nz/2).
/// low: r < r1, mid: r1 <= r < r2, high: r >= r2.
class BandSpec {
 public:
  BandSpec(Shape shape, double r1, double r2);

  const Shape& shape() const { return shape_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }
  Band band_of(std::size_t i) const { return static_cast<Band>(labels_[i]); }
  bool in_band(std::size_t i, Band b) const { return labels_[i] == b; }
  std::size_t count(Band b) const { return counts_[b]; }
  const std::array<std::size_t, kNumBands>& counts() const { return counts_; }

  /// Binary mask M_b as a dense grid.
  std::vector<std::uint8_t> mask(Band b) const;

  /// Normalized centered radius of frequency index (kx, ky, kz).
  static double radius(const Shape& shape, std::size_t kx, std::size_t ky, std::size_t kz);

 private:
  Shape shape_;
  double r1_, r2_;
  std::vector<std::uint8_t> labels_;
  std::array<std::size_t, kNumBands> counts_{};
};

BandSpec build_bands(Shape shape, double r1 = 1.0 / 3.0, double r2 = 2.0 / 3.0);

using BandWeights = std::array<double, kNumBands>;

struct FasrmConfig {
  double lambda_spat = 1.0;
  double lambda_freq = 0.1;
  double alpha = 1.0;
  std::array<double, 2> cutoffs{1.0 / 3.0, 2.0 / 3.0};
  /// w_b keyed by transition ("64mT_to_3T", "3T_to_7T"). Not renormalized.
  std::map<std::string, BandWeights> weights{
      {"64mT_to_3T", {0.2, 0.5, 0.3}},
      {"3T_to_7T", {0.1, 0.3, 0.6}},
  };
  /// Let gradient flow through |D|^alpha instead of treating it as a constant.
  bool focal_gradient = false;

  /// Falls back to uniform thirds (with a warning on stderr) for unknown tasks.
  BandWeights weights_for(const FieldTask& task) const;
  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double spatial_l1 = 0.0;
  std::array<double, kNumBands> freq_per_band{};
};

LossBreakdown fasfl_loss(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                         const FasrmConfig& cfg, const BandSpec& bands);

Volume3D fasfl_gradient(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                        const FasrmConfig& cfg, const BandSpec& bands);

/// Loss and dL/dv_pred from a single forward transform.
struct FasflEval {
  LossBreakdown loss;
  Volume3D grad;
};

FasflEval fasfl_evaluate(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                         const FasrmConfig& cfg, const BandSpec& bands);

}  // namespace unifield
