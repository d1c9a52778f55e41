#pragma once

#include <span>

#include "unifield/volume.hpp"

namespace unifield {

/// Linear interpolation between order statistics at rank p/100 * (N - 1).
double percentile(std::span<const double> sorted, double p);

/// Clip to the [p_lo, p_hi] percentiles and map affinely onto [0, 1].
/// A degenerate range (hi == lo) yields an all-zero volume.
Volume3D percentile_normalize(const Volume3D& v, double p_lo = 0.5, double p_hi = 99.5);

/// Linear resampling along z onto 0, target, 2*target, ... mm, stopping at or
/// before the last original slice. x and y are untouched.
Volume3D resample_z(const Volume3D& v, double target_sz_mm = 1.0);

/// Corner-aligned trilinear resize; output index i samples input coordinate
/// i * (n_in - 1) / (n_out - 1). Spacing is rescaled to keep the
/// center-to-center extent.
Volume3D resize_trilinear(const Volume3D& v, Shape target = {256, 256, 160});

struct PreprocessConfig {
  double p_lo = 0.5;
  double p_hi = 99.5;
  double target_z_mm = 1.0;
  Shape target_shape{256, 256, 160};
};

/// normalize -> resample_z -> resize.
Volume3D preprocess(const Volume3D& v, const PreprocessConfig& cfg);

}  // namespace unifield
