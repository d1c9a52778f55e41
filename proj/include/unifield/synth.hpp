#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "unifield/dataset.hpp"
#include "unifield/task.hpp"
#include "unifield/volume.hpp"

namespace unifield {

struct PhantomSpec {
  Shape shape{32, 32, 32};
  std::size_t n_ellipsoids = 6;
  double texture_amp = 0.1;  // in [0, 0.3]
  std::uint64_t seed = 0;

  void validate() const;
};

/// Smooth-edged ellipsoids with distinct plateaus in [0.2, 0.9] plus a
/// band-limited texture inside the foreground, clamped to [0, 1]. The first
/// ellipsoid is a large centered "head" that the others sit inside.
Volume3D make_phantom(const PhantomSpec& spec);

struct DegradeSpec {
  double blur_sigma_vox = 1.5;
  double noise_sigma = 0.05;
  double bias_amp = 0.15;               // in [0, 0.5]
  std::optional<double> bias_scale_vox; // default: a quarter of the longest extent
  std::uint64_t seed = 0;

  /// Source-side defaults: 64mT blur 1.5 / noise 0.05, 3T blur 0.6 / noise 0.02.
  static DegradeSpec for_task(const FieldTask& task, std::uint64_t seed);
  void validate() const;
};

/// Separable Gaussian blur (truncated at 3 sigma, unit-sum kernel, replicated
/// borders) followed by seeded additive Gaussian noise, clamped to [0, 1].
Volume3D degrade_lowfield(const Volume3D& x_hf, const DegradeSpec& spec);

/// Smooth multiplicative B1 shading 1 + bias_amp * g(r), clamped to [0, 1].
Volume3D apply_b1_bias(const Volume3D& x, const DegradeSpec& spec);

/// g(r): three seeded integer-cycle cosine modes with wavelength >= the bias
/// scale, normalized to max |g| = 1.
Volume3D bias_field(Shape shape, const DegradeSpec& spec);

struct PairedDataset {
  std::vector<PairedItem> items;
  std::vector<std::size_t> train, test;  // indices into items
};

/// Test count per task = max(1, round(0.2 * n)); the rest train.
std::size_t test_count(std::size_t n);

/// n pairs per task. 64mT->3T: clean target, degraded input. 3T->7T: B1-shaded
/// target, mildly degraded clean input. Modalities cycle through `modalities`.
PairedDataset make_paired_dataset(std::size_t n, Shape shape,
                                  const std::vector<std::string>& transitions, std::uint64_t seed,
                                  const std::vector<Modality>& modalities = {Modality::T1,
                                                                             Modality::T2,
                                                                             Modality::FLAIR},
                                  const PhantomSpec& phantom_defaults = {});

}  // namespace unifield
