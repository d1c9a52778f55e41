#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "unifield/fasrm.hpp"
#include "unifield/fourier.hpp"
#include "unifield/synth.hpp"

namespace unifield {
namespace {

PhantomSpec spec32(std::uint64_t seed) {
  PhantomSpec p;
  p.seed = seed;
  return p;
}

double high_band_fraction(const Volume3D& v) {
  const Spectrum3D f = dft3_forward(v);
  const BandSpec b = build_bands(v.shape());
  double hi = 0.0, all = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    all += std::norm(f[i]);
    if (b.band_of(i) == kHigh) hi += std::norm(f[i]);
  }
  return hi / all;
}

TEST(Phantom, EmptySpecIsZero) {
  PhantomSpec p;
  p.shape = {8, 9, 10};
  p.n_ellipsoids = 0;
  p.texture_amp = 0.0;
  const Volume3D v = make_phantom(p);
  EXPECT_EQ(v.max(), 0.0);
}

TEST(Phantom, DeterministicAndSeedSensitive) {
  EXPECT_EQ(linf_distance(make_phantom(spec32(4)), make_phantom(spec32(4))), 0.0);
  EXPECT_GT(linf_distance(make_phantom(spec32(4)), make_phantom(spec32(5))), 0.0);
}

TEST(Phantom, ForegroundAndRange) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Volume3D v = make_phantom(spec32(seed));
    std::size_t fg = 0;
    for (double x : v.data()) fg += x > 0.1;
    EXPECT_GE(double(fg), 0.2 * double(v.size())) << seed;
    EXPECT_GE(v.min(), 0.0);
    EXPECT_LE(v.max(), 1.0);
  }
}

TEST(Phantom, PlateausWithoutTexture) {
  PhantomSpec p = spec32(8);
  p.texture_amp = 0.0;
  const Volume3D v = make_phantom(p);
  EXPECT_LE(v.max(), 0.9 + 1e-12);
  EXPECT_GE(v.max(), 0.2);
}

TEST(Phantom, RejectsBadSpec) {
  PhantomSpec p;
  p.shape = {7, 8, 8};
  EXPECT_THROW(make_phantom(p), InvalidArgument);
  p = {};
  p.texture_amp = 0.31;
  EXPECT_THROW(make_phantom(p), InvalidArgument);
}

TEST(Degrade, ZeroSigmasAreIdentity) {
  const Volume3D v = make_phantom(spec32(1));
  DegradeSpec d;
  d.blur_sigma_vox = 0.0;
  d.noise_sigma = 0.0;
  EXPECT_EQ(linf_distance(degrade_lowfield(v, d), v), 0.0);
}

TEST(Degrade, BlurPreservesConstants) {
  const Volume3D c({10, 9, 8}, {}, 0.4);
  DegradeSpec d;
  d.blur_sigma_vox = 2.3;
  d.noise_sigma = 0.0;
  EXPECT_LT(linf_distance(degrade_lowfield(c, d), c), 1e-14);
}

TEST(Degrade, ImpulseMatchesDenseConvolution) {
  const Shape s{16, 16, 16};
  Volume3D v(s, {});
  v.at(8, 8, 8) = 1.0;
  DegradeSpec d;
  d.blur_sigma_vox = 1.5;
  d.noise_sigma = 0.0;
  const Volume3D out = degrade_lowfield(v, d);
  const int r = 5;
  double norm = 0.0;
  for (int k = -r; k <= r; ++k) norm += std::exp(-k * k / (2 * 1.5 * 1.5));
  for (std::size_t z = 0; z < 16; ++z)
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        const int dx = int(x) - 8, dy = int(y) - 8, dz = int(z) - 8;
        double expect = 0.0;
        if (std::abs(dx) <= r && std::abs(dy) <= r && std::abs(dz) <= r)
          expect = std::exp(-(dx * dx + dy * dy + dz * dz) / (2 * 1.5 * 1.5)) / (norm * norm * norm);
        EXPECT_NEAR(out.at(x, y, z), expect, 1e-10);
      }
}

TEST(Degrade, NoiseIsSeededAndClamped) {
  const Volume3D v = make_phantom(spec32(2));
  DegradeSpec d;
  d.seed = 9;
  const Volume3D a = degrade_lowfield(v, d), b = degrade_lowfield(v, d);
  EXPECT_EQ(linf_distance(a, b), 0.0);
  EXPECT_GE(a.min(), 0.0);
  EXPECT_LE(a.max(), 1.0);
  d.seed = 10;
  EXPECT_GT(linf_distance(a, degrade_lowfield(v, d)), 0.0);
}

TEST(Degrade, BlurLowersHighBandFraction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Volume3D v = make_phantom(spec32(100 + seed));
    DegradeSpec d;
    d.blur_sigma_vox = 1.0;
    d.noise_sigma = 0.0;
    EXPECT_LT(high_band_fraction(degrade_lowfield(v, d)), high_band_fraction(v)) << seed;
  }
}

TEST(Degrade, TaskDefaults) {
  const DegradeSpec lo = DegradeSpec::for_task(FieldTask::lowfield(Modality::T1), 1);
  EXPECT_EQ(lo.blur_sigma_vox, 1.5);
  EXPECT_EQ(lo.noise_sigma, 0.05);
  const DegradeSpec hi = DegradeSpec::for_task(FieldTask::ultrahigh(Modality::T2), 1);
  EXPECT_EQ(hi.blur_sigma_vox, 0.6);
  EXPECT_EQ(hi.noise_sigma, 0.02);
  EXPECT_EQ(hi.bias_amp, 0.15);
}

TEST(Bias, ZeroAmplitudeIsIdentity) {
  const Volume3D v = make_phantom(spec32(3));
  DegradeSpec d;
  d.bias_amp = 0.0;
  EXPECT_EQ(linf_distance(apply_b1_bias(v, d), v), 0.0);
}

TEST(Bias, FieldIsNormalizedAndLowFrequency) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DegradeSpec d;
    d.seed = seed;
    const Volume3D g = bias_field({32, 32, 32}, d);
    EXPECT_NEAR(testing::max_abs(g.data()), 1.0, 1e-12);
    const Spectrum3D f = dft3_forward(g);
    const BandSpec b = build_bands(g.shape());
    double outside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      total += std::norm(f[i]);
      if (b.band_of(i) != kLow) outside += std::norm(f[i]);
    }
    EXPECT_LT(outside, 0.05 * total) << seed;
    EXPECT_EQ(linf_distance(g, bias_field({32, 32, 32}, d)), 0.0);
  }
}

TEST(Bias, AppliedMultiplicatively) {
  const Volume3D v = make_phantom(spec32(6));
  DegradeSpec d;
  d.seed = 3;
  const Volume3D g = bias_field(v.shape(), d);
  const Volume3D out = apply_b1_bias(v, d);
  for (std::size_t i = 0; i < v.size(); i += 97)
    EXPECT_NEAR(out[i], std::clamp(v[i] * (1.0 + 0.15 * g[i]), 0.0, 1.0), 1e-15);
}

TEST(Dataset, SplitCounts) {
  EXPECT_EQ(test_count(10), 2u);
  EXPECT_EQ(test_count(5), 1u);
  EXPECT_EQ(test_count(1), 1u);
  const PairedDataset ds = make_paired_dataset(10, {8, 8, 8}, {"64mT_to_3T", "3T_to_7T"}, 1);
  EXPECT_EQ(ds.items.size(), 20u);
  EXPECT_EQ(ds.train.size(), 16u);
  EXPECT_EQ(ds.test.size(), 4u);
  const PairedDataset five = make_paired_dataset(5, {8, 8, 8}, {"3T_to_7T"}, 1);
  EXPECT_EQ(five.train.size(), 4u);
  EXPECT_EQ(five.test.size(), 1u);
}

TEST(Dataset, PairsFollowTaskPhysics) {
  const PairedDataset ds = make_paired_dataset(3, {12, 12, 12}, {"64mT_to_3T", "3T_to_7T"}, 5);
  for (const auto& it : ds.items) {
    EXPECT_EQ(it.lf.shape(), it.hf.shape());
    EXPECT_GE(it.lf.min(), 0.0);
    EXPECT_LE(it.hf.max(), 1.0);
    EXPECT_GT(linf_distance(it.lf, it.hf), 0.0);
    EXPECT_EQ(it.id.substr(0, it.task.transition().size()), it.task.transition());
  }
  EXPECT_EQ(ds.items[0].task.modality(), Modality::T1);
  EXPECT_EQ(ds.items[1].task.modality(), Modality::T2);
  EXPECT_EQ(ds.items[2].task.modality(), Modality::FLAIR);
  EXPECT_EQ(ds.items[3].task.source(), Field::T3);
}

TEST(Dataset, Deterministic) {
  const auto a = make_paired_dataset(4, {8, 8, 8}, {"3T_to_7T"}, 11);
  const auto b = make_paired_dataset(4, {8, 8, 8}, {"3T_to_7T"}, 11);
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    EXPECT_EQ(linf_distance(a.items[i].lf, b.items[i].lf), 0.0);
    EXPECT_EQ(linf_distance(a.items[i].hf, b.items[i].hf), 0.0);
    EXPECT_EQ(a.items[i].id, b.items[i].id);
  }
  EXPECT_THROW(make_paired_dataset(4, {8, 8, 8}, {"7T_to_3T"}, 1), InvalidArgument);
}

}  // namespace
}  // namespace unifield
