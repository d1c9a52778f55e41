#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "unifield/fasrm.hpp"
#include "unifield/fourier.hpp"

namespace unifield {
namespace {

using testing::random_volume;
using testing::uniform01;

// Band label from the radius formula, written out independently.
int brute_band(Shape s, std::size_t x, std::size_t y, std::size_t z, double r1, double r2) {
  auto c = [](std::size_t k, std::size_t n) {
    return 2 * k <= n ? double(k) : double(k) - double(n);
  };
  const double kx = c(x, s.nx), ky = c(y, s.ny), kz = c(z, s.nz);
  const double mx = s.nx / 2.0, my = s.ny / 2.0, mz = s.nz / 2.0;
  const double r = std::sqrt(kx * kx + ky * ky + kz * kz) / std::sqrt(mx * mx + my * my + mz * mz);
  return r < r1 ? 0 : r < r2 ? 1 : 2;
}

// Direct summation of the loss from the naive transform.
LossBreakdown oracle_loss(const Volume3D& p, const Volume3D& t, const BandWeights& w,
                          const FasrmConfig& cfg) {
  const Shape s = p.shape();
  const Spectrum3D fp = naive_dft3(p, false), ft = naive_dft3(t, false);
  double l1 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - t[i]);
  double sums[3] = {0, 0, 0};
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t z = 0; z < s.nz; ++z)
    for (std::size_t y = 0; y < s.ny; ++y)
      for (std::size_t x = 0; x < s.nx; ++x) {
        const int b = brute_band(s, x, y, z, cfg.cutoffs[0], cfg.cutoffs[1]);
        const double m = std::abs(fp.at(x, y, z) - ft.at(x, y, z));
        sums[b] += std::pow(m, cfg.alpha) * m * m;
        ++counts[b];
      }
  LossBreakdown out;
  out.spatial_l1 = l1 / double(p.size());
  double freq = 0.0;
  for (int b = 0; b < 3; ++b) {
    out.freq_per_band[b] = counts[b] ? w[b] / double(counts[b]) * sums[b] : 0.0;
    freq += out.freq_per_band[b];
  }
  out.total = cfg.lambda_spat * out.spatial_l1 + cfg.lambda_freq * freq;
  return out;
}

// Loss with the focal weights frozen at `focal` (computed at the base point).
double frozen_loss(const Volume3D& p, const Volume3D& t, const std::vector<double>& focal,
                   const BandWeights& w, const FasrmConfig& cfg, const BandSpec& bands) {
  const Spectrum3D fp = naive_dft3(p, false), ft = naive_dft3(t, false);
  double l1 = 0.0, freq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    l1 += std::abs(p[i] - t[i]);
    const Band b = bands.band_of(i);
    freq += w[b] / double(bands.count(b)) * focal[i] * std::norm(fp[i] - ft[i]);
  }
  return cfg.lambda_spat * l1 / double(p.size()) + cfg.lambda_freq * freq;
}

// Target kept at least 0.05 away from pred so FD steps never cross an L1 kink.
std::pair<Volume3D, Volume3D> kink_free_pair(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Volume3D p = random_volume(s, seed ^ 0xabcdef, -1.0, 1.0), t(s, {});
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gap = 0.05 + uniform01(rng);
    t[i] = p[i] + ((rng() & 1) ? gap : -gap);
  }
  return {p, t};
}

double rel_linf(const Volume3D& a, const std::vector<double>& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num = std::max(num, std::abs(a[i] - f[i]));
    den = std::max(den, std::abs(f[i]));
  }
  return num / den;
}

const FieldTask kLowTask = FieldTask::lowfield(Modality::T1);
const FieldTask kHighTask = FieldTask::ultrahigh(Modality::FLAIR);

TEST(Bands, RadiusExtremesOnTwoCube) {
  const BandSpec b = build_bands({2, 2, 2});
  EXPECT_EQ(b.band_of(0), kLow);
  EXPECT_EQ(b.band_of(flatten({2, 2, 2}, 1, 1, 1)), kHigh);
  EXPECT_DOUBLE_EQ(BandSpec::radius({2, 2, 2}, 1, 1, 1), 1.0);
}

TEST(Bands, PartitionMatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::vector<Shape> shapes{{8, 8, 8}, {1, 1, 1}, {5, 3, 9}};
  for (int i = 0; i < 10; ++i)
    shapes.push_back({1 + rng() % 12, 1 + rng() % 12, 1 + rng() % 12});
  for (const Shape& s : shapes) {
    const BandSpec b = build_bands(s);
    std::size_t brute[3] = {0, 0, 0};
    const auto m0 = b.mask(kLow), m1 = b.mask(kMid), m2 = b.mask(kHigh);
    for (std::size_t z = 0; z < s.nz; ++z)
      for (std::size_t y = 0; y < s.ny; ++y)
        for (std::size_t x = 0; x < s.nx; ++x) {
          const std::size_t i = flatten(s, x, y, z);
          const int expect = brute_band(s, x, y, z, 1.0 / 3.0, 2.0 / 3.0);
          ++brute[expect];
          EXPECT_EQ(int(b.band_of(i)), expect) << s.str();
          EXPECT_EQ(m0[i] + m1[i] + m2[i], 1) << s.str();
        }
    for (int k = 0; k < 3; ++k) EXPECT_EQ(b.count(Band(k)), brute[k]) << s.str();
    EXPECT_EQ(b.count(kLow) + b.count(kMid) + b.count(kHigh), s.size());
    EXPECT_EQ(b.band_of(0), kLow);
  }
}

TEST(Bands, RejectsBadCutoffs) {
  EXPECT_THROW(build_bands({4, 4, 4}, 0.5, 0.5), InvalidArgument);
  EXPECT_THROW(build_bands({4, 4, 4}, 0.0, 0.5), InvalidArgument);
  EXPECT_THROW(build_bands({4, 4, 4}, 0.3, 1.0), InvalidArgument);
}

TEST(Fasfl, IdenticalInputsGiveZero) {
  const Volume3D v = random_volume({4, 4, 4}, 1);
  const BandSpec b = build_bands(v.shape());
  const LossBreakdown l = fasfl_loss(v, v, kLowTask, {}, b);
  EXPECT_EQ(l.total, 0.0);
  EXPECT_EQ(l.spatial_l1, 0.0);
  for (double f : l.freq_per_band) EXPECT_EQ(f, 0.0);
  EXPECT_EQ(testing::max_abs(fasfl_gradient(v, v, kLowTask, {}, b).data()), 0.0);
}

TEST(Fasfl, ConstantOffsetLandsAtDc) {
  const Shape s{4, 4, 4};
  const double c = 0.3;
  const Volume3D t = random_volume(s, 2);
  Volume3D p = t;
  for (auto& x : p.data()) x += c;
  const BandSpec b = build_bands(s);
  const FasrmConfig cfg;
  const LossBreakdown l = fasfl_loss(p, t, kLowTask, cfg, b);
  EXPECT_NEAR(l.spatial_l1, c, 1e-15);
  EXPECT_NEAR(l.freq_per_band[kLow], 0.2 / double(b.count(kLow)) * std::pow(8.0 * c, 3), 1e-12);
  EXPECT_NEAR(l.freq_per_band[kMid], 0.0, 1e-20);
  EXPECT_NEAR(l.freq_per_band[kHigh], 0.0, 1e-20);
  const LossBreakdown o = oracle_loss(p, t, {0.2, 0.5, 0.3}, cfg);
  EXPECT_NEAR(l.total, o.total, 1e-12);
}

TEST(Fasfl, MatchesNaiveOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (Shape s : {Shape{4, 4, 4}, Shape{6, 4, 5}}) {
      const Volume3D p = random_volume(s, 10 + seed), t = random_volume(s, 20 + seed);
      FasrmConfig cfg;
      cfg.alpha = 0.5 * double(seed);
      const LossBreakdown l = fasfl_loss(p, t, kHighTask, cfg, build_bands(s));
      const LossBreakdown o = oracle_loss(p, t, {0.1, 0.3, 0.6}, cfg);
      EXPECT_NEAR(l.spatial_l1, o.spatial_l1, 1e-12);
      for (int b = 0; b < 3; ++b) EXPECT_NEAR(l.freq_per_band[b], o.freq_per_band[b], 1e-10);
      EXPECT_NEAR(l.total, o.total, 1e-10);
      EXPECT_DOUBLE_EQ(l.total, cfg.lambda_spat * l.spatial_l1 +
                                    cfg.lambda_freq * (l.freq_per_band[0] + l.freq_per_band[1] +
                                                       l.freq_per_band[2]));
    }
  }
}

TEST(Fasfl, ParsevalClosedForm) {
  // Odd extents keep every radius below 0.8, so these cutoffs give one band.
  const Shape s{5, 3, 5};
  const BandSpec all = build_bands(s, 0.8, 0.9);
  ASSERT_EQ(all.count(kLow), s.size());
  const Volume3D p = random_volume(s, 3), t = random_volume(s, 4);
  FasrmConfig cfg;
  cfg.alpha = 0.0;
  cfg.lambda_spat = 0.0;
  cfg.weights["64mT_to_3T"] = {1.0, 0.0, 0.0};
  double mse = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mse += (p[i] - t[i]) * (p[i] - t[i]);
  mse /= double(p.size());
  EXPECT_NEAR(fasfl_loss(p, t, kLowTask, cfg, all).total, cfg.lambda_freq * mse, 1e-12);
  const Volume3D g = fasfl_gradient(p, t, kLowTask, cfg, all);
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_NEAR(g[i], cfg.lambda_freq * 2.0 * (p[i] - t[i]) / double(p.size()), 1e-12);
}

TEST(Fasfl, ScalingProperty) {
  const Shape s{4, 4, 4};
  const Volume3D t = random_volume(s, 5), p = random_volume(s, 6);
  Volume3D p2 = t;
  for (std::size_t i = 0; i < p.size(); ++i) p2[i] = t[i] + 2.0 * (p[i] - t[i]);
  const BandSpec b = build_bands(s);
  const FasrmConfig cfg;
  const LossBreakdown a = fasfl_loss(p, t, kLowTask, cfg, b), c = fasfl_loss(p2, t, kLowTask, cfg, b);
  EXPECT_NEAR(c.spatial_l1, 2.0 * a.spatial_l1, 1e-9);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(c.freq_per_band[k], 8.0 * a.freq_per_band[k], 1e-9);
}

TEST(Fasfl, TranslationInvariant) {
  const Shape s{4, 6, 4};
  const Volume3D p = random_volume(s, 7), t = random_volume(s, 8);
  auto roll = [&](const Volume3D& v) {
    Volume3D r(s, {});
    for (std::size_t z = 0; z < s.nz; ++z)
      for (std::size_t y = 0; y < s.ny; ++y)
        for (std::size_t x = 0; x < s.nx; ++x)
          r.at((x + 1) % s.nx, (y + 2) % s.ny, (z + 3) % s.nz) = v.at(x, y, z);
    return r;
  };
  const BandSpec b = build_bands(s);
  EXPECT_NEAR(fasfl_loss(p, t, kHighTask, {}, b).total, fasfl_loss(roll(p), roll(t), kHighTask, {}, b).total,
              1e-10);
}

TEST(Fasfl, PositiveWhenInputsDiffer) {
  const Volume3D t = random_volume({4, 4, 4}, 9);
  Volume3D p = t;
  p[13] += 1e-3;
  const LossBreakdown l = fasfl_loss(p, t, kLowTask, {}, build_bands(t.shape()));
  EXPECT_GT(l.total, 0.0);
  for (double f : l.freq_per_band) EXPECT_GT(f, 0.0);
}

TEST(Fasfl, GradientMatchesFiniteDifferencesDetached) {
  const Shape s{6, 6, 6};
  const BandSpec bands = build_bands(s);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [p, t] = kink_free_pair(s, seed);
    const FieldTask task = seed % 2 ? kHighTask : kLowTask;
    const FasrmConfig cfg;
    const BandWeights w = cfg.weights_for(task);
    const Spectrum3D d0 = naive_dft3(p, false), dt = naive_dft3(t, false);
    std::vector<double> focal(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) focal[i] = std::pow(std::abs(d0[i] - dt[i]), cfg.alpha);

    const Volume3D g = fasfl_gradient(p, t, task, cfg, bands);
    std::vector<double> fd(p.size());
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
      Volume3D hi = p, lo = p;
      hi[i] += h;
      lo[i] -= h;
      fd[i] = (frozen_loss(hi, t, focal, w, cfg, bands) - frozen_loss(lo, t, focal, w, cfg, bands)) /
              (2 * h);
    }
    EXPECT_LT(rel_linf(g, fd), 1e-5) << "seed " << seed;
  }
}

TEST(Fasfl, FocalGradientFlagMatchesFullDerivative) {
  const Shape s{4, 4, 4};
  const BandSpec bands = build_bands(s);
  auto [p, t] = kink_free_pair(s, 77);
  FasrmConfig cfg;
  cfg.focal_gradient = true;
  cfg.alpha = 1.5;
  const Volume3D g = fasfl_gradient(p, t, kHighTask, cfg, bands);
  std::vector<double> fd(p.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    Volume3D hi = p, lo = p;
    hi[i] += h;
    lo[i] -= h;
    fd[i] = (fasfl_loss(hi, t, kHighTask, cfg, bands).total - fasfl_loss(lo, t, kHighTask, cfg, bands).total) /
            (2 * h);
  }
  EXPECT_LT(rel_linf(g, fd), 1e-6);
}

TEST(Fasfl, EvaluateAgreesWithSeparateCalls) {
  const Shape s{8, 4, 6};
  const Volume3D p = random_volume(s, 31), t = random_volume(s, 32);
  const BandSpec b = build_bands(s);
  const FasrmConfig cfg;
  const FasflEval e = fasfl_evaluate(p, t, kHighTask, cfg, b);
  EXPECT_EQ(e.loss.total, fasfl_loss(p, t, kHighTask, cfg, b).total);
  EXPECT_EQ(linf_distance(e.grad, fasfl_gradient(p, t, kHighTask, cfg, b)), 0.0);
}

TEST(Fasfl, NegativeAlphaSingularAtZeroDifference) {
  const Volume3D t = random_volume({4, 4, 4}, 33);
  FasrmConfig cfg;
  cfg.alpha = -0.5;
  EXPECT_THROW(fasfl_gradient(t, t, kLowTask, cfg, build_bands(t.shape())), InvalidArgument);
}

TEST(Fasfl, ShapeMismatchRejected) {
  const Volume3D a({4, 4, 4}, {}), b({4, 4, 2}, {});
  EXPECT_THROW(fasfl_loss(a, b, kLowTask, {}, build_bands(a.shape())), InvalidArgument);
  EXPECT_THROW(fasfl_loss(a, a, kLowTask, {}, build_bands(b.shape())), InvalidArgument);
}

TEST(FasrmConfig, WeightsPerTransitionAndFallback) {
  FasrmConfig cfg;
  EXPECT_EQ(cfg.weights_for(kLowTask), (BandWeights{0.2, 0.5, 0.3}));
  EXPECT_EQ(cfg.weights_for(kHighTask), (BandWeights{0.1, 0.3, 0.6}));
  cfg.weights.erase("3T_to_7T");
  const BandWeights u = cfg.weights_for(kHighTask);
  for (double w : u) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
}

TEST(FasrmConfig, RejectsNegativeWeights) {
  FasrmConfig cfg;
  cfg.weights["64mT_to_3T"] = {0.2, -0.1, 0.3};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.lambda_freq = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

}  // namespace
}  // namespace unifield
