#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "unifield/fourier.hpp"

namespace unifield {
namespace {

using testing::random_spectrum;
using testing::random_volume;

double energy(const Volume3D& v) {
  double e = 0.0;
  for (double x : v.data()) e += x * x;
  return e;
}

double energy(const Spectrum3D& s) {
  double e = 0.0;
  for (auto c : s.data()) e += std::norm(c);
  return e;
}

TEST(Fourier, ZeroVolumeGivesZeroSpectrum) {
  const Spectrum3D s = dft3_forward(Volume3D({4, 4, 4}, {}));
  for (auto c : s.data()) EXPECT_EQ(c, std::complex<double>(0.0, 0.0));
}

TEST(Fourier, ImpulseGivesFlatSpectrum) {
  Volume3D v({2, 2, 2}, {});
  v.at(0, 0, 0) = 1.0;
  const Spectrum3D s = dft3_forward(v);
  for (auto c : s.data()) {
    EXPECT_NEAR(c.real(), 1.0 / std::sqrt(8.0), 1e-15);
    EXPECT_NEAR(c.imag(), 0.0, 1e-15);
  }
}

TEST(Fourier, ConstantSpectrumInvertsToImpulse) {
  const double c = 0.37;
  Spectrum3D s({2, 2, 2});
  for (auto& x : s.data()) x = c;
  const Volume3D v = dft3_inverse(s);
  EXPECT_NEAR(v.at(0, 0, 0), c * std::sqrt(8.0), 1e-14);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i], 0.0, 1e-14);
}

TEST(Fourier, MatchesNaiveOnSmallShapes) {
  const std::size_t sizes[] = {2, 3, 4, 6, 8};
  std::uint64_t seed = 100;
  for (auto nx : sizes)
    for (auto ny : sizes)
      for (auto nz : sizes) {
        const Shape s{nx, ny, nz};
        const Volume3D v = random_volume(s, ++seed);
        EXPECT_LT(linf_distance(dft3_forward(v), naive_dft3(v, false)), 1e-10) << s.str();
      }
}

TEST(Fourier, InverseMatchesNaiveOnMixedShape) {
  const Spectrum3D s = random_spectrum({6, 4, 4}, 11);
  EXPECT_LT(linf_distance(dft3_inverse_complex(s), naive_dft3(s, true)), 1e-10);
}

TEST(Fourier, RoundTripIsIdentity) {
  for (Shape s : {Shape{8, 8, 8}, Shape{6, 4, 5}, Shape{1, 16, 3}}) {
    const Volume3D v = random_volume(s, 3);
    double max_imag = -1.0;
    const Volume3D back = dft3_inverse(dft3_forward(v), {}, &max_imag);
    EXPECT_LT(linf_distance(v, back), 1e-10) << s.str();
    EXPECT_LT(max_imag, 1e-12);
  }
}

TEST(Fourier, Parseval) {
  for (Shape s : {Shape{4, 4, 4}, Shape{6, 4, 4}, Shape{3, 5, 7}}) {
    const Volume3D v = random_volume(s, 5, -1.0, 1.0);
    const double ev = energy(v);
    EXPECT_NEAR(energy(dft3_forward(v)), ev, 1e-10 * ev) << s.str();
  }
}

TEST(Fourier, Linearity) {
  const Volume3D u = random_volume({4, 4, 4}, 1), w = random_volume({4, 4, 4}, 2);
  const double a = 1.7, b = -0.4;
  Volume3D mix({4, 4, 4}, {});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * u[i] + b * w[i];
  const Spectrum3D su = dft3_forward(u), sw = dft3_forward(w), sm = dft3_forward(mix);
  for (std::size_t i = 0; i < sm.size(); ++i)
    EXPECT_LT(std::abs(sm[i] - (a * su[i] + b * sw[i])), 1e-12);
}

TEST(Fourier, RealInputIsHermitian) {
  const Shape s{6, 4, 8};
  const Spectrum3D f = dft3_forward(random_volume(s, 9));
  for (std::size_t z = 0; z < s.nz; ++z)
    for (std::size_t y = 0; y < s.ny; ++y)
      for (std::size_t x = 0; x < s.nx; ++x)
        EXPECT_LT(std::abs(f.at(x, y, z) - std::conj(f.at_negated(x, y, z))), 1e-12);
}

TEST(Fourier, SerialAndParallelAreBitwiseEqual) {
  const Shape s{16, 8, 12};
  const FftPlan plan(s);
  const Volume3D v = random_volume(s, 21);
  const Spectrum3D a = plan.forward(v, Exec::Serial), b = plan.forward(v, Exec::Parallel);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Fourier, NaiveOracleGuardsSize) {
  EXPECT_THROW(naive_dft3(Volume3D({64, 32, 32}, {}), false), InvalidArgument);
}

TEST(Fourier, NaiveOfZeroIsZero) {
  const Spectrum3D s = naive_dft3(Volume3D({3, 2, 4}, {}), true);
  for (auto c : s.data()) EXPECT_EQ(c, std::complex<double>(0.0, 0.0));
}

}  // namespace
}  // namespace unifield
