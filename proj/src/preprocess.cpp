#include "unifield/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace unifield {

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("percentile of empty data");
  if (!(p >= 0.0 && p <= 100.0)) throw InvalidArgument("percentile must lie in [0, 100]");
  const double rank = p / 100.0 * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - double(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Volume3D percentile_normalize(const Volume3D& v, double p_lo, double p_hi) {
  if (!(p_lo < p_hi)) throw InvalidArgument("percentile_normalize: need p_lo < p_hi");
  std::vector<double> sorted(v.data().begin(), v.data().end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = percentile(sorted, p_lo), hi = percentile(sorted, p_hi);
  Volume3D out(v.shape(), v.spacing(), 0.0);
  if (!(hi > lo)) return out;
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (std::clamp(v[i], lo, hi) - lo) * inv;
  return out;
}

Volume3D resample_z(const Volume3D& v, double target_sz_mm) {
  const Shape& s = v.shape();
  if (s.nz < 2) throw InvalidArgument("resample_z needs at least 2 slices");
  if (!(target_sz_mm > 0.0)) throw InvalidArgument("resample_z: target spacing must be positive");
  const double sz = v.spacing().sz;
  const double extent = double(s.nz - 1) * sz;
  const auto nz_out = static_cast<std::size_t>(std::floor(extent / target_sz_mm + 1e-9)) + 1;

  Spacing sp = v.spacing();
  sp.sz = target_sz_mm;
  Volume3D out(Shape{s.nx, s.ny, nz_out}, sp);
  const std::size_t plane = s.nx * s.ny;
  for (std::size_t k = 0; k < nz_out; ++k) {
    const double pos = double(k) * target_sz_mm / sz;
    auto z0 = std::min(static_cast<std::size_t>(std::floor(pos)), s.nz - 1);
    double frac = pos - double(z0);
    if (z0 == s.nz - 1) {
      frac = 0.0;
    } else if (frac < 1e-12) {
      frac = 0.0;
    }
    const std::size_t z1 = std::min(z0 + 1, s.nz - 1);
    for (std::size_t i = 0; i < plane; ++i) {
      const double a = v[z0 * plane + i], b = v[z1 * plane + i];
      out[k * plane + i] = frac == 0.0 ? a : a + frac * (b - a);
    }
  }
  return out;
}

Volume3D resize_trilinear(const Volume3D& v, Shape target) {
  if (target.nx < 1 || target.ny < 1 || target.nz < 1)
    throw InvalidArgument("resize_trilinear: target shape must be positive");
  const Shape& s = v.shape();
  if (target == s) return v;

  struct Tap { std::size_t i0, i1; double f; };
  auto taps = [](std::size_t n_in, std::size_t n_out) {
    std::vector<Tap> t(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      const double c = (n_out == 1 || n_in == 1) ? 0.0
                                                 : double(i) * double(n_in - 1) / double(n_out - 1);
      const auto i0 = std::min(static_cast<std::size_t>(std::floor(c)), n_in - 1);
      const std::size_t i1 = std::min(i0 + 1, n_in - 1);
      t[i] = {i0, i1, i0 == i1 ? 0.0 : c - double(i0)};
    }
    return t;
  };
  const auto tx = taps(s.nx, target.nx), ty = taps(s.ny, target.ny), tz = taps(s.nz, target.nz);

  auto rescale = [](double sp, std::size_t n_in, std::size_t n_out) {
    if (n_in > 1 && n_out > 1) return sp * double(n_in - 1) / double(n_out - 1);
    return sp * double(n_in) / double(n_out);
  };
  const Spacing sp{rescale(v.spacing().sx, s.nx, target.nx),
                   rescale(v.spacing().sy, s.ny, target.ny),
                   rescale(v.spacing().sz, s.nz, target.nz)};
  Volume3D out(target, sp);

  const long long nz = static_cast<long long>(target.nz);
#pragma omp parallel for schedule(static)
  for (long long zi = 0; zi < nz; ++zi) {
    const Tap& a = tz[std::size_t(zi)];
    for (std::size_t y = 0; y < target.ny; ++y) {
      const Tap& b = ty[y];
      for (std::size_t x = 0; x < target.nx; ++x) {
        const Tap& c = tx[x];
        auto at = [&](std::size_t xx, std::size_t yy, std::size_t zz) { return v.at(xx, yy, zz); };
        const double c00 = at(c.i0, b.i0, a.i0) + c.f * (at(c.i1, b.i0, a.i0) - at(c.i0, b.i0, a.i0));
        const double c10 = at(c.i0, b.i1, a.i0) + c.f * (at(c.i1, b.i1, a.i0) - at(c.i0, b.i1, a.i0));
        const double c01 = at(c.i0, b.i0, a.i1) + c.f * (at(c.i1, b.i0, a.i1) - at(c.i0, b.i0, a.i1));
        const double c11 = at(c.i0, b.i1, a.i1) + c.f * (at(c.i1, b.i1, a.i1) - at(c.i0, b.i1, a.i1));
        const double c0 = c00 + b.f * (c10 - c00);
        const double c1 = c01 + b.f * (c11 - c01);
        out.at(x, y, std::size_t(zi)) = c0 + a.f * (c1 - c0);
      }
    }
  }
  return out;
}

Volume3D preprocess(const Volume3D& v, const PreprocessConfig& cfg) {
  Volume3D out = percentile_normalize(v, cfg.p_lo, cfg.p_hi);
  out = resample_z(out, cfg.target_z_mm);
  return resize_trilinear(out, cfg.target_shape);
}

}  // namespace unifield
