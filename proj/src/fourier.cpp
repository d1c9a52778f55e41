#include "unifield/fourier.hpp"

#include <cmath>
#include <numbers>

namespace unifield {

namespace {

bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

using cplx = std::complex<double>;

}  // namespace

FftPlan::FftPlan(Shape shape) : shape_(shape) {
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1)
    throw InvalidArgument("FftPlan: shape must be positive, got " + shape.str());
  for (int a = 0; a < 3; ++a) {
    Axis& ax = axes_[a];
    ax.n = shape[a];
    ax.pow2 = is_pow2(ax.n);
    ax.roots.resize(ax.n);
    for (std::size_t k = 0; k < ax.n; ++k)
      ax.roots[k] = std::polar(1.0, -2.0 * std::numbers::pi * double(k) / double(ax.n));
    if (ax.pow2) {
      std::size_t bits = 0;
      while ((std::size_t{1} << bits) < ax.n) ++bits;
      ax.bitrev.resize(ax.n);
      for (std::size_t i = 0; i < ax.n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b)
          if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
        ax.bitrev[i] = r;
      }
    }
  }
}

void FftPlan::transform_line(const Axis& ax, cplx* line, bool inverse,
                             std::vector<cplx>& scratch) const {
  const std::size_t n = ax.n;
  if (n == 1) return;
  const double scale = 1.0 / std::sqrt(double(n));
  auto root = [&](std::size_t k) { return inverse ? std::conj(ax.roots[k]) : ax.roots[k]; };

  if (ax.pow2) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = ax.bitrev[i];
      if (i < j) std::swap(line[i], line[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len / 2, step = n / len;
      for (std::size_t start = 0; start < n; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const cplx w = root(j * step);
          const cplx u = line[start + j];
          const cplx t = w * line[start + j + half];
          line[start + j] = u + t;
          line[start + j + half] = u - t;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) line[i] *= scale;
    return;
  }

  scratch.assign(n, cplx{});
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{};
    for (std::size_t j = 0; j < n; ++j) acc += line[j] * root((j * k) % n);
    scratch[k] = acc * scale;
  }
  std::copy(scratch.begin(), scratch.end(), line);
}

void FftPlan::transform(Spectrum3D& s, bool inverse, Exec exec) const {
  require_same_shape(s.shape(), shape_, "FftPlan");
  const std::size_t nx = shape_.nx, ny = shape_.ny;
  cplx* data = s.data().data();
  const bool par = exec == Exec::Parallel;

  for (int a = 0; a < 3; ++a) {
    const Axis& ax = axes_[a];
    if (ax.n == 1) continue;
    const std::size_t stride = a == 0 ? 1 : a == 1 ? nx : nx * ny;
    const std::size_t n_lines = shape_.size() / ax.n;
    const long long lines = static_cast<long long>(n_lines);

#pragma omp parallel if (par)
    {
      std::vector<cplx> buf(ax.n), scratch;
#pragma omp for schedule(static)
      for (long long l = 0; l < lines; ++l) {
        // Base offset of line l: enumerate the two axes orthogonal to `a`.
        std::size_t base;
        const auto li = static_cast<std::size_t>(l);
        if (a == 0) {
          base = li * nx;
        } else if (a == 1) {
          base = (li % nx) + (li / nx) * nx * ny;
        } else {
          base = li;
        }
        for (std::size_t i = 0; i < ax.n; ++i) buf[i] = data[base + i * stride];
        transform_line(ax, buf.data(), inverse, scratch);
        for (std::size_t i = 0; i < ax.n; ++i) data[base + i * stride] = buf[i];
      }
    }
  }
}

void FftPlan::forward_inplace(Spectrum3D& s, Exec exec) const { transform(s, false, exec); }
void FftPlan::inverse_inplace(Spectrum3D& s, Exec exec) const { transform(s, true, exec); }

Spectrum3D FftPlan::forward(const Volume3D& v, Exec exec) const {
  Spectrum3D s(v);
  transform(s, false, exec);
  return s;
}

Spectrum3D FftPlan::inverse_complex(const Spectrum3D& s, Exec exec) const {
  Spectrum3D out = s;
  transform(out, true, exec);
  return out;
}

Spectrum3D dft3_forward(const Volume3D& v) { return FftPlan(v.shape()).forward(v); }

Spectrum3D dft3_inverse_complex(const Spectrum3D& s) {
  return FftPlan(s.shape()).inverse_complex(s);
}

Volume3D dft3_inverse(const Spectrum3D& s, Spacing spacing, double* max_imag) {
  const Spectrum3D c = dft3_inverse_complex(s);
  Volume3D out(s.shape(), spacing);
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  if (max_imag) *max_imag = c.max_abs_imag();
  return out;
}

Spectrum3D naive_dft3(const Spectrum3D& s, bool inverse) {
  const Shape& sh = s.shape();
  if (sh.size() > kNaiveDftMaxVoxels)
    throw InvalidArgument("naive_dft3: " + std::to_string(sh.size()) + " voxels exceeds the " +
                          std::to_string(kNaiveDftMaxVoxels) + "-voxel oracle limit");
  const double sign = inverse ? 1.0 : -1.0;
  auto table = [&](std::size_t n) {
    std::vector<cplx> t(n);
    for (std::size_t k = 0; k < n; ++k)
      t[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * double(k) / double(n));
    return t;
  };
  const auto wx = table(sh.nx), wy = table(sh.ny), wz = table(sh.nz);
  const double scale = 1.0 / std::sqrt(double(sh.size()));

  Spectrum3D out(sh);
  for (std::size_t kz = 0; kz < sh.nz; ++kz)
    for (std::size_t ky = 0; ky < sh.ny; ++ky)
      for (std::size_t kx = 0; kx < sh.nx; ++kx) {
        cplx acc{};
        for (std::size_t z = 0; z < sh.nz; ++z)
          for (std::size_t y = 0; y < sh.ny; ++y)
            for (std::size_t x = 0; x < sh.nx; ++x)
              acc += s.at(x, y, z) * wx[(kx * x) % sh.nx] * wy[(ky * y) % sh.ny] *
                     wz[(kz * z) % sh.nz];
        out[flatten(sh, kx, ky, kz)] = acc * scale;
      }
  return out;
}

Spectrum3D naive_dft3(const Volume3D& v, bool inverse) { return naive_dft3(Spectrum3D(v), inverse); }

}  // namespace unifield
