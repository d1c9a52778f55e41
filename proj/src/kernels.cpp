#include "unifield/kernels.hpp"

#include <algorithm>

namespace unifield::kernels {

namespace {

constexpr int kTaps = 27;

struct Range {
  std::size_t lo, hi;  // [lo, hi)
};

// Output positions p along an axis of length n for which p + off is in range.
Range valid(std::size_t n, int off) {
  const std::size_t lo = off < 0 ? std::size_t(-off) : 0;
  const std::size_t hi = off > 0 ? (n > std::size_t(off) ? n - off : 0) : n;
  return {std::min(lo, n), hi};
}

void check(const ConvDims& d, std::size_t in, std::size_t w, std::size_t b, std::size_t out) {
  const std::size_t n = d.shape.size();
  if (in != d.cin * n || w != d.cout * d.cin * kTaps || b != d.cout || out != d.cout * n)
    throw InvalidArgument("conv3d: buffer sizes do not match dims");
}

}  // namespace

void conv3d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out, Exec exec) {
  check(d, in.size(), w.size(), b.size(), out.size());
  const Shape& s = d.shape;
  const std::size_t n = s.size(), plane = s.nx * s.ny;
  const long long cout = static_cast<long long>(d.cout);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long long co = 0; co < cout; ++co) {
    double* o = out.data() + co * n;
    std::fill(o, o + n, b[co]);
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
      const double* src = in.data() + ci * n;
      const double* wk = w.data() + (co * d.cin + ci) * kTaps;
      for (int dz = -1; dz <= 1; ++dz) {
        const Range rz = valid(s.nz, dz);
        for (int dy = -1; dy <= 1; ++dy) {
          const Range ry = valid(s.ny, dy);
          for (int dx = -1; dx <= 1; ++dx) {
            const Range rx = valid(s.nx, dx);
            const double wt = wk[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))];
            const std::ptrdiff_t shift = dx + std::ptrdiff_t(s.nx) * dy + std::ptrdiff_t(plane) * dz;
            for (std::size_t z = rz.lo; z < rz.hi; ++z)
              for (std::size_t y = ry.lo; y < ry.hi; ++y) {
                const std::size_t row = s.nx * (y + s.ny * z);
                const std::ptrdiff_t at = std::ptrdiff_t(row) + shift;
                for (std::size_t x = rx.lo; x < rx.hi; ++x) o[row + x] += wt * src[at + std::ptrdiff_t(x)];
              }
          }
        }
      }
    }
  }
}

void conv3d_backward_input(const ConvDims& d, std::span<const double> w,
                           std::span<const double> dout, std::span<double> din, Exec exec) {
  check(d, din.size(), w.size(), d.cout, dout.size());
  const Shape& s = d.shape;
  const std::size_t n = s.size(), plane = s.nx * s.ny;
  const long long cin = static_cast<long long>(d.cin);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long long ci = 0; ci < cin; ++ci) {
    double* g = din.data() + ci * n;
    for (std::size_t co = 0; co < d.cout; ++co) {
      const double* go = dout.data() + co * n;
      const double* wk = w.data() + (co * d.cin + ci) * kTaps;
      for (int dz = -1; dz <= 1; ++dz) {
        // din[p] receives dout[p - off] whenever p - off is in range.
        const Range rz = valid(s.nz, -dz);
        for (int dy = -1; dy <= 1; ++dy) {
          const Range ry = valid(s.ny, -dy);
          for (int dx = -1; dx <= 1; ++dx) {
            const Range rx = valid(s.nx, -dx);
            const double wt = wk[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))];
            const std::ptrdiff_t shift = dx + std::ptrdiff_t(s.nx) * dy + std::ptrdiff_t(plane) * dz;
            for (std::size_t z = rz.lo; z < rz.hi; ++z)
              for (std::size_t y = ry.lo; y < ry.hi; ++y) {
                const std::size_t row = s.nx * (y + s.ny * z);
                const std::ptrdiff_t at = std::ptrdiff_t(row) - shift;
                for (std::size_t x = rx.lo; x < rx.hi; ++x) g[row + x] += wt * go[at + std::ptrdiff_t(x)];
              }
          }
        }
      }
    }
  }
}

void conv3d_backward_params(const ConvDims& d, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dw,
                            std::span<double> db, Exec exec) {
  check(d, in.size(), dw.size(), db.size(), dout.size());
  const Shape& s = d.shape;
  const std::size_t n = s.size(), plane = s.nx * s.ny;
  const long long cout = static_cast<long long>(d.cout);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long long co = 0; co < cout; ++co) {
    const double* go = dout.data() + co * n;
    double bsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) bsum += go[i];
    db[co] += bsum;
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
      const double* src = in.data() + ci * n;
      double* gw = dw.data() + (co * d.cin + ci) * kTaps;
      for (int dz = -1; dz <= 1; ++dz) {
        const Range rz = valid(s.nz, dz);
        for (int dy = -1; dy <= 1; ++dy) {
          const Range ry = valid(s.ny, dy);
          for (int dx = -1; dx <= 1; ++dx) {
            const Range rx = valid(s.nx, dx);
            const std::ptrdiff_t shift = dx + std::ptrdiff_t(s.nx) * dy + std::ptrdiff_t(plane) * dz;
            double acc = 0.0;
            for (std::size_t z = rz.lo; z < rz.hi; ++z)
              for (std::size_t y = ry.lo; y < ry.hi; ++y) {
                const std::size_t row = s.nx * (y + s.ny * z);
                const std::ptrdiff_t at = std::ptrdiff_t(row) + shift;
                for (std::size_t x = rx.lo; x < rx.hi; ++x) acc += go[row + x] * src[at + std::ptrdiff_t(x)];
              }
            gw[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))] += acc;
          }
        }
      }
    }
  }
}

namespace reference {

namespace {

bool inside(const Shape& s, long x, long y, long z) {
  return x >= 0 && y >= 0 && z >= 0 && x < long(s.nx) && y < long(s.ny) && z < long(s.nz);
}

}  // namespace

void conv3d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out) {
  check(d, in.size(), w.size(), b.size(), out.size());
  const Shape& s = d.shape;
  const std::size_t n = s.size();
  for (std::size_t co = 0; co < d.cout; ++co)
    for (std::size_t z = 0; z < s.nz; ++z)
      for (std::size_t y = 0; y < s.ny; ++y)
        for (std::size_t x = 0; x < s.nx; ++x) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < d.cin; ++ci)
            for (int t = 0; t < kTaps; ++t) {
              const long xx = long(x) + t % 3 - 1, yy = long(y) + (t / 3) % 3 - 1,
                         zz = long(z) + t / 9 - 1;
              if (!inside(s, xx, yy, zz)) continue;
              acc += w[(co * d.cin + ci) * kTaps + t] * in[ci * n + flatten(s, xx, yy, zz)];
            }
          out[co * n + flatten(s, x, y, z)] = acc;
        }
}

void conv3d_backward_input(const ConvDims& d, std::span<const double> w,
                           std::span<const double> dout, std::span<double> din) {
  check(d, din.size(), w.size(), d.cout, dout.size());
  const Shape& s = d.shape;
  const std::size_t n = s.size();
  for (std::size_t ci = 0; ci < d.cin; ++ci)
    for (std::size_t z = 0; z < s.nz; ++z)
      for (std::size_t y = 0; y < s.ny; ++y)
        for (std::size_t x = 0; x < s.nx; ++x) {
          double& g = din[ci * n + flatten(s, x, y, z)];
          for (std::size_t co = 0; co < d.cout; ++co)
            for (int t = 0; t < kTaps; ++t) {
              const long xx = long(x) - (t % 3 - 1), yy = long(y) - ((t / 3) % 3 - 1),
                         zz = long(z) - (t / 9 - 1);
              if (!inside(s, xx, yy, zz)) continue;
              g += w[(co * d.cin + ci) * kTaps + t] * dout[co * n + flatten(s, xx, yy, zz)];
            }
        }
}

void conv3d_backward_params(const ConvDims& d, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dw,
                            std::span<double> db) {
  check(d, in.size(), dw.size(), db.size(), dout.size());
  const Shape& s = d.shape;
  const std::size_t n = s.size();
  for (std::size_t co = 0; co < d.cout; ++co) {
    double bsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) bsum += dout[co * n + i];
    db[co] += bsum;
    for (std::size_t ci = 0; ci < d.cin; ++ci)
      for (int t = 0; t < kTaps; ++t) {
        double acc = 0.0;
        for (std::size_t z = 0; z < s.nz; ++z)
          for (std::size_t y = 0; y < s.ny; ++y)
            for (std::size_t x = 0; x < s.nx; ++x) {
              const long xx = long(x) + t % 3 - 1, yy = long(y) + (t / 3) % 3 - 1,
                         zz = long(z) + t / 9 - 1;
              if (!inside(s, xx, yy, zz)) continue;
              acc += dout[co * n + flatten(s, x, y, z)] * in[ci * n + flatten(s, xx, yy, zz)];
            }
        dw[(co * d.cin + ci) * kTaps + t] += acc;
      }
  }
}

}  // namespace reference

}  // namespace unifield::kernels
