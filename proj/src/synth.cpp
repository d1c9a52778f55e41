#include "unifield/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "unifield/flow.hpp"
#include "unifield/seed.hpp"

namespace unifield {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return std::min(std::size_t(uniform() * double(n)), n - 1); }

 private:
  std::mt19937_64 gen_;
};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Ellipsoid {
  double cx, cy, cz;
  double ax, ay, az;
  double angle;  // rotation about z
  double level;
};

double soft_mask(const Ellipsoid& e, double x, double y, double z) {
  const double dx = x - e.cx, dy = y - e.cy, dz = z - e.cz;
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  const double u = (c * dx + s * dy) / e.ax, v = (-s * dx + c * dy) / e.ay, w = dz / e.az;
  const double rho = std::sqrt(u * u + v * v + w * w);
  // Edge about one voxel wide in normalized units.
  const double width = 1.0 / std::min({e.ax, e.ay, e.az});
  return 1.0 - smoothstep(1.0 - width, 1.0 + width, rho);
}

void blur_axis(std::vector<double>& data, const Shape& s, int axis,
               const std::vector<double>& kernel) {
  const long r = long(kernel.size() / 2);
  const std::size_t n = s[axis];
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? s.nx : s.nx * s.ny;
  const std::size_t lines = s.size() / n;
  std::vector<double> line(n);
  for (std::size_t l = 0; l < lines; ++l) {
    std::size_t base;
    if (axis == 0) base = l * s.nx;
    else if (axis == 1) base = (l % s.nx) + (l / s.nx) * s.nx * s.ny;
    else base = l;
    for (std::size_t i = 0; i < n; ++i) line[i] = data[base + i * stride];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (long k = -r; k <= r; ++k) {
        const long j = std::clamp(long(i) + k, 0L, long(n) - 1);
        acc += kernel[std::size_t(k + r)] * line[std::size_t(j)];
      }
      data[base + i * stride] = acc;
    }
  }
}

}  // namespace

void PhantomSpec::validate() const {
  if (shape.nx < 8 || shape.ny < 8 || shape.nz < 8)
    throw InvalidArgument("phantom shape must be at least (8,8,8), got " + shape.str());
  if (!(texture_amp >= 0.0 && texture_amp <= 0.3))
    throw InvalidArgument("phantom texture_amp must lie in [0, 0.3]");
}

Volume3D make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Shape& s = spec.shape;
  Volume3D vol(s, Spacing{});
  if (spec.n_ellipsoids == 0) return vol;

  Rng rng(spec.seed);
  const std::size_t n = spec.n_ellipsoids;
  std::vector<double> levels(n);
  for (std::size_t i = 0; i < n; ++i) levels[i] = 0.2 + 0.7 * (double(i) + 0.5) / double(n);
  for (std::size_t i = n; i > 1; --i) std::swap(levels[i - 1], levels[rng.index(i)]);

  const double ex = double(s.nx), ey = double(s.ny), ez = double(s.nz);
  std::vector<Ellipsoid> shapes;
  Ellipsoid head{(ex - 1) / 2 + rng.uniform(-0.03, 0.03) * ex,
                 (ey - 1) / 2 + rng.uniform(-0.03, 0.03) * ey,
                 (ez - 1) / 2 + rng.uniform(-0.03, 0.03) * ez,
                 rng.uniform(0.36, 0.44) * ex,
                 rng.uniform(0.36, 0.44) * ey,
                 rng.uniform(0.36, 0.44) * ez,
                 rng.uniform(0.0, std::numbers::pi),
                 levels[0]};
  shapes.push_back(head);
  for (std::size_t i = 1; i < n; ++i) {
    Ellipsoid e;
    e.cx = head.cx + rng.uniform(-0.45, 0.45) * head.ax;
    e.cy = head.cy + rng.uniform(-0.45, 0.45) * head.ay;
    e.cz = head.cz + rng.uniform(-0.45, 0.45) * head.az;
    e.ax = rng.uniform(0.08, 0.2) * ex;
    e.ay = rng.uniform(0.08, 0.2) * ey;
    e.az = rng.uniform(0.08, 0.2) * ez;
    e.angle = rng.uniform(0.0, std::numbers::pi);
    e.level = levels[i];
    shapes.push_back(e);
  }

  // Texture: four integer-cycle cosines, 3 to n/4 cycles per axis.
  struct Wave { double kx, ky, kz, phase; };
  std::vector<Wave> waves;
  auto cycles = [&](std::size_t len) {
    const double hi = std::max(3.0, double(len) / 4.0);
    return std::floor(rng.uniform(3.0, hi + 1.0));
  };
  for (int w = 0; w < 4; ++w) {
    const double kx = cycles(s.nx), ky = cycles(s.ny), kz = cycles(s.nz);
    waves.push_back({kx, ky, kz, rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }

  for (std::size_t z = 0; z < s.nz; ++z)
    for (std::size_t y = 0; y < s.ny; ++y)
      for (std::size_t x = 0; x < s.nx; ++x) {
        double v = 0.0;
        for (const auto& e : shapes) {
          const double m = soft_mask(e, double(x), double(y), double(z));
          v = v * (1.0 - m) + e.level * m;
        }
        if (spec.texture_amp > 0.0) {
          double tex = 0.0;
          for (const auto& w : waves)
            tex += std::cos(2.0 * std::numbers::pi *
                                (w.kx * double(x) / ex + w.ky * double(y) / ey +
                                 w.kz * double(z) / ez) +
                            w.phase);
          tex /= double(waves.size());
          v += spec.texture_amp * tex * soft_mask(head, double(x), double(y), double(z));
        }
        vol.at(x, y, z) = std::clamp(v, 0.0, 1.0);
      }
  return vol;
}

DegradeSpec DegradeSpec::for_task(const FieldTask& task, std::uint64_t seed) {
  DegradeSpec d;
  if (task.source() == Field::mT64) {
    d.blur_sigma_vox = 1.5;
    d.noise_sigma = 0.05;
  } else {
    d.blur_sigma_vox = 0.6;
    d.noise_sigma = 0.02;
  }
  d.seed = seed;
  return d;
}

void DegradeSpec::validate() const {
  if (!(blur_sigma_vox >= 0.0) || !(noise_sigma >= 0.0))
    throw InvalidArgument("blur and noise sigma must be nonnegative");
  if (!(bias_amp >= 0.0 && bias_amp <= 0.5)) throw InvalidArgument("bias_amp must lie in [0, 0.5]");
  if (bias_scale_vox && !(*bias_scale_vox > 0.0))
    throw InvalidArgument("bias_scale_vox must be positive");
}

Volume3D degrade_lowfield(const Volume3D& x_hf, const DegradeSpec& spec) {
  spec.validate();
  Volume3D out = x_hf;
  if (spec.blur_sigma_vox > 0.0) {
    const double sigma = spec.blur_sigma_vox;
    const long r = long(std::ceil(3.0 * sigma));
    std::vector<double> kernel(std::size_t(2 * r + 1));
    double sum = 0.0;
    for (long k = -r; k <= r; ++k) {
      kernel[std::size_t(k + r)] = std::exp(-double(k * k) / (2.0 * sigma * sigma));
      sum += kernel[std::size_t(k + r)];
    }
    for (double& k : kernel) k /= sum;
    for (int axis = 0; axis < 3; ++axis)
      if (out.shape()[axis] > 1) blur_axis(out.storage(), out.shape(), axis, kernel);
  }
  if (spec.noise_sigma > 0.0) {
    const Volume3D noise = sample_noise(out.shape(), spec.seed, out.spacing());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += spec.noise_sigma * noise[i];
  }
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Volume3D bias_field(Shape shape, const DegradeSpec& spec) {
  spec.validate();
  const double longest = double(std::max({shape.nx, shape.ny, shape.nz}));
  const double scale = spec.bias_scale_vox.value_or(longest / 4.0);
  const double fmax = 1.0 / scale;  // cycles per voxel

  // Candidate wavevectors in integer cycles per extent, half-space only.
  struct Mode { long kx, ky, kz; };
  std::vector<Mode> modes;
  const long bx = long(std::floor(double(shape.nx) * fmax)), by = long(std::floor(double(shape.ny) * fmax)),
             bz = long(std::floor(double(shape.nz) * fmax));
  for (long kz = 0; kz <= bz; ++kz)
    for (long ky = -by; ky <= by; ++ky)
      for (long kx = -bx; kx <= bx; ++kx) {
        if (kz == 0 && (ky < 0 || (ky == 0 && kx <= 0))) continue;
        const double fx = double(kx) / double(shape.nx), fy = double(ky) / double(shape.ny),
                     fz = double(kz) / double(shape.nz);
        if (std::sqrt(fx * fx + fy * fy + fz * fz) <= fmax + 1e-12) modes.push_back({kx, ky, kz});
      }

  Volume3D g(shape, Spacing{}, 0.0);
  if (modes.empty()) return g;
  Rng rng(spec.seed);
  for (int m = 0; m < 3; ++m) {
    const Mode& md = modes[rng.index(modes.size())];
    const double amp = rng.uniform(0.5, 1.0), phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t z = 0; z < shape.nz; ++z)
      for (std::size_t y = 0; y < shape.ny; ++y)
        for (std::size_t x = 0; x < shape.nx; ++x)
          g.at(x, y, z) += amp * std::cos(2.0 * std::numbers::pi *
                                              (double(md.kx) * double(x) / double(shape.nx) +
                                               double(md.ky) * double(y) / double(shape.ny) +
                                               double(md.kz) * double(z) / double(shape.nz)) +
                                          phase);
  }
  double peak = 0.0;
  for (double v : g.data()) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : g.data()) v /= peak;
  return g;
}

Volume3D apply_b1_bias(const Volume3D& x, const DegradeSpec& spec) {
  spec.validate();
  if (spec.bias_amp == 0.0) return x;
  const Volume3D g = bias_field(x.shape(), spec);
  Volume3D out = x;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(x[i] * (1.0 + spec.bias_amp * g[i]), 0.0, 1.0);
  return out;
}

std::size_t test_count(std::size_t n) {
  return std::max<std::size_t>(1, std::size_t(std::llround(0.2 * double(n))));
}

PairedDataset make_paired_dataset(std::size_t n, Shape shape,
                                  const std::vector<std::string>& transitions, std::uint64_t seed,
                                  const std::vector<Modality>& modalities,
                                  const PhantomSpec& phantom_defaults) {
  if (n < 1) throw InvalidArgument("make_paired_dataset: n must be >= 1");
  if (transitions.empty() || modalities.empty())
    throw InvalidArgument("make_paired_dataset: need at least one task and modality");
  PairedDataset ds;
  for (std::size_t ti = 0; ti < transitions.size(); ++ti) {
    const std::string& tr = transitions[ti];
    if (tr != kLowfieldTransition && tr != kUltrahighTransition)
      throw InvalidArgument("unknown transition '" + tr + "'");
    const std::size_t n_test = test_count(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Modality mod = modalities[i % modalities.size()];
      const FieldTask task = tr == kLowfieldTransition ? FieldTask::lowfield(mod)
                                                       : FieldTask::ultrahigh(mod);
      const std::uint64_t base = splitmix(seed ^ splitmix(ti * 1000003ULL + i));
      PhantomSpec ps = phantom_defaults;
      ps.shape = shape;
      ps.seed = splitmix(base + 1);
      const Volume3D clean = make_phantom(ps);

      DegradeSpec deg = DegradeSpec::for_task(task, splitmix(base + 2));
      PairedItem item{tr + "_" + std::to_string(1000 + i).substr(1), {}, {}, task};
      if (task.source() == Field::mT64) {
        item.hf = clean;
        item.lf = degrade_lowfield(clean, deg);
      } else {
        DegradeSpec bias = deg;
        bias.seed = splitmix(base + 3);
        item.hf = apply_b1_bias(clean, bias);
        item.lf = degrade_lowfield(clean, deg);
      }
      (i + n_test < n ? ds.train : ds.test).push_back(ds.items.size());
      ds.items.push_back(std::move(item));
    }
  }
  return ds;
}

}  // namespace unifield
