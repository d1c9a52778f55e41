#include "unifield/fasrm.hpp"

#include <cmath>
#include <iostream>

#include "unifield/fourier.hpp"

namespace unifield {

namespace {

double centered(std::size_t k, std::size_t n) {
  return k <= n / 2 ? double(k) : double(k) - double(n);
}

struct Prepared {
  Spectrum3D diff;
  BandWeights w;
};

Prepared prepare(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                 const FasrmConfig& cfg, const BandSpec& bands) {
  require_same_shape(v_pred.shape(), v_target.shape(), "fasfl");
  require_same_shape(v_pred.shape(), bands.shape(), "fasfl bands");
  Volume3D d(v_pred.shape(), v_pred.spacing());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = v_pred[i] - v_target[i];
  // The DFT is linear, so transforming the difference equals F_pred - F_target.
  return {dft3_forward(d), cfg.weights_for(task)};
}

LossBreakdown loss_from(const Prepared& p, const Volume3D& v_pred, const Volume3D& v_target,
                        const FasrmConfig& cfg, const BandSpec& bands) {
  LossBreakdown out;
  const std::size_t n = v_pred.size();
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) l1 += std::abs(v_pred[i] - v_target[i]);
  out.spatial_l1 = l1 / double(n);

  std::array<double, kNumBands> acc{};
  const double expo = 1.0 + cfg.alpha / 2.0;  // |D|^alpha * |D|^2 = (|D|^2)^(1 + alpha/2)
  for (std::size_t i = 0; i < n; ++i) {
    const double mag2 = std::norm(p.diff[i]);
    if (mag2 > 0.0) acc[bands.band_of(i)] += std::pow(mag2, expo);
  }
  double freq = 0.0;
  for (std::size_t b = 0; b < kNumBands; ++b) {
    const std::size_t cnt = bands.count(static_cast<Band>(b));
    out.freq_per_band[b] = cnt ? p.w[b] / double(cnt) * acc[b] : 0.0;
    freq += out.freq_per_band[b];
  }
  out.total = cfg.lambda_spat * out.spatial_l1 + cfg.lambda_freq * freq;
  return out;
}

Volume3D grad_from(Prepared& p, const Volume3D& v_pred, const Volume3D& v_target,
                   const FasrmConfig& cfg, const BandSpec& bands) {
  const std::size_t n = v_pred.size();
  Volume3D g(v_pred.shape(), v_pred.spacing());
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v_pred[i] - v_target[i];
    g[i] = cfg.lambda_spat * double((d > 0.0) - (d < 0.0)) / double(n);
  }
  if (cfg.lambda_freq == 0.0) return g;

  // d/dD of |D|^(2+alpha) with the focal factor frozen is 2 |D|^alpha D;
  // letting it carry gradient gives (2 + alpha) |D|^alpha D.
  const double lead = cfg.focal_gradient ? 2.0 + cfg.alpha : 2.0;
  std::array<double, kNumBands> band_scale{};
  for (std::size_t b = 0; b < kNumBands; ++b) {
    const std::size_t cnt = bands.count(static_cast<Band>(b));
    band_scale[b] = cnt ? p.w[b] / double(cnt) : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::abs(p.diff[i]);
    double focal = 1.0;
    if (cfg.alpha != 0.0) {
      if (mag == 0.0 && cfg.alpha < 0.0)
        throw InvalidArgument("fasfl_gradient: focal weight |D|^alpha is singular at D = 0 "
                              "for alpha < 0");
      focal = std::pow(mag, cfg.alpha);
    }
    p.diff[i] *= lead * band_scale[bands.band_of(i)] * focal;
  }
  // The orthonormal DFT is unitary, so the adjoint of the forward map is the
  // inverse transform; the real part is the gradient w.r.t. the real input.
  const Spectrum3D back = dft3_inverse_complex(p.diff);
  for (std::size_t i = 0; i < n; ++i) g[i] += cfg.lambda_freq * back[i].real();
  return g;
}

}  // namespace

BandSpec::BandSpec(Shape shape, double r1, double r2) : shape_(shape), r1_(r1), r2_(r2) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < 1.0))
    throw InvalidArgument("band cutoffs must satisfy 0 < r1 < r2 < 1");
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1)
    throw InvalidArgument("band shape must be positive, got " + shape.str());
  labels_.resize(shape.size());
  for (std::size_t z = 0; z < shape.nz; ++z)
    for (std::size_t y = 0; y < shape.ny; ++y)
      for (std::size_t x = 0; x < shape.nx; ++x) {
        const double r = radius(shape, x, y, z);
        const Band b = r < r1 ? kLow : r < r2 ? kMid : kHigh;
        labels_[flatten(shape, x, y, z)] = b;
        ++counts_[b];
      }
}

double BandSpec::radius(const Shape& shape, std::size_t kx, std::size_t ky, std::size_t kz) {
  const double fx = centered(kx, shape.nx), fy = centered(ky, shape.ny),
               fz = centered(kz, shape.nz);
  const double mx = shape.nx / 2.0, my = shape.ny / 2.0, mz = shape.nz / 2.0;
  return std::sqrt(fx * fx + fy * fy + fz * fz) / std::sqrt(mx * mx + my * my + mz * mz);
}

std::vector<std::uint8_t> BandSpec::mask(Band b) const {
  std::vector<std::uint8_t> m(labels_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = labels_[i] == b;
  return m;
}

BandSpec build_bands(Shape shape, double r1, double r2) { return BandSpec(shape, r1, r2); }

BandWeights FasrmConfig::weights_for(const FieldTask& task) const {
  const auto it = weights.find(task.transition());
  if (it != weights.end()) return it->second;
  std::cerr << "warning: no band weights configured for " << task.transition()
            << ", using uniform (1/3, 1/3, 1/3)\n";
  return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
}

void FasrmConfig::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(lambda_spat) || !ok(lambda_freq))
    throw InvalidArgument("fasrm lambdas must be nonnegative and finite");
  if (!std::isfinite(alpha)) throw InvalidArgument("fasrm.alpha must be finite");
  if (!(cutoffs[0] > 0.0 && cutoffs[0] < cutoffs[1] && cutoffs[1] < 1.0))
    throw InvalidArgument("fasrm.cutoffs must satisfy 0 < r1 < r2 < 1");
  for (const auto& [key, w] : weights)
    for (double x : w)
      if (!ok(x)) throw InvalidArgument("fasrm.weights." + key + " must be nonnegative and finite");
}

LossBreakdown fasfl_loss(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                         const FasrmConfig& cfg, const BandSpec& bands) {
  const Prepared p = prepare(v_pred, v_target, task, cfg, bands);
  return loss_from(p, v_pred, v_target, cfg, bands);
}

Volume3D fasfl_gradient(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                        const FasrmConfig& cfg, const BandSpec& bands) {
  Prepared p = prepare(v_pred, v_target, task, cfg, bands);
  return grad_from(p, v_pred, v_target, cfg, bands);
}

FasflEval fasfl_evaluate(const Volume3D& v_pred, const Volume3D& v_target, const FieldTask& task,
                         const FasrmConfig& cfg, const BandSpec& bands) {
  Prepared p = prepare(v_pred, v_target, task, cfg, bands);
  LossBreakdown loss = loss_from(p, v_pred, v_target, cfg, bands);
  return {loss, grad_from(p, v_pred, v_target, cfg, bands)};
}

}  // namespace unifield
