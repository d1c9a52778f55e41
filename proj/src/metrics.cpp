#include "unifield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace unifield {

namespace {

double mse(const Volume3D& a, const Volume3D& b) {
  require_same_shape(a.shape(), b.shape(), "metrics");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / double(a.size());
}

// Sliding sum of `w` consecutive samples along one axis; the axis shrinks to
// n - w + 1. Each output is summed left to right, independent of threading.
std::vector<double> box_axis(const std::vector<double>& in, Shape& s, int axis, std::size_t w,
                             bool par) {
  Shape o = s;
  const std::size_t n_out = s[axis] - w + 1;
  if (axis == 0) o.nx = n_out;
  if (axis == 1) o.ny = n_out;
  if (axis == 2) o.nz = n_out;
  std::vector<double> out(o.size());
  const std::size_t in_stride = axis == 0 ? 1 : axis == 1 ? s.nx : s.nx * s.ny;
  const long long nz = static_cast<long long>(o.nz);
#pragma omp parallel for schedule(static) if (par)
  for (long long zi = 0; zi < nz; ++zi) {
    const auto z = static_cast<std::size_t>(zi);
    for (std::size_t y = 0; y < o.ny; ++y)
      for (std::size_t x = 0; x < o.nx; ++x) {
        const double* p = in.data() + flatten(s, x, y, z);
        double acc = 0.0;
        for (std::size_t k = 0; k < w; ++k) acc += p[k * in_stride];
        out[flatten(o, x, y, z)] = acc;
      }
  }
  s = o;
  return out;
}

}  // namespace

double nrmse(const Volume3D& pred, const Volume3D& gt) {
  const double range = gt.max() - gt.min();
  if (!(range > 0.0)) throw InvalidArgument("nrmse: ground truth is constant");
  return 100.0 * std::sqrt(mse(pred, gt)) / range;
}

double psnr(const Volume3D& pred, const Volume3D& gt, double data_range) {
  if (!(data_range > 0.0)) throw InvalidArgument("psnr: data_range must be positive");
  const double m = mse(pred, gt);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / m);
}

double ssim(const Volume3D& pred, const Volume3D& gt, const SsimParams& params, Exec exec) {
  require_same_shape(pred.shape(), gt.shape(), "ssim");
  const std::size_t w = params.window;
  if (w == 0 || w % 2 == 0) throw InvalidArgument("ssim: window must be odd");
  const Shape& s = pred.shape();
  if (s.nx < w || s.ny < w || s.nz < w)
    throw InvalidArgument("ssim: every dimension must be >= window " + std::to_string(w) +
                          ", got " + s.str());
  const bool par = exec == Exec::Parallel;
  const std::size_t n = s.size();

  std::vector<double> ch[5];
  for (auto& c : ch) c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pred[i], y = gt[i];
    ch[0][i] = x;
    ch[1][i] = y;
    ch[2][i] = x * x;
    ch[3][i] = y * y;
    ch[4][i] = x * y;
  }
  Shape o = s;
  for (auto& c : ch) {
    Shape cur = s;
    for (int axis = 0; axis < 3; ++axis) c = box_axis(c, cur, axis, w, par);
    o = cur;
  }

  const double inv = 1.0 / double(w * w * w);
  const double c1 = (params.k1 * params.data_range) * (params.k1 * params.data_range);
  const double c2 = (params.k2 * params.data_range) * (params.k2 * params.data_range);
  std::vector<double> slice_sum(o.nz, 0.0);
  const std::size_t plane = o.nx * o.ny;
  const long long nz = static_cast<long long>(o.nz);
#pragma omp parallel for schedule(static) if (par)
  for (long long zi = 0; zi < nz; ++zi) {
    double acc = 0.0;
    for (std::size_t i = std::size_t(zi) * plane; i < std::size_t(zi + 1) * plane; ++i) {
      const double mx = ch[0][i] * inv, my = ch[1][i] * inv;
      const double vx = ch[2][i] * inv - mx * mx;
      const double vy = ch[3][i] * inv - my * my;
      const double cxy = ch[4][i] * inv - mx * my;
      acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
             ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    slice_sum[std::size_t(zi)] = acc;
  }
  double total = 0.0;
  for (double v : slice_sum) total += v;
  return 100.0 * total / double(o.size());
}

MetricsReport evaluate_metrics(const Volume3D& pred, const Volume3D& gt) {
  return {nrmse(pred, gt), psnr(pred, gt), ssim(pred, gt)};
}

}  // namespace unifield
