#pragma once

#include "unifield/fourier.hpp"
#include "unifield/volume.hpp"

namespace unifield {

struct MetricsReport {
  double nrmse_pct = 0.0;
  double psnr_db = 0.0;  // +inf for identical volumes
  double ssim_pct = 0.0;
};

/// 100 * RMSE / (max(gt) - min(gt)). Throws for a constant ground truth.
double nrmse(const Volume3D& pred, const Volume3D& gt);

/// 10 * log10(range^2 / MSE); +inf when MSE == 0.
double psnr(const Volume3D& pred, const Volume3D& gt, double data_range = 1.0);

struct SsimParams {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean 3D SSIM over every position where a uniform cubic window fits,
/// with population (1/N) window moments, reported in percent.
double ssim(const Volume3D& pred, const Volume3D& gt, const SsimParams& params = {},
            Exec exec = Exec::Parallel);

MetricsReport evaluate_metrics(const Volume3D& pred, const Volume3D& gt);

}  // namespace unifield
