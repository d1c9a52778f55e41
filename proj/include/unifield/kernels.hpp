#pragma once

#include <span>

#include "unifield/fourier.hpp"
#include "unifield/volume.hpp"

// 3x3x3 "same" convolution kernels with zero padding.
//
// Layouts: activations are channel-major [c][voxel], weights are
// [cout][cin][27] with tap t = (dx+1) + 3*((dy+1) + 3*(dz+1)).
// The blocked kernels parallelize over channels only, so every output value
// is summed in the same order as in the reference loops and results are
// bitwise identical across thread counts.
namespace unifield::kernels {

struct ConvDims {
  std::size_t cin, cout;
  Shape shape;
};

void conv3d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out, Exec exec = Exec::Parallel);

/// Accumulates dL/din (+=) from dL/dout.
void conv3d_backward_input(const ConvDims& d, std::span<const double> w,
                           std::span<const double> dout, std::span<double> din,
                           Exec exec = Exec::Parallel);

/// Accumulates dL/dw and dL/db (+=).
void conv3d_backward_params(const ConvDims& d, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dw,
                            std::span<double> db, Exec exec = Exec::Parallel);

namespace reference {

// Voxel-at-a-time loops with explicit bounds checks. Slow; kept for testing.
void conv3d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out);
void conv3d_backward_input(const ConvDims& d, std::span<const double> w,
                           std::span<const double> dout, std::span<double> din);
void conv3d_backward_params(const ConvDims& d, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dw,
                            std::span<double> db);

}  // namespace reference

}  // namespace unifield::kernels
