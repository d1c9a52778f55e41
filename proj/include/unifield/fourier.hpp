#pragma once

#include <complex>
#include <vector>

#include "unifield/volume.hpp"

namespace unifield {

enum class Exec { Serial, Parallel };

/// Precomputed per-axis tables for the orthonormal 3D DFT of one shape.
///
/// Power-of-two axes run an iterative radix-2 transform; any other length
/// falls back to a direct per-line DFT. Every 1D stage is scaled by 1/sqrt(n)
/// so forward and inverse are adjoint and Parseval holds exactly.
class FftPlan {
 public:
  explicit FftPlan(Shape shape);

  const Shape& shape() const { return shape_; }
  static constexpr bool orthonormal() { return true; }

  void forward_inplace(Spectrum3D& s, Exec exec = Exec::Parallel) const;
  void inverse_inplace(Spectrum3D& s, Exec exec = Exec::Parallel) const;

  Spectrum3D forward(const Volume3D& v, Exec exec = Exec::Parallel) const;
  Spectrum3D inverse_complex(const Spectrum3D& s, Exec exec = Exec::Parallel) const;

 private:
  struct Axis {
    std::size_t n = 1;
    bool pow2 = true;
    std::vector<std::complex<double>> roots;  // exp(-2*pi*i*k/n), k < n
    std::vector<std::size_t> bitrev;
  };

  void transform(Spectrum3D& s, bool inverse, Exec exec) const;
  void transform_line(const Axis& ax, std::complex<double>* line, bool inverse,
                      std::vector<std::complex<double>>& scratch) const;

  Shape shape_;
  Axis axes_[3];
};

Spectrum3D dft3_forward(const Volume3D& v);

/// Inverse orthonormal DFT keeping only the real part. If `max_imag` is given
/// it receives the largest discarded imaginary magnitude.
Volume3D dft3_inverse(const Spectrum3D& s, Spacing spacing = {}, double* max_imag = nullptr);

/// Complex-valued inverse, for callers that need the full result.
Spectrum3D dft3_inverse_complex(const Spectrum3D& s);

/// Direct-summation orthonormal DFT used as a test oracle. O(N^2).
Spectrum3D naive_dft3(const Spectrum3D& s, bool inverse);
Spectrum3D naive_dft3(const Volume3D& v, bool inverse);

inline constexpr std::size_t kNaiveDftMaxVoxels = 32768;

}  // namespace unifield
