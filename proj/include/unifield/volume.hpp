#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "unifield/errors.hpp"

namespace unifield {

struct Shape {
  std::size_t nx = 1, ny = 1, nz = 1;

  std::size_t size() const { return nx * ny * nz; }
  std::size_t operator[](int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Voxel spacing in millimeters.
struct Spacing {
  double sx = 1.0, sy = 1.0, sz = 1.0;

  bool operator==(const Spacing&) const = default;
};

struct Index3 {
  std::size_t x, y, z;
  bool operator==(const Index3&) const = default;
};

/// Storage order is x-fastest: i = x + nx * (y + ny * z).
inline std::size_t flatten(const Shape& s, std::size_t x, std::size_t y, std::size_t z) {
  return x + s.nx * (y + s.ny * z);
}

inline Index3 unflatten(const Shape& s, std::size_t i) {
  return {i % s.nx, (i / s.nx) % s.ny, i / (s.nx * s.ny)};
}

/// Dense real scalar volume with voxel spacing.
class Volume3D {
 public:
  Volume3D() = default;
  Volume3D(Shape shape, Spacing spacing, double fill = 0.0);
  Volume3D(Shape shape, Spacing spacing, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  const Spacing& spacing() const { return spacing_; }
  void set_spacing(Spacing spacing);
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t x, std::size_t y, std::size_t z) { return data_[flatten(shape_, x, y, z)]; }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[flatten(shape_, x, y, z)];
  }

  double min() const;
  double max() const;
  double sum() const;
  bool all_finite() const;

 private:
  Shape shape_;
  Spacing spacing_;
  std::vector<double> data_;
};

Volume3D new_volume(Shape shape, Spacing spacing, double fill);

/// Full (non-packed) complex spectrum of a volume.
class Spectrum3D {
 public:
  using value_type = std::complex<double>;

  Spectrum3D() = default;
  explicit Spectrum3D(Shape shape);
  Spectrum3D(Shape shape, std::vector<value_type> data);
  explicit Spectrum3D(const Volume3D& real);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<value_type> data() { return data_; }
  std::span<const value_type> data() const { return data_; }

  value_type& operator[](std::size_t i) { return data_[i]; }
  const value_type& operator[](std::size_t i) const { return data_[i]; }
  value_type at(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[flatten(shape_, x, y, z)];
  }
  /// Value at the frequency -k (indices taken modulo the shape).
  value_type at_negated(std::size_t x, std::size_t y, std::size_t z) const;

  /// Largest |imag| over all entries.
  double max_abs_imag() const;

 private:
  Shape shape_;
  std::vector<value_type> data_;
};

void require_same_shape(const Shape& a, const Shape& b, const char* what);

double linf_distance(const Volume3D& a, const Volume3D& b);
double linf_distance(const Spectrum3D& a, const Spectrum3D& b);

}  // namespace unifield
