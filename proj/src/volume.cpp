#include "unifield/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace unifield {

namespace {

void validate(const Shape& shape, const Spacing& spacing) {
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1)
    throw InvalidArgument("volume shape must be positive, got " + shape.str());
  for (double s : {spacing.sx, spacing.sy, spacing.sz}) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw InvalidArgument("voxel spacing must be positive and finite");
  }
}

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(nx) + "," + std::to_string(ny) + "," + std::to_string(nz) + ")";
}

Volume3D::Volume3D(Shape shape, Spacing spacing, double fill)
    : shape_(shape), spacing_(spacing) {
  validate(shape, spacing);
  data_.assign(shape.size(), fill);
}

Volume3D::Volume3D(Shape shape, Spacing spacing, std::vector<double> data)
    : shape_(shape), spacing_(spacing), data_(std::move(data)) {
  validate(shape, spacing);
  if (data_.size() != shape.size())
    throw InvalidArgument("volume data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape.str());
}

void Volume3D::set_spacing(Spacing spacing) {
  validate(shape_, spacing);
  spacing_ = spacing;
}

double Volume3D::min() const { return *std::min_element(data_.begin(), data_.end()); }
double Volume3D::max() const { return *std::max_element(data_.begin(), data_.end()); }
double Volume3D::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

bool Volume3D::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Volume3D new_volume(Shape shape, Spacing spacing, double fill) {
  return Volume3D(shape, spacing, fill);
}

Spectrum3D::Spectrum3D(Shape shape) : shape_(shape), data_(shape.size()) {
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1)
    throw InvalidArgument("spectrum shape must be positive, got " + shape.str());
}

Spectrum3D::Spectrum3D(Shape shape, std::vector<value_type> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape.size())
    throw InvalidArgument("spectrum data length does not match shape " + shape.str());
}

Spectrum3D::Spectrum3D(const Volume3D& real) : shape_(real.shape()), data_(real.size()) {
  auto src = real.data();
  std::copy(src.begin(), src.end(), data_.begin());
}

Spectrum3D::value_type Spectrum3D::at_negated(std::size_t x, std::size_t y, std::size_t z) const {
  auto neg = [](std::size_t k, std::size_t n) { return (n - k % n) % n; };
  return at(neg(x, shape_.nx), neg(y, shape_.ny), neg(z, shape_.nz));
}

double Spectrum3D::max_abs_imag() const {
  double m = 0.0;
  for (const auto& c : data_) m = std::max(m, std::abs(c.imag()));
  return m;
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    throw InvalidArgument(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

double linf_distance(const Volume3D& a, const Volume3D& b) {
  require_same_shape(a.shape(), b.shape(), "linf_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double linf_distance(const Spectrum3D& a, const Spectrum3D& b) {
  require_same_shape(a.shape(), b.shape(), "linf_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace unifield
