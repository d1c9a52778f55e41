#include "unifield/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace unifield {

namespace {

// Header byte offsets (NIfTI-1).
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffOrientation = 252;
constexpr std::size_t kOffMagic = 344;

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, bool swap) : b_(b), swap_(swap) {}

  std::uint32_t u32(std::size_t off) const {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const int shift = swap_ ? 8 * (3 - i) : 8 * i;
      v |= std::uint32_t(b_[off + i]) << shift;
    }
    return v;
  }
  std::uint16_t u16(std::size_t off) const {
    return swap_ ? std::uint16_t(b_[off] << 8 | b_[off + 1])
                 : std::uint16_t(b_[off + 1] << 8 | b_[off]);
  }
  std::int32_t i32(std::size_t off) const { return std::bit_cast<std::int32_t>(u32(off)); }
  std::int16_t i16(std::size_t off) const { return std::bit_cast<std::int16_t>(u16(off)); }
  float f32(std::size_t off) const { return std::bit_cast<float>(u32(off)); }

 private:
  std::span<const std::uint8_t> b_;
  bool swap_;
};

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = std::uint8_t(v >> (8 * i));
}
void put_i16(std::uint8_t* p, std::int16_t v) {
  const auto u = std::bit_cast<std::uint16_t>(v);
  p[0] = std::uint8_t(u);
  p[1] = std::uint8_t(u >> 8);
}
void put_f32(std::uint8_t* p, float v) { put_u32(p, std::bit_cast<std::uint32_t>(v)); }

[[noreturn]] void fail(NiftiErrorKind kind, const std::string& what) {
  throw NiftiError(kind, "nifti: " + what);
}

}  // namespace

NiftiVolume parse_nifti(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kNiftiDataOffset)
    fail(NiftiErrorKind::TooSmall, "file has " + std::to_string(bytes.size()) +
                                       " bytes, need at least 352");
  NiftiHeader h;
  if (Reader(bytes, false).i32(0) == kNiftiHeaderSize) {
    h.byte_swapped = false;
  } else if (Reader(bytes, true).i32(0) == kNiftiHeaderSize) {
    h.byte_swapped = true;
  } else {
    fail(NiftiErrorKind::BadSizeofHdr, "sizeof_hdr is not 348 in either byte order");
  }
  const Reader r(bytes, h.byte_swapped);

  std::memcpy(h.magic.data(), bytes.data() + kOffMagic, 4);
  if (std::memcmp(h.magic.data(), "n+1\0", 4) != 0)
    fail(NiftiErrorKind::BadMagic, "magic is not \"n+1\" (only single-file .nii is supported)");

  for (int i = 0; i < 8; ++i) h.dim[i] = r.i16(kOffDim + 2 * i);
  const int rank = h.dim[0];
  if (rank < 1 || rank > 7) fail(NiftiErrorKind::BadDim, "dim[0] = " + std::to_string(rank));
  for (int i = 1; i <= rank; ++i) {
    if (h.dim[i] < 1)
      fail(NiftiErrorKind::BadDim, "dim[" + std::to_string(i) + "] = " + std::to_string(h.dim[i]));
    if (i > 3 && h.dim[i] != 1)
      fail(NiftiErrorKind::BadDim, "dim[" + std::to_string(i) + "] = " +
                                       std::to_string(h.dim[i]) + " (only 3D volumes)");
  }

  h.datatype = r.i16(kOffDatatype);
  h.bitpix = r.i16(kOffBitpix);
  std::size_t bytes_per = 0;
  if (h.datatype == kNiftiFloat32) bytes_per = 4;
  else if (h.datatype == kNiftiInt16) bytes_per = 2;
  else fail(NiftiErrorKind::UnsupportedDatatype, "datatype " + std::to_string(h.datatype));

  for (int i = 0; i < 8; ++i) h.pixdim[i] = r.f32(kOffPixdim + 4 * i);
  Shape shape;
  double sp[3] = {1.0, 1.0, 1.0};
  std::size_t ext[3] = {1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    if (a + 1 > rank) continue;
    ext[a] = std::size_t(h.dim[a + 1]);
    const float p = h.pixdim[a + 1];
    if (!(p > 0.0f) || !std::isfinite(p))
      fail(NiftiErrorKind::BadPixdim, "pixdim[" + std::to_string(a + 1) + "] = " +
                                          std::to_string(p));
    sp[a] = double(p);
  }
  shape = {ext[0], ext[1], ext[2]};

  h.vox_offset = r.f32(kOffVoxOffset);
  if (!std::isfinite(h.vox_offset) || h.vox_offset < float(kNiftiDataOffset) ||
      double(h.vox_offset) > double(bytes.size()) || h.vox_offset != std::floor(h.vox_offset))
    fail(NiftiErrorKind::BadVoxOffset, "vox_offset = " + std::to_string(h.vox_offset));
  const auto offset = static_cast<std::size_t>(h.vox_offset);

  const std::size_t count = shape.size();
  if (count > (bytes.size() - offset) / bytes_per)
    fail(NiftiErrorKind::Truncated, "data section holds fewer than " + std::to_string(count) +
                                        " voxels");

  h.scl_slope = r.f32(kOffSclSlope);
  h.scl_inter = r.f32(kOffSclInter);
  const double slope = (h.scl_slope == 0.0f || !std::isfinite(h.scl_slope)) ? 1.0 : h.scl_slope;
  const double inter = std::isfinite(h.scl_inter) ? h.scl_inter : 0.0;
  std::memcpy(h.orientation.data(), bytes.data() + kOffOrientation, h.orientation.size());

  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double raw = bytes_per == 4 ? double(r.f32(offset + 4 * i)) : double(r.i16(offset + 2 * i));
    data[i] = raw * slope + inter;
  }
  return {Volume3D(shape, Spacing{sp[0], sp[1], sp[2]}, std::move(data)), h};
}

NiftiVolume read_nifti(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(NiftiErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_nifti(bytes);
  } catch (const NiftiError& e) {
    throw NiftiError(e.kind(), std::string(e.what()) + " [" + path.string() + "]");
  }
}

std::vector<std::uint8_t> encode_nifti(const Volume3D& v, const NiftiHeader* orientation_from) {
  const Shape& s = v.shape();
  for (std::size_t n : {s.nx, s.ny, s.nz})
    if (n > 32767) throw InvalidArgument("nifti: extent " + std::to_string(n) + " exceeds int16");
  std::vector<std::uint8_t> out(kNiftiDataOffset + 4 * v.size(), 0);
  std::uint8_t* h = out.data();
  put_u32(h, kNiftiHeaderSize);
  const std::int16_t dims[8] = {3, std::int16_t(s.nx), std::int16_t(s.ny), std::int16_t(s.nz),
                                1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put_i16(h + kOffDim + 2 * i, dims[i]);
  put_i16(h + kOffDatatype, kNiftiFloat32);
  put_i16(h + kOffBitpix, 32);
  const float pix[8] = {1.0f, float(v.spacing().sx), float(v.spacing().sy), float(v.spacing().sz),
                        1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) put_f32(h + kOffPixdim + 4 * i, pix[i]);
  put_f32(h + kOffVoxOffset, float(kNiftiDataOffset));
  put_f32(h + kOffSclSlope, 1.0f);
  put_f32(h + kOffSclInter, 0.0f);
  h[kOffXyztUnits] = 2;  // millimeters
  if (orientation_from)
    std::memcpy(h + kOffOrientation, orientation_from->orientation.data(),
                orientation_from->orientation.size());
  std::memcpy(h + kOffMagic, "n+1\0", 4);
  for (std::size_t i = 0; i < v.size(); ++i)
    put_f32(h + kNiftiDataOffset + 4 * i, static_cast<float>(v[i]));
  return out;
}

void write_nifti(const Volume3D& v, const std::filesystem::path& path,
                 const NiftiHeader* orientation_from) {
  const auto bytes = encode_nifti(v, orientation_from);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(NiftiErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!os) fail(NiftiErrorKind::Io, "write failed for " + path.string());
}

}  // namespace unifield
