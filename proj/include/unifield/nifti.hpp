#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "unifield/errors.hpp"
#include "unifield/volume.hpp"

namespace unifield {

enum class NiftiErrorKind {
  Io,
  TooSmall,
  BadSizeofHdr,
  BadMagic,
  UnsupportedDatatype,
  BadDim,
  BadPixdim,
  BadVoxOffset,
  Truncated,
};

class NiftiError : public IoError {
 public:
  NiftiError(NiftiErrorKind kind, const std::string& what) : IoError(what), kind_(kind) {}
  NiftiErrorKind kind() const { return kind_; }

 private:
  NiftiErrorKind kind_;
};

inline constexpr std::int32_t kNiftiHeaderSize = 348;
inline constexpr std::size_t kNiftiDataOffset = 352;
inline constexpr std::int16_t kNiftiFloat32 = 16;
inline constexpr std::int16_t kNiftiInt16 = 4;

/// Fields of a single-file NIfTI-1 header this library interprets. The
/// orientation block (qform/sform codes, quaternion, offsets, srows; bytes
/// 252..327) is kept verbatim so read-modify-write does not lose it.
struct NiftiHeader {
  std::int32_t sizeof_hdr = kNiftiHeaderSize;
  std::array<std::int16_t, 8> dim{};
  std::int16_t datatype = kNiftiFloat32;
  std::int16_t bitpix = 32;
  std::array<float, 8> pixdim{};
  float vox_offset = float(kNiftiDataOffset);
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::array<char, 4> magic{'n', '+', '1', '\0'};
  bool byte_swapped = false;
  std::array<std::uint8_t, 76> orientation{};
};

struct NiftiVolume {
  Volume3D volume;
  NiftiHeader header;
};

NiftiVolume parse_nifti(std::span<const std::uint8_t> bytes);
NiftiVolume read_nifti(const std::filesystem::path& path);

/// Little-endian float32 single-file image, vox_offset 352, unit scaling.
/// With `orientation_from`, its orientation block is copied into the output.
std::vector<std::uint8_t> encode_nifti(const Volume3D& v,
                                       const NiftiHeader* orientation_from = nullptr);
void write_nifti(const Volume3D& v, const std::filesystem::path& path,
                 const NiftiHeader* orientation_from = nullptr);

}  // namespace unifield
