#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "unifield/task.hpp"
#include "unifield/volume.hpp"

namespace unifield {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitIo = 4;

struct ManifestRow {
  std::string id;
  std::string split;  // "train" or "test"
  FieldTask task;
  std::filesystem::path lf_path, hf_path;  // relative to the manifest directory
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// Binary 8-bit PGM of the axial slice z = nz / 2; values clamp to [0, 1]
/// and map to round(255 v).
std::string encode_mid_slice_pgm(const Volume3D& v);

/// Seed used to enhance one dataset volume during evaluation.
std::uint64_t volume_seed(std::uint64_t seed, const std::string& id);

/// Parses argv and runs one subcommand, mapping failures onto the exit codes
/// above. Messages go to `out` / `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace unifield
