#pragma once

#include <string>
#include <vector>

#include "unifield/task.hpp"
#include "unifield/volume.hpp"

namespace unifield {

/// A voxel-aligned (low-field input, high-field target) pair.
struct PairedItem {
  std::string id;
  Volume3D lf;
  Volume3D hf;
  FieldTask task;
};

}  // namespace unifield
