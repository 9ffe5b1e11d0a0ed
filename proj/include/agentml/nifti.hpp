#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace agentml {

// Decoded NIfTI-1 volume. Voxels are stored x-fastest as doubles with
// scl_slope/scl_inter already applied.
struct NiftiVolume {
  std::array<size_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm
  std::vector<double> voxels;
  bool has_affine = false;
  std::array<std::array<double, 4>, 4> affine{};  // voxel -> world (mm)

  size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  size_t index(size_t x, size_t y, size_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
};

// Reads .nii or .nii.gz. Supported datatype codes: 2 (u8), 4 (i16), 8 (i32),
// 16 (f32), 64 (f64). Affine priority: sform, then qform, then
// diagonal(pixdim).
NiftiVolume read_nifti(const std::string& path);

// Writes float64 voxels; gzip-compresses when the path ends in .gz.
void write_nifti(const std::string& path, const NiftiVolume& volume);

}  // namespace agentml
