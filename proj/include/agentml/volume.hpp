#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "agentml/nifti.hpp"

namespace agentml {

struct VolumeImage {
  std::array<size_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<double> voxels;  // x-fastest
  bool has_affine = false;
  std::array<std::array<double, 4>, 4> affine{};

  size_t index(size_t x, size_t y, size_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
  double at(size_t x, size_t y, size_t z) const {
    return voxels[index(x, y, z)];
  }
};

struct LabelMask {
  std::array<size_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<int> voxels;
  bool has_affine = false;
  std::array<std::array<double, 4>, 4> affine{};

  size_t index(size_t x, size_t y, size_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
  std::vector<int> present_labels() const;  // sorted distinct nonzero
};

VolumeImage image_from_nifti(const NiftiVolume& v);
LabelMask mask_from_nifti(const NiftiVolume& v);
NiftiVolume nifti_from_image(const VolumeImage& v);
NiftiVolume nifti_from_mask(const LabelMask& m);

// dims, spacing, and (when both carry one) affine agree within tolerance
bool geometry_matches(const VolumeImage& image, const LabelMask& mask,
                      double tol = 1e-3);

enum class Interp { Trilinear, Nearest };

// Output dims = ceil(dim * old_spacing / new_spacing) per axis; the output
// grid shares the input's physical origin and clamps at the edges.
VolumeImage resample_isotropic(const VolumeImage& image, double spacing_mm,
                               Interp interp = Interp::Trilinear);
// Masks only ever resample with nearest neighbor; trilinear is an error.
LabelMask resample_isotropic(const LabelMask& mask, double spacing_mm,
                             Interp interp = Interp::Nearest);

// filter_id in {original, gradient, squareroot, exponential, log, wavelet}.
// "log" consumes sigmas (mm) and yields one image per sigma named
// log-sigma-<sigma>mm; "wavelet" yields the 8 undecimated Haar sub-bands
// wavelet-LLL .. wavelet-HHH (first letter = x axis).
std::vector<std::pair<std::string, VolumeImage>> apply_filter(
    const VolumeImage& image, const std::string& filter_id,
    const std::vector<double>& sigmas = {});

}  // namespace agentml
