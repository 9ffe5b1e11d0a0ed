#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace agentml {

struct RoiVoxel {
  int x = 0, y = 0, z = 0;
  bool operator<(const RoiVoxel& o) const {
    if (z != o.z) return z < o.z;
    if (y != o.y) return y < o.y;
    return x < o.x;
  }
  bool operator==(const RoiVoxel& o) const {
    return x == o.x && y == o.y && z == o.z;
  }
};

// Gray-level discretization of a region of interest.
// level(v) = floor((v - min) / bin_width) + 1, the maximum clamped into the
// last level; n_levels = max(1, ceil((max - min) / bin_width)).
struct DiscretizedRoi {
  std::vector<RoiVoxel> coords;
  std::vector<int> levels;  // 1..n_levels, parallel to coords
  int n_levels = 1;
  double bin_width = 25.0;
  double roi_min = 0.0;
};

DiscretizedRoi discretize(const std::vector<RoiVoxel>& coords,
                          const std::vector<double>& intensities,
                          double bin_width);

enum class TextureMode { ThreeD, TwoDSlicewise };

// 19 features: energy, total_energy, entropy, uniformity, minimum, p10, mean,
// median, p90, maximum, iqr, range, mad, rmad, rms, variance, sd, skewness,
// kurtosis. Entropy/uniformity use the discretized levels (log base 2);
// variance/sd/skewness/kurtosis are population moments, kurtosis excess.
std::map<std::string, double> first_order_features(
    const std::vector<double>& intensities, const DiscretizedRoi& roi,
    double voxel_volume);

// 9 descriptors from the binary label geometry: mesh-free, with surface area
// by exposed-face counting and axis lengths from the physical-coordinate
// covariance eigenvalues. Degenerate shapes define elongation/flatness as 1.
std::map<std::string, double> shape_features(
    const std::vector<RoiVoxel>& voxels,
    const std::array<double, 3>& spacing);

// Texture families. 2D slice-wise mode computes per-slice (fixed z) matrices
// over slices intersecting the ROI and averages features unweighted.
std::map<std::string, double> glcm_features(const DiscretizedRoi& roi,
                                            int distance = 1,
                                            TextureMode mode = TextureMode::ThreeD);
std::map<std::string, double> glrlm_features(const DiscretizedRoi& roi,
                                             TextureMode mode = TextureMode::ThreeD);
std::map<std::string, double> glszm_features(const DiscretizedRoi& roi,
                                             TextureMode mode = TextureMode::ThreeD);
std::map<std::string, double> gldm_features(const DiscretizedRoi& roi,
                                            int alpha = 0,
                                            TextureMode mode = TextureMode::ThreeD);
std::map<std::string, double> ngtdm_features(const DiscretizedRoi& roi,
                                             TextureMode mode = TextureMode::ThreeD);

// Sentinel returned when a feature's denominator degenerates (for example
// NGTDM coarseness on a constant region).
constexpr double kDegenerateSentinel = 1e6;

}  // namespace agentml
