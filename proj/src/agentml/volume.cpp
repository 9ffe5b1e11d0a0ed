#include "agentml/volume.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "agentml/util.hpp"

namespace agentml {

namespace {

template <typename Vol, typename Src>
void copy_geometry(Vol& dst, const Src& src) {
  dst.dims = src.dims;
  dst.spacing = src.spacing;
  dst.has_affine = src.has_affine;
  dst.affine = src.affine;
}

}  // namespace

std::vector<int> LabelMask::present_labels() const {
  std::set<int> s;
  for (int v : voxels) {
    if (v > 0) s.insert(v);
  }
  return {s.begin(), s.end()};
}

VolumeImage image_from_nifti(const NiftiVolume& v) {
  VolumeImage img;
  copy_geometry(img, v);
  img.voxels = v.voxels;
  return img;
}

LabelMask mask_from_nifti(const NiftiVolume& v) {
  LabelMask m;
  copy_geometry(m, v);
  m.voxels.reserve(v.voxels.size());
  for (double x : v.voxels) {
    long r = std::lround(x);
    if (r < 0 || std::abs(x - static_cast<double>(r)) > 1e-6) {
      throw std::runtime_error("mask voxels must be non-negative integers");
    }
    m.voxels.push_back(static_cast<int>(r));
  }
  return m;
}

NiftiVolume nifti_from_image(const VolumeImage& v) {
  NiftiVolume n;
  copy_geometry(n, v);
  n.voxels = v.voxels;
  return n;
}

NiftiVolume nifti_from_mask(const LabelMask& m) {
  NiftiVolume n;
  copy_geometry(n, m);
  n.voxels.assign(m.voxels.begin(), m.voxels.end());
  return n;
}

bool geometry_matches(const VolumeImage& image, const LabelMask& mask,
                      double tol) {
  if (image.dims != mask.dims) return false;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(image.spacing[i] - mask.spacing[i]) > tol) return false;
  }
  if (image.has_affine && mask.has_affine) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (std::abs(image.affine[r][c] - mask.affine[r][c]) > tol) {
          return false;
        }
      }
    }
  }
  return true;
}

namespace {

std::array<size_t, 3> resampled_dims(const std::array<size_t, 3>& dims,
                                     const std::array<double, 3>& spacing,
                                     double new_spacing) {
  std::array<size_t, 3> out;
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<size_t>(std::ceil(
        static_cast<double>(dims[i]) * spacing[i] / new_spacing));
    if (out[i] == 0) out[i] = 1;
  }
  return out;
}

}  // namespace

VolumeImage resample_isotropic(const VolumeImage& image, double spacing_mm,
                               Interp interp) {
  if (spacing_mm <= 0) throw std::runtime_error("spacing must be positive");
  if (image.spacing[0] == spacing_mm && image.spacing[1] == spacing_mm &&
      image.spacing[2] == spacing_mm) {
    return image;
  }
  VolumeImage out;
  out.dims = resampled_dims(image.dims, image.spacing, spacing_mm);
  out.spacing = {spacing_mm, spacing_mm, spacing_mm};
  out.has_affine = image.has_affine;
  out.affine = image.affine;
  out.voxels.resize(out.dims[0] * out.dims[1] * out.dims[2]);
  auto clampi = [](long v, long hi) { return std::max(0L, std::min(v, hi)); };
  for (size_t z = 0; z < out.dims[2]; ++z) {
    for (size_t y = 0; y < out.dims[1]; ++y) {
      for (size_t x = 0; x < out.dims[0]; ++x) {
        double src[3];
        size_t idx[3] = {x, y, z};
        for (int a = 0; a < 3; ++a) {
          src[a] = static_cast<double>(idx[a]) * spacing_mm / image.spacing[a];
        }
        double value;
        if (interp == Interp::Nearest) {
          long xi = clampi(std::lround(src[0]), static_cast<long>(image.dims[0]) - 1);
          long yi = clampi(std::lround(src[1]), static_cast<long>(image.dims[1]) - 1);
          long zi = clampi(std::lround(src[2]), static_cast<long>(image.dims[2]) - 1);
          value = image.at(static_cast<size_t>(xi), static_cast<size_t>(yi),
                           static_cast<size_t>(zi));
        } else {
          long base[3];
          double frac[3];
          for (int a = 0; a < 3; ++a) {
            long lo = static_cast<long>(std::floor(src[a]));
            long hi = static_cast<long>(image.dims[a]) - 1;
            base[a] = clampi(lo, hi);
            frac[a] = src[a] - static_cast<double>(lo);
            if (frac[a] < 0) frac[a] = 0;
            if (frac[a] > 1) frac[a] = 1;
          }
          value = 0.0;
          for (int dz = 0; dz < 2; ++dz) {
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                long xi = clampi(base[0] + dx, static_cast<long>(image.dims[0]) - 1);
                long yi = clampi(base[1] + dy, static_cast<long>(image.dims[1]) - 1);
                long zi = clampi(base[2] + dz, static_cast<long>(image.dims[2]) - 1);
                double w = (dx ? frac[0] : 1 - frac[0]) *
                           (dy ? frac[1] : 1 - frac[1]) *
                           (dz ? frac[2] : 1 - frac[2]);
                value += w * image.at(static_cast<size_t>(xi),
                                      static_cast<size_t>(yi),
                                      static_cast<size_t>(zi));
              }
            }
          }
        }
        out.voxels[out.index(x, y, z)] = value;
      }
    }
  }
  return out;
}

LabelMask resample_isotropic(const LabelMask& mask, double spacing_mm,
                             Interp interp) {
  if (interp == Interp::Trilinear) {
    throw std::runtime_error("label masks must resample with nearest neighbor");
  }
  VolumeImage tmp;
  copy_geometry(tmp, mask);
  tmp.voxels.assign(mask.voxels.begin(), mask.voxels.end());
  VolumeImage res = resample_isotropic(tmp, spacing_mm, Interp::Nearest);
  LabelMask out;
  copy_geometry(out, res);
  out.voxels.reserve(res.voxels.size());
  for (double v : res.voxels) out.voxels.push_back(static_cast<int>(std::lround(v)));
  return out;
}

namespace {

VolumeImage like(const VolumeImage& src) {
  VolumeImage out;
  copy_geometry(out, src);
  out.voxels.assign(src.voxels.size(), 0.0);
  return out;
}

VolumeImage gradient_magnitude(const VolumeImage& img) {
  VolumeImage out = like(img);
  long nx = static_cast<long>(img.dims[0]), ny = static_cast<long>(img.dims[1]),
       nz = static_cast<long>(img.dims[2]);
  for (long z = 0; z < nz; ++z) {
    for (long y = 0; y < ny; ++y) {
      for (long x = 0; x < nx; ++x) {
        long c[3] = {x, y, z};
        long n[3] = {nx, ny, nz};
        double sum = 0.0;
        for (int a = 0; a < 3; ++a) {
          if (n[a] == 1) continue;
          long lo = c[a] > 0 ? c[a] - 1 : c[a];
          long hi = c[a] < n[a] - 1 ? c[a] + 1 : c[a];
          long p[3] = {x, y, z}, q[3] = {x, y, z};
          p[a] = hi;
          q[a] = lo;
          double d = (img.at(p[0], p[1], p[2]) - img.at(q[0], q[1], q[2])) /
                     (static_cast<double>(hi - lo) * img.spacing[a]);
          sum += d * d;
        }
        out.voxels[out.index(x, y, z)] = std::sqrt(sum);
      }
    }
  }
  return out;
}

// symmetric (reflect-including-edge) index for 1D padding
long reflect(long i, long n) {
  if (n == 1) return 0;
  long period = 2 * n;
  i = ((i % period) + period) % period;
  return i < n ? i : period - 1 - i;
}

// separable 1D convolution along one axis with symmetric padding
VolumeImage convolve_axis(const VolumeImage& img, int axis,
                          const std::vector<double>& kernel, long radius) {
  VolumeImage out = like(img);
  long n[3] = {static_cast<long>(img.dims[0]), static_cast<long>(img.dims[1]),
               static_cast<long>(img.dims[2])};
  for (long z = 0; z < n[2]; ++z) {
    for (long y = 0; y < n[1]; ++y) {
      for (long x = 0; x < n[0]; ++x) {
        long c[3] = {x, y, z};
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          long p[3] = {c[0], c[1], c[2]};
          p[axis] = reflect(c[axis] + k, n[axis]);
          acc += kernel[static_cast<size_t>(k + radius)] *
                 img.at(p[0], p[1], p[2]);
        }
        out.voxels[out.index(x, y, z)] = acc;
      }
    }
  }
  return out;
}

VolumeImage gaussian_smooth(const VolumeImage& img, double sigma_mm) {
  VolumeImage cur = img;
  for (int a = 0; a < 3; ++a) {
    double sigma_vox = sigma_mm / img.spacing[a];
    long radius = static_cast<long>(std::ceil(4.0 * sigma_vox));
    if (radius < 1) radius = 1;
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long k = -radius; k <= radius; ++k) {
      double w = std::exp(-static_cast<double>(k * k) /
                          (2.0 * sigma_vox * sigma_vox));
      kernel[static_cast<size_t>(k + radius)] = w;
      sum += w;
    }
    for (double& w : kernel) w /= sum;
    cur = convolve_axis(cur, a, kernel, radius);
  }
  return cur;
}

VolumeImage laplacian(const VolumeImage& img) {
  VolumeImage out = like(img);
  long n[3] = {static_cast<long>(img.dims[0]), static_cast<long>(img.dims[1]),
               static_cast<long>(img.dims[2])};
  for (long z = 0; z < n[2]; ++z) {
    for (long y = 0; y < n[1]; ++y) {
      for (long x = 0; x < n[0]; ++x) {
        long c[3] = {x, y, z};
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) {
          long p[3] = {x, y, z}, q[3] = {x, y, z};
          p[a] = reflect(c[a] + 1, n[a]);
          q[a] = reflect(c[a] - 1, n[a]);
          double center = img.at(x, y, z);
          acc += (img.at(p[0], p[1], p[2]) - 2.0 * center +
                  img.at(q[0], q[1], q[2])) /
                 (img.spacing[a] * img.spacing[a]);
        }
        out.voxels[out.index(x, y, z)] = acc;
      }
    }
  }
  return out;
}

// undecimated single-level Haar pair along one axis (replicate boundary)
std::pair<VolumeImage, VolumeImage> haar_axis(const VolumeImage& img, int axis) {
  VolumeImage lo = like(img), hi = like(img);
  long n[3] = {static_cast<long>(img.dims[0]), static_cast<long>(img.dims[1]),
               static_cast<long>(img.dims[2])};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (long z = 0; z < n[2]; ++z) {
    for (long y = 0; y < n[1]; ++y) {
      for (long x = 0; x < n[0]; ++x) {
        long c[3] = {x, y, z};
        long p[3] = {x, y, z};
        p[axis] = std::min(c[axis] + 1, n[axis] - 1);
        double a = img.at(x, y, z);
        double b = img.at(p[0], p[1], p[2]);
        size_t idx = lo.index(x, y, z);
        lo.voxels[idx] = (a + b) * inv_sqrt2;
        hi.voxels[idx] = (a - b) * inv_sqrt2;
      }
    }
  }
  return {lo, hi};
}

}  // namespace

std::vector<std::pair<std::string, VolumeImage>> apply_filter(
    const VolumeImage& image, const std::string& filter_id,
    const std::vector<double>& sigmas) {
  std::vector<std::pair<std::string, VolumeImage>> out;
  if (filter_id == "original") {
    out.emplace_back("original", image);
  } else if (filter_id == "gradient") {
    out.emplace_back("gradient", gradient_magnitude(image));
  } else if (filter_id == "squareroot") {
    VolumeImage v = like(image);
    for (size_t i = 0; i < image.voxels.size(); ++i) {
      double x = image.voxels[i];
      v.voxels[i] = (x < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(x));
    }
    out.emplace_back("squareroot", std::move(v));
  } else if (filter_id == "exponential") {
    double c = 0.0;
    for (double x : image.voxels) c = std::max(c, std::abs(x));
    VolumeImage v = like(image);
    for (size_t i = 0; i < image.voxels.size(); ++i) {
      v.voxels[i] = c == 0.0
                        ? 1.0
                        : std::exp(image.voxels[i] * std::log1p(c) / c);
    }
    out.emplace_back("exponential", std::move(v));
  } else if (filter_id == "log") {
    if (sigmas.empty()) {
      throw std::runtime_error("log filter requires at least one sigma");
    }
    for (double s : sigmas) {
      if (s <= 0) throw std::runtime_error("log sigma must be positive");
      out.emplace_back("log-sigma-" + format_double(s) + "mm",
                       laplacian(gaussian_smooth(image, s)));
    }
  } else if (filter_id == "wavelet") {
    auto [lx, hx] = haar_axis(image, 0);
    for (int fx = 0; fx < 2; ++fx) {
      const VolumeImage& xi = fx ? hx : lx;
      auto [ly, hy] = haar_axis(xi, 1);
      for (int fy = 0; fy < 2; ++fy) {
        const VolumeImage& yi = fy ? hy : ly;
        auto [lz, hz] = haar_axis(yi, 2);
        for (int fz = 0; fz < 2; ++fz) {
          std::string name = std::string("wavelet-") + (fx ? "H" : "L") +
                             (fy ? "H" : "L") + (fz ? "H" : "L");
          out.emplace_back(name, fz ? hz : lz);
        }
      }
    }
  } else {
    throw std::runtime_error("unknown filter: " + filter_id);
  }
  return out;
}

}  // namespace agentml
