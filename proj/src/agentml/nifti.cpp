#include "agentml/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace agentml {

namespace {

constexpr size_t kHeaderSize = 348;
constexpr size_t kVoxOffset = 352;

// gzread handles plain files transparently, so one path serves .nii and
// .nii.gz alike.
std::vector<unsigned char> read_raw(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open NIfTI file: " + path);
  std::vector<unsigned char> data;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) {
    data.insert(data.end(), buf, buf + n);
  }
  bool error = n < 0;
  gzclose(f);
  if (error) throw std::runtime_error("decompression failed: " + path);
  return data;
}

template <typename T>
T get(const std::vector<unsigned char>& buf, size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void put(std::vector<unsigned char>& buf, size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

size_t datatype_size(int16_t code) {
  switch (code) {
    case 2: return 1;   // u8
    case 4: return 2;   // i16
    case 8: return 4;   // i32
    case 16: return 4;  // f32
    case 64: return 8;  // f64
    default:
      throw std::runtime_error("unsupported NIfTI datatype code " +
                               std::to_string(code));
  }
}

std::array<std::array<double, 4>, 4> qform_affine(
    const std::vector<unsigned char>& buf,
    const std::array<double, 3>& spacing) {
  double b = get<float>(buf, 256), c = get<float>(buf, 260),
         d = get<float>(buf, 264);
  double a2 = 1.0 - b * b - c * c - d * d;
  double a = a2 > 0 ? std::sqrt(a2) : 0.0;
  double qfac = get<float>(buf, 76);  // pixdim[0]
  if (qfac == 0.0) qfac = 1.0;
  double r[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
  std::array<std::array<double, 4>, 4> m{};
  for (int i = 0; i < 3; ++i) {
    m[i][0] = r[i][0] * spacing[0];
    m[i][1] = r[i][1] * spacing[1];
    m[i][2] = r[i][2] * spacing[2] * qfac;
  }
  m[0][3] = get<float>(buf, 268);
  m[1][3] = get<float>(buf, 272);
  m[2][3] = get<float>(buf, 276);
  m[3][3] = 1.0;
  return m;
}

}  // namespace

NiftiVolume read_nifti(const std::string& path) {
  auto buf = read_raw(path);
  if (buf.size() < kHeaderSize) {
    throw std::runtime_error("truncated NIfTI header: " + path);
  }
  char magic[4];
  std::memcpy(magic, buf.data() + 344, 4);
  if (!(std::memcmp(magic, "n+1", 4) == 0 || std::memcmp(magic, "ni1", 4) == 0)) {
    throw std::runtime_error("not a NIfTI-1 file (bad magic): " + path);
  }
  NiftiVolume v;
  int16_t ndim = get<int16_t>(buf, 40);
  if (ndim < 1 || ndim > 7) {
    throw std::runtime_error("invalid NIfTI dimension count: " + path);
  }
  for (int i = 0; i < 3; ++i) {
    int16_t d = i < ndim ? get<int16_t>(buf, 42 + 2 * i) : 1;
    v.dims[i] = d > 0 ? static_cast<size_t>(d) : 1;
    float px = get<float>(buf, 80 + 4 * i);  // pixdim[1..3]
    v.spacing[i] = px > 0 ? px : 1.0;
  }
  int16_t datatype = get<int16_t>(buf, 70);
  size_t elem = datatype_size(datatype);
  size_t n = v.voxel_count();
  size_t offset = static_cast<size_t>(get<float>(buf, 108));
  if (offset < kHeaderSize) offset = kVoxOffset;
  if (buf.size() < offset + n * elem) {
    throw std::runtime_error("truncated NIfTI voxel payload: " + path);
  }
  double slope = get<float>(buf, 112), inter = get<float>(buf, 116);
  bool scale = slope != 0.0 && !(slope == 1.0 && inter == 0.0);
  v.voxels.resize(n);
  const unsigned char* p = buf.data() + offset;
  for (size_t i = 0; i < n; ++i, p += elem) {
    double raw;
    switch (datatype) {
      case 2: raw = *p; break;
      case 4: { int16_t t; std::memcpy(&t, p, 2); raw = t; break; }
      case 8: { int32_t t; std::memcpy(&t, p, 4); raw = t; break; }
      case 16: { float t; std::memcpy(&t, p, 4); raw = t; break; }
      default: { double t; std::memcpy(&t, p, 8); raw = t; break; }
    }
    v.voxels[i] = scale ? slope * raw + inter : raw;
  }
  int16_t qform_code = get<int16_t>(buf, 252);
  int16_t sform_code = get<int16_t>(buf, 254);
  if (sform_code > 0) {
    v.has_affine = true;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        v.affine[r][c] = get<float>(buf, 280 + 16 * r + 4 * c);
      }
    }
    v.affine[3] = {0, 0, 0, 1};
  } else if (qform_code > 0) {
    v.has_affine = true;
    v.affine = qform_affine(buf, v.spacing);
  } else {
    v.has_affine = true;
    v.affine = {};
    for (int i = 0; i < 3; ++i) v.affine[i][i] = v.spacing[i];
    v.affine[3][3] = 1.0;
  }
  return v;
}

void write_nifti(const std::string& path, const NiftiVolume& volume) {
  size_t n = volume.voxel_count();
  if (volume.voxels.size() != n) {
    throw std::runtime_error("voxel count does not match dims");
  }
  std::vector<unsigned char> buf(kVoxOffset + n * sizeof(double), 0);
  put<int32_t>(buf, 0, 348);
  put<int16_t>(buf, 40, 3);
  for (int i = 0; i < 3; ++i) {
    put<int16_t>(buf, 42 + 2 * i, static_cast<int16_t>(volume.dims[i]));
    put<float>(buf, 80 + 4 * i, static_cast<float>(volume.spacing[i]));
  }
  for (int i = 3; i < 7; ++i) put<int16_t>(buf, 42 + 2 * i, 1);
  put<int16_t>(buf, 70, 64);  // float64
  put<int16_t>(buf, 72, 64);  // bitpix
  put<float>(buf, 76, 1.0f);  // qfac
  put<float>(buf, 108, static_cast<float>(kVoxOffset));
  put<float>(buf, 112, 1.0f);  // scl_slope
  put<float>(buf, 116, 0.0f);  // scl_inter
  put<int16_t>(buf, 252, 0);   // qform_code
  if (volume.has_affine) {
    put<int16_t>(buf, 254, 1);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        put<float>(buf, 280 + 16 * r + 4 * c,
                   static_cast<float>(volume.affine[r][c]));
      }
    }
  }
  std::memcpy(buf.data() + 344, "n+1", 4);
  std::memcpy(buf.data() + kVoxOffset, volume.voxels.data(),
              n * sizeof(double));

  bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  gzFile f = gzopen(path.c_str(), gz ? "wb" : "wbT");
  if (!f) throw std::runtime_error("cannot write NIfTI file: " + path);
  bool ok = gzwrite(f, buf.data(), static_cast<unsigned>(buf.size())) ==
            static_cast<int>(buf.size());
  gzclose(f);
  if (!ok) throw std::runtime_error("failed writing NIfTI file: " + path);
}

}  // namespace agentml
