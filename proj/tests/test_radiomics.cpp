#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "agentml/csv.hpp"
#include "agentml/nifti.hpp"
#include "agentml/radiomics.hpp"
#include "agentml/texture.hpp"
#include "agentml/util.hpp"
#include "agentml/volume.hpp"
#include "doctest.h"
#include "texture_oracle.hpp"

namespace fs = std::filesystem;
using namespace agentml;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("agentml_rad_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Random little labelled volume and the equivalent DiscretizedRoi: levels are
// drawn directly, so no discretization step stands between the two paths.
struct LevelVolume {
  oracle::DenseVolume dense;
  DiscretizedRoi roi;
};

LevelVolume random_level_volume(std::mt19937& rng, int max_dim, int max_levels,
                                double roi_fraction) {
  std::uniform_int_distribution<int> dim_dist(2, max_dim);
  LevelVolume out;
  out.dense.nx = dim_dist(rng);
  out.dense.ny = dim_dist(rng);
  out.dense.nz = dim_dist(rng);
  out.dense.level.assign(
      static_cast<size_t>(out.dense.nx * out.dense.ny * out.dense.nz), 0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> level_dist(1, max_levels);
  for (int z = 0; z < out.dense.nz; ++z) {
    for (int y = 0; y < out.dense.ny; ++y) {
      for (int x = 0; x < out.dense.nx; ++x) {
        if (coin(rng) >= roi_fraction) continue;
        int level = level_dist(rng);
        out.dense.level[static_cast<size_t>(
            x + out.dense.nx * (y + out.dense.ny * z))] = level;
        out.roi.coords.push_back({x, y, z});
        out.roi.levels.push_back(level);
      }
    }
  }
  if (out.roi.coords.empty()) {  // keep the ROI nonempty
    out.dense.level[0] = 1;
    out.roi.coords.push_back({0, 0, 0});
    out.roi.levels.push_back(1);
  }
  out.roi.n_levels = out.dense.max_level();
  out.roi.bin_width = 1.0;
  out.roi.roi_min = 0.0;
  return out;
}

void compare_maps(const std::map<std::string, double>& got,
                  const oracle::Features& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (const auto& [name, expected] : want) {
    INFO("feature ", name);
    REQUIRE(got.count(name) == 1);
    CHECK(std::abs(got.at(name) - expected) <= tol);
  }
}

double independent_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double h = p * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

VolumeImage make_image(std::array<size_t, 3> dims, std::array<double, 3> sp,
                       std::function<double(size_t, size_t, size_t)> fn) {
  VolumeImage img;
  img.dims = dims;
  img.spacing = sp;
  img.voxels.resize(dims[0] * dims[1] * dims[2]);
  for (size_t z = 0; z < dims[2]; ++z) {
    for (size_t y = 0; y < dims[1]; ++y) {
      for (size_t x = 0; x < dims[0]; ++x) {
        img.voxels[img.index(x, y, z)] = fn(x, y, z);
      }
    }
  }
  return img;
}

}  // namespace

TEST_CASE("discretize maps intensities onto 1-based bins") {
  std::vector<RoiVoxel> coords{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  DiscretizedRoi roi = discretize(coords, {10.0, 34.9, 35.1, 60.0}, 25.0);
  CHECK(roi.n_levels == 2);
  CHECK(roi.levels == std::vector<int>{1, 1, 2, 2});  // max clamps into level 2
  CHECK(roi.roi_min == doctest::Approx(10.0));

  DiscretizedRoi flat = discretize(coords, {7.0, 7.0, 7.0, 7.0}, 25.0);
  CHECK(flat.n_levels == 1);
  CHECK(flat.levels == std::vector<int>{1, 1, 1, 1});

  // an exact multiple of the bin width stays at the declared level count
  DiscretizedRoi edge = discretize(coords, {0.0, 25.0, 50.0, 75.0}, 25.0);
  CHECK(edge.n_levels == 3);
  CHECK(edge.levels == std::vector<int>{1, 2, 3, 3});
}

TEST_CASE("first-order features on tiny hand-checked vectors") {
  std::vector<RoiVoxel> coords{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  std::vector<double> vals{1.0, 2.0, 3.0};
  DiscretizedRoi roi = discretize(coords, vals, 1.0);
  auto f = first_order_features(vals, roi, 2.0);
  CHECK(f.size() == 19);
  CHECK(f.at("energy") == 14.0);
  CHECK(f.at("total_energy") == 28.0);
  CHECK(f.at("mean") == 2.0);
  CHECK(f.at("median") == 2.0);
  CHECK(f.at("variance") == doctest::Approx(2.0 / 3.0));
  CHECK(f.at("range") == 2.0);
  CHECK(f.at("skewness") == doctest::Approx(0.0));

  std::vector<RoiVoxel> c5{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
  std::vector<double> outlier{1.0, 2.0, 3.0, 4.0, 100.0};
  auto g = first_order_features(outlier, discretize(c5, outlier, 25.0), 1.0);
  CHECK(g.at("maximum") == 100.0);
  CHECK(g.at("minimum") == 1.0);
  CHECK(g.at("range") == 99.0);
}

TEST_CASE("first-order features agree with two-pass formulas") {
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> val(-50.0, 150.0);
  std::uniform_int_distribution<int> len(3, 200);
  for (int trial = 0; trial < 30; ++trial) {
    int n = len(rng);
    std::vector<double> v(static_cast<size_t>(n));
    std::vector<RoiVoxel> coords(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      v[static_cast<size_t>(i)] = val(rng);
      coords[static_cast<size_t>(i)] = {i, 0, 0};
    }
    auto f = first_order_features(v, discretize(coords, v, 10.0), 1.0);

    double mean = 0, energy = 0;
    for (double x : v) {
      mean += x;
      energy += x * x;
    }
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0, mad = 0;
    for (double x : v) {
      double d = x - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
      mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    double p10 = independent_quantile(v, 0.10);
    double p90 = independent_quantile(v, 0.90);
    std::vector<double> robust;
    for (double x : v) {
      if (x >= p10 && x <= p90) robust.push_back(x);
    }
    double rmean = 0;
    for (double x : robust) rmean += x;
    rmean /= static_cast<double>(robust.size());
    double rmad = 0;
    for (double x : robust) rmad += std::abs(x - rmean);
    rmad /= static_cast<double>(robust.size());

    auto rel = [](double a, double b) {
      return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    CHECK(rel(f.at("mean"), mean));
    CHECK(rel(f.at("energy"), energy));
    CHECK(rel(f.at("rms"), std::sqrt(energy / n)));
    CHECK(rel(f.at("variance"), m2));
    CHECK(rel(f.at("sd"), std::sqrt(m2)));
    CHECK(rel(f.at("skewness"), m3 / std::pow(m2, 1.5)));
    CHECK(rel(f.at("kurtosis"), m4 / (m2 * m2) - 3.0));
    CHECK(rel(f.at("mad"), mad));
    CHECK(rel(f.at("rmad"), rmad));
    CHECK(rel(f.at("p10"), p10));
    CHECK(rel(f.at("p90"), p90));
    CHECK(rel(f.at("median"), independent_quantile(v, 0.5)));
    CHECK(rel(f.at("iqr"), independent_quantile(v, 0.75) -
                               independent_quantile(v, 0.25)));
    CHECK(rel(f.at("minimum"), *std::min_element(v.begin(), v.end())));
    CHECK(rel(f.at("maximum"), *std::max_element(v.begin(), v.end())));
  }
}

TEST_CASE("shape features match closed forms on boxes") {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> side(1, 7);
  std::uniform_real_distribution<double> sp(0.5, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    int a = side(rng), b = side(rng), c = side(rng);
    std::array<double, 3> spacing{sp(rng), sp(rng), sp(rng)};
    std::vector<RoiVoxel> voxels;
    for (int z = 0; z < c; ++z) {
      for (int y = 0; y < b; ++y) {
        for (int x = 0; x < a; ++x) voxels.push_back({x, y, z});
      }
    }
    auto f = shape_features(voxels, spacing);
    CHECK(f.size() == 9);
    double vol = a * b * c * spacing[0] * spacing[1] * spacing[2];
    double surf = 2.0 * (a * b * spacing[0] * spacing[1] +
                         b * c * spacing[1] * spacing[2] +
                         a * c * spacing[0] * spacing[2]);
    CHECK(f.at("volume") == doctest::Approx(vol).epsilon(1e-12));
    CHECK(f.at("surface_area") == doctest::Approx(surf).epsilon(1e-12));
    CHECK(f.at("surface_to_volume") == doctest::Approx(surf / vol).epsilon(1e-12));
    double diag = std::sqrt(std::pow((a - 1) * spacing[0], 2) +
                            std::pow((b - 1) * spacing[1], 2) +
                            std::pow((c - 1) * spacing[2], 2));
    CHECK(f.at("max_3d_diameter") == doctest::Approx(diag).epsilon(1e-9));
    CHECK(f.at("sphericity") ==
          doctest::Approx(std::pow(M_PI, 1.0 / 3.0) *
                          std::pow(6.0 * vol, 2.0 / 3.0) / surf)
              .epsilon(1e-12));
  }
}

TEST_CASE("cubes have unit elongation and flatness") {
  for (int side : {1, 2, 5}) {
    std::vector<RoiVoxel> voxels;
    for (int z = 0; z < side; ++z) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) voxels.push_back({x, y, z});
      }
    }
    auto f = shape_features(voxels, {1.0, 1.0, 1.0});
    CHECK(std::abs(f.at("elongation") - 1.0) <= 1e-9);
    CHECK(std::abs(f.at("flatness") - 1.0) <= 1e-9);
  }
}

TEST_CASE("texture families agree with brute-force enumeration") {
  std::mt19937 rng(20260823);
  for (int trial = 0; trial < 25; ++trial) {
    LevelVolume v = random_level_volume(rng, 6, 4, 0.7);
    INFO("trial ", trial, " dims ", v.dense.nx, "x", v.dense.ny, "x",
         v.dense.nz, " roi ", v.roi.coords.size());
    compare_maps(glcm_features(v.roi), oracle::glcm_oracle(v.dense), 1e-9);
    compare_maps(glrlm_features(v.roi), oracle::glrlm_oracle(v.dense), 1e-9);
    compare_maps(glszm_features(v.roi), oracle::glszm_oracle(v.dense), 1e-9);
    compare_maps(gldm_features(v.roi), oracle::gldm_oracle(v.dense, 0), 1e-9);
    compare_maps(ngtdm_features(v.roi), oracle::ngtdm_oracle(v.dense), 1e-9);
  }
}

TEST_CASE("texture families on sparse regions and degenerate cases") {
  std::mt19937 rng(5150);
  for (int trial = 0; trial < 10; ++trial) {
    LevelVolume v = random_level_volume(rng, 5, 3, 0.25);
    compare_maps(glcm_features(v.roi), oracle::glcm_oracle(v.dense), 1e-9);
    compare_maps(glrlm_features(v.roi), oracle::glrlm_oracle(v.dense), 1e-9);
    compare_maps(glszm_features(v.roi), oracle::glszm_oracle(v.dense), 1e-9);
    compare_maps(gldm_features(v.roi), oracle::gldm_oracle(v.dense, 0), 1e-9);
    compare_maps(ngtdm_features(v.roi), oracle::ngtdm_oracle(v.dense), 1e-9);
  }

  // single voxel: no pairs anywhere, GLCM falls back to a level histogram
  DiscretizedRoi lone;
  lone.coords = {{0, 0, 0}};
  lone.levels = {1};
  lone.n_levels = 1;
  auto g = glcm_features(lone);
  CHECK(g.at("joint_energy") == 1.0);
  CHECK(g.at("joint_entropy") == 0.0);
  CHECK(g.at("correlation") == 1.0);
  CHECK(g.at("maximum_probability") == 1.0);

  // constant region: every NGTDM denominator involving level spread degenerates
  DiscretizedRoi flat;
  for (int z = 0; z < 3; ++z) {
    for (int y = 0; y < 3; ++y) {
      for (int x = 0; x < 3; ++x) {
        flat.coords.push_back({x, y, z});
        flat.levels.push_back(1);
      }
    }
  }
  flat.n_levels = 1;
  auto n = ngtdm_features(flat);
  CHECK(n.at("coarseness") == kDegenerateSentinel);
  CHECK(n.at("contrast") == kDegenerateSentinel);
  CHECK(n.at("strength") == kDegenerateSentinel);
  CHECK(glcm_features(flat).at("correlation") == 1.0);
}

TEST_CASE("run percentage on a hand-enumerated strip") {
  // 3x1x1 levels [1,1,2]: the x direction holds runs {1:2},{2:1}; the other
  // twelve directions see three unit runs each.
  DiscretizedRoi roi;
  roi.coords = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  roi.levels = {1, 1, 2};
  roi.n_levels = 2;
  auto f = glrlm_features(roi);
  CHECK(f.at("run_percentage") ==
        doctest::Approx((2.0 / 3.0 + 12.0) / 13.0).epsilon(1e-12));
}

TEST_CASE("zone counting uses full 26-connectivity") {
  // two level-1 voxels touching only at a corner form a single zone
  DiscretizedRoi roi;
  roi.coords = {{0, 0, 0}, {1, 1, 1}};
  roi.levels = {1, 1};
  roi.n_levels = 1;
  auto f = glszm_features(roi);
  CHECK(f.at("zone_percentage") == doctest::Approx(0.5));
  CHECK(f.at("large_area_emphasis") == doctest::Approx(4.0));

  // same level split across a gap stays two zones
  DiscretizedRoi split;
  split.coords = {{0, 0, 0}, {3, 0, 0}};
  split.levels = {1, 1};
  split.n_levels = 1;
  CHECK(glszm_features(split).at("zone_percentage") == doctest::Approx(1.0));
}

TEST_CASE("slicewise mode averages per-slice feature maps") {
  // both slices carry the same 2D pattern, so the slicewise average must equal
  // the single-slice result
  std::vector<std::vector<int>> pattern{{1, 2, 1}, {2, 1, 2}, {1, 1, 2}};
  DiscretizedRoi two, one;
  for (int z = 0; z < 2; ++z) {
    for (int y = 0; y < 3; ++y) {
      for (int x = 0; x < 3; ++x) {
        two.coords.push_back({x, y, z});
        two.levels.push_back(pattern[static_cast<size_t>(y)][static_cast<size_t>(x)]);
        if (z == 0) {
          one.coords.push_back({x, y, 0});
          one.levels.push_back(pattern[static_cast<size_t>(y)][static_cast<size_t>(x)]);
        }
      }
    }
  }
  two.n_levels = one.n_levels = 2;
  auto ga = glcm_features(two, 1, TextureMode::TwoDSlicewise);
  auto gb = glcm_features(one, 1, TextureMode::TwoDSlicewise);
  for (const auto& [k, v] : ga) {
    CHECK(v == doctest::Approx(gb.at(k)).epsilon(1e-12));
  }
  auto ra = glrlm_features(two, TextureMode::TwoDSlicewise);
  auto rb = glrlm_features(one, TextureMode::TwoDSlicewise);
  for (const auto& [k, v] : ra) {
    CHECK(v == doctest::Approx(rb.at(k)).epsilon(1e-12));
  }
}

TEST_CASE("intensity filters behave as documented") {
  VolumeImage img = make_image({4, 3, 2}, {2.0, 1.0, 1.0},
                               [](size_t x, size_t, size_t) {
                                 return static_cast<double>(x) * 3.0;
                               });

  auto sq = apply_filter(img, "squareroot");
  REQUIRE(sq.size() == 1);
  CHECK(sq[0].first == "squareroot");
  CHECK(sq[0].second.at(3, 0, 0) == doctest::Approx(3.0));  // sqrt(9)
  VolumeImage neg = img;
  neg.voxels[1] = -4.0;
  CHECK(apply_filter(neg, "squareroot")[0].second.voxels[1] ==
        doctest::Approx(-2.0));  // sign is preserved

  auto ex = apply_filter(img, "exponential");
  double c = 9.0;  // max |x|
  CHECK(ex[0].second.at(3, 0, 0) == doctest::Approx(1.0 + c).epsilon(1e-12));
  CHECK(ex[0].second.at(0, 0, 0) == doctest::Approx(1.0));
  VolumeImage zero = make_image({2, 2, 2}, {1, 1, 1},
                                [](size_t, size_t, size_t) { return 0.0; });
  CHECK(apply_filter(zero, "exponential")[0].second.voxels[0] == 1.0);

  // central difference of a linear ramp along x: slope 3 over spacing 2
  auto gr = apply_filter(img, "gradient");
  CHECK(gr[0].second.at(1, 1, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(gr[0].second.at(0, 1, 0) == doctest::Approx(1.5).epsilon(1e-12));

  VolumeImage flat = make_image({3, 3, 3}, {1, 1, 1},
                                [](size_t, size_t, size_t) { return 5.0; });
  auto wl = apply_filter(flat, "wavelet");
  REQUIRE(wl.size() == 8);
  std::map<std::string, const VolumeImage*> bands;
  for (const auto& [name, band] : wl) bands[name] = &band;
  REQUIRE(bands.count("wavelet-LLL") == 1);
  REQUIRE(bands.count("wavelet-HHH") == 1);
  CHECK(bands["wavelet-LLL"]->voxels[0] ==
        doctest::Approx(5.0 * std::pow(2.0, 1.5)).epsilon(1e-12));
  CHECK(bands["wavelet-HHH"]->voxels[0] == doctest::Approx(0.0));

  CHECK_THROWS(apply_filter(img, "log"));          // needs sigmas
  CHECK_THROWS(apply_filter(img, "log", {-1.0}));  // positive sigmas only
  CHECK_THROWS(apply_filter(img, "unknown_filter"));
  auto lg = apply_filter(img, "log", {1.0, 2.5});
  REQUIRE(lg.size() == 2);
  CHECK(lg[0].first == "log-sigma-1mm");
  CHECK(lg[1].first == "log-sigma-2.5mm");
}

TEST_CASE("resampling geometry") {
  VolumeImage img = make_image({4, 4, 4}, {1.0, 1.0, 1.0},
                               [](size_t x, size_t y, size_t z) {
                                 return static_cast<double>(x + y + z);
                               });
  VolumeImage same = resample_isotropic(img, 1.0);
  CHECK(same.dims == img.dims);
  for (size_t i = 0; i < img.voxels.size(); ++i) {
    CHECK(same.voxels[i] == doctest::Approx(img.voxels[i]).epsilon(1e-12));
  }

  VolumeImage half = resample_isotropic(img, 2.0);
  CHECK(half.dims == std::array<size_t, 3>{2, 2, 2});
  CHECK(half.spacing == std::array<double, 3>{2.0, 2.0, 2.0});

  LabelMask mask;
  mask.dims = {4, 4, 4};
  mask.spacing = {1.0, 1.0, 1.0};
  mask.voxels.assign(64, 1);
  LabelMask mhalf = resample_isotropic(mask, 2.0);
  CHECK(mhalf.dims == std::array<size_t, 3>{2, 2, 2});
  for (int v : mhalf.voxels) CHECK(v == 1);
  CHECK_THROWS(resample_isotropic(mask, 2.0, Interp::Trilinear));
}

TEST_CASE("extract_case validates geometry and lays out rows") {
  VolumeImage img = make_image({5, 5, 4}, {1.0, 1.0, 1.0},
                               [](size_t x, size_t y, size_t z) {
                                 return static_cast<double>(7 * x + 3 * y + z) *
                                        5.0;
                               });
  LabelMask mask;
  mask.dims = img.dims;
  mask.spacing = img.spacing;
  mask.voxels.assign(img.voxels.size(), 0);
  for (size_t z = 0; z < 2; ++z) {
    for (size_t y = 0; y < 3; ++y) {
      for (size_t x = 0; x < 3; ++x) mask.voxels[mask.index(x, y, z)] = 1;
    }
  }
  for (size_t z = 2; z < 4; ++z) {
    for (size_t y = 3; y < 5; ++y) {
      for (size_t x = 3; x < 5; ++x) mask.voxels[mask.index(x, y, z)] = 2;
    }
  }

  ExtractionConfig config;
  config.filters = {"original", "wavelet"};
  CaseFeatures out = extract_case(img, mask, config, "case_a");
  // 9 derived images (original + 8 wavelet bands) per label, sorted
  REQUIRE(out.rows.size() == 18);
  CHECK(out.rows[0].label == 1);
  CHECK(out.rows[0].filter == "original");
  CHECK(out.rows[1].filter == "wavelet-HHH");
  CHECK(out.rows[9].label == 2);

  // shape rides on the first row of each label only, under the original_ prefix
  CHECK(out.rows[0].features.count("original_shape_volume") == 1);
  CHECK(out.rows[1].features.count("original_shape_volume") == 0);
  CHECK(out.rows[9].features.count("original_shape_volume") == 1);
  CHECK(out.rows[0].features.count("original_firstorder_mean") == 1);
  CHECK(out.rows[1].features.count("wavelet-HHH_glcm_contrast") == 1);
  CHECK(out.rows[0].features.at("original_shape_volume") ==
        doctest::Approx(18.0));

  // label selection warns about absent labels instead of failing
  ExtractionConfig pick;
  pick.labels = {1, 9};
  CaseFeatures picked = extract_case(img, mask, pick, "case_a");
  REQUIRE(picked.rows.size() == 1);
  CHECK(picked.rows[0].label == 1);
  REQUIRE(picked.warnings.size() == 1);
  CHECK(picked.warnings[0].find("label 9") != std::string::npos);

  // allowlist trims the emitted columns
  ExtractionConfig allow;
  allow.feature_allowlist = {"original_firstorder_mean", "original_shape_volume"};
  CaseFeatures trimmed = extract_case(img, mask, allow, "case_a");
  for (const auto& row : trimmed.rows) {
    for (const auto& [name, _] : row.features) {
      CHECK((name == "original_firstorder_mean" ||
             name == "original_shape_volume"));
    }
  }

  LabelMask wrong = mask;
  wrong.spacing = {2.0, 1.0, 1.0};
  CHECK_THROWS_WITH_AS(extract_case(img, wrong, config, "case_a"),
                       doctest::Contains("geometry"), std::runtime_error);
}

namespace {

void write_case(const fs::path& dir, const std::string& name, int seed,
                bool gz = true) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<double> val(0.0, 120.0);
  NiftiVolume img;
  img.dims = {6, 6, 5};
  img.spacing = {1.0, 1.0, 2.0};
  img.voxels.resize(180);
  for (double& v : img.voxels) v = val(rng);
  NiftiVolume mask = img;
  for (size_t i = 0; i < mask.voxels.size(); ++i) {
    mask.voxels[i] = (i % 7 == 0) ? 1.0 : (i % 11 == 0 ? 2.0 : 0.0);
  }
  std::string ext = gz ? ".nii.gz" : ".nii";
  write_nifti((dir / "images" / (name + "_0000" + ext)).string(), img);
  write_nifti((dir / "masks" / (name + ext)).string(), mask);
}

}  // namespace

TEST_CASE("extract_batch pairs, parallelizes, and reports") {
  fs::path dir = fresh_dir("batch");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  write_case(dir, "sub01", 1);
  write_case(dir, "sub02", 2, false);
  write_case(dir, "sub03", 3);

  // a mask with no image, and a corrupt image that must fail in isolation
  NiftiVolume stray;
  stray.dims = {2, 2, 2};
  stray.voxels.assign(8, 1.0);
  write_nifti((dir / "masks" / "orphan.nii.gz").string(), stray);
  write_case(dir, "sub04", 4);
  write_file((dir / "images" / "sub04_0000.nii.gz").string(), "not a nifti");

  ExtractionConfig config;
  config.feature_classes = {"firstorder", "shape", "glcm", "ngtdm"};

  BatchResult one = extract_batch((dir / "images").string(),
                                  (dir / "masks").string(), config,
                                  (dir / "out1").string());
  REQUIRE(one.csv_paths.size() == 2);  // labels 1 and 2
  CHECK(one.csv_paths[0].find("features_label_1.csv") != std::string::npos);
  CHECK(one.unpaired_masks == std::vector<std::string>{"orphan.nii.gz"});
  REQUIRE(one.failures.size() == 1);
  CHECK(one.failures[0].first == "sub04");
  CHECK(fs::exists(one.params_path));
  CHECK(fs::exists(one.report_path));
  std::string report = read_file(one.report_path);
  CHECK(report.find("sub01") != std::string::npos);
  CHECK(report.find("orphan.nii.gz") != std::string::npos);

  CsvDocument doc = read_csv_file(one.csv_paths[0]);
  REQUIRE(doc.rows.size() == 3);
  CHECK(doc.header[0] == "subject_id");
  CHECK(doc.header[1] == "label");
  CHECK(doc.rows[0][0] == "sub01");  // sorted by subject
  CHECK(doc.rows[2][0] == "sub03");
  CHECK(std::find(doc.header.begin(), doc.header.end(),
                  "original_shape_volume") != doc.header.end());

  config.workers = 4;
  BatchResult four = extract_batch((dir / "images").string(),
                                   (dir / "masks").string(), config,
                                   (dir / "out4").string());
  for (size_t i = 0; i < one.csv_paths.size(); ++i) {
    CHECK(read_file(one.csv_paths[i]) == read_file(four.csv_paths[i]));
  }

  CHECK_THROWS(extract_batch((dir / "missing").string(),
                             (dir / "masks").string(), config,
                             (dir / "out5").string()));
  fs::create_directories(dir / "empty");
  CHECK_THROWS(extract_batch((dir / "images").string(),
                             (dir / "empty").string(), config,
                             (dir / "out6").string()));
}

TEST_CASE("merge_targets is a strict left join") {
  fs::path dir = fresh_dir("merge");
  write_file((dir / "features.csv").string(),
             "subject_id,label,f1\nsub01,1,0.5\nsub02,1,0.7\nsub03,1,0.9\n");
  write_file((dir / "targets.csv").string(),
             "subject_id,age,outcome\nsub01,60,1\nsub03,52,0\nsub99,40,1\n");

  MergeResult m = merge_targets((dir / "features.csv").string(),
                                (dir / "targets.csv").string(), "subject_id",
                                (dir / "merged.csv").string());
  CHECK(m.unmatched_rows == 1);
  CsvDocument doc = read_csv_file(m.output_path);
  CHECK(doc.header == std::vector<std::string>{"subject_id", "label", "f1",
                                               "age", "outcome"});
  REQUIRE(doc.rows.size() == 3);
  CHECK(doc.rows[0][3] == "60");
  CHECK(doc.rows[1][3] == "");  // sub02 has no targets
  CHECK(doc.rows[2][4] == "0");

  write_file((dir / "dup.csv").string(),
             "subject_id,age\nsub01,60\nsub01,61\n");
  CHECK_THROWS_WITH_AS(
      merge_targets((dir / "features.csv").string(), (dir / "dup.csv").string(),
                    "subject_id", (dir / "m2.csv").string()),
      doctest::Contains("ambiguous"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      merge_targets((dir / "features.csv").string(),
                    (dir / "targets.csv").string(), "patient",
                    (dir / "m3.csv").string()),
      doctest::Contains("id column"), std::runtime_error);
}

TEST_CASE("batch merging emits companion target files") {
  fs::path dir = fresh_dir("batchmerge");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  write_case(dir, "sub01", 11);
  write_case(dir, "sub02", 12);
  write_file((dir / "targets.csv").string(),
             "subject_id,outcome\nsub01,1\nsub02,0\n");

  ExtractionConfig config;
  config.feature_classes = {"firstorder"};
  config.targets_csv = (dir / "targets.csv").string();
  BatchResult r = extract_batch((dir / "images").string(),
                                (dir / "masks").string(), config,
                                (dir / "out").string());
  REQUIRE(!r.merged_paths.empty());
  for (const auto& p : r.merged_paths) {
    CHECK(p.find("_with_targets.csv") != std::string::npos);
    CsvDocument doc = read_csv_file(p);
    CHECK(doc.header.back() == "outcome");
  }
}
