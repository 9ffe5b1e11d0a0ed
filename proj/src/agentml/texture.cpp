#include "agentml/texture.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>

#include "agentml/stats.hpp"

namespace agentml {

DiscretizedRoi discretize(const std::vector<RoiVoxel>& coords,
                          const std::vector<double>& intensities,
                          double bin_width) {
  if (coords.empty() || coords.size() != intensities.size()) {
    throw std::runtime_error("discretize requires a non-empty ROI");
  }
  if (bin_width <= 0) throw std::runtime_error("bin width must be positive");
  double lo = *std::min_element(intensities.begin(), intensities.end());
  double hi = *std::max_element(intensities.begin(), intensities.end());
  DiscretizedRoi roi;
  roi.coords = coords;
  roi.bin_width = bin_width;
  roi.roi_min = lo;
  roi.n_levels = std::max(
      1, static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-12)));
  roi.levels.reserve(intensities.size());
  for (double v : intensities) {
    int level = static_cast<int>(std::floor((v - lo) / bin_width)) + 1;
    if (level > roi.n_levels) level = roi.n_levels;
    roi.levels.push_back(level);
  }
  return roi;
}

namespace {

constexpr double kLog2 = 0.6931471805599453;  // ln 2

double log2_of(double x) { return std::log(x) / kLog2; }

struct Offset {
  int dx, dy, dz;
};

// 13 canonical 3D pair directions (positive half-space).
std::vector<Offset> pair_directions(bool two_d) {
  std::vector<Offset> dirs;
  if (two_d) {
    return {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}};
  }
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        if (dz > 0 || (dz == 0 && dy > 0) ||
            (dz == 0 && dy == 0 && dx > 0)) {
          dirs.push_back({dx, dy, dz});
        }
      }
    }
  }
  return dirs;
}

// full neighborhoods: 26-connectivity in 3D, 8 in 2D
std::vector<Offset> neighbor_offsets(bool two_d) {
  std::vector<Offset> n;
  for (int dz = -1; dz <= 1; ++dz) {
    if (two_d && dz != 0) continue;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        n.push_back({dx, dy, dz});
      }
    }
  }
  return n;
}

struct Grid {
  std::unordered_map<uint64_t, int> level_at;
  int min_x = 0, min_y = 0, min_z = 0;

  static uint64_t key(uint64_t x, uint64_t y, uint64_t z) {
    return x | (y << 21) | (z << 42);
  }

  Grid(const std::vector<RoiVoxel>& coords, const std::vector<int>& levels) {
    min_x = min_y = min_z = 0;
    if (!coords.empty()) {
      min_x = min_y = min_z = 1 << 20;
      for (const auto& c : coords) {
        min_x = std::min(min_x, c.x);
        min_y = std::min(min_y, c.y);
        min_z = std::min(min_z, c.z);
      }
    }
    level_at.reserve(coords.size() * 2);
    for (size_t i = 0; i < coords.size(); ++i) {
      level_at[key(static_cast<uint64_t>(coords[i].x - min_x),
                   static_cast<uint64_t>(coords[i].y - min_y),
                   static_cast<uint64_t>(coords[i].z - min_z))] = levels[i];
    }
  }

  // 0 when the coordinate is outside the ROI
  int level(int x, int y, int z) const {
    x -= min_x;
    y -= min_y;
    z -= min_z;
    if (x < 0 || y < 0 || z < 0) return 0;
    auto it = level_at.find(key(static_cast<uint64_t>(x),
                                static_cast<uint64_t>(y),
                                static_cast<uint64_t>(z)));
    return it == level_at.end() ? 0 : it->second;
  }
};

using FeatureMap = std::map<std::string, double>;

// --------------------------------------------------------------------- GLCM

FeatureMap glcm_from_matrix(const std::vector<std::vector<double>>& p, int n) {
  FeatureMap f;
  std::vector<double> px(n, 0.0), py(n, 0.0);
  std::vector<double> p_sum(2 * n + 1, 0.0);   // index i+j (2..2n)
  std::vector<double> p_diff(n, 0.0);          // index |i-j| (0..n-1)
  double energy = 0, entropy = 0, contrast = 0, idm = 0, id = 0, maxp = 0,
         autoc = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = p[i][j];
      px[i] += v;
      py[j] += v;
      p_sum[i + j + 2] += v;
      p_diff[std::abs(i - j)] += v;
      energy += v * v;
      if (v > 0) entropy -= v * log2_of(v);
      contrast += v * (i - j) * (i - j);
      idm += v / (1.0 + (i - j) * (i - j));
      id += v / (1.0 + std::abs(i - j));
      maxp = std::max(maxp, v);
      autoc += v * (i + 1) * (j + 1);
    }
  }
  double mu_x = 0, mu_y = 0;
  for (int i = 0; i < n; ++i) {
    mu_x += (i + 1) * px[i];
    mu_y += (i + 1) * py[i];
  }
  double var_x = 0, var_y = 0;
  for (int i = 0; i < n; ++i) {
    var_x += px[i] * ((i + 1) - mu_x) * ((i + 1) - mu_x);
    var_y += py[i] * ((i + 1) - mu_y) * ((i + 1) - mu_y);
  }
  double correlation = 1.0;
  if (var_x > 1e-15 && var_y > 1e-15) {
    double cov = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        cov += p[i][j] * ((i + 1) - mu_x) * ((j + 1) - mu_y);
      }
    }
    correlation = cov / std::sqrt(var_x * var_y);
  }
  double sum_avg = 0, sum_ent = 0;
  for (int k = 2; k <= 2 * n; ++k) {
    sum_avg += k * p_sum[k];
    if (p_sum[k] > 0) sum_ent -= p_sum[k] * log2_of(p_sum[k]);
  }
  double diff_avg = 0, diff_ent = 0;
  for (int k = 0; k < n; ++k) {
    diff_avg += k * p_diff[k];
    if (p_diff[k] > 0) diff_ent -= p_diff[k] * log2_of(p_diff[k]);
  }
  double shade = 0, prominence = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double t = (i + 1) + (j + 1) - mu_x - mu_y;
      shade += p[i][j] * t * t * t;
      prominence += p[i][j] * t * t * t * t;
    }
  }
  f["joint_energy"] = energy;
  f["joint_entropy"] = entropy;
  f["contrast"] = contrast;
  f["correlation"] = correlation;
  f["inverse_difference_moment"] = idm;
  f["inverse_difference"] = id;
  f["maximum_probability"] = maxp;
  f["sum_average"] = sum_avg;
  f["sum_entropy"] = sum_ent;
  f["difference_average"] = diff_avg;
  f["difference_entropy"] = diff_ent;
  f["cluster_shade"] = shade;
  f["cluster_prominence"] = prominence;
  f["autocorrelation"] = autoc;
  return f;
}

FeatureMap mean_of_maps(const std::vector<FeatureMap>& maps) {
  FeatureMap out;
  if (maps.empty()) return out;
  for (const auto& m : maps) {
    for (const auto& [k, v] : m) out[k] += v;
  }
  for (auto& [k, v] : out) v /= static_cast<double>(maps.size());
  return out;
}

FeatureMap glcm_core(const std::vector<RoiVoxel>& coords,
                     const std::vector<int>& levels, int n_levels,
                     bool two_d, int distance) {
  Grid grid(coords, levels);
  std::vector<FeatureMap> per_direction;
  for (const auto& d : pair_directions(two_d)) {
    std::vector<std::vector<double>> m(
        n_levels, std::vector<double>(n_levels, 0.0));
    double total = 0.0;
    for (size_t i = 0; i < coords.size(); ++i) {
      int other = grid.level(coords[i].x + d.dx * distance,
                             coords[i].y + d.dy * distance,
                             coords[i].z + d.dz * distance);
      if (other == 0) continue;
      // symmetric accumulation
      m[levels[i] - 1][other - 1] += 1.0;
      m[other - 1][levels[i] - 1] += 1.0;
      total += 2.0;
    }
    if (total == 0.0) continue;
    for (auto& row : m) {
      for (double& v : row) v /= total;
    }
    per_direction.push_back(glcm_from_matrix(m, n_levels));
  }
  if (per_direction.empty()) {
    // no interior pairs anywhere: fall back to the level histogram on the
    // diagonal so degenerate ROIs still yield defined values
    std::vector<std::vector<double>> m(
        n_levels, std::vector<double>(n_levels, 0.0));
    for (int level : levels) {
      m[level - 1][level - 1] += 1.0 / static_cast<double>(levels.size());
    }
    per_direction.push_back(glcm_from_matrix(m, n_levels));
  }
  return mean_of_maps(per_direction);
}

// -------------------------------------------------------------------- GLRLM

FeatureMap glrlm_from_matrix(const std::map<std::pair<int, int>, double>& runs,
                             size_t n_voxels) {
  FeatureMap f;
  double nr = 0;
  std::map<int, double> by_level, by_length;
  for (const auto& [key, c] : runs) {
    nr += c;
    by_level[key.first] += c;
    by_length[key.second] += c;
  }
  auto sum_weighted = [&](auto&& weight) {
    double s = 0;
    for (const auto& [key, c] : runs) s += c * weight(key.first, key.second);
    return s;
  };
  double gln = 0, rln = 0;
  for (const auto& [l, c] : by_level) gln += c * c;
  for (const auto& [l, c] : by_length) rln += c * c;
  double mu_g = sum_weighted([](int g, int r) { return g; }) / nr;
  double mu_r = sum_weighted([](int g, int r) { return r; }) / nr;
  f["short_run_emphasis"] =
      sum_weighted([](int g, int r) { return 1.0 / (double(r) * r); }) / nr;
  f["long_run_emphasis"] =
      sum_weighted([](int g, int r) { return double(r) * r; }) / nr;
  f["gray_level_nonuniformity"] = gln / nr;
  f["gray_level_nonuniformity_normalized"] = gln / (nr * nr);
  f["run_length_nonuniformity"] = rln / nr;
  f["run_length_nonuniformity_normalized"] = rln / (nr * nr);
  f["run_percentage"] = nr / static_cast<double>(n_voxels);
  f["gray_level_variance"] =
      sum_weighted([&](int g, int r) { return (g - mu_g) * (g - mu_g); }) / nr;
  f["run_variance"] =
      sum_weighted([&](int g, int r) { return (r - mu_r) * (r - mu_r); }) / nr;
  double entropy = 0;
  for (const auto& [key, c] : runs) {
    double p = c / nr;
    entropy -= p * log2_of(p);
  }
  f["run_entropy"] = entropy;
  f["low_gray_level_run_emphasis"] =
      sum_weighted([](int g, int r) { return 1.0 / (double(g) * g); }) / nr;
  f["high_gray_level_run_emphasis"] =
      sum_weighted([](int g, int r) { return double(g) * g; }) / nr;
  f["short_run_low_gray_level_emphasis"] =
      sum_weighted([](int g, int r) { return 1.0 / (double(g) * g * r * r); }) / nr;
  f["short_run_high_gray_level_emphasis"] =
      sum_weighted([](int g, int r) { return double(g) * g / (double(r) * r); }) / nr;
  f["long_run_low_gray_level_emphasis"] =
      sum_weighted([](int g, int r) { return double(r) * r / (double(g) * g); }) / nr;
  f["long_run_high_gray_level_emphasis"] =
      sum_weighted([](int g, int r) { return double(g) * g * r * r; }) / nr;
  return f;
}

FeatureMap glrlm_core(const std::vector<RoiVoxel>& coords,
                      const std::vector<int>& levels, int n_levels,
                      bool two_d) {
  (void)n_levels;
  Grid grid(coords, levels);
  std::vector<FeatureMap> per_direction;
  for (const auto& d : pair_directions(two_d)) {
    std::map<std::pair<int, int>, double> runs;
    for (size_t i = 0; i < coords.size(); ++i) {
      int level = levels[i];
      // run start: the previous voxel along the direction is outside the
      // ROI or a different level
      if (grid.level(coords[i].x - d.dx, coords[i].y - d.dy,
                     coords[i].z - d.dz) == level) {
        continue;
      }
      int len = 1;
      int x = coords[i].x + d.dx, y = coords[i].y + d.dy,
          z = coords[i].z + d.dz;
      while (grid.level(x, y, z) == level) {
        ++len;
        x += d.dx;
        y += d.dy;
        z += d.dz;
      }
      runs[{level, len}] += 1.0;
    }
    per_direction.push_back(glrlm_from_matrix(runs, coords.size()));
  }
  return mean_of_maps(per_direction);
}

// -------------------------------------------------------------------- GLSZM

FeatureMap glszm_core(const std::vector<RoiVoxel>& coords,
                      const std::vector<int>& levels, int n_levels,
                      bool two_d) {
  (void)n_levels;
  Grid grid(coords, levels);
  auto neighbors = neighbor_offsets(two_d);
  std::map<std::pair<int, int>, double> zones;  // (level, size) -> count
  std::unordered_map<uint64_t, bool> visited;
  std::vector<RoiVoxel> sorted = coords;
  std::vector<size_t> order(coords.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return coords[a] < coords[b];
  });
  auto vkey = [&](const RoiVoxel& v) {
    return Grid::key(static_cast<uint64_t>(v.x - grid.min_x),
                     static_cast<uint64_t>(v.y - grid.min_y),
                     static_cast<uint64_t>(v.z - grid.min_z));
  };
  for (size_t oi : order) {
    const RoiVoxel& start = coords[oi];
    if (visited[vkey(start)]) continue;
    int level = levels[oi];
    int size = 0;
    std::deque<RoiVoxel> queue{start};
    visited[vkey(start)] = true;
    while (!queue.empty()) {
      RoiVoxel v = queue.front();
      queue.pop_front();
      ++size;
      for (const auto& d : neighbors) {
        RoiVoxel w{v.x + d.dx, v.y + d.dy, v.z + d.dz};
        if (grid.level(w.x, w.y, w.z) != level) continue;
        auto k = vkey(w);
        if (visited[k]) continue;
        visited[k] = true;
        queue.push_back(w);
      }
    }
    zones[{level, size}] += 1.0;
  }

  FeatureMap f;
  double nz = 0;
  std::map<int, double> by_level, by_size;
  for (const auto& [key, c] : zones) {
    nz += c;
    by_level[key.first] += c;
    by_size[key.second] += c;
  }
  auto sum_weighted = [&](auto&& weight) {
    double s = 0;
    for (const auto& [key, c] : zones) s += c * weight(key.first, key.second);
    return s;
  };
  double gln = 0, szn = 0;
  for (const auto& [l, c] : by_level) gln += c * c;
  for (const auto& [s, c] : by_size) szn += c * c;
  double mu_g = sum_weighted([](int g, int s) { return g; }) / nz;
  double mu_s = sum_weighted([](int g, int s) { return s; }) / nz;
  f["small_area_emphasis"] =
      sum_weighted([](int g, int s) { return 1.0 / (double(s) * s); }) / nz;
  f["large_area_emphasis"] =
      sum_weighted([](int g, int s) { return double(s) * s; }) / nz;
  f["gray_level_nonuniformity"] = gln / nz;
  f["gray_level_nonuniformity_normalized"] = gln / (nz * nz);
  f["size_zone_nonuniformity"] = szn / nz;
  f["size_zone_nonuniformity_normalized"] = szn / (nz * nz);
  f["zone_percentage"] = nz / static_cast<double>(coords.size());
  f["gray_level_variance"] =
      sum_weighted([&](int g, int s) { return (g - mu_g) * (g - mu_g); }) / nz;
  f["zone_variance"] =
      sum_weighted([&](int g, int s) { return (s - mu_s) * (s - mu_s); }) / nz;
  double entropy = 0;
  for (const auto& [key, c] : zones) {
    double p = c / nz;
    entropy -= p * log2_of(p);
  }
  f["zone_entropy"] = entropy;
  f["low_gray_level_zone_emphasis"] =
      sum_weighted([](int g, int s) { return 1.0 / (double(g) * g); }) / nz;
  f["high_gray_level_zone_emphasis"] =
      sum_weighted([](int g, int s) { return double(g) * g; }) / nz;
  f["small_area_low_gray_level_emphasis"] =
      sum_weighted([](int g, int s) { return 1.0 / (double(g) * g * s * s); }) / nz;
  f["small_area_high_gray_level_emphasis"] =
      sum_weighted([](int g, int s) { return double(g) * g / (double(s) * s); }) / nz;
  f["large_area_low_gray_level_emphasis"] =
      sum_weighted([](int g, int s) { return double(s) * s / (double(g) * g); }) / nz;
  f["large_area_high_gray_level_emphasis"] =
      sum_weighted([](int g, int s) { return double(g) * g * s * s; }) / nz;
  return f;
}

// --------------------------------------------------------------------- GLDM

FeatureMap gldm_core(const std::vector<RoiVoxel>& coords,
                     const std::vector<int>& levels, int n_levels, int alpha,
                     bool two_d) {
  (void)n_levels;
  Grid grid(coords, levels);
  auto neighbors = neighbor_offsets(two_d);
  std::map<std::pair<int, int>, double> dep;  // (level, dependence) -> count
  for (size_t i = 0; i < coords.size(); ++i) {
    int count = 0;
    for (const auto& d : neighbors) {
      int other = grid.level(coords[i].x + d.dx, coords[i].y + d.dy,
                             coords[i].z + d.dz);
      if (other != 0 && std::abs(other - levels[i]) <= alpha) ++count;
    }
    dep[{levels[i], count + 1}] += 1.0;
  }

  FeatureMap f;
  double nz = static_cast<double>(coords.size());
  std::map<int, double> by_level, by_dep;
  for (const auto& [key, c] : dep) {
    by_level[key.first] += c;
    by_dep[key.second] += c;
  }
  auto sum_weighted = [&](auto&& weight) {
    double s = 0;
    for (const auto& [key, c] : dep) s += c * weight(key.first, key.second);
    return s;
  };
  double gln = 0, dn = 0;
  for (const auto& [l, c] : by_level) gln += c * c;
  for (const auto& [j, c] : by_dep) dn += c * c;
  double mu_g = sum_weighted([](int g, int j) { return g; }) / nz;
  double mu_d = sum_weighted([](int g, int j) { return j; }) / nz;
  f["small_dependence_emphasis"] =
      sum_weighted([](int g, int j) { return 1.0 / (double(j) * j); }) / nz;
  f["large_dependence_emphasis"] =
      sum_weighted([](int g, int j) { return double(j) * j; }) / nz;
  f["gray_level_nonuniformity"] = gln / nz;
  f["dependence_nonuniformity"] = dn / nz;
  f["dependence_nonuniformity_normalized"] = dn / (nz * nz);
  f["gray_level_variance"] =
      sum_weighted([&](int g, int j) { return (g - mu_g) * (g - mu_g); }) / nz;
  f["dependence_variance"] =
      sum_weighted([&](int g, int j) { return (j - mu_d) * (j - mu_d); }) / nz;
  double entropy = 0;
  for (const auto& [key, c] : dep) {
    double p = c / nz;
    entropy -= p * log2_of(p);
  }
  f["dependence_entropy"] = entropy;
  f["low_gray_level_emphasis"] =
      sum_weighted([](int g, int j) { return 1.0 / (double(g) * g); }) / nz;
  f["high_gray_level_emphasis"] =
      sum_weighted([](int g, int j) { return double(g) * g; }) / nz;
  f["small_dependence_low_gray_level_emphasis"] =
      sum_weighted([](int g, int j) { return 1.0 / (double(g) * g * j * j); }) / nz;
  f["small_dependence_high_gray_level_emphasis"] =
      sum_weighted([](int g, int j) { return double(g) * g / (double(j) * j); }) / nz;
  f["large_dependence_low_gray_level_emphasis"] =
      sum_weighted([](int g, int j) { return double(j) * j / (double(g) * g); }) / nz;
  f["large_dependence_high_gray_level_emphasis"] =
      sum_weighted([](int g, int j) { return double(g) * g * j * j; }) / nz;
  return f;
}

// -------------------------------------------------------------------- NGTDM

FeatureMap ngtdm_core(const std::vector<RoiVoxel>& coords,
                      const std::vector<int>& levels, int n_levels,
                      bool two_d) {
  Grid grid(coords, levels);
  auto neighbors = neighbor_offsets(two_d);
  std::vector<double> s(static_cast<size_t>(n_levels) + 1, 0.0);
  std::vector<double> n_count(static_cast<size_t>(n_levels) + 1, 0.0);
  for (size_t i = 0; i < coords.size(); ++i) {
    n_count[levels[i]] += 1.0;
    double sum = 0.0;
    int valid = 0;
    for (const auto& d : neighbors) {
      int other = grid.level(coords[i].x + d.dx, coords[i].y + d.dy,
                             coords[i].z + d.dz);
      if (other != 0) {
        sum += other;
        ++valid;
      }
    }
    if (valid > 0) {
      s[levels[i]] += std::abs(levels[i] - sum / valid);
    }
  }
  double n_total = static_cast<double>(coords.size());
  std::vector<int> present;
  for (int i = 1; i <= n_levels; ++i) {
    if (n_count[i] > 0) present.push_back(i);
  }
  auto p = [&](int i) { return n_count[i] / n_total; };

  FeatureMap f;
  double coarse_den = 0, s_total = 0;
  for (int i : present) {
    coarse_den += p(i) * s[i];
    s_total += s[i];
  }
  f["coarseness"] = coarse_den > 1e-15 ? 1.0 / coarse_den : kDegenerateSentinel;

  size_t ngp = present.size();
  if (ngp > 1) {
    double pij = 0;
    for (int i : present) {
      for (int j : present) pij += p(i) * p(j) * (i - j) * (i - j);
    }
    f["contrast"] = (pij / (static_cast<double>(ngp) * (ngp - 1))) *
                    (s_total / n_total);
  } else {
    f["contrast"] = kDegenerateSentinel;
  }

  double busy_den = 0;
  for (int i : present) {
    for (int j : present) {
      if (i != j) busy_den += std::abs(i * p(i) - j * p(j));
    }
  }
  f["busyness"] = busy_den > 1e-15 ? coarse_den / busy_den : kDegenerateSentinel;

  double complexity = 0;
  for (int i : present) {
    for (int j : present) {
      complexity += std::abs(i - j) * (p(i) * s[i] + p(j) * s[j]) /
                    (p(i) + p(j));
    }
  }
  f["complexity"] = complexity / n_total;

  if (s_total > 1e-15) {
    double num = 0;
    for (int i : present) {
      for (int j : present) num += (p(i) + p(j)) * (i - j) * (i - j);
    }
    f["strength"] = num / s_total;
  } else {
    f["strength"] = kDegenerateSentinel;
  }
  return f;
}

// 2D slice-wise dispatch: compute per z slice, aggregate by unweighted mean
template <typename Fn>
FeatureMap slicewise(const DiscretizedRoi& roi, Fn&& per_slice) {
  std::map<int, std::vector<size_t>> slices;
  for (size_t i = 0; i < roi.coords.size(); ++i) {
    slices[roi.coords[i].z].push_back(i);
  }
  std::vector<FeatureMap> maps;
  for (const auto& [z, idx] : slices) {
    std::vector<RoiVoxel> coords;
    std::vector<int> levels;
    for (size_t i : idx) {
      coords.push_back(roi.coords[i]);
      levels.push_back(roi.levels[i]);
    }
    maps.push_back(per_slice(coords, levels));
  }
  return mean_of_maps(maps);
}

}  // namespace

std::map<std::string, double> first_order_features(
    const std::vector<double>& intensities, const DiscretizedRoi& roi,
    double voxel_volume) {
  if (intensities.empty()) throw std::runtime_error("empty ROI");
  FeatureMap f;
  size_t n = intensities.size();
  double energy = 0, sum = 0;
  for (double v : intensities) {
    energy += v * v;
    sum += v;
  }
  double mean = sum / static_cast<double>(n);
  std::vector<double> sorted = intensities;
  std::sort(sorted.begin(), sorted.end());
  double p10 = quantile_sorted(sorted, 0.10);
  double p90 = quantile_sorted(sorted, 0.90);
  double q1 = quantile_sorted(sorted, 0.25);
  double q3 = quantile_sorted(sorted, 0.75);
  double m2 = 0, m3 = 0, m4 = 0, mad = 0;
  for (double v : intensities) {
    double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  mad /= static_cast<double>(n);
  std::vector<double> robust;
  for (double v : intensities) {
    if (v >= p10 && v <= p90) robust.push_back(v);
  }
  double rmad = 0;
  if (!robust.empty()) {
    double rmean = mean_of(robust);
    for (double v : robust) rmad += std::abs(v - rmean);
    rmad /= static_cast<double>(robust.size());
  }
  std::vector<double> level_p(static_cast<size_t>(roi.n_levels) + 1, 0.0);
  for (int level : roi.levels) {
    level_p[level] += 1.0 / static_cast<double>(roi.levels.size());
  }
  double entropy = 0, uniformity = 0;
  for (double p : level_p) {
    if (p > 0) {
      entropy -= p * log2_of(p);
      uniformity += p * p;
    }
  }
  f["energy"] = energy;
  f["total_energy"] = voxel_volume * energy;
  f["entropy"] = entropy;
  f["uniformity"] = uniformity;
  f["minimum"] = sorted.front();
  f["p10"] = p10;
  f["mean"] = mean;
  f["median"] = quantile_sorted(sorted, 0.5);
  f["p90"] = p90;
  f["maximum"] = sorted.back();
  f["iqr"] = q3 - q1;
  f["range"] = sorted.back() - sorted.front();
  f["mad"] = mad;
  f["rmad"] = rmad;
  f["rms"] = std::sqrt(energy / static_cast<double>(n));
  f["variance"] = m2;
  f["sd"] = std::sqrt(m2);
  f["skewness"] = m2 > 1e-30 ? m3 / std::pow(m2, 1.5) : 0.0;
  f["kurtosis"] = m2 > 1e-30 ? m4 / (m2 * m2) - 3.0 : 0.0;
  return f;
}

namespace {

// cyclic Jacobi eigenvalues of a symmetric 3x3, descending
std::array<double, 3> eigenvalues3(double a[3][3]) {
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-15) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-18) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < 3; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::array<double, 3> ev{a[0][0], a[1][1], a[2][2]};
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

}  // namespace

std::map<std::string, double> shape_features(
    const std::vector<RoiVoxel>& voxels,
    const std::array<double, 3>& spacing) {
  if (voxels.empty()) throw std::runtime_error("empty label");
  Grid grid(voxels, std::vector<int>(voxels.size(), 1));
  double sx = spacing[0], sy = spacing[1], sz = spacing[2];
  double voxel_volume = sx * sy * sz;
  double volume = static_cast<double>(voxels.size()) * voxel_volume;
  double face_x = sy * sz, face_y = sx * sz, face_z = sx * sy;
  double surface = 0.0;
  std::vector<RoiVoxel> surface_voxels;
  for (const auto& v : voxels) {
    double exposed = 0.0;
    if (grid.level(v.x - 1, v.y, v.z) == 0) exposed += face_x;
    if (grid.level(v.x + 1, v.y, v.z) == 0) exposed += face_x;
    if (grid.level(v.x, v.y - 1, v.z) == 0) exposed += face_y;
    if (grid.level(v.x, v.y + 1, v.z) == 0) exposed += face_y;
    if (grid.level(v.x, v.y, v.z - 1) == 0) exposed += face_z;
    if (grid.level(v.x, v.y, v.z + 1) == 0) exposed += face_z;
    surface += exposed;
    if (exposed > 0) surface_voxels.push_back(v);
  }

  std::sort(surface_voxels.begin(), surface_voxels.end());
  size_t step = (surface_voxels.size() + 1999) / 2000;
  if (step == 0) step = 1;
  std::vector<std::array<double, 3>> pts;
  for (size_t i = 0; i < surface_voxels.size(); i += step) {
    pts.push_back({surface_voxels[i].x * sx, surface_voxels[i].y * sy,
                   surface_voxels[i].z * sz});
  }
  double max_diam = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      double d2 = 0;
      for (int a = 0; a < 3; ++a) {
        d2 += (pts[i][a] - pts[j][a]) * (pts[i][a] - pts[j][a]);
      }
      max_diam = std::max(max_diam, std::sqrt(d2));
    }
  }

  // physical-coordinate covariance (population)
  double mean[3] = {0, 0, 0};
  for (const auto& v : voxels) {
    mean[0] += v.x * sx;
    mean[1] += v.y * sy;
    mean[2] += v.z * sz;
  }
  for (double& m : mean) m /= static_cast<double>(voxels.size());
  double cov[3][3] = {};
  for (const auto& v : voxels) {
    double d[3] = {v.x * sx - mean[0], v.y * sy - mean[1], v.z * sz - mean[2]};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) cov[i][j] += d[i] * d[j];
    }
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      cov[i][j] /= static_cast<double>(voxels.size());
    }
  }
  auto ev = eigenvalues3(cov);
  for (double& l : ev) l = std::max(0.0, l);

  std::map<std::string, double> f;
  f["volume"] = volume;
  f["surface_area"] = surface;
  f["sphericity"] =
      std::pow(M_PI, 1.0 / 3.0) * std::pow(6.0 * volume, 2.0 / 3.0) / surface;
  f["surface_to_volume"] = surface / volume;
  f["max_3d_diameter"] = max_diam;
  f["major_axis_length"] = 4.0 * std::sqrt(ev[0]);
  f["least_axis_length"] = 4.0 * std::sqrt(ev[2]);
  f["elongation"] = ev[0] > 1e-15 ? std::sqrt(ev[1] / ev[0]) : 1.0;
  f["flatness"] = ev[0] > 1e-15 ? std::sqrt(ev[2] / ev[0]) : 1.0;
  return f;
}

std::map<std::string, double> glcm_features(const DiscretizedRoi& roi,
                                            int distance, TextureMode mode) {
  if (mode == TextureMode::TwoDSlicewise) {
    return slicewise(roi, [&](const auto& c, const auto& l) {
      return glcm_core(c, l, roi.n_levels, true, distance);
    });
  }
  return glcm_core(roi.coords, roi.levels, roi.n_levels, false, distance);
}

std::map<std::string, double> glrlm_features(const DiscretizedRoi& roi,
                                             TextureMode mode) {
  if (mode == TextureMode::TwoDSlicewise) {
    return slicewise(roi, [&](const auto& c, const auto& l) {
      return glrlm_core(c, l, roi.n_levels, true);
    });
  }
  return glrlm_core(roi.coords, roi.levels, roi.n_levels, false);
}

std::map<std::string, double> glszm_features(const DiscretizedRoi& roi,
                                             TextureMode mode) {
  if (mode == TextureMode::TwoDSlicewise) {
    return slicewise(roi, [&](const auto& c, const auto& l) {
      return glszm_core(c, l, roi.n_levels, true);
    });
  }
  return glszm_core(roi.coords, roi.levels, roi.n_levels, false);
}

std::map<std::string, double> gldm_features(const DiscretizedRoi& roi,
                                            int alpha, TextureMode mode) {
  if (mode == TextureMode::TwoDSlicewise) {
    return slicewise(roi, [&](const auto& c, const auto& l) {
      return gldm_core(c, l, roi.n_levels, alpha, true);
    });
  }
  return gldm_core(roi.coords, roi.levels, roi.n_levels, alpha, false);
}

std::map<std::string, double> ngtdm_features(const DiscretizedRoi& roi,
                                             TextureMode mode) {
  if (mode == TextureMode::TwoDSlicewise) {
    return slicewise(roi, [&](const auto& c, const auto& l) {
      return ngtdm_core(c, l, roi.n_levels, true);
    });
  }
  return ngtdm_core(roi.coords, roi.levels, roi.n_levels, false);
}

}  // namespace agentml
