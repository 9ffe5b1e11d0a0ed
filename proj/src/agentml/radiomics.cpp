#include "agentml/radiomics.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "agentml/csv.hpp"
#include "agentml/texture.hpp"
#include "agentml/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace agentml {

namespace {

constexpr const char* kToolVersion = "agentml-radiomics/1.0";

TextureMode texture_mode(const ExtractionConfig& config) {
  return config.mode == "2d_slicewise" ? TextureMode::TwoDSlicewise
                                       : TextureMode::ThreeD;
}

bool wants(const ExtractionConfig& config, const std::string& cls) {
  return std::find(config.feature_classes.begin(), config.feature_classes.end(),
                   cls) != config.feature_classes.end();
}

void add_features(FeatureRow& row, const std::string& filter,
                  const std::string& cls,
                  const std::map<std::string, double>& values,
                  const ExtractionConfig& config) {
  for (const auto& [name, v] : values) {
    std::string full = filter + "_" + cls + "_" + name;
    if (!config.feature_allowlist.empty() &&
        std::find(config.feature_allowlist.begin(),
                  config.feature_allowlist.end(),
                  full) == config.feature_allowlist.end()) {
      continue;
    }
    row.features[full] = v;
  }
}

}  // namespace

CaseFeatures extract_case(const VolumeImage& image, const LabelMask& mask,
                          const ExtractionConfig& config,
                          const std::string& subject_id) {
  if (!geometry_matches(image, mask)) {
    throw std::runtime_error("image and mask geometry do not match for " +
                             subject_id);
  }
  VolumeImage working = image;
  LabelMask working_mask = mask;
  if (config.resample_spacing) {
    working = resample_isotropic(image, *config.resample_spacing,
                                 Interp::Trilinear);
    working_mask =
        resample_isotropic(mask, *config.resample_spacing, Interp::Nearest);
  }

  CaseFeatures result;
  result.subject_id = subject_id;
  auto present = working_mask.present_labels();
  std::vector<int> selected;
  if (config.labels.empty()) {
    selected = present;
  } else {
    for (int l : config.labels) {
      if (std::find(present.begin(), present.end(), l) != present.end()) {
        selected.push_back(l);
      } else {
        result.warnings.push_back("label " + std::to_string(l) +
                                  " absent from mask for " + subject_id);
      }
    }
    std::sort(selected.begin(), selected.end());
  }

  std::vector<std::pair<std::string, VolumeImage>> derived;
  for (const auto& filter : config.filters) {
    auto imgs = apply_filter(working, filter, config.log_sigmas);
    derived.insert(derived.end(), std::make_move_iterator(imgs.begin()),
                   std::make_move_iterator(imgs.end()));
  }
  std::sort(derived.begin(), derived.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double voxel_volume = working.spacing[0] * working.spacing[1] *
                        working.spacing[2];
  TextureMode mode = texture_mode(config);

  for (int label : selected) {
    std::vector<RoiVoxel> coords;
    for (size_t z = 0; z < working_mask.dims[2]; ++z) {
      for (size_t y = 0; y < working_mask.dims[1]; ++y) {
        for (size_t x = 0; x < working_mask.dims[0]; ++x) {
          if (working_mask.voxels[working_mask.index(x, y, z)] == label) {
            coords.push_back({static_cast<int>(x), static_cast<int>(y),
                              static_cast<int>(z)});
          }
        }
      }
    }
    std::map<std::string, double> shape;
    if (wants(config, "shape")) {
      shape = shape_features(coords, working_mask.spacing);
    }
    bool shape_attached = false;
    for (const auto& [filter_name, fimg] : derived) {
      FeatureRow row;
      row.label = label;
      row.filter = filter_name;
      std::vector<double> intensities;
      intensities.reserve(coords.size());
      for (const auto& c : coords) {
        intensities.push_back(fimg.at(c.x, c.y, c.z));
      }
      // gray levels are rebuilt per derived image from its own ROI minimum
      DiscretizedRoi roi = discretize(coords, intensities, config.bin_width);
      if (wants(config, "firstorder")) {
        add_features(row, filter_name, "firstorder",
                     first_order_features(intensities, roi, voxel_volume),
                     config);
      }
      if (wants(config, "glcm")) {
        add_features(row, filter_name, "glcm", glcm_features(roi, 1, mode),
                     config);
      }
      if (wants(config, "glrlm")) {
        add_features(row, filter_name, "glrlm", glrlm_features(roi, mode),
                     config);
      }
      if (wants(config, "glszm")) {
        add_features(row, filter_name, "glszm", glszm_features(roi, mode),
                     config);
      }
      if (wants(config, "gldm")) {
        add_features(row, filter_name, "gldm", gldm_features(roi, 0, mode),
                     config);
      }
      if (wants(config, "ngtdm")) {
        add_features(row, filter_name, "ngtdm", ngtdm_features(roi, mode),
                     config);
      }
      // shape depends only on the unfiltered mask: attach it once per label,
      // on the first derived image's row
      if (!shape.empty() && !shape_attached) {
        add_features(row, "original", "shape", shape, config);
        shape_attached = true;
      }
      result.rows.push_back(std::move(row));
    }
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const FeatureRow& a, const FeatureRow& b) {
              if (a.label != b.label) return a.label < b.label;
              return a.filter < b.filter;
            });
  return result;
}

namespace {

std::string strip_nifti_ext(const std::string& filename) {
  std::string s = filename;
  if (s.ends_with(".gz")) s = s.substr(0, s.size() - 3);
  if (s.ends_with(".nii")) s = s.substr(0, s.size() - 4);
  return s;
}

std::optional<std::string> find_image_for(const fs::path& image_dir,
                                          const std::string& case_name) {
  for (const std::string& stem : {case_name, case_name + "_0000"}) {
    for (const char* ext : {".nii.gz", ".nii"}) {
      fs::path p = image_dir / (stem + ext);
      if (fs::exists(p)) return p.string();
    }
  }
  return std::nullopt;
}

nlohmann::json config_json(const ExtractionConfig& config) {
  nlohmann::json j;
  j["filters"] = config.filters;
  j["log_sigmas"] = config.log_sigmas;
  j["feature_classes"] = config.feature_classes;
  j["bin_width"] = config.bin_width;
  if (config.resample_spacing) {
    j["resample_spacing"] = *config.resample_spacing;
  } else {
    j["resample_spacing"] = nullptr;
  }
  j["mode"] = config.mode;
  j["labels"] = config.labels;
  j["workers"] = config.workers;
  if (config.targets_csv) {
    j["targets_csv"] = *config.targets_csv;
    j["id_column"] = config.id_column;
  }
  j["feature_allowlist"] = config.feature_allowlist;
  j["tool_version"] = kToolVersion;
  return j;
}

}  // namespace

BatchResult extract_batch(const std::string& image_dir,
                          const std::string& mask_dir,
                          const ExtractionConfig& config,
                          const std::string& output_dir) {
  if (!fs::is_directory(image_dir)) {
    throw std::runtime_error("image directory not found: " + image_dir);
  }
  if (!fs::is_directory(mask_dir)) {
    throw std::runtime_error("mask directory not found: " + mask_dir);
  }
  BatchResult result;

  struct Task {
    std::string case_name;
    std::string image_path;
    std::string mask_path;
  };
  std::vector<Task> tasks;
  std::vector<std::string> mask_files;
  for (const auto& entry : fs::directory_iterator(mask_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (!(name.ends_with(".nii") || name.ends_with(".nii.gz"))) continue;
    mask_files.push_back(name);
  }
  std::sort(mask_files.begin(), mask_files.end());
  for (const auto& name : mask_files) {
    std::string case_name = strip_nifti_ext(name);
    auto image = find_image_for(image_dir, case_name);
    if (!image) {
      result.unpaired_masks.push_back(name);
      continue;
    }
    tasks.push_back({case_name, *image, (fs::path(mask_dir) / name).string()});
  }
  if (tasks.empty()) {
    throw std::runtime_error("no image/mask pairs found");
  }

  struct CaseOutcome {
    bool ok = false;
    CaseFeatures features;
    std::string error;
  };
  std::vector<CaseOutcome> outcomes(tasks.size());
  size_t workers = std::max<size_t>(1, config.workers);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        VolumeImage image = image_from_nifti(read_nifti(tasks[i].image_path));
        LabelMask mask = mask_from_nifti(read_nifti(tasks[i].mask_path));
        outcomes[i].features =
            extract_case(image, mask, config, tasks[i].case_name);
        outcomes[i].ok = true;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // assemble per-label tables: one row per subject, feature columns merged
  // across that subject's filter rows
  std::map<int, std::map<std::string, std::map<std::string, double>>> by_label;
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (!outcomes[i].ok) {
      result.failures.push_back({tasks[i].case_name, outcomes[i].error});
      continue;
    }
    for (const auto& w : outcomes[i].features.warnings) {
      result.warnings.push_back(w);
    }
    for (const auto& row : outcomes[i].features.rows) {
      auto& dest = by_label[row.label][outcomes[i].features.subject_id];
      dest.insert(row.features.begin(), row.features.end());
    }
  }

  fs::create_directories(output_dir);
  for (const auto& [label, subjects] : by_label) {
    std::set<std::string> columns;
    for (const auto& [sid, feats] : subjects) {
      for (const auto& [name, v] : feats) columns.insert(name);
    }
    CsvDocument doc;
    doc.header = {"subject_id", "label"};
    doc.header.insert(doc.header.end(), columns.begin(), columns.end());
    for (const auto& [sid, feats] : subjects) {
      std::vector<std::string> row{sid, std::to_string(label)};
      for (const auto& col : columns) {
        auto it = feats.find(col);
        row.push_back(it != feats.end() ? format_double(it->second) : "");
      }
      doc.rows.push_back(std::move(row));
    }
    std::string path =
        (fs::path(output_dir) / ("features_label_" + std::to_string(label) + ".csv"))
            .string();
    write_csv_file(path, doc);
    result.csv_paths.push_back(path);
  }

  result.params_path =
      (fs::path(output_dir) / "extraction_params.json").string();
  write_file(result.params_path, config_json(config).dump(2) + "\n");

  if (config.targets_csv) {
    for (const auto& csv : result.csv_paths) {
      std::string merged =
          csv.substr(0, csv.size() - 4) + "_with_targets.csv";
      MergeResult m =
          merge_targets(csv, *config.targets_csv, config.id_column, merged);
      result.merged_paths.push_back(m.output_path);
      if (m.unmatched_rows > 0) {
        result.warnings.push_back(std::to_string(m.unmatched_rows) +
                                  " feature rows without targets in " + csv);
      }
    }
  }

  std::ostringstream report;
  report << "# Radiomics extraction report\n\n";
  report << "- cases processed: " << tasks.size() - result.failures.size()
         << " of " << tasks.size() << "\n";
  report << "- labels: ";
  bool first = true;
  for (const auto& [label, _] : by_label) {
    if (!first) report << ", ";
    report << label;
    first = false;
  }
  report << "\n\n## Successes\n\n";
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (outcomes[i].ok) report << "- " << tasks[i].case_name << "\n";
  }
  report << "\n## Failures\n\n";
  if (result.failures.empty()) report << "(none)\n";
  for (const auto& [name, why] : result.failures) {
    report << "- " << name << ": " << why << "\n";
  }
  report << "\n## Unpaired masks\n\n";
  if (result.unpaired_masks.empty()) report << "(none)\n";
  for (const auto& name : result.unpaired_masks) {
    report << "- " << name << "\n";
  }
  if (!result.warnings.empty()) {
    report << "\n## Warnings\n\n";
    for (const auto& w : result.warnings) report << "- " << w << "\n";
  }
  result.report_path = (fs::path(output_dir) / "report.md").string();
  write_file(result.report_path, report.str());
  return result;
}

MergeResult merge_targets(const std::string& features_csv,
                          const std::string& targets_csv,
                          const std::string& id_column,
                          const std::string& output_path) {
  CsvDocument features = read_csv_file(features_csv);
  CsvDocument targets = read_csv_file(targets_csv);
  auto id_it =
      std::find(targets.header.begin(), targets.header.end(), id_column);
  if (id_it == targets.header.end()) {
    throw std::runtime_error("id column not found in targets: " + id_column);
  }
  size_t id_idx = static_cast<size_t>(id_it - targets.header.begin());
  std::map<std::string, const std::vector<std::string>*> by_id;
  for (const auto& row : targets.rows) {
    if (!by_id.emplace(row[id_idx], &row).second) {
      throw std::runtime_error("ambiguous target id: " + row[id_idx]);
    }
  }
  CsvDocument out;
  out.header = features.header;
  for (size_t c = 0; c < targets.header.size(); ++c) {
    if (c != id_idx) out.header.push_back(targets.header[c]);
  }
  MergeResult result;
  for (const auto& row : features.rows) {
    std::vector<std::string> merged = row;
    auto it = by_id.find(row[0]);
    if (it == by_id.end()) ++result.unmatched_rows;
    for (size_t c = 0; c < targets.header.size(); ++c) {
      if (c == id_idx) continue;
      merged.push_back(it != by_id.end() ? (*it->second)[c] : "");
    }
    out.rows.push_back(std::move(merged));
  }
  write_csv_file(output_path, out);
  result.output_path = output_path;
  return result;
}

}  // namespace agentml
