#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentml/volume.hpp"

namespace agentml {

struct ExtractionConfig {
  std::vector<std::string> filters{"original"};
  std::vector<double> log_sigmas;  // mm, consumed by the "log" filter
  std::vector<std::string> feature_classes{"firstorder", "shape",   "glcm",
                                           "glrlm",      "glszm",   "gldm",
                                           "ngtdm"};
  double bin_width = 25.0;
  std::optional<double> resample_spacing;  // isotropic mm
  std::string mode = "3d";                 // or "2d_slicewise"
  std::vector<int> labels;                 // empty = every present label
  size_t workers = 1;
  std::optional<std::string> targets_csv;
  std::string id_column = "subject_id";
  std::vector<std::string> feature_allowlist;  // full names; empty = all
};

struct FeatureRow {
  int label = 0;
  std::string filter;  // derived-image name, e.g. "original", "wavelet-LLH"
  std::map<std::string, double> features;  // <filter>_<class>_<feature>
};

struct CaseFeatures {
  std::string subject_id;
  std::vector<FeatureRow> rows;  // sorted by (label asc, filter asc)
  std::vector<std::string> warnings;
};

CaseFeatures extract_case(const VolumeImage& image, const LabelMask& mask,
                          const ExtractionConfig& config,
                          const std::string& subject_id);

struct BatchResult {
  std::vector<std::string> csv_paths;  // features_label_<L>.csv
  std::string params_path;             // extraction_params.json
  std::string report_path;             // report.md
  std::vector<std::string> merged_paths;
  std::vector<std::string> unpaired_masks;
  std::vector<std::pair<std::string, std::string>> failures;  // case, reason
  std::vector<std::string> warnings;
};

// Pairs every mask <case>.nii[.gz] in mask_dir with image <case>.nii[.gz] or
// <case>_0000.nii[.gz] in image_dir, extracts in parallel over `workers`, and
// writes per-label CSVs (rows sorted by subject_id), extraction_params.json,
// and report.md. Output bytes do not depend on the worker count.
BatchResult extract_batch(const std::string& image_dir,
                          const std::string& mask_dir,
                          const ExtractionConfig& config,
                          const std::string& output_dir);

struct MergeResult {
  std::string output_path;
  size_t unmatched_rows = 0;
};

// Left join of a features CSV (subject_id first column) with a targets CSV on
// id_column; unmatched feature rows keep blank targets and are counted.
MergeResult merge_targets(const std::string& features_csv,
                          const std::string& targets_csv,
                          const std::string& id_column,
                          const std::string& output_path);

}  // namespace agentml
