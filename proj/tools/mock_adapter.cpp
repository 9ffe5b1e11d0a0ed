// Stand-in for the external segmentation and CNN programs. It honors the
// same command lines as the real integrations but produces small,
// deterministic outputs so pipelines can run offline and in CI.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "agentml/nifti.hpp"
#include "agentml/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using agentml::NiftiVolume;

namespace {

std::map<std::string, std::string> parse_flags(int argc, char** argv,
                                               int first) {
  std::map<std::string, std::string> flags;
  for (int i = first; i < argc; ++i) {
    std::string arg = argv[i];
    if (!arg.starts_with("--")) {
      std::fprintf(stderr, "unexpected argument: %s\n", arg.c_str());
      std::exit(2);
    }
    size_t eq = arg.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "flag needs a value: %s\n", arg.c_str());
      std::exit(2);
    }
    flags[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
  }
  return flags;
}

std::string need(const std::map<std::string, std::string>& flags,
                 const std::string& name) {
  auto it = flags.find(name);
  if (it == flags.end()) {
    std::fprintf(stderr, "missing required flag --%s\n", name.c_str());
    std::exit(2);
  }
  return it->second;
}

std::string opt(const std::map<std::string, std::string>& flags,
                const std::string& name, const std::string& def) {
  auto it = flags.find(name);
  return it == flags.end() ? def : it->second;
}

// Marks every voxel inside the central sphere whose intensity clears the
// volume mean; empty results fall back to the plain sphere.
NiftiVolume sphere_mask(const NiftiVolume& image, int label) {
  NiftiVolume mask = image;
  double mean = 0;
  for (double v : image.voxels) mean += v;
  mean /= static_cast<double>(image.voxels.empty() ? 1 : image.voxels.size());
  double cx = (static_cast<double>(image.dims[0]) - 1) / 2;
  double cy = (static_cast<double>(image.dims[1]) - 1) / 2;
  double cz = (static_cast<double>(image.dims[2]) - 1) / 2;
  double radius =
      std::max(1.0, static_cast<double>(*std::min_element(
                        image.dims.begin(), image.dims.end())) /
                        3.0);
  size_t marked = 0;
  for (size_t z = 0; z < image.dims[2]; ++z) {
    for (size_t y = 0; y < image.dims[1]; ++y) {
      for (size_t x = 0; x < image.dims[0]; ++x) {
        double dx = static_cast<double>(x) - cx;
        double dy = static_cast<double>(y) - cy;
        double dz = static_cast<double>(z) - cz;
        bool inside = dx * dx + dy * dy + dz * dz <= radius * radius;
        size_t i = image.index(x, y, z);
        bool on = inside && image.voxels[i] >= mean;
        mask.voxels[i] = on ? label : 0;
        if (on) ++marked;
      }
    }
  }
  if (marked == 0) {
    for (size_t z = 0; z < image.dims[2]; ++z) {
      for (size_t y = 0; y < image.dims[1]; ++y) {
        for (size_t x = 0; x < image.dims[0]; ++x) {
          double dx = static_cast<double>(x) - cx;
          double dy = static_cast<double>(y) - cy;
          double dz = static_cast<double>(z) - cz;
          size_t i = image.index(x, y, z);
          mask.voxels[i] =
              dx * dx + dy * dy + dz * dz <= radius * radius ? label : 0;
        }
      }
    }
  }
  return mask;
}

std::vector<std::string> list_volumes(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) {
    std::fprintf(stderr, "directory does not exist: %s\n", dir.c_str());
    std::exit(2);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (entry.is_regular_file() &&
        (name.ends_with(".nii") || name.ends_with(".nii.gz"))) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Small stable hash so per-architecture metrics differ but never change.
double pseudo_metric(const std::string& key, double lo, double hi) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : key) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  double unit = static_cast<double>(h % 10000) / 10000.0;
  return lo + unit * (hi - lo);
}

int run_nnunet_train(const std::map<std::string, std::string>& flags) {
  std::string dataset_dir = need(flags, "dataset-dir");
  std::string configuration = need(flags, "configuration");
  std::string fold = need(flags, "fold");
  if (!fs::is_directory(dataset_dir)) {
    std::fprintf(stderr, "dataset directory does not exist: %s\n",
                 dataset_dir.c_str());
    return 2;
  }
  fs::path out = fs::path("nnunet_train") / configuration / ("fold_" + fold);
  fs::create_directories(out);
  agentml::write_file((out / "checkpoint_final.model").string(),
                      "mock segmentation weights " + configuration + " fold " +
                          fold + "\n");
  nlohmann::json metrics;
  metrics["mean_dice"] = pseudo_metric("dice" + configuration + fold, 0.82, 0.95);
  metrics["mean_iou"] = pseudo_metric("iou" + configuration + fold, 0.70, 0.90);
  metrics["validation_loss"] =
      pseudo_metric("loss" + configuration + fold, 0.05, 0.30);
  metrics["epochs"] = 100;
  agentml::write_file((out / "training_metrics.json").string(),
                      metrics.dump(2) + "\n");
  std::printf("trained %s fold %s on %s\n", configuration.c_str(),
              fold.c_str(), dataset_dir.c_str());
  return 0;
}

int run_nnunet_infer(const std::map<std::string, std::string>& flags) {
  std::string input_dir = need(flags, "input-dir");
  std::string output_dir = need(flags, "output-dir");
  fs::create_directories(output_dir);
  nlohmann::json summary;
  summary["dataset_id"] = need(flags, "dataset-id");
  summary["configuration"] = need(flags, "configuration");
  summary["fold"] = need(flags, "fold");
  summary["tta"] = opt(flags, "tta", "false");
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& file : list_volumes(input_dir)) {
    NiftiVolume image = agentml::read_nifti(file);
    std::string stem = fs::path(file).filename().string();
    if (stem.ends_with(".nii.gz")) stem.resize(stem.size() - 7);
    if (stem.ends_with(".nii")) stem.resize(stem.size() - 4);
    if (stem.ends_with("_0000")) stem.resize(stem.size() - 5);
    std::string mask_path =
        (fs::path(output_dir) / (stem + ".nii.gz")).string();
    agentml::write_nifti(mask_path, sphere_mask(image, 1));
    cases.push_back({{"case", stem}, {"mask", mask_path}});
  }
  summary["cases"] = cases;
  agentml::write_file(
      (fs::path(output_dir) / "inference_summary.json").string(),
      summary.dump(2) + "\n");
  std::printf("segmented %zu cases into %s\n", cases.size(),
              output_dir.c_str());
  return 0;
}

int run_totalseg(const std::map<std::string, std::string>& flags) {
  std::string input_path = need(flags, "input");
  std::string output_dir = need(flags, "output-dir");
  std::string task = opt(flags, "task", "total");
  std::string roi_csv = opt(flags, "roi-subset", "");
  bool multilabel = opt(flags, "multilabel", "false") == "true";
  if (!fs::exists(input_path)) {
    std::fprintf(stderr, "input volume does not exist: %s\n",
                 input_path.c_str());
    return 2;
  }
  fs::create_directories(output_dir);
  NiftiVolume image = agentml::read_nifti(input_path);
  std::vector<std::string> rois =
      roi_csv.empty() ? std::vector<std::string>{"structure_1", "structure_2"}
                      : agentml::split(roi_csv, ',');

  NiftiVolume combined = image;
  std::fill(combined.voxels.begin(), combined.voxels.end(), 0.0);
  for (size_t r = 0; r < rois.size(); ++r) {
    // Shift each structure's sphere along z so labels do not overlap.
    NiftiVolume mask = sphere_mask(image, static_cast<int>(r + 1));
    size_t shift = (r * image.dims[2]) / (2 * std::max<size_t>(rois.size(), 1));
    for (size_t z = 0; z < image.dims[2]; ++z) {
      size_t src_z = (z + shift) % image.dims[2];
      for (size_t y = 0; y < image.dims[1]; ++y) {
        for (size_t x = 0; x < image.dims[0]; ++x) {
          double v = mask.voxels[mask.index(x, y, src_z)];
          if (v > 0 && combined.voxels[combined.index(x, y, z)] == 0) {
            combined.voxels[combined.index(x, y, z)] = v;
          }
        }
      }
    }
    if (!multilabel) {
      NiftiVolume single = combined;
      for (auto& v : single.voxels) v = v == static_cast<double>(r + 1) ? 1 : 0;
      agentml::write_nifti(
          (fs::path(output_dir) /
           (agentml::sanitize_filename(rois[r]) + ".nii.gz"))
              .string(),
          single);
    }
  }
  agentml::write_nifti(
      (fs::path(output_dir) / "segmentation.nii.gz").string(), combined);
  std::printf("task %s produced %zu structures in %s\n", task.c_str(),
              rois.size(), output_dir.c_str());
  return 0;
}

int run_image_train(const std::map<std::string, std::string>& flags) {
  std::string data_dir = need(flags, "data-dir");
  std::string architecture = need(flags, "architecture");
  std::string output_dir = need(flags, "output-dir");
  if (!fs::is_directory(data_dir)) {
    std::fprintf(stderr, "data directory does not exist: %s\n",
                 data_dir.c_str());
    return 2;
  }
  fs::create_directories(output_dir);
  nlohmann::json checkpoint;
  checkpoint["architecture"] = architecture;
  checkpoint["num_classes"] = std::stoi(need(flags, "num-classes"));
  checkpoint["input_size"] = architecture == "inceptionv3" ? 299 : 224;
  checkpoint["pretrained"] = opt(flags, "pretrained", "true") == "true";
  checkpoint["weights_sha256"] =
      agentml::sha256_hex("mock weights " + architecture);
  agentml::write_file(
      (fs::path(output_dir) / "model_checkpoint.json").string(),
      checkpoint.dump(2) + "\n");
  nlohmann::json metrics;
  metrics["best_val_accuracy"] = pseudo_metric("acc" + architecture, 0.80, 0.99);
  metrics["best_val_loss"] = pseudo_metric("vloss" + architecture, 0.05, 0.40);
  metrics["epochs_trained"] =
      std::min(std::stoi(opt(flags, "epochs", "100")),
               5 + static_cast<int>(pseudo_metric("ep" + architecture, 0, 20)));
  agentml::write_file(
      (fs::path(output_dir) / "training_metrics.json").string(),
      metrics.dump(2) + "\n");
  std::printf("trained %s on %s\n", architecture.c_str(), data_dir.c_str());
  return 0;
}

int run_image_infer(const std::map<std::string, std::string>& flags) {
  std::string model_path = need(flags, "model-path");
  std::string input_dir = need(flags, "input-dir");
  std::string output_dir = need(flags, "output-dir");
  int num_classes = std::stoi(need(flags, "num-classes"));
  if (!fs::exists(model_path)) {
    std::fprintf(stderr, "model checkpoint does not exist: %s\n",
                 model_path.c_str());
    return 2;
  }
  if (!fs::is_directory(input_dir)) {
    std::fprintf(stderr, "input directory does not exist: %s\n",
                 input_dir.c_str());
    return 2;
  }
  fs::create_directories(output_dir);
  std::vector<std::string> images;
  for (const auto& entry : fs::directory_iterator(input_dir)) {
    if (entry.is_regular_file()) {
      images.push_back(entry.path().filename().string());
    }
  }
  std::sort(images.begin(), images.end());

  std::map<std::string, std::string> gt;
  std::string gt_csv = opt(flags, "gt-csv", "");
  if (!gt_csv.empty()) {
    std::string text = agentml::read_file(gt_csv);
    bool header = true;
    for (const auto& line : agentml::split(text, '\n')) {
      if (line.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      auto cells = agentml::split(line, ',');
      if (cells.size() >= 2) gt[cells[0]] = agentml::trim(cells[1]);
    }
  }

  std::string csv = "image,predicted_class";
  for (int c = 0; c < num_classes; ++c) {
    csv += ",prob_" + std::to_string(c);
  }
  csv += "\n";
  size_t correct = 0, evaluated = 0;
  for (const auto& image : images) {
    int predicted = static_cast<int>(
        pseudo_metric(image, 0, static_cast<double>(num_classes) - 1e-9));
    csv += image + "," + std::to_string(predicted);
    for (int c = 0; c < num_classes; ++c) {
      double p = c == predicted ? 0.7 : 0.3 / std::max(1, num_classes - 1);
      csv += "," + agentml::format_double(p);
    }
    csv += "\n";
    auto it = gt.find(image);
    if (it != gt.end()) {
      ++evaluated;
      if (it->second == std::to_string(predicted)) ++correct;
    }
  }
  agentml::write_file((fs::path(output_dir) / "predictions.csv").string(),
                      csv);
  if (!gt_csv.empty()) {
    double accuracy =
        evaluated ? static_cast<double>(correct) / evaluated : 0.0;
    agentml::write_file(
        (fs::path(output_dir) / "metrics.csv").string(),
        "metric,value\naccuracy," + agentml::format_double(accuracy) + "\n");
  }
  std::printf("classified %zu images into %s\n", images.size(),
              output_dir.c_str());
  return 0;
}

int run_sleep(const std::map<std::string, std::string>& flags) {
  double seconds = std::stod(opt(flags, "seconds", "60"));
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr,
                 "usage: mock_adapter <nnunet-train|nnunet-infer|totalseg|"
                 "image-train|image-infer|sleep> --flag=value...\n");
    return 2;
  }
  std::string mode = argv[1];
  auto flags = parse_flags(argc, argv, 2);
  try {
    if (mode == "nnunet-train") return run_nnunet_train(flags);
    if (mode == "nnunet-infer") return run_nnunet_infer(flags);
    if (mode == "totalseg") return run_totalseg(flags);
    if (mode == "image-train") return run_image_train(flags);
    if (mode == "image-infer") return run_image_infer(flags);
    if (mode == "sleep") return run_sleep(flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  std::fprintf(stderr, "unknown mode: %s\n", mode.c_str());
  return 2;
}
