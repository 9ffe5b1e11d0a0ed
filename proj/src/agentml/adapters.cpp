#include "agentml/adapters.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "agentml/util.hpp"
#include "agentml/workspace.hpp"

namespace fs = std::filesystem;

namespace agentml {

namespace {

constexpr size_t kTailBytes = 4096;

ParamKind kind_from_name(const std::string& name) {
  if (name == "string") return ParamKind::String;
  if (name == "integer") return ParamKind::Integer;
  if (name == "float") return ParamKind::Float;
  if (name == "boolean") return ParamKind::Boolean;
  if (name == "path") return ParamKind::Path;
  if (name == "enum") return ParamKind::Enum;
  if (name == "list") return ParamKind::List;
  throw std::runtime_error("unknown parameter kind: " + name);
}

ParamSpec param_from_json(const nlohmann::json& j) {
  ParamSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.kind = kind_from_name(j.value("kind", "string"));
  if (j.contains("element_kind")) {
    spec.element_kind = kind_from_name(j["element_kind"].get<std::string>());
  }
  if (j.contains("enum_values")) {
    spec.enum_values = j["enum_values"].get<std::vector<std::string>>();
  }
  spec.required = j.value("required", false);
  if (j.contains("default")) spec.default_value = j["default"];
  spec.description = j.value("description", "");
  return spec;
}

nlohmann::json param_to_json(const ParamSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["kind"] = param_kind_name(spec.kind);
  if (spec.kind == ParamKind::List) {
    j["element_kind"] = param_kind_name(spec.element_kind);
  }
  if (spec.kind == ParamKind::Enum) j["enum_values"] = spec.enum_values;
  j["required"] = spec.required;
  if (spec.default_value) j["default"] = *spec.default_value;
  if (!spec.description.empty()) j["description"] = spec.description;
  return j;
}

std::string render_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ",";
      out += render_value(e);
    }
    return out;
  }
  return v.dump();
}

// Substitutes every {name} in the template; `complete` is cleared when a
// placeholder has no argument (absent optional parameter).
std::string resolve_token(const std::string& tmpl, const nlohmann::json& args,
                          bool* complete) {
  std::string out;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      size_t close = tmpl.find('}', i);
      if (close == std::string::npos) {
        out += tmpl.substr(i);
        break;
      }
      std::string name = tmpl.substr(i + 1, close - i - 1);
      if (args.contains(name)) {
        out += render_value(args[name]);
      } else if (complete) {
        *complete = false;
      } else {
        throw std::runtime_error("no argument for placeholder {" + name + "}");
      }
      i = close + 1;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::vector<std::string> placeholder_names(const std::string& tmpl) {
  std::vector<std::string> names;
  size_t i = 0;
  while ((i = tmpl.find('{', i)) != std::string::npos) {
    size_t close = tmpl.find('}', i);
    if (close == std::string::npos) break;
    names.push_back(tmpl.substr(i + 1, close - i - 1));
    i = close + 1;
  }
  return names;
}

void check_placeholders(const AdapterManifest& manifest) {
  std::set<std::string> declared;
  for (const auto& p : manifest.params) declared.insert(p.name);
  std::vector<std::string> all_templates = manifest.argv_template;
  all_templates.insert(all_templates.end(), manifest.expected_outputs.begin(),
                       manifest.expected_outputs.end());
  for (const auto& tmpl : all_templates) {
    for (const auto& name : placeholder_names(tmpl)) {
      if (!declared.count(name)) {
        throw std::runtime_error("manifest '" + manifest.tool_name +
                                 "' references undeclared parameter {" + name +
                                 "}");
      }
    }
  }
}

void append_tail(std::string& tail, const char* data, size_t n) {
  tail.append(data, n);
  if (tail.size() > kTailBytes) tail.erase(0, tail.size() - kTailBytes);
}

}  // namespace

AdapterManifest manifest_from_json(const nlohmann::json& j) {
  AdapterManifest m;
  m.tool_name = j.at("tool_name").get<std::string>();
  m.description = j.value("description", "");
  m.argv_template = j.at("argv_template").get<std::vector<std::string>>();
  if (m.argv_template.empty()) {
    throw std::runtime_error("manifest '" + m.tool_name +
                             "' has an empty argv template");
  }
  if (j.contains("params")) {
    for (const auto& p : j["params"]) m.params.push_back(param_from_json(p));
  }
  if (j.contains("expected_outputs")) {
    m.expected_outputs = j["expected_outputs"].get<std::vector<std::string>>();
  }
  m.timeout_s = j.value("timeout_s", 3600.0);
  if (m.timeout_s <= 0) {
    throw std::runtime_error("manifest '" + m.tool_name +
                             "' has a non-positive timeout");
  }
  if (j.contains("env_passthrough")) {
    m.env_passthrough = j["env_passthrough"].get<std::vector<std::string>>();
  }
  if (j.contains("success_exit_codes")) {
    m.success_exit_codes = j["success_exit_codes"].get<std::vector<int>>();
  }
  check_placeholders(m);
  return m;
}

nlohmann::json manifest_to_json(const AdapterManifest& manifest) {
  nlohmann::json j;
  j["tool_name"] = manifest.tool_name;
  j["description"] = manifest.description;
  j["argv_template"] = manifest.argv_template;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : manifest.params) params.push_back(param_to_json(p));
  j["params"] = params;
  j["expected_outputs"] = manifest.expected_outputs;
  j["timeout_s"] = manifest.timeout_s;
  j["env_passthrough"] = manifest.env_passthrough;
  j["success_exit_codes"] = manifest.success_exit_codes;
  return j;
}

std::vector<AdapterManifest> load_manifests(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("manifest directory does not exist: " + dir);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".manifest.json")) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<AdapterManifest> manifests;
  std::set<std::string> seen;
  for (const auto& file : files) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(file));
    } catch (const std::exception& e) {
      throw std::runtime_error("cannot parse " + file + ": " + e.what());
    }
    AdapterManifest m = manifest_from_json(j);
    if (!seen.insert(m.tool_name).second) {
      throw std::runtime_error("duplicate adapter tool name: " + m.tool_name);
    }
    manifests.push_back(std::move(m));
  }
  return manifests;
}

std::string substitute_placeholders(const std::string& tmpl,
                                    const nlohmann::json& args) {
  return resolve_token(tmpl, args, nullptr);
}

AdapterRunResult run_adapter(const AdapterManifest& manifest,
                             const nlohmann::json& args,
                             const std::string& workdir) {
  AdapterRunResult result;

  std::vector<std::string> argv;
  for (const auto& tmpl : manifest.argv_template) {
    bool complete = true;
    std::string token = resolve_token(tmpl, args, &complete);
    if (complete) argv.push_back(std::move(token));
  }
  if (argv.empty()) {
    result.message = "argv resolved to an empty command";
    return result;
  }

  std::vector<std::string> expected;
  for (const auto& tmpl : manifest.expected_outputs) {
    bool complete = true;
    std::string path = resolve_token(tmpl, args, &complete);
    if (!complete) continue;
    fs::path p(path);
    if (p.is_relative()) p = fs::path(workdir) / p;
    expected.push_back(p.lexically_normal().string());
  }

  std::vector<std::string> env_strings;
  std::set<std::string> env_names(manifest.env_passthrough.begin(),
                                  manifest.env_passthrough.end());
  env_names.insert("PATH");
  for (const auto& name : env_names) {
    const char* v = std::getenv(name.c_str());
    if (v) env_strings.push_back(name + "=" + v);
  }

  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
    result.message = "could not create pipes";
    return result;
  }

  pid_t pid = fork();
  if (pid < 0) {
    result.message = "fork failed";
    return result;
  }
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    close(err_pipe[1]);
    if (chdir(workdir.c_str()) != 0) _exit(127);
    std::vector<char*> cargv;
    for (auto& a : argv) cargv.push_back(a.data());
    cargv.push_back(nullptr);
    std::vector<char*> cenv;
    for (auto& e : env_strings) cenv.push_back(e.data());
    cenv.push_back(nullptr);
    execve(argv[0].c_str(), cargv.data(), cenv.data());
    // Fall back to PATH lookup for bare command names.
    environ = cenv.data();
    execvp(argv[0].c_str(), cargv.data());
    _exit(127);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);
  fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::duration<double>(manifest.timeout_s));
  bool timed_out = false;
  bool exited = false;
  int wait_status = 0;
  char buf[4096];
  int open_fds = 2;
  while (true) {
    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    poll(fds, 2, 50);
    ssize_t n;
    while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0) {
      append_tail(result.stdout_tail, buf, static_cast<size_t>(n));
    }
    if (n == 0 && fds[0].events) {
      fds[0].events = 0;
    }
    while ((n = read(err_pipe[0], buf, sizeof(buf))) > 0) {
      append_tail(result.stderr_tail, buf, static_cast<size_t>(n));
    }
    (void)open_fds;
    if (!exited) {
      pid_t r = waitpid(pid, &wait_status, WNOHANG);
      if (r == pid) exited = true;
    }
    if (exited) {
      // Drain whatever remains after exit.
      while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0) {
        append_tail(result.stdout_tail, buf, static_cast<size_t>(n));
      }
      while ((n = read(err_pipe[0], buf, sizeof(buf))) > 0) {
        append_tail(result.stderr_tail, buf, static_cast<size_t>(n));
      }
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &wait_status, 0);
      timed_out = true;
      break;
    }
  }
  close(out_pipe[0]);
  close(err_pipe[0]);

  if (timed_out) {
    result.status = AdapterRunResult::Status::Timeout;
    result.exit_code = -1;
    result.message = "adapter exceeded timeout of " +
                     format_double(manifest.timeout_s) + "s and was killed";
    return result;
  }

  result.exit_code =
      WIFEXITED(wait_status) ? WEXITSTATUS(wait_status) : 128;
  bool exit_ok = std::find(manifest.success_exit_codes.begin(),
                           manifest.success_exit_codes.end(),
                           result.exit_code) != manifest.success_exit_codes.end();
  for (const auto& path : expected) {
    if (fs::exists(path)) {
      result.outputs.push_back(path);
    } else {
      result.missing_outputs.push_back(path);
    }
  }
  if (exit_ok && result.missing_outputs.empty()) {
    result.status = AdapterRunResult::Status::Ok;
    result.message = "adapter completed";
  } else {
    result.status = AdapterRunResult::Status::Failed;
    if (!exit_ok) {
      result.message = "adapter exited with code " +
                       std::to_string(result.exit_code);
    } else {
      std::string missing;
      for (const auto& m : result.missing_outputs) {
        if (!missing.empty()) missing += ", ";
        missing += m;
      }
      result.message = "adapter did not produce expected outputs: " + missing;
    }
  }
  return result;
}

void register_adapter_tools(ToolRegistry& registry,
                            const std::vector<AdapterManifest>& manifests) {
  for (const auto& manifest : manifests) {
    check_placeholders(manifest);
    ToolDescriptor descriptor;
    descriptor.name = manifest.tool_name;
    descriptor.description = manifest.description;
    descriptor.params = manifest.params;
    descriptor.output_description =
        "runs an external program; reports its exit status and produced files";
    AdapterManifest captured = manifest;
    registry.register_tool(
        descriptor,
        [captured](const nlohmann::json& args, RunWorkspace& ws) -> ToolResult {
          AdapterRunResult run = run_adapter(captured, args, ws.dir());
          ToolResult result;
          result.status = run.status == AdapterRunResult::Status::Ok
                              ? ToolResult::Status::Ok
                              : ToolResult::Status::Failed;
          std::string summary = run.message;
          if (!run.outputs.empty()) {
            summary += "\noutputs:";
            for (const auto& o : run.outputs) summary += "\n  " + o;
          }
          if (!run.stdout_tail.empty()) {
            summary += "\nstdout (tail):\n" + run.stdout_tail;
          }
          if (!run.stderr_tail.empty()) {
            summary += "\nstderr (tail):\n" + run.stderr_tail;
          }
          result.summary = summary;
          result.artifacts = run.outputs;
          return result;
        });
  }
}

std::vector<AdapterManifest> builtin_manifests(const std::string& executable) {
  auto str = [](std::string name, bool required, std::string desc,
                std::optional<nlohmann::json> def = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::String;
    p.required = required;
    p.default_value = std::move(def);
    p.description = std::move(desc);
    return p;
  };
  auto path_p = [](std::string name, bool required, std::string desc) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Path;
    p.required = required;
    p.description = std::move(desc);
    return p;
  };
  auto int_p = [](std::string name, bool required, std::string desc,
                  std::optional<nlohmann::json> def = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Integer;
    p.required = required;
    p.default_value = std::move(def);
    p.description = std::move(desc);
    return p;
  };
  auto bool_p = [](std::string name, std::string desc, bool def) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Boolean;
    p.default_value = def;
    p.description = std::move(desc);
    return p;
  };
  auto enum_p = [](std::string name, std::vector<std::string> values,
                   std::string desc,
                   std::optional<nlohmann::json> def = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Enum;
    p.enum_values = std::move(values);
    p.required = !def.has_value();
    p.default_value = std::move(def);
    p.description = std::move(desc);
    return p;
  };

  std::vector<std::string> configurations = {"2d", "3d_fullres", "3d_lowres",
                                             "3d_cascade_fullres"};

  std::vector<AdapterManifest> out;

  {
    AdapterManifest m;
    m.tool_name = "nnunet_train";
    m.description =
        "Trains a medical image segmentation model on a prepared dataset "
        "directory for one cross-validation fold.";
    m.argv_template = {executable,
                       "nnunet-train",
                       "--dataset-dir={dataset_dir}",
                       "--configuration={configuration}",
                       "--fold={fold}"};
    m.params = {path_p("dataset_dir", true,
                       "dataset directory with images and labels"),
                enum_p("configuration", configurations,
                       "trainer configuration", "3d_fullres"),
                int_p("fold", true, "cross-validation fold index")};
    m.expected_outputs = {
        "nnunet_train/{configuration}/fold_{fold}/checkpoint_final.model",
        "nnunet_train/{configuration}/fold_{fold}/training_metrics.json"};
    m.timeout_s = 600.0;
    out.push_back(std::move(m));
  }
  {
    AdapterManifest m;
    m.tool_name = "nnunet_infer";
    m.description =
        "Runs a trained segmentation model over a directory of images and "
        "writes one predicted mask per case.";
    m.argv_template = {executable,
                       "nnunet-infer",
                       "--dataset-id={dataset_id}",
                       "--configuration={configuration}",
                       "--fold={fold}",
                       "--input-dir={input_dir}",
                       "--output-dir={output_dir}",
                       "--tta={tta}"};
    m.params = {str("dataset_id", true, "identifier of the trained dataset"),
                enum_p("configuration", configurations,
                       "trainer configuration", "3d_fullres"),
                int_p("fold", true, "fold whose weights to use"),
                path_p("input_dir", true, "directory of images to segment"),
                path_p("output_dir", true, "directory for predicted masks"),
                bool_p("tta", "enable test-time augmentation (mirroring)",
                       false)};
    m.expected_outputs = {"{output_dir}/inference_summary.json"};
    m.timeout_s = 600.0;
    out.push_back(std::move(m));
  }
  {
    AdapterManifest m;
    m.tool_name = "totalsegmentator";
    m.description =
        "Segments anatomical structures in a CT or MR volume; optionally "
        "restricted to a subset of regions of interest.";
    m.argv_template = {executable,
                       "totalseg",
                       "--input={input_path}",
                       "--task={task}",
                       "--roi-subset={roi_subset}",
                       "--output-dir={output_dir}",
                       "--multilabel={multilabel}"};
    ParamSpec roi;
    roi.name = "roi_subset";
    roi.kind = ParamKind::List;
    roi.element_kind = ParamKind::String;
    roi.description = "restrict the output to these structure names";
    m.params = {path_p("input_path", true, "volume to segment"),
                enum_p("task", {"total", "total_mr"},
                       "model family: CT (total) or MR (total_mr)", "total"),
                roi,
                path_p("output_dir", true, "directory for the masks"),
                bool_p("multilabel",
                       "write one combined multi-label mask instead of one "
                       "file per structure",
                       false)};
    m.expected_outputs = {"{output_dir}/segmentation.nii.gz"};
    m.timeout_s = 600.0;
    out.push_back(std::move(m));
  }
  {
    AdapterManifest m;
    m.tool_name = "image_classifier_train";
    m.description =
        "Trains a convolutional image classifier with early stopping. "
        "Input size follows the architecture (299x299 for inceptionv3, "
        "224x224 otherwise).";
    m.argv_template = {executable,
                       "image-train",
                       "--data-dir={data_dir}",
                       "--architecture={architecture}",
                       "--num-classes={num_classes}",
                       "--epochs={epochs}",
                       "--batch-size={batch_size}",
                       "--patience={patience}",
                       "--pretrained={pretrained}",
                       "--output-dir={output_dir}"};
    m.params = {
        path_p("data_dir", true, "directory with train/ and val/ splits"),
        enum_p("architecture",
               {"resnet18", "resnet34", "resnet50", "resnet101", "resnet152",
                "vgg16", "inceptionv3"},
               "backbone architecture", "resnet50"),
        int_p("num_classes", true, "number of target classes"),
        int_p("epochs", false, "maximum training epochs", 100),
        int_p("batch_size", false, "mini-batch size", 32),
        int_p("patience", false, "early-stopping patience in epochs", 10),
        bool_p("pretrained", "start from pretrained weights", true),
        path_p("output_dir", true, "directory for checkpoint and metrics")};
    m.expected_outputs = {"{output_dir}/model_checkpoint.json",
                          "{output_dir}/training_metrics.json"};
    m.timeout_s = 600.0;
    out.push_back(std::move(m));
  }
  {
    AdapterManifest m;
    m.tool_name = "image_classifier_infer";
    m.description =
        "Applies a trained image classifier to a directory of images; "
        "computes evaluation metrics when a ground-truth CSV is supplied.";
    m.argv_template = {executable,
                       "image-infer",
                       "--model-path={model_path}",
                       "--input-dir={input_dir}",
                       "--num-classes={num_classes}",
                       "--gt-csv={gt_csv}",
                       "--output-dir={output_dir}"};
    ParamSpec gt = path_p("gt_csv", false,
                          "CSV with image,label columns for evaluation");
    m.params = {path_p("model_path", true, "trained checkpoint file"),
                path_p("input_dir", true, "directory of images to classify"),
                int_p("num_classes", true, "number of target classes"),
                gt,
                path_p("output_dir", true, "directory for predictions")};
    m.expected_outputs = {"{output_dir}/predictions.csv"};
    m.timeout_s = 600.0;
    out.push_back(std::move(m));
  }
  for (auto& m : out) check_placeholders(m);
  return out;
}

}  // namespace agentml
