#pragma once

#include <string>
#include <vector>

#include "agentml/toolspec.hpp"
#include "json.hpp"

namespace agentml {

// Declarative bridge to an external command-line program. The argv template
// is executed directly (no shell); each element is one argv token and may
// embed {param} placeholders. Tokens whose placeholders are all absent
// optional parameters are dropped.
struct AdapterManifest {
  std::string tool_name;
  std::string description;
  std::vector<std::string> argv_template;
  std::vector<ParamSpec> params;
  std::vector<std::string> expected_outputs;  // path templates, may hold {param}
  double timeout_s = 3600.0;
  std::vector<std::string> env_passthrough;  // PATH is always forwarded
  std::vector<int> success_exit_codes = {0};
};

struct AdapterRunResult {
  enum class Status { Ok, Failed, Timeout };
  Status status = Status::Failed;
  int exit_code = -1;
  std::string stdout_tail;  // last 4 KiB
  std::string stderr_tail;
  std::vector<std::string> outputs;          // expected outputs that exist
  std::vector<std::string> missing_outputs;  // expected outputs that do not
  std::string message;
};

AdapterManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const AdapterManifest& manifest);

// Loads every *.manifest.json in a directory; duplicate tool names and argv
// placeholders without a matching parameter are errors.
std::vector<AdapterManifest> load_manifests(const std::string& dir);

// Substitutes validated arguments into a template string. Lists render
// comma-separated; booleans render true/false.
std::string substitute_placeholders(const std::string& tmpl,
                                    const nlohmann::json& args);

// Runs the adapter with cwd = workdir. Success requires an allowed exit code
// and every expected output present; exceeding the timeout kills the process.
AdapterRunResult run_adapter(const AdapterManifest& manifest,
                             const nlohmann::json& args,
                             const std::string& workdir);

// Exposes each manifest as a registry tool whose result carries the resolved
// outputs as artifacts.
void register_adapter_tools(ToolRegistry& registry,
                            const std::vector<AdapterManifest>& manifests);

// Schemas for the bundled external integrations (segmentation trainer and
// predictor, whole-body segmenter, image classifier trainer and predictor),
// all wired to the given executable.
std::vector<AdapterManifest> builtin_manifests(const std::string& executable);

}  // namespace agentml
