#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace agentml {

class RunWorkspace;

enum class ParamKind { String, Integer, Float, Boolean, Path, Enum, List };

std::string param_kind_name(ParamKind k);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::String;
  ParamKind element_kind = ParamKind::String;  // for List
  std::vector<std::string> enum_values;        // for Enum
  bool required = false;
  std::optional<nlohmann::json> default_value;  // forbidden when required
  std::string description;
};

struct ToolDescriptor {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::string output_description;
};

struct ToolInvocation {
  std::string tool;
  nlohmann::json args = nlohmann::json::object();
};

struct ToolResult {
  enum class Status { Ok, Failed };
  Status status = Status::Ok;
  std::string summary;
  std::vector<std::string> artifacts;
  std::map<std::string, double> metrics;
};

using ToolExecutor =
    std::function<ToolResult(const nlohmann::json& args, RunWorkspace& ws)>;

// Required params present, defaults filled, lenient scalar coercion
// ("5" -> 5, "true" -> true), unknown keys rejected. Throws one aggregated
// error listing every violation.
nlohmann::json validate_invocation(const ToolDescriptor& descriptor,
                                   const nlohmann::json& args);

// Deterministic name-sorted catalog for the system prompt.
std::string render_catalog(const std::vector<ToolDescriptor>& descriptors);

class ToolRegistry {
 public:
  void register_tool(const ToolDescriptor& descriptor, ToolExecutor executor);
  const ToolDescriptor* find(const std::string& name) const;
  std::vector<std::string> names() const;  // sorted
  std::vector<ToolDescriptor> descriptors(
      const std::vector<std::string>& names) const;

  // Validates and executes; every failure (unknown tool, bad args, executor
  // exception) becomes a failed ToolResult, never an escaping exception.
  ToolResult dispatch(const ToolInvocation& invocation,
                      RunWorkspace& workspace) const;

 private:
  std::map<std::string, std::pair<ToolDescriptor, ToolExecutor>> tools_;
};

}  // namespace agentml
