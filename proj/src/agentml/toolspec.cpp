#include "agentml/toolspec.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "agentml/util.hpp"

namespace agentml {

std::string param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::String: return "string";
    case ParamKind::Integer: return "integer";
    case ParamKind::Float: return "float";
    case ParamKind::Boolean: return "boolean";
    case ParamKind::Path: return "path";
    case ParamKind::Enum: return "enum";
    case ParamKind::List: return "list";
  }
  return "string";
}

namespace {

nlohmann::json coerce_scalar(const ParamSpec& spec, ParamKind kind,
                             const nlohmann::json& value,
                             std::vector<std::string>& violations) {
  auto fail = [&](const std::string& why) {
    violations.push_back("parameter '" + spec.name + "': " + why);
    return value;
  };
  switch (kind) {
    case ParamKind::String:
      if (value.is_string()) return value;
      if (value.is_number() || value.is_boolean()) return value.dump();
      return fail("expected a string");
    case ParamKind::Path: {
      if (!value.is_string()) return fail("expected a path string");
      std::filesystem::path p(value.get<std::string>());
      return p.lexically_normal().string();
    }
    case ParamKind::Integer: {
      if (value.is_number_integer()) return value;
      if (value.is_number_float()) {
        double d = value.get<double>();
        if (d == static_cast<double>(static_cast<long long>(d))) {
          return static_cast<long long>(d);
        }
        return fail("expected an integer");
      }
      if (value.is_string()) {
        try {
          size_t pos = 0;
          long long v = std::stoll(value.get<std::string>(), &pos);
          if (pos == value.get<std::string>().size()) return v;
        } catch (...) {
        }
      }
      return fail("expected an integer");
    }
    case ParamKind::Float: {
      if (value.is_number()) return value.get<double>();
      if (value.is_string()) {
        try {
          size_t pos = 0;
          double v = std::stod(value.get<std::string>(), &pos);
          if (pos == value.get<std::string>().size()) return v;
        } catch (...) {
        }
      }
      return fail("expected a number");
    }
    case ParamKind::Boolean: {
      if (value.is_boolean()) return value;
      if (value.is_string()) {
        std::string s = to_lower(value.get<std::string>());
        if (s == "true") return true;
        if (s == "false") return false;
      }
      if (value.is_number_integer()) {
        long long v = value.get<long long>();
        if (v == 0 || v == 1) return v == 1;
      }
      return fail("expected a boolean");
    }
    case ParamKind::Enum: {
      if (!value.is_string()) return fail("expected one of the enum values");
      std::string s = value.get<std::string>();
      if (std::find(spec.enum_values.begin(), spec.enum_values.end(), s) ==
          spec.enum_values.end()) {
        std::string allowed;
        for (const auto& v : spec.enum_values) {
          if (!allowed.empty()) allowed += ", ";
          allowed += v;
        }
        return fail("'" + s + "' is not one of {" + allowed + "}");
      }
      return value;
    }
    case ParamKind::List:
      return fail("nested lists are not supported");
  }
  return value;
}

}  // namespace

nlohmann::json validate_invocation(const ToolDescriptor& descriptor,
                                   const nlohmann::json& args) {
  std::vector<std::string> violations;
  if (!args.is_object()) {
    throw std::runtime_error("arguments must be a JSON object");
  }
  nlohmann::json normalized = nlohmann::json::object();
  for (const auto& [key, value] : args.items()) {
    auto it = std::find_if(descriptor.params.begin(), descriptor.params.end(),
                           [&](const ParamSpec& p) { return p.name == key; });
    if (it == descriptor.params.end()) {
      std::string allowed;
      for (const auto& p : descriptor.params) {
        if (!allowed.empty()) allowed += ", ";
        allowed += p.name;
      }
      violations.push_back("unknown parameter '" + key + "' (allowed: " +
                           (allowed.empty() ? "none" : allowed) + ")");
      continue;
    }
    const ParamSpec& spec = *it;
    if (spec.kind == ParamKind::List) {
      if (!value.is_array()) {
        violations.push_back("parameter '" + spec.name + "': expected a list");
        continue;
      }
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& elem : value) {
        arr.push_back(coerce_scalar(spec, spec.element_kind, elem, violations));
      }
      normalized[key] = arr;
    } else {
      normalized[key] = coerce_scalar(spec, spec.kind, value, violations);
    }
  }
  for (const auto& spec : descriptor.params) {
    if (normalized.contains(spec.name)) continue;
    if (spec.default_value) {
      normalized[spec.name] = *spec.default_value;
    } else if (spec.required) {
      violations.push_back("missing required parameter '" + spec.name + "'");
    }
  }
  if (!violations.empty()) {
    std::string joined;
    for (const auto& v : violations) {
      if (!joined.empty()) joined += "; ";
      joined += v;
    }
    throw std::runtime_error("invalid arguments: " + joined);
  }
  return normalized;
}

std::string render_catalog(const std::vector<ToolDescriptor>& descriptors) {
  if (descriptors.empty()) return "no tools available\n";
  std::vector<ToolDescriptor> sorted = descriptors;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  std::ostringstream out;
  for (const auto& d : sorted) {
    out << "## " << d.name << "\n" << d.description << "\n";
    if (d.params.empty()) {
      out << "Parameters: none\n";
    } else {
      out << "Parameters:\n";
      for (const auto& p : d.params) {
        out << "- " << p.name << " (";
        if (p.kind == ParamKind::Enum) {
          out << "enum:";
          for (size_t i = 0; i < p.enum_values.size(); ++i) {
            out << (i ? "|" : " ") << p.enum_values[i];
          }
        } else if (p.kind == ParamKind::List) {
          out << "list of " << param_kind_name(p.element_kind);
        } else {
          out << param_kind_name(p.kind);
        }
        out << (p.required ? ", required" : ", optional");
        if (p.default_value) out << ", default " << p.default_value->dump();
        out << "): " << p.description << "\n";
      }
    }
    out << "Output: " << d.output_description << "\n\n";
  }
  return out.str();
}

void ToolRegistry::register_tool(const ToolDescriptor& descriptor,
                                 ToolExecutor executor) {
  if (descriptor.name.empty()) {
    throw std::runtime_error("tool name must be non-empty");
  }
  if (tools_.count(descriptor.name)) {
    throw std::runtime_error("tool already registered: " + descriptor.name);
  }
  tools_.emplace(descriptor.name,
                 std::make_pair(descriptor, std::move(executor)));
}

const ToolDescriptor* ToolRegistry::find(const std::string& name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second.first;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tools_) out.push_back(name);
  return out;
}

std::vector<ToolDescriptor> ToolRegistry::descriptors(
    const std::vector<std::string>& names) const {
  std::vector<ToolDescriptor> out;
  for (const auto& name : names) {
    const ToolDescriptor* d = find(name);
    if (!d) throw std::runtime_error("tool not registered: " + name);
    out.push_back(*d);
  }
  return out;
}

ToolResult ToolRegistry::dispatch(const ToolInvocation& invocation,
                                  RunWorkspace& workspace) const {
  ToolResult result;
  auto it = tools_.find(invocation.tool);
  if (it == tools_.end()) {
    result.status = ToolResult::Status::Failed;
    result.summary = "unknown tool: " + invocation.tool;
    return result;
  }
  try {
    nlohmann::json normalized =
        validate_invocation(it->second.first, invocation.args);
    return it->second.second(normalized, workspace);
  } catch (const std::exception& e) {
    result.status = ToolResult::Status::Failed;
    result.summary = std::string("tool '") + invocation.tool +
                     "' failed: " + e.what();
    return result;
  }
}

}  // namespace agentml
