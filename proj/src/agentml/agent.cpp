#include "agentml/agent.hpp"

#include <chrono>
#include <stdexcept>

#include "agentml/util.hpp"
#include "agentml/workspace.hpp"

namespace agentml {

namespace {

constexpr const char* kGrammarHelp =
    "Respond with a single JSON object. Keys: optional \"thought\" (string) "
    "and exactly one of \"action\" = {\"tool\": <name>, \"arguments\": "
    "{...}} or \"final_answer\" (string). The object may stand alone or "
    "inside a ``` fence.";

// Finds the end of the JSON object starting at `start` (which must be '{'),
// honoring strings and escapes; npos when unbalanced.
size_t matching_brace(const std::string& s, size_t start) {
  int depth = 0;
  bool in_string = false;
  for (size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

}  // namespace

AgentAction parse_model_action(const std::string& raw, std::string* thought) {
  AgentAction failure;
  failure.kind = AgentAction::Kind::ParseFailure;
  failure.text = "no action object found";
  for (size_t pos = raw.find('{'); pos != std::string::npos;
       pos = raw.find('{', pos + 1)) {
    size_t end = matching_brace(raw, pos);
    if (end == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw.substr(pos, end - pos + 1));
    } catch (const std::exception&) {
      continue;
    }
    if (!j.is_object()) continue;
    bool has_action = j.contains("action");
    bool has_final = j.contains("final_answer");
    if (!has_action && !has_final) continue;
    if (thought && j.contains("thought") && j["thought"].is_string()) {
      *thought = j["thought"].get<std::string>();
    }
    if (has_action && has_final) {
      failure.text = "object contains both \"action\" and \"final_answer\"";
      return failure;
    }
    if (has_final) {
      if (!j["final_answer"].is_string()) {
        failure.text = "\"final_answer\" must be a string";
        return failure;
      }
      AgentAction a;
      a.kind = AgentAction::Kind::FinalAnswer;
      a.text = j["final_answer"].get<std::string>();
      return a;
    }
    const auto& act = j["action"];
    if (!act.is_object() || !act.contains("tool") ||
        !act["tool"].is_string()) {
      failure.text = "\"action\" must be an object with a string \"tool\"";
      return failure;
    }
    AgentAction a;
    a.kind = AgentAction::Kind::ToolCall;
    a.tool = act["tool"].get<std::string>();
    if (act.contains("arguments")) {
      if (!act["arguments"].is_object()) {
        failure.text = "\"arguments\" must be an object";
        return failure;
      }
      a.arguments = act["arguments"];
    }
    return a;
  }
  return failure;
}

void record_step(AgentTranscript& transcript, AgentStep step) {
  if (step.index != transcript.steps.size()) {
    throw std::runtime_error("step index " + std::to_string(step.index) +
                             " out of order (expected " +
                             std::to_string(transcript.steps.size()) + ")");
  }
  if (!transcript.steps.empty() &&
      transcript.steps.back().action.kind == AgentAction::Kind::FinalAnswer) {
    throw std::runtime_error("cannot append after a final answer");
  }
  bool final = step.action.kind == AgentAction::Kind::FinalAnswer;
  if (final) {
    transcript.outcome = AgentTranscript::Outcome::Completed;
    transcript.answer = step.action.text;
  }
  transcript.steps.push_back(std::move(step));
}

std::string render_system_prompt(const AgentConfig& config,
                                 const std::string& catalog) {
  std::string prompt = config.role_description;
  prompt += "\n\n# How to act\n";
  prompt += kGrammarHelp;
  prompt += "\n\n# Available tools\n";
  prompt += catalog.empty() ? "no tools available\n" : catalog;
  prompt +=
      "\nWork step by step. When the task is done, respond with "
      "\"final_answer\" summarizing the results and every produced file "
      "path.\n";
  return prompt;
}

AgentTranscript run_agent(const AgentConfig& config, const std::string& task,
                          const ToolRegistry& registry, LlmBackend& backend,
                          RunWorkspace& workspace) {
  AgentTranscript transcript;
  transcript.agent_name = config.name;
  transcript.task_text = task;

  std::string catalog = render_catalog(registry.descriptors(config.tool_names));
  CompletionRequest request;
  request.model_id = backend.name();
  request.messages.push_back({"system", render_system_prompt(config, catalog)});
  request.messages.push_back({"user", task});

  for (size_t index = 0; index < config.max_steps; ++index) {
    auto started = std::chrono::steady_clock::now();
    ModelResponse response;
    try {
      response = backend.complete(request);
    } catch (const FatalBackendError& e) {
      transcript.outcome = AgentTranscript::Outcome::FatalError;
      transcript.error = e.what();
      return transcript;
    }

    AgentStep step;
    step.index = index;
    step.action = parse_model_action(response.text, &step.thought);

    std::string observation;
    switch (step.action.kind) {
      case AgentAction::Kind::ParseFailure:
        observation = "Could not parse an action (" + step.action.text +
                      "). " + kGrammarHelp;
        break;
      case AgentAction::Kind::ToolCall: {
        ToolInvocation invocation{step.action.tool, step.action.arguments};
        ToolResult result = registry.dispatch(invocation, workspace);
        observation = result.summary;
        for (const auto& a : result.artifacts) workspace.add_artifact(a);
        break;
      }
      case AgentAction::Kind::FinalAnswer:
        break;
    }
    step.observation = observation;
    step.wall_time_ms = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started)
            .count());
    bool is_final = step.action.kind == AgentAction::Kind::FinalAnswer;
    record_step(transcript, std::move(step));
    if (is_final) return transcript;

    request.messages.push_back({"assistant", response.text});
    request.messages.push_back({"tool", observation});
  }
  transcript.outcome = AgentTranscript::Outcome::BudgetExhausted;
  return transcript;
}

nlohmann::json step_to_json(const AgentStep& step) {
  nlohmann::json j;
  j["index"] = step.index;
  j["thought"] = step.thought;
  nlohmann::json action;
  switch (step.action.kind) {
    case AgentAction::Kind::ToolCall:
      action["type"] = "tool_call";
      action["tool"] = step.action.tool;
      action["arguments"] = step.action.arguments;
      break;
    case AgentAction::Kind::FinalAnswer:
      action["type"] = "final_answer";
      action["text"] = step.action.text;
      break;
    case AgentAction::Kind::ParseFailure:
      action["type"] = "parse_failure";
      action["message"] = step.action.text;
      break;
  }
  j["action"] = action;
  j["observation"] = step.observation;
  j["wall_time_ms"] = step.wall_time_ms;
  return j;
}

AgentStep step_from_json(const nlohmann::json& j) {
  AgentStep step;
  step.index = j.at("index").get<size_t>();
  step.thought = j.value("thought", "");
  const auto& action = j.at("action");
  std::string type = action.at("type").get<std::string>();
  if (type == "tool_call") {
    step.action.kind = AgentAction::Kind::ToolCall;
    step.action.tool = action.at("tool").get<std::string>();
    step.action.arguments = action.value("arguments", nlohmann::json::object());
  } else if (type == "final_answer") {
    step.action.kind = AgentAction::Kind::FinalAnswer;
    step.action.text = action.at("text").get<std::string>();
  } else {
    step.action.kind = AgentAction::Kind::ParseFailure;
    step.action.text = action.value("message", "");
  }
  step.observation = j.value("observation", "");
  step.wall_time_ms = j.value("wall_time_ms", 0ULL);
  return step;
}

void write_transcript_jsonl(const AgentTranscript& transcript,
                            const std::string& path) {
  std::string out;
  for (const auto& step : transcript.steps) {
    out += step_to_json(step).dump() + "\n";
  }
  write_file(path, out);
}

std::string outcome_name(AgentTranscript::Outcome outcome) {
  switch (outcome) {
    case AgentTranscript::Outcome::Completed: return "Completed";
    case AgentTranscript::Outcome::BudgetExhausted: return "BudgetExhausted";
    case AgentTranscript::Outcome::FatalError: return "FatalError";
  }
  return "Unknown";
}

}  // namespace agentml
