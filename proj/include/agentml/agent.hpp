#pragma once

#include <string>
#include <vector>

#include "agentml/llm.hpp"
#include "agentml/toolspec.hpp"
#include "json.hpp"

namespace agentml {

struct AgentConfig {
  std::string name;
  std::string role_description;
  size_t max_steps = 12;
  std::vector<std::string> tool_names;
};

// Exactly one action per model turn: a tool call, a final answer, or a
// parse failure the loop reports back and survives.
struct AgentAction {
  enum class Kind { ToolCall, FinalAnswer, ParseFailure };
  Kind kind = Kind::ParseFailure;
  std::string tool;
  nlohmann::json arguments = nlohmann::json::object();
  std::string text;  // answer text, or the parse-failure message
};

// Extracts the first well-formed action object from model output, tolerating
// surrounding prose and ``` fences. Grammar: a JSON object with optional
// "thought" and exactly one of "action" = {"tool","arguments"} or
// "final_answer" (string).
AgentAction parse_model_action(const std::string& raw, std::string* thought = nullptr);

struct AgentStep {
  size_t index = 0;
  std::string thought;
  AgentAction action;
  std::string observation;
  uint64_t wall_time_ms = 0;
};

struct AgentTranscript {
  enum class Outcome { Completed, BudgetExhausted, FatalError };
  std::string agent_name;
  std::string task_text;
  std::vector<AgentStep> steps;
  Outcome outcome = Outcome::BudgetExhausted;
  std::string answer;         // Completed
  std::string error;          // FatalError
  std::vector<std::string> nested_transcripts;  // specialist run files
};

// Appends enforcing contiguous indices; a FinalAnswer step marks Completed.
void record_step(AgentTranscript& transcript, AgentStep step);

std::string render_system_prompt(const AgentConfig& config,
                                 const std::string& catalog);

AgentTranscript run_agent(const AgentConfig& config, const std::string& task,
                          const ToolRegistry& registry, LlmBackend& backend,
                          RunWorkspace& workspace);

nlohmann::json step_to_json(const AgentStep& step);
AgentStep step_from_json(const nlohmann::json& j);
void write_transcript_jsonl(const AgentTranscript& transcript,
                            const std::string& path);

std::string outcome_name(AgentTranscript::Outcome outcome);

}  // namespace agentml
