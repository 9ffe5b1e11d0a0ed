#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "agentml/agent.hpp"
#include "agentml/llm.hpp"
#include "agentml/toolspec.hpp"

namespace agentml {

// The eight specialist names, in catalog order.
const std::vector<std::string>& specialist_names();

// Role description plus tool subset for one specialist. Unknown names throw.
AgentConfig specialist_config(const std::string& name);

struct MasterRunResult {
  AgentTranscript transcript;                 // master loop
  std::vector<std::string> invoked_agents;    // delegation order
  std::vector<std::string> nested_transcripts;
};

// Runs the master agent, whose only tools are the eight specialists (each a
// single required `task` string). Specialist loops share the backend and the
// workspace; their transcripts are written under <run>/agents/.
MasterRunResult run_master(const std::string& prompt,
                           const ToolRegistry& tools, LlmBackend& backend,
                           RunWorkspace& workspace, size_t max_steps = 12);

struct CorpusPrompt {
  std::string id;
  std::string category;
  std::string prompt;
  std::vector<std::string> expected_agents;
  std::vector<std::string> required_artifacts;  // path globs
};

// The eleven task categories of the evaluation report, in column order.
const std::vector<std::string>& category_labels();

// JSON array of prompts; unknown categories and duplicate ids are errors,
// and an empty corpus is rejected.
std::vector<CorpusPrompt> load_corpus(const std::string& path);

struct EvaluationRecord {
  std::string prompt_id;
  std::string category;
  std::vector<std::string> expected_agents;
  std::vector<std::string> invoked_agents;
  bool completed = false;
  bool required_artifacts_present = false;
  bool passed = false;
};

struct EvaluationSummary {
  std::vector<EvaluationRecord> records;  // corpus order
  int success_rate_pct = 0;               // round(100 * passed / total)
};

bool is_subsequence(const std::vector<std::string>& expected,
                    const std::vector<std::string>& actual);

// One master run per prompt, each in a fresh workspace under runs_root. The
// backend factory supplies a fresh backend per prompt so scripted state never
// leaks across records.
EvaluationSummary evaluate_corpus(
    const std::vector<CorpusPrompt>& corpus, const ToolRegistry& tools,
    const std::function<std::unique_ptr<LlmBackend>(const CorpusPrompt&)>&
        backend_factory,
    const std::string& runs_root);

// Appends one row per call: backend name, per-category percentage, overall
// percentage. Writes the header when the file does not exist yet.
void write_report_row(const std::string& report_path,
                      const std::string& backend_name,
                      const EvaluationSummary& summary);

}  // namespace agentml
