#include "agentml/orchestration.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "agentml/util.hpp"
#include "agentml/workspace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace agentml {

namespace {

struct SpecialistSpec {
  std::string name;
  std::string role;
  std::vector<std::string> tools;
};

const std::vector<SpecialistSpec>& specialist_specs() {
  static const std::vector<SpecialistSpec> specs = {
      {"eda_agent",
       "You are a data exploration specialist. You profile tabular datasets: "
       "summary statistics, missing values, outliers, correlations, and "
       "distribution plots.",
       {"eda_report"}},
      {"feature_importance_agent",
       "You are a feature selection specialist. You rank features of tabular "
       "datasets against a target and export reduced datasets keeping the "
       "strongest features.",
       {"feature_importance"}},
      {"radiomics_agent",
       "You are a radiomics specialist. You extract quantitative imaging "
       "features from paired image and mask volumes, and can merge feature "
       "tables with clinical targets.",
       {"radiomics_extract", "merge_targets"}},
      {"nnunet_agent",
       "You are a segmentation model specialist. You train segmentation "
       "models on prepared datasets and run trained models over new images.",
       {"nnunet_train", "nnunet_infer"}},
      {"totalsegmentator_agent",
       "You are an anatomical segmentation specialist. You segment organs "
       "and structures in CT and MR volumes.",
       {"totalsegmentator"}},
      {"classifier_agent",
       "You are a tabular classification specialist. You benchmark, tune, "
       "and blend classifiers, and apply saved models to new data.",
       {"train_classifier", "tabular_infer"}},
      {"regressor_agent",
       "You are a tabular regression specialist. You benchmark, tune, and "
       "blend regressors, and apply saved models to new data.",
       {"train_regressor", "tabular_infer"}},
      {"image_classifier_agent",
       "You are an image classification specialist. You train convolutional "
       "image classifiers and apply trained checkpoints to new images.",
       {"image_classifier_train", "image_classifier_infer"}},
  };
  return specs;
}

const SpecialistSpec& find_spec(const std::string& name) {
  for (const auto& spec : specialist_specs()) {
    if (spec.name == name) return spec;
  }
  throw std::runtime_error("unknown specialist: " + name);
}

}  // namespace

const std::vector<std::string>& specialist_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& spec : specialist_specs()) out.push_back(spec.name);
    return out;
  }();
  return names;
}

AgentConfig specialist_config(const std::string& name) {
  const SpecialistSpec& spec = find_spec(name);
  AgentConfig config;
  config.name = spec.name;
  config.role_description = spec.role;
  config.tool_names = spec.tools;
  return config;
}

MasterRunResult run_master(const std::string& prompt,
                           const ToolRegistry& tools, LlmBackend& backend,
                           RunWorkspace& workspace, size_t max_steps) {
  auto result = std::make_shared<MasterRunResult>();
  auto counter = std::make_shared<size_t>(0);

  ToolRegistry master_tools;
  for (const auto& spec : specialist_specs()) {
    ToolDescriptor d;
    d.name = spec.name;
    d.description = spec.role +
                    " Delegate a self-contained subtask, including every "
                    "input path the specialist needs.";
    ParamSpec task;
    task.name = "task";
    task.kind = ParamKind::String;
    task.required = true;
    task.description = "natural-language subtask for this specialist";
    d.params = {task};
    d.output_description =
        "the specialist's outcome, answer, and produced file paths";
    std::string name = spec.name;
    master_tools.register_tool(
        d, [name, &tools, &backend, &workspace, result,
            counter](const nlohmann::json& args, RunWorkspace& ws) {
          AgentTranscript nested =
              run_agent(specialist_config(name), args["task"].get<std::string>(),
                        tools, backend, ws);
          std::string file =
              (fs::path(workspace.subdir("agents")) /
               (name + "_" + std::to_string((*counter)++) + ".jsonl"))
                  .string();
          write_transcript_jsonl(nested, file);
          result->invoked_agents.push_back(name);
          result->nested_transcripts.push_back(file);

          ToolResult tool_result;
          std::string summary =
              name + " finished with outcome " + outcome_name(nested.outcome);
          if (nested.outcome == AgentTranscript::Outcome::Completed) {
            summary += "\n" + nested.answer;
          } else {
            tool_result.status = ToolResult::Status::Failed;
            if (!nested.error.empty()) summary += ": " + nested.error;
          }
          tool_result.summary = summary;
          return tool_result;
        });
  }

  AgentConfig master;
  master.name = "master_agent";
  master.role_description =
      "You are the coordinator of a team of data-science specialists. Break "
      "the user's request into subtasks and delegate each to the matching "
      "specialist, passing file paths between steps verbatim. Do the work "
      "through the specialists only.";
  master.max_steps = max_steps;
  master.tool_names = specialist_names();

  result->transcript = run_agent(master, prompt, master_tools, backend,
                                 workspace);
  result->transcript.nested_transcripts = result->nested_transcripts;
  write_transcript_jsonl(result->transcript, workspace.transcript_path());
  return *result;
}

const std::vector<std::string>& category_labels() {
  static const std::vector<std::string> labels = {
      "Image Classification (Training)",
      "Image Classification (Inference)",
      "Regression (Training)",
      "Regression (Inference)",
      "Classification (Training)",
      "Classification (Inference)",
      "TotalSegmentator",
      "nnUNet",
      "Feature Importance",
      "EDA",
      "Radiomics"};
  return labels;
}

std::vector<CorpusPrompt> load_corpus(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot parse corpus " + path + ": " + e.what());
  }
  if (!j.is_array()) {
    throw std::runtime_error("corpus must be a JSON array: " + path);
  }
  if (j.empty()) {
    throw std::runtime_error("corpus is empty: " + path);
  }
  std::vector<CorpusPrompt> corpus;
  std::map<std::string, bool> seen;
  for (const auto& entry : j) {
    CorpusPrompt p;
    p.id = entry.at("id").get<std::string>();
    p.category = entry.at("category").get<std::string>();
    p.prompt = entry.at("prompt").get<std::string>();
    p.expected_agents =
        entry.at("expected_agents").get<std::vector<std::string>>();
    if (entry.contains("required_artifacts")) {
      p.required_artifacts =
          entry["required_artifacts"].get<std::vector<std::string>>();
    }
    if (seen[p.id]) throw std::runtime_error("duplicate corpus id: " + p.id);
    seen[p.id] = true;
    const auto& labels = category_labels();
    if (std::find(labels.begin(), labels.end(), p.category) == labels.end()) {
      throw std::runtime_error("unknown category '" + p.category +
                               "' for corpus id " + p.id);
    }
    for (const auto& agent : p.expected_agents) {
      find_spec(agent);  // throws on unknown names
    }
    corpus.push_back(std::move(p));
  }
  return corpus;
}

bool is_subsequence(const std::vector<std::string>& expected,
                    const std::vector<std::string>& actual) {
  size_t i = 0;
  for (const auto& a : actual) {
    if (i < expected.size() && expected[i] == a) ++i;
  }
  return i == expected.size();
}

EvaluationSummary evaluate_corpus(
    const std::vector<CorpusPrompt>& corpus, const ToolRegistry& tools,
    const std::function<std::unique_ptr<LlmBackend>(const CorpusPrompt&)>&
        backend_factory,
    const std::string& runs_root) {
  if (corpus.empty()) {
    throw std::runtime_error("refusing to evaluate an empty corpus");
  }
  EvaluationSummary summary;
  size_t passed = 0;
  for (const auto& prompt : corpus) {
    RunWorkspace workspace(runs_root);
    std::unique_ptr<LlmBackend> backend = backend_factory(prompt);
    std::string started = iso_timestamp_now();
    MasterRunResult run =
        run_master(prompt.prompt, tools, *backend, workspace);
    workspace.write_manifest(prompt.prompt, backend->name(), started,
                             iso_timestamp_now());

    EvaluationRecord record;
    record.prompt_id = prompt.id;
    record.category = prompt.category;
    record.expected_agents = prompt.expected_agents;
    record.invoked_agents = run.invoked_agents;
    record.completed =
        run.transcript.outcome == AgentTranscript::Outcome::Completed;
    record.required_artifacts_present = true;
    for (const auto& pattern : prompt.required_artifacts) {
      bool found = false;
      for (const auto& artifact : workspace.artifacts()) {
        std::string relative =
            fs::path(artifact).lexically_relative(workspace.dir()).string();
        if (glob_match(pattern, artifact) || glob_match(pattern, relative)) {
          found = true;
          break;
        }
      }
      if (!found) {
        record.required_artifacts_present = false;
        break;
      }
    }
    record.passed = is_subsequence(record.expected_agents,
                                   record.invoked_agents) &&
                    record.completed && record.required_artifacts_present;
    if (record.passed) ++passed;
    summary.records.push_back(std::move(record));
  }
  summary.success_rate_pct = static_cast<int>(
      std::lround(100.0 * static_cast<double>(passed) /
                  static_cast<double>(summary.records.size())));
  return summary;
}

void write_report_row(const std::string& report_path,
                      const std::string& backend_name,
                      const EvaluationSummary& summary) {
  std::map<std::string, std::pair<size_t, size_t>> per_category;  // passed, n
  for (const auto& record : summary.records) {
    auto& [p, n] = per_category[record.category];
    if (record.passed) ++p;
    ++n;
  }
  std::string out;
  if (!fs::exists(report_path)) {
    out = "backend";
    for (const auto& label : category_labels()) out += "," + label;
    out += ",success_rate_pct\n";
  }
  out += backend_name;
  for (const auto& label : category_labels()) {
    out += ",";
    auto it = per_category.find(label);
    if (it != per_category.end()) {
      out += std::to_string(static_cast<int>(
          std::lround(100.0 * static_cast<double>(it->second.first) /
                      static_cast<double>(it->second.second))));
    }
  }
  out += "," + std::to_string(summary.success_rate_pct) + "\n";
  std::ofstream file(report_path, std::ios::app | std::ios::binary);
  if (!file) throw std::runtime_error("cannot write report: " + report_path);
  file << out;
}

}  // namespace agentml
