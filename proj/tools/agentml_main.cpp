#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "agentml/adapters.hpp"
#include "agentml/agent.hpp"
#include "agentml/llm.hpp"
#include "agentml/native_tools.hpp"
#include "agentml/orchestration.hpp"
#include "agentml/util.hpp"
#include "agentml/workspace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace agentml;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBudget = 2;
constexpr int kExitFatal = 3;

struct BackendOptions {
  std::string kind = "scripted";  // scripted | http | replay
  std::string script_path;
  std::string base_url;
  std::string api_key_env;
  std::string replay_path;
  std::string record_path;
};

void add_backend_options(CLI::App* app, BackendOptions& options) {
  app->add_option("--backend", options.kind,
                  "LLM backend: scripted, http, or replay")
      ->check(CLI::IsMember({"scripted", "http", "replay"}));
  app->add_option("--script", options.script_path,
                  "scripted backend: JSON rules file");
  app->add_option("--base-url", options.base_url,
                  "http backend: server base URL");
  app->add_option("--api-key-env", options.api_key_env,
                  "http backend: environment variable holding the API key");
  app->add_option("--replay-file", options.replay_path,
                  "replay backend: JSONL recording to replay");
  app->add_option("--record", options.record_path,
                  "append every model exchange to this JSONL recording");
}

std::vector<ScriptRule> load_script(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  std::vector<ScriptRule> rules;
  for (const auto& entry : j) {
    ScriptRule rule;
    std::string trigger = entry.value("trigger", "always");
    if (trigger == "substring") {
      rule.trigger = ScriptRule::Trigger::Substring;
      rule.pattern = entry.at("pattern").get<std::string>();
    } else if (trigger != "always") {
      throw std::runtime_error("unknown script trigger: " + trigger);
    }
    rule.response = entry.at("response").get<std::string>();
    rule.repeat = entry.value("repeat", 1);
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::unique_ptr<LlmBackend> make_backend(const BackendOptions& options) {
  std::unique_ptr<LlmBackend> backend;
  if (options.kind == "scripted") {
    if (options.script_path.empty()) {
      throw std::runtime_error("--script is required with --backend scripted");
    }
    backend = make_scripted_backend(load_script(options.script_path));
  } else if (options.kind == "http") {
    if (options.base_url.empty()) {
      throw std::runtime_error("--base-url is required with --backend http");
    }
    backend = make_http_backend(options.base_url, options.api_key_env);
  } else {
    if (options.replay_path.empty()) {
      throw std::runtime_error(
          "--replay-file is required with --backend replay");
    }
    backend = make_replay_backend(options.replay_path);
  }
  if (!options.record_path.empty()) {
    backend = make_recording_backend(std::move(backend), options.record_path);
  }
  return backend;
}

ToolRegistry build_registry(const std::string& adapter_exe,
                            const std::string& manifest_dir) {
  ToolRegistry registry;
  register_native_tools(registry);
  register_adapter_tools(registry, builtin_manifests(adapter_exe));
  if (!manifest_dir.empty()) {
    register_adapter_tools(registry, load_manifests(manifest_dir));
  }
  return registry;
}

std::string default_adapter_exe() {
  const char* env = std::getenv("AGENTML_ADAPTER_EXE");
  return env && *env ? env : "mock_adapter";
}

int cmd_run(const std::string& prompt, const std::string& workspace_root,
            size_t max_steps, const BackendOptions& backend_options,
            const std::string& adapter_exe, const std::string& manifest_dir) {
  ToolRegistry registry = build_registry(adapter_exe, manifest_dir);
  std::unique_ptr<LlmBackend> backend = make_backend(backend_options);
  RunWorkspace workspace(workspace_root);
  std::string started = iso_timestamp_now();
  MasterRunResult result = run_master(prompt, registry, *backend, workspace,
                                      max_steps);
  workspace.write_manifest(prompt, backend->name(), started,
                           iso_timestamp_now());
  std::printf("run %s: %s\n", workspace.run_id().c_str(),
              outcome_name(result.transcript.outcome).c_str());
  if (!result.invoked_agents.empty()) {
    std::printf("agents:");
    for (const auto& a : result.invoked_agents) std::printf(" %s", a.c_str());
    std::printf("\n");
  }
  if (!result.transcript.answer.empty()) {
    std::printf("%s\n", result.transcript.answer.c_str());
  }
  if (!result.transcript.error.empty()) {
    std::fprintf(stderr, "error: %s\n", result.transcript.error.c_str());
  }
  std::printf("workspace: %s\n", workspace.dir().c_str());
  switch (result.transcript.outcome) {
    case AgentTranscript::Outcome::Completed: return kExitOk;
    case AgentTranscript::Outcome::BudgetExhausted: return kExitBudget;
    case AgentTranscript::Outcome::FatalError: return kExitFatal;
  }
  return kExitFatal;
}

int cmd_eval(const std::string& corpus_path, const std::string& report_path,
             const std::string& backend_label,
             const std::string& workspace_root,
             const BackendOptions& backend_options,
             const std::string& adapter_exe, const std::string& manifest_dir) {
  ToolRegistry registry = build_registry(adapter_exe, manifest_dir);
  std::vector<CorpusPrompt> corpus = load_corpus(corpus_path);
  EvaluationSummary summary = evaluate_corpus(
      corpus, registry,
      [&](const CorpusPrompt&) { return make_backend(backend_options); },
      workspace_root);
  std::string label = backend_label;
  if (label.empty()) label = make_backend(backend_options)->name();
  write_report_row(report_path, label, summary);
  for (const auto& record : summary.records) {
    std::printf("%s [%s]: %s\n", record.prompt_id.c_str(),
                record.category.c_str(), record.passed ? "pass" : "FAIL");
  }
  std::printf("success rate: %d%% (%zu prompts)\n", summary.success_rate_pct,
              summary.records.size());
  std::printf("report: %s\n", report_path.c_str());
  return kExitOk;
}

int cmd_tools(const std::string& adapter_exe, const std::string& manifest_dir) {
  ToolRegistry registry = build_registry(adapter_exe, manifest_dir);
  std::printf("%s", render_catalog(registry.descriptors(registry.names())).c_str());
  return kExitOk;
}

int cmd_transcript(const std::string& path) {
  std::string file = path;
  if (fs::is_directory(file)) {
    file = (fs::path(file) / "transcript.jsonl").string();
  }
  std::string text = read_file(file);
  for (const auto& line : split(text, '\n')) {
    if (trim(line).empty()) continue;
    AgentStep step = step_from_json(nlohmann::json::parse(line));
    std::printf("step %zu (%llu ms)\n", step.index,
                static_cast<unsigned long long>(step.wall_time_ms));
    if (!step.thought.empty()) {
      std::printf("  thought: %s\n", step.thought.c_str());
    }
    switch (step.action.kind) {
      case AgentAction::Kind::ToolCall:
        std::printf("  call %s %s\n", step.action.tool.c_str(),
                    step.action.arguments.dump().c_str());
        break;
      case AgentAction::Kind::FinalAnswer:
        std::printf("  final answer: %s\n", step.action.text.c_str());
        break;
      case AgentAction::Kind::ParseFailure:
        std::printf("  parse failure: %s\n", step.action.text.c_str());
        break;
    }
    if (!step.observation.empty()) {
      std::printf("  observation: %s\n", step.observation.c_str());
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-language orchestration of data-science agents"};
  app.require_subcommand(1);

  std::string adapter_exe = default_adapter_exe();
  std::string manifest_dir;
  app.add_option("--adapter-exe", adapter_exe,
                 "executable backing the built-in external tools");
  app.add_option("--manifest-dir", manifest_dir,
                 "directory of extra *.manifest.json adapter definitions");

  auto* run = app.add_subcommand("run", "run the master agent on one prompt");
  std::string prompt, workspace_root = "runs";
  size_t max_steps = 12;
  BackendOptions run_backend;
  run->add_option("--prompt", prompt, "natural-language task")->required();
  run->add_option("--workspace-root", workspace_root,
                  "directory receiving per-run workspaces");
  run->add_option("--max-steps", max_steps, "master agent step budget");
  add_backend_options(run, run_backend);

  auto* eval = app.add_subcommand("eval", "evaluate a prompt corpus");
  std::string corpus_path, report_path = "report.csv", backend_label;
  std::string eval_root = "runs";
  BackendOptions eval_backend;
  eval->add_option("--corpus", corpus_path, "corpus JSON file")->required();
  eval->add_option("--report", report_path, "CSV report to append to");
  eval->add_option("--backend-name", backend_label,
                   "row label in the report (default: backend name)");
  eval->add_option("--workspace-root", eval_root,
                   "directory receiving per-prompt workspaces");
  add_backend_options(eval, eval_backend);

  auto* tools = app.add_subcommand("tools", "print the tool catalog");
  (void)tools;

  auto* transcript =
      app.add_subcommand("transcript", "pretty-print a run transcript");
  std::string transcript_path;
  transcript->add_option("--path", transcript_path,
                         "transcript.jsonl file or run directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      return cmd_run(prompt, workspace_root, max_steps, run_backend,
                     adapter_exe, manifest_dir);
    }
    if (eval->parsed()) {
      return cmd_eval(corpus_path, report_path, backend_label, eval_root,
                      eval_backend, adapter_exe, manifest_dir);
    }
    if (tools->parsed()) {
      return cmd_tools(adapter_exe, manifest_dir);
    }
    if (transcript->parsed()) {
      return cmd_transcript(transcript_path);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
