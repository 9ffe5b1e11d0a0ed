#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "agentml/agent.hpp"
#include "agentml/llm.hpp"
#include "agentml/native_tools.hpp"
#include "agentml/orchestration.hpp"
#include "agentml/util.hpp"
#include "agentml/workspace.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace agentml;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("agentml_sys_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScriptRule say(const std::string& response, int repeat = 1) {
  ScriptRule r;
  r.response = response;
  r.repeat = repeat;
  return r;
}

std::string call_action(const std::string& tool, nlohmann::json args) {
  return nlohmann::json{{"action", {{"tool", tool}, {"arguments", args}}}}
      .dump();
}

std::string delegate(const std::string& agent, const std::string& task) {
  return call_action(agent, {{"task", task}});
}

std::string final_answer(const std::string& text) {
  return nlohmann::json{{"final_answer", text}}.dump();
}

std::string write_small_csv(const fs::path& dir) {
  std::string path = (dir / "data.csv").string();
  std::string body = "age,bmi,site\n";
  for (int i = 0; i < 20; ++i) {
    body += std::to_string(30 + i) + "," + std::to_string(20.0 + 0.3 * i) +
            "," + (i % 2 ? "A" : "B") + "\n";
  }
  write_file(path, body);
  return path;
}

}  // namespace

TEST_CASE("specialist roster and tool isolation") {
  const auto& names = specialist_names();
  REQUIRE(names.size() == 8);
  CHECK(std::count(names.begin(), names.end(), "eda_agent") == 1);
  CHECK(std::count(names.begin(), names.end(), "radiomics_agent") == 1);

  AgentConfig rad = specialist_config("radiomics_agent");
  CHECK(std::count(rad.tool_names.begin(), rad.tool_names.end(),
                   "radiomics_extract") == 1);
  CHECK(std::count(rad.tool_names.begin(), rad.tool_names.end(),
                   "merge_targets") == 1);
  CHECK(std::count(rad.tool_names.begin(), rad.tool_names.end(),
                   "eda_report") == 0);

  AgentConfig eda = specialist_config("eda_agent");
  CHECK(eda.tool_names == std::vector<std::string>{"eda_report"});
  CHECK(specialist_config("nnunet_agent").tool_names ==
        std::vector<std::string>{"nnunet_train", "nnunet_infer"});
  CHECK(specialist_config("classifier_agent").tool_names ==
        std::vector<std::string>{"train_classifier", "tabular_infer"});
  CHECK_THROWS(specialist_config("surgeon_agent"));
}

TEST_CASE("master delegates and collects the specialist answer") {
  fs::path dir = fresh_dir("delegate");
  std::string csv = write_small_csv(dir);
  ToolRegistry registry;
  register_native_tools(registry);

  auto backend = make_scripted_backend({
      say(delegate("eda_agent", "Profile " + csv)),
      say(call_action("eda_report", {{"input_path", csv}})),
      say(final_answer("EDA written.")),
      say(final_answer("Done: the dataset was profiled.")),
  });
  RunWorkspace ws((dir / "runs").string());
  MasterRunResult result = run_master("profile the dataset", registry,
                                      *backend, ws);

  CHECK(result.transcript.outcome == AgentTranscript::Outcome::Completed);
  CHECK(result.transcript.answer == "Done: the dataset was profiled.");
  CHECK(result.invoked_agents == std::vector<std::string>{"eda_agent"});
  REQUIRE(result.nested_transcripts.size() == 1);
  CHECK(fs::exists(result.nested_transcripts[0]));
  CHECK(result.nested_transcripts[0].find("agents/eda_agent_0.jsonl") !=
        std::string::npos);
  CHECK(fs::exists(ws.transcript_path()));
  CHECK(fs::exists(fs::path(ws.dir()) / "eda" / "report.md"));
  CHECK(!ws.artifacts().empty());
  // the master's observation carries the specialist's final answer
  CHECK(result.transcript.steps[0].observation.find("EDA written.") !=
        std::string::npos);
}

TEST_CASE("master reports a specialist that burns its budget") {
  fs::path dir = fresh_dir("budget");
  ToolRegistry registry;
  register_native_tools(registry);
  auto backend = make_scripted_backend({
      say(delegate("eda_agent", "do something")),
      say("I refuse to emit JSON.", 12),
      say(final_answer("The specialist failed; stopping.")),
  });
  RunWorkspace ws((dir / "runs").string());
  MasterRunResult result = run_master("vague", registry, *backend, ws);
  CHECK(result.transcript.outcome == AgentTranscript::Outcome::Completed);
  CHECK(result.transcript.steps[0].observation.find("BudgetExhausted") !=
        std::string::npos);
  CHECK(result.invoked_agents == std::vector<std::string>{"eda_agent"});
}

TEST_CASE("master survives a delegation to a nonexistent agent") {
  fs::path dir = fresh_dir("unknown");
  ToolRegistry registry;
  register_native_tools(registry);
  auto backend = make_scripted_backend({
      say(delegate("surgeon_agent", "operate")),
      say(final_answer("No such specialist; giving up politely.")),
  });
  RunWorkspace ws((dir / "runs").string());
  MasterRunResult result = run_master("operate", registry, *backend, ws);
  CHECK(result.transcript.outcome == AgentTranscript::Outcome::Completed);
  CHECK(result.invoked_agents.empty());
  CHECK(result.transcript.steps[0].observation.find("surgeon_agent") !=
        std::string::npos);
}

TEST_CASE("exhausted script surfaces as a fatal error") {
  fs::path dir = fresh_dir("exhaust");
  ToolRegistry registry;
  register_native_tools(registry);
  auto backend = make_scripted_backend({
      say(delegate("eda_agent", "one rule only")),
  });
  RunWorkspace ws((dir / "runs").string());
  MasterRunResult result = run_master("x", registry, *backend, ws);
  CHECK(result.transcript.outcome != AgentTranscript::Outcome::Completed);
}

TEST_CASE("category labels match the report columns") {
  const auto& labels = category_labels();
  REQUIRE(labels.size() == 11);
  CHECK(labels[0] == "Image Classification (Training)");
  CHECK(labels[1] == "Image Classification (Inference)");
  CHECK(labels[2] == "Regression (Training)");
  CHECK(labels[3] == "Regression (Inference)");
  CHECK(labels[4] == "Classification (Training)");
  CHECK(labels[5] == "Classification (Inference)");
  CHECK(labels[6] == "TotalSegmentator");
  CHECK(labels[7] == "nnUNet");
  CHECK(labels[8] == "Feature Importance");
  CHECK(labels[9] == "EDA");
  CHECK(labels[10] == "Radiomics");
}

TEST_CASE("corpus loading validates its records") {
  fs::path dir = fresh_dir("corpus");
  auto write_corpus = [&](const std::string& name, const nlohmann::json& j) {
    std::string p = (dir / name).string();
    write_file(p, j.dump(2));
    return p;
  };

  nlohmann::json good = nlohmann::json::array();
  good.push_back({{"id", "p1"},
                  {"category", "EDA"},
                  {"prompt", "profile it"},
                  {"expected_agents", {"eda_agent"}},
                  {"required_artifacts", {"eda/report.md"}}});
  good.push_back({{"id", "p2"},
                  {"category", "Radiomics"},
                  {"prompt", "extract features"},
                  {"expected_agents", {"radiomics_agent"}},
                  {"required_artifacts", nlohmann::json::array()}});
  auto corpus = load_corpus(write_corpus("good.json", good));
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].id == "p1");
  CHECK(corpus[1].expected_agents == std::vector<std::string>{"radiomics_agent"});

  nlohmann::json dup = good;
  dup[1]["id"] = "p1";
  CHECK_THROWS_WITH_AS(load_corpus(write_corpus("dup.json", dup)),
                       doctest::Contains("duplicate"), std::runtime_error);

  nlohmann::json badcat = good;
  badcat[0]["category"] = "Sorcery";
  CHECK_THROWS_WITH_AS(load_corpus(write_corpus("badcat.json", badcat)),
                       doctest::Contains("category"), std::runtime_error);

  nlohmann::json badagent = good;
  badagent[0]["expected_agents"] = {"wizard_agent"};
  CHECK_THROWS(load_corpus(write_corpus("badagent.json", badagent)));

  CHECK_THROWS(load_corpus(write_corpus("empty.json", nlohmann::json::array())));
}

TEST_CASE("subsequence matching for delegation order") {
  CHECK(is_subsequence({}, {}));
  CHECK(is_subsequence({}, {"a"}));
  CHECK(is_subsequence({"a", "c"}, {"a", "b", "c"}));
  CHECK(is_subsequence({"a", "a"}, {"a", "b", "a"}));
  CHECK_FALSE(is_subsequence({"c", "a"}, {"a", "b", "c"}));
  CHECK_FALSE(is_subsequence({"a"}, {}));
  CHECK_FALSE(is_subsequence({"a", "a"}, {"a"}));
}

TEST_CASE("corpus evaluation scores records and writes the report") {
  fs::path dir = fresh_dir("eval");
  std::string csv = write_small_csv(dir);
  ToolRegistry registry;
  register_native_tools(registry);

  std::vector<CorpusPrompt> corpus(2);
  corpus[0] = {"ok-1", "EDA", "profile the dataset", {"eda_agent"},
               {"eda/report.md", "eda/summary_stats.csv"}};
  corpus[1] = {"bad-1", "Radiomics", "extract features", {"radiomics_agent"},
               {"radiomics/features_label_1.csv"}};

  auto factory = [&](const CorpusPrompt&) {
    return make_scripted_backend({
        say(delegate("eda_agent", "Profile " + csv)),
        say(call_action("eda_report", {{"input_path", csv}})),
        say(final_answer("done")),
        say(final_answer("all done")),
    });
  };
  EvaluationSummary summary =
      evaluate_corpus(corpus, registry, factory, (dir / "runs").string());
  REQUIRE(summary.records.size() == 2);
  CHECK(summary.records[0].passed);
  CHECK(summary.records[0].completed);
  CHECK(summary.records[0].required_artifacts_present);
  CHECK_FALSE(summary.records[1].passed);
  CHECK_FALSE(summary.records[1].required_artifacts_present);
  CHECK(summary.records[1].invoked_agents ==
        std::vector<std::string>{"eda_agent"});
  CHECK(summary.success_rate_pct == 50);

  // every record got its own workspace with a manifest
  size_t run_dirs = 0;
  for (const auto& e : fs::directory_iterator(dir / "runs")) {
    if (e.is_directory()) {
      ++run_dirs;
      CHECK(fs::exists(e.path() / "manifest.json"));
    }
  }
  CHECK(run_dirs == 2);

  std::string report = (dir / "report.csv").string();
  write_report_row(report, "scripted", summary);
  std::vector<std::string> lines = split(read_file(report), '\n');
  REQUIRE(lines.size() >= 2);
  std::string header = "backend";
  for (const auto& label : category_labels()) header += "," + label;
  header += ",success_rate_pct";
  CHECK(lines[0] == header);
  // EDA passed (100), Radiomics failed (0), all other categories blank
  CHECK(lines[1] == "scripted,,,,,,,,,,100,0,50");

  write_report_row(report, "scripted-again", summary);
  lines = split(read_file(report), '\n');
  CHECK(lines[2].rfind("scripted-again,", 0) == 0);
  CHECK(std::count(lines.begin(), lines.end(), header) == 1);

  CHECK_THROWS(evaluate_corpus({}, registry, factory, (dir / "runs2").string()));
}

TEST_CASE("per-category percentages round to the nearest integer") {
  EvaluationSummary summary;
  for (int i = 0; i < 3; ++i) {
    EvaluationRecord r;
    r.prompt_id = "e" + std::to_string(i);
    r.category = "EDA";
    r.passed = i < 2;
    summary.records.push_back(r);
  }
  summary.success_rate_pct = 67;
  fs::path dir = fresh_dir("round");
  std::string report = (dir / "report.csv").string();
  write_report_row(report, "b", summary);
  std::vector<std::string> lines = split(read_file(report), '\n');
  CHECK(lines[1] == "b,,,,,,,,,,67,,67");
}
