#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "agentml/adapters.hpp"
#include "agentml/agent.hpp"
#include "agentml/csv.hpp"
#include "agentml/llm.hpp"
#include "agentml/nifti.hpp"
#include "agentml/table.hpp"
#include "agentml/toolspec.hpp"
#include "agentml/util.hpp"
#include "agentml/workspace.hpp"
#include "doctest.h"

using namespace agentml;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("agentml_core_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("format_double renders integral values without a fraction") {
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(-0.5) == "-0.5");
  CHECK(format_double(0.1) == "0.1");
  // round-trips exactly
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("base64 round-trip") {
  std::vector<unsigned char> data = {0, 1, 2, 250, 255, 17};
  std::string text = base64_encode(data.data(), data.size());
  CHECK(base64_decode(text) == data);
  CHECK(base64_encode(nullptr, 0) == "");
}

TEST_CASE("glob matches whole paths with * crossing separators") {
  CHECK(glob_match("*.csv", "leaderboard.csv"));
  CHECK(glob_match("out/*/model.mbundle", "out/blended_model/model.mbundle"));
  CHECK(glob_match("*features*.csv", "radiomics/features_label_1.csv"));
  CHECK_FALSE(glob_match("*.csv", "report.md"));
  CHECK(glob_match("a?c", "abc"));
  CHECK_FALSE(glob_match("a?c", "ac"));
}

TEST_CASE("sha256 known vector") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("seeded rng reproduces its stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43);
  CHECK(Rng(42).next_u64() != c.next_u64());
  Rng d(7);
  for (int i = 0; i < 1000; ++i) {
    double u = d.uniform_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("csv parses quoted fields and escaped quotes") {
  CsvDocument doc = parse_csv("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\n1,2\r\n",
                              "<test>");
  REQUIRE(doc.header.size() == 2);
  REQUIRE(doc.rows.size() == 2);
  CHECK(doc.rows[0][0] == "x,y");
  CHECK(doc.rows[0][1] == "he said \"hi\"");
  CHECK(doc.rows[1][1] == "2");
}

TEST_CASE("csv rejects ragged rows and duplicate headers") {
  CHECK_THROWS(parse_csv("a,b\n1\n", "<test>"));
  CHECK_THROWS(parse_csv("a,a\n1,2\n", "<test>"));
}

TEST_CASE("csv writer quotes only when needed and round-trips") {
  CsvDocument doc;
  doc.header = {"name", "note"};
  doc.rows = {{"plain", "with,comma"}, {"q\"uote", "line\nbreak"}};
  std::string text = render_csv(doc);
  CHECK(text.find("plain") != std::string::npos);
  CHECK(text.find("\"with,comma\"") != std::string::npos);
  CsvDocument back = parse_csv(text, "<roundtrip>");
  CHECK(back.rows == doc.rows);
}

TEST_CASE("column kind inference precedence") {
  CsvDocument doc;
  doc.header = {"num", "boolish", "cat", "date"};
  doc.rows = {{"1.5", "yes", "red", "2021-03-01"},
              {"2", "no", "blue", "2021-04-01"},
              {"-3e2", "yes", "red", "2021-05-11"}};
  FeatureTable t = table_from_csv(doc);
  CHECK(t.columns[0].kind == ColumnKind::Numeric);
  CHECK(t.columns[1].kind == ColumnKind::Boolean);
  CHECK(t.columns[2].kind == ColumnKind::Categorical);
  CHECK(t.columns[3].kind == ColumnKind::Datetime);
}

TEST_CASE("imputation fills median and mode, drops all-missing columns") {
  CsvDocument doc;
  doc.header = {"x", "c", "empty"};
  doc.rows = {{"1", "a", ""}, {"", "b", ""}, {"3", "", ""}, {"10", "a", ""}};
  FeatureTable t = table_from_csv(doc);
  std::vector<std::string> warnings;
  FeatureTable filled = impute(t, &warnings);
  CHECK(filled.n_cols() == 2);  // "empty" dropped
  CHECK(*filled.rows[1][0] == "3");  // lower-of-middles median of {1,3,10}
  CHECK(*filled.rows[2][1] == "a");  // mode
  CHECK_FALSE(warnings.empty());
}

TEST_CASE("encoding one-hot below threshold, ordinal above") {
  CsvDocument doc;
  doc.header = {"color", "big", "y"};
  doc.rows.push_back({"red", "c0", "0"});
  doc.rows.push_back({"blue", "c1", "1"});
  for (int i = 2; i < 22; ++i) {
    doc.rows.push_back({"red", "c" + std::to_string(i), std::to_string(i % 2)});
  }
  FeatureTable t = table_from_csv(doc);
  EncodingPlan plan = fit_encoding(t, "y", 15);
  EncodedMatrix m = apply_encoding(t, plan);
  bool saw_onehot = false, saw_ordinal = false;
  for (const auto& name : m.names) {
    if (name.rfind("color=", 0) == 0) saw_onehot = true;
    if (name == "big") saw_ordinal = true;
  }
  CHECK(saw_onehot);
  CHECK(saw_ordinal);
}

TEST_CASE("apply_encoding matches plan columns by name, extras ignored") {
  CsvDocument doc;
  doc.header = {"a", "b", "y"};
  doc.rows = {{"1", "2", "0"}, {"3", "4", "1"}};
  FeatureTable t = table_from_csv(doc);
  EncodingPlan plan = fit_encoding(t, "y");

  CsvDocument wider;
  wider.header = {"extra", "b", "a", "y"};
  wider.rows = {{"zz", "7", "5", "0"}};
  EncodedMatrix m = apply_encoding(table_from_csv(wider), plan);
  REQUIRE(m.names == std::vector<std::string>{"a", "b"});
  CHECK(m.values[0][0] == 5.0);
  CHECK(m.values[0][1] == 7.0);

  CsvDocument narrower;
  narrower.header = {"a", "y"};
  narrower.rows = {{"5", "0"}};
  CHECK_THROWS_WITH_AS(apply_encoding(table_from_csv(narrower), plan),
                       doctest::Contains("missing from table"),
                       std::runtime_error);
}

// ---------------------------------------------------------------------------
// toolspec

namespace {

ToolDescriptor demo_tool() {
  ToolDescriptor d;
  d.name = "demo";
  d.description = "demo tool";
  ParamSpec p1;
  p1.name = "count";
  p1.kind = ParamKind::Integer;
  p1.required = true;
  ParamSpec p2;
  p2.name = "flag";
  p2.kind = ParamKind::Boolean;
  p2.default_value = false;
  ParamSpec p3;
  p3.name = "mode";
  p3.kind = ParamKind::Enum;
  p3.enum_values = {"fast", "slow"};
  p3.default_value = "fast";
  d.params = {p1, p2, p3};
  return d;
}

}  // namespace

TEST_CASE("validation coerces lenient scalars and fills defaults") {
  nlohmann::json out =
      validate_invocation(demo_tool(), {{"count", "5"}, {"flag", "true"}});
  CHECK(out["count"] == 5);
  CHECK(out["flag"] == true);
  CHECK(out["mode"] == "fast");
  out = validate_invocation(demo_tool(), {{"count", 2}, {"flag", 1}});
  CHECK(out["flag"] == true);
}

TEST_CASE("validation aggregates every violation into one error") {
  try {
    validate_invocation(demo_tool(),
                        {{"mystery", 1}, {"mode", "sideways"}});
    FAIL("expected a validation error");
  } catch (const std::exception& e) {
    std::string what = e.what();
    CHECK(what.find("unknown parameter 'mystery'") != std::string::npos);
    CHECK(what.find("allowed: count, flag, mode") != std::string::npos);
    CHECK(what.find("sideways") != std::string::npos);
    CHECK(what.find("missing required parameter 'count'") !=
          std::string::npos);
  }
}

TEST_CASE("dispatch never throws") {
  auto dir = fresh_dir("dispatch");
  RunWorkspace ws(dir.string());
  ToolRegistry registry;
  registry.register_tool(demo_tool(),
                         [](const nlohmann::json&, RunWorkspace&) -> ToolResult {
                           throw std::runtime_error("executor exploded");
                         });
  ToolResult unknown = registry.dispatch({"nope", {}}, ws);
  CHECK(unknown.status == ToolResult::Status::Failed);
  CHECK(unknown.summary == "unknown tool: nope");
  ToolResult bad_args = registry.dispatch({"demo", {{"count", "x"}}}, ws);
  CHECK(bad_args.status == ToolResult::Status::Failed);
  ToolResult thrown =
      registry.dispatch({"demo", {{"count", 1}}}, ws);
  CHECK(thrown.status == ToolResult::Status::Failed);
  CHECK(thrown.summary.find("executor exploded") != std::string::npos);
}

TEST_CASE("empty catalog renders the no-tools line") {
  CHECK(render_catalog({}) == "no tools available\n");
}

// ---------------------------------------------------------------------------
// llm backends

namespace {

CompletionRequest basic_request(const std::string& user) {
  CompletionRequest r;
  r.model_id = "test";
  r.messages = {{"system", "sys"}, {"user", user}};
  return r;
}

}  // namespace

TEST_CASE("scripted backend: first matching unexhausted rule wins") {
  std::vector<ScriptRule> rules;
  rules.push_back({ScriptRule::Trigger::Substring, "alpha", "A", 1});
  rules.push_back({ScriptRule::Trigger::Always, "", "B", 2});
  auto backend = make_scripted_backend(rules);
  CHECK(backend->complete(basic_request("say alpha")).text == "A");
  CHECK(backend->complete(basic_request("say alpha")).text == "B");
  CHECK(backend->complete(basic_request("anything")).text == "B");
  CHECK_THROWS_AS(backend->complete(basic_request("x")), ScriptExhausted);
}

TEST_CASE("scripted backend probes the final non-system message") {
  std::vector<ScriptRule> rules;
  rules.push_back({ScriptRule::Trigger::Substring, "observation-text", "hit", 1});
  auto backend = make_scripted_backend(rules);
  CompletionRequest r = basic_request("unrelated");
  r.messages.push_back({"assistant", "previous"});
  r.messages.push_back({"tool", "observation-text here"});
  CHECK(backend->complete(r).text == "hit");
}

TEST_CASE("record then replay round-trips; divergence raises") {
  auto dir = fresh_dir("replay");
  std::string sink = (dir / "recording.jsonl").string();
  {
    std::vector<ScriptRule> rules = {
        {ScriptRule::Trigger::Always, "", "one", 1},
        {ScriptRule::Trigger::Always, "", "two", 1}};
    auto recorder =
        make_recording_backend(make_scripted_backend(rules), sink);
    CHECK(recorder->complete(basic_request("q1")).text == "one");
    CHECK(recorder->complete(basic_request("q2")).text == "two");
  }
  auto replay = make_replay_backend(sink);
  CHECK(replay->complete(basic_request("q1")).text == "one");
  CHECK(replay->complete(basic_request("q2")).text == "two");
  CHECK_THROWS_AS(replay->complete(basic_request("q3")), ReplayMismatch);

  auto replay2 = make_replay_backend(sink);
  CHECK_THROWS_AS(replay2->complete(basic_request("different")),
                  ReplayMismatch);
}

TEST_CASE("requests must open with a system message") {
  auto backend = make_scripted_backend(
      {{ScriptRule::Trigger::Always, "", "x", 1}});
  CompletionRequest r;
  r.messages = {{"user", "no system"}};
  CHECK_THROWS_AS(backend->complete(r), FatalBackendError);
}

// ---------------------------------------------------------------------------
// agent loop

TEST_CASE("action extraction tolerates prose and fences") {
  std::string thought;
  AgentAction a = parse_model_action(
      "Sure, let me call it.\n```json\n{\"thought\": \"plan\", \"action\": "
      "{\"tool\": \"demo\", \"arguments\": {\"count\": 2}}}\n```",
      &thought);
  CHECK(a.kind == AgentAction::Kind::ToolCall);
  CHECK(a.tool == "demo");
  CHECK(a.arguments["count"] == 2);
  CHECK(thought == "plan");

  AgentAction f = parse_model_action("{\"final_answer\": \"done\"}");
  CHECK(f.kind == AgentAction::Kind::FinalAnswer);
  CHECK(f.text == "done");
}

TEST_CASE("action extraction failure modes") {
  CHECK(parse_model_action("no json here").kind ==
        AgentAction::Kind::ParseFailure);
  CHECK(parse_model_action("{\"thought\": \"only thinking\"}").kind ==
        AgentAction::Kind::ParseFailure);
  AgentAction both = parse_model_action(
      "{\"action\": {\"tool\": \"t\"}, \"final_answer\": \"x\"}");
  CHECK(both.kind == AgentAction::Kind::ParseFailure);
  CHECK(both.text.find("both") != std::string::npos);
  CHECK(parse_model_action("{\"action\": \"not an object\"}").kind ==
        AgentAction::Kind::ParseFailure);
}

TEST_CASE("agent survives parse failures and finishes on final answer") {
  auto dir = fresh_dir("agent_loop");
  RunWorkspace ws(dir.string());
  ToolRegistry registry;
  registry.register_tool(demo_tool(),
                         [](const nlohmann::json& args, RunWorkspace&) {
                           ToolResult r;
                           r.summary = "ran with count " +
                                       std::to_string(args["count"].get<int>());
                           return r;
                         });
  std::vector<ScriptRule> rules = {
      {ScriptRule::Trigger::Always, "", "gibberish, no action", 1},
      {ScriptRule::Trigger::Always, "",
       "{\"action\": {\"tool\": \"demo\", \"arguments\": {\"count\": 7}}}", 1},
      {ScriptRule::Trigger::Always, "", "{\"final_answer\": \"all done\"}", 1}};
  auto backend = make_scripted_backend(rules);
  AgentConfig config;
  config.name = "tester";
  config.role_description = "You test tools.";
  config.tool_names = {"demo"};
  AgentTranscript t = run_agent(config, "use demo", registry, *backend, ws);
  CHECK(t.outcome == AgentTranscript::Outcome::Completed);
  CHECK(t.answer == "all done");
  REQUIRE(t.steps.size() == 3);
  CHECK(t.steps[0].action.kind == AgentAction::Kind::ParseFailure);
  // the corrective observation restates the grammar
  CHECK(t.steps[0].observation.find("final_answer") != std::string::npos);
  CHECK(t.steps[1].observation == "ran with count 7");
}

TEST_CASE("budget exhaustion and fatal backend error outcomes") {
  auto dir = fresh_dir("agent_outcomes");
  RunWorkspace ws(dir.string());
  ToolRegistry registry;

  AgentConfig config;
  config.name = "tester";
  config.role_description = "role";
  config.max_steps = 3;

  auto nonsense = make_scripted_backend(
      {{ScriptRule::Trigger::Always, "", "never valid", 99}});
  AgentTranscript budget = run_agent(config, "t", registry, *nonsense, ws);
  CHECK(budget.outcome == AgentTranscript::Outcome::BudgetExhausted);
  CHECK(budget.steps.size() == 3);

  auto empty = make_scripted_backend({});
  AgentTranscript fatal = run_agent(config, "t", registry, *empty, ws);
  CHECK(fatal.outcome == AgentTranscript::Outcome::FatalError);
  CHECK_FALSE(fatal.error.empty());
}

TEST_CASE("transcript steps serialize and parse back") {
  AgentStep step;
  step.index = 0;
  step.thought = "think";
  step.action.kind = AgentAction::Kind::ToolCall;
  step.action.tool = "demo";
  step.action.arguments = {{"count", 3}};
  step.observation = "obs";
  step.wall_time_ms = 12;
  AgentStep back = step_from_json(step_to_json(step));
  CHECK(back.index == 0);
  CHECK(back.thought == "think");
  CHECK(back.action.tool == "demo");
  CHECK(back.action.arguments == step.action.arguments);
  CHECK(back.observation == "obs");
  CHECK(back.wall_time_ms == 12);
}

TEST_CASE("record_step enforces contiguous indices") {
  AgentTranscript t;
  AgentStep s0;
  s0.index = 1;
  CHECK_THROWS(record_step(t, s0));
}

// ---------------------------------------------------------------------------
// workspace

TEST_CASE("workspaces never collide and deduplicate artifacts") {
  auto dir = fresh_dir("ws");
  RunWorkspace a(dir.string()), b(dir.string());
  CHECK(a.run_id() != b.run_id());
  CHECK(fs::is_directory(a.dir()));
  a.add_artifact("x.csv");
  a.add_artifact("y.csv");
  a.add_artifact("x.csv");
  CHECK(a.artifacts().size() == 2);
  a.write_manifest("prompt", "backend", "t0", "t1");
  nlohmann::json m = nlohmann::json::parse(read_file(a.manifest_path()));
  CHECK(m["run_id"] == a.run_id());
  CHECK(m["artifacts"].size() == 2);
}

// ---------------------------------------------------------------------------
// adapters

TEST_CASE("manifest json round-trip and placeholder validation") {
  nlohmann::json j;
  j["tool_name"] = "echoer";
  j["argv_template"] = {"/bin/echo", "{word}"};
  j["params"] = {{{"name", "word"}, {"kind", "string"}, {"required", true}}};
  AdapterManifest m = manifest_from_json(j);
  CHECK(m.tool_name == "echoer");
  CHECK(m.success_exit_codes == std::vector<int>{0});
  AdapterManifest back = manifest_from_json(manifest_to_json(m));
  CHECK(back.argv_template == m.argv_template);

  j["argv_template"] = {"/bin/echo", "{unknown}"};
  CHECK_THROWS_WITH_AS(manifest_from_json(j),
                       doctest::Contains("undeclared parameter"),
                       std::runtime_error);
}

TEST_CASE("load_manifests rejects duplicates") {
  auto dir = fresh_dir("manifests");
  nlohmann::json j;
  j["tool_name"] = "dup";
  j["argv_template"] = {"/bin/true"};
  write_file((dir / "a.manifest.json").string(), j.dump());
  write_file((dir / "b.manifest.json").string(), j.dump());
  CHECK_THROWS_WITH_AS(load_manifests(dir.string()),
                       doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("run_adapter: success needs exit code and expected outputs") {
  auto dir = fresh_dir("adapter_run");
  AdapterManifest m;
  m.tool_name = "toucher";
  m.argv_template = {"/bin/sh", "-c", "echo hello && touch {filename}"};
  ParamSpec p;
  p.name = "filename";
  p.kind = ParamKind::String;
  p.required = true;
  m.params = {p};
  m.expected_outputs = {"{filename}"};
  m.timeout_s = 10;

  AdapterRunResult ok = run_adapter(m, {{"filename", "made.txt"}}, dir.string());
  CHECK(ok.status == AdapterRunResult::Status::Ok);
  CHECK(ok.exit_code == 0);
  CHECK(ok.stdout_tail.find("hello") != std::string::npos);
  REQUIRE(ok.outputs.size() == 1);
  CHECK(fs::exists(ok.outputs[0]));

  m.expected_outputs = {"never_created.txt"};
  AdapterRunResult missing =
      run_adapter(m, {{"filename", "other.txt"}}, dir.string());
  CHECK(missing.status == AdapterRunResult::Status::Failed);
  CHECK(missing.message.find("expected outputs") != std::string::npos);

  AdapterManifest fail;
  fail.tool_name = "failer";
  fail.argv_template = {"/bin/sh", "-c", "echo boom >&2; exit 3"};
  AdapterRunResult bad = run_adapter(fail, nlohmann::json::object(),
                                     dir.string());
  CHECK(bad.status == AdapterRunResult::Status::Failed);
  CHECK(bad.exit_code == 3);
  CHECK(bad.stderr_tail.find("boom") != std::string::npos);

  fail.success_exit_codes = {0, 3};
  AdapterRunResult tolerated = run_adapter(fail, nlohmann::json::object(),
                                           dir.string());
  CHECK(tolerated.status == AdapterRunResult::Status::Ok);
}

TEST_CASE("run_adapter kills processes that outlive the timeout") {
  auto dir = fresh_dir("adapter_timeout");
  AdapterManifest m;
  m.tool_name = "sleeper";
  m.argv_template = {"/bin/sleep", "30"};
  m.timeout_s = 0.3;
  auto start = std::chrono::steady_clock::now();
  AdapterRunResult r = run_adapter(m, nlohmann::json::object(), dir.string());
  auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(r.status == AdapterRunResult::Status::Timeout);
  CHECK(elapsed < std::chrono::seconds(5));
}

TEST_CASE("absent optional parameters drop their argv tokens") {
  AdapterManifest m;
  m.tool_name = "opt";
  m.argv_template = {"/bin/echo", "--always={req}", "--sometimes={opt}"};
  ParamSpec req;
  req.name = "req";
  req.kind = ParamKind::String;
  req.required = true;
  ParamSpec opt;
  opt.name = "opt";
  opt.kind = ParamKind::String;
  m.params = {req, opt};
  auto dir = fresh_dir("adapter_opt");
  AdapterRunResult r = run_adapter(m, {{"req", "x"}}, dir.string());
  CHECK(r.status == AdapterRunResult::Status::Ok);
  CHECK(r.stdout_tail.find("--always=x") != std::string::npos);
  CHECK(r.stdout_tail.find("--sometimes") == std::string::npos);
}

TEST_CASE("builtin adapter schemas expose the five external tools") {
  std::vector<AdapterManifest> ms = builtin_manifests("/bin/true");
  REQUIRE(ms.size() == 5);
  std::vector<std::string> names;
  for (const auto& m : ms) names.push_back(m.tool_name);
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{
                     "image_classifier_infer", "image_classifier_train",
                     "nnunet_infer", "nnunet_train", "totalsegmentator"});
  ToolRegistry registry;
  register_adapter_tools(registry, ms);
  const ToolDescriptor* ts = registry.find("totalsegmentator");
  REQUIRE(ts != nullptr);
  bool has_task = false;
  for (const auto& p : ts->params) {
    if (p.name == "task") {
      has_task = true;
      CHECK(p.kind == ParamKind::Enum);
      CHECK(p.enum_values == std::vector<std::string>{"total", "total_mr"});
    }
  }
  CHECK(has_task);
}

// ---------------------------------------------------------------------------
// nifti

namespace {

NiftiVolume demo_volume() {
  NiftiVolume v;
  v.dims = {3, 2, 2};
  v.spacing = {1.0, 2.0, 3.0};
  v.voxels.resize(12);
  for (size_t i = 0; i < 12; ++i) v.voxels[i] = static_cast<double>(i) - 5.5;
  return v;
}

}  // namespace

TEST_CASE("nifti write/read round-trip, plain and gzip") {
  auto dir = fresh_dir("nifti");
  NiftiVolume v = demo_volume();
  for (std::string name : {"plain.nii", "packed.nii.gz"}) {
    std::string path = (dir / name).string();
    write_nifti(path, v);
    NiftiVolume back = read_nifti(path);
    CHECK(back.dims == v.dims);
    CHECK(back.spacing[1] == doctest::Approx(2.0));
    REQUIRE(back.voxels.size() == v.voxels.size());
    for (size_t i = 0; i < v.voxels.size(); ++i) {
      CHECK(back.voxels[i] == v.voxels[i]);
    }
  }
}

TEST_CASE("nifti reader distinguishes its error cases") {
  auto dir = fresh_dir("nifti_errors");
  CHECK_THROWS_WITH_AS(read_nifti((dir / "absent.nii").string()),
                       doctest::Contains("cannot open"), std::runtime_error);

  std::string bad_magic = (dir / "magic.nii").string();
  std::string header(352, '\0');
  header[0] = 92;  // sizeof_hdr wrong on purpose too
  write_file(bad_magic, header);
  CHECK_THROWS_WITH_AS(read_nifti(bad_magic), doctest::Contains("magic"),
                       std::runtime_error);

  std::string truncated = (dir / "short.nii").string();
  write_file(truncated, "ni");
  CHECK_THROWS_WITH_AS(read_nifti(truncated), doctest::Contains("truncated"),
                       std::runtime_error);

  // valid header, payload cut short
  std::string cut = (dir / "cut.nii").string();
  write_nifti(cut, demo_volume());
  std::string full = read_file(cut);
  write_file(cut, full.substr(0, full.size() - 8));
  CHECK_THROWS_WITH_AS(read_nifti(cut), doctest::Contains("payload"),
                       std::runtime_error);
}
