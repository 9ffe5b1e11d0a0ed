#include "agentml/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "agentml/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace agentml {

namespace {

nlohmann::json request_json(const CompletionRequest& request) {
  nlohmann::json body;
  body["model"] = request.model_id;
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : request.messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = msgs;
  body["temperature"] = request.temperature;
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  return body;
}

void check_request(const CompletionRequest& request) {
  if (request.messages.empty() || request.messages.front().role != "system") {
    throw FatalBackendError(
        "completion request must start with a system message");
  }
}

class HttpBackend : public LlmBackend {
 public:
  HttpBackend(std::string base_url, std::string api_key_env,
              std::function<void(int)> sleep_ms)
      : base_url_(std::move(base_url)),
        api_key_env_(std::move(api_key_env)),
        sleep_ms_(std::move(sleep_ms)) {
    if (!sleep_ms_) {
      sleep_ms_ = [](int ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
      };
    }
  }

  std::string name() const override { return "http:" + base_url_; }

  ModelResponse complete(const CompletionRequest& request) override {
    check_request(request);
    std::string key;
    if (!api_key_env_.empty()) {
      const char* v = std::getenv(api_key_env_.c_str());
      if (!v || !*v) {
        throw FatalBackendError("API key environment variable not set: " +
                                api_key_env_);
      }
      key = v;
    }
    std::string body = request_json(request).dump();
    std::mt19937 jitter_rng(std::random_device{}());
    std::uniform_real_distribution<double> jitter(0.8, 1.2);
    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
      if (attempt > 0) {
        sleep_ms_(static_cast<int>(1000.0 * (1 << (attempt - 1)) *
                                   jitter(jitter_rng)));
      }
      httplib::Client client(base_url_);
      client.set_read_timeout(120, 0);
      httplib::Headers headers;
      if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
      auto res = client.Post("/chat/completions", headers, body,
                             "application/json");
      if (!res) {
        last_error = "connection failure or timeout";
        continue;  // retryable
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;  // retryable
      }
      if (res->status != 200) {
        throw FatalBackendError("HTTP " + std::to_string(res->status) + ": " +
                                res->body);
      }
      try {
        auto j = nlohmann::json::parse(res->body);
        ModelResponse out;
        out.text = j.at("choices").at(0).at("message").at("content")
                       .get<std::string>();
        if (j.contains("usage")) {
          out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
          out.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        return out;
      } catch (const std::exception& e) {
        throw FatalBackendError(std::string("malformed completion response: ") +
                                e.what());
      }
    }
    throw FatalBackendError("backend unreachable after 3 attempts (" +
                            last_error + ")");
  }

 private:
  std::string base_url_;
  std::string api_key_env_;
  std::function<void(int)> sleep_ms_;
};

class ScriptedBackend : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules)
      : rules_(std::move(rules)) {
    remaining_.reserve(rules_.size());
    for (const auto& r : rules_) remaining_.push_back(r.repeat);
  }

  std::string name() const override { return "scripted"; }

  ModelResponse complete(const CompletionRequest& request) override {
    check_request(request);
    std::string probe;
    for (auto it = request.messages.rbegin(); it != request.messages.rend();
         ++it) {
      if (it->role != "system") {
        probe = it->content;
        break;
      }
    }
    for (size_t i = 0; i < rules_.size(); ++i) {
      if (remaining_[i] <= 0) continue;
      bool match = rules_[i].trigger == ScriptRule::Trigger::Always ||
                   probe.find(rules_[i].pattern) != std::string::npos;
      if (match) {
        --remaining_[i];
        return {rules_[i].response, 0, 0};
      }
    }
    throw ScriptExhausted("no scripted response matches the conversation");
  }

 private:
  std::vector<ScriptRule> rules_;
  std::vector<int> remaining_;
};

class ReplayBackend : public LlmBackend {
 public:
  explicit ReplayBackend(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalBackendError("cannot open recording: " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        entries_.push_back({j.at("request_sha256").get<std::string>(),
                            j.at("response").get<std::string>()});
      } catch (const std::exception& e) {
        throw FatalBackendError("malformed recording line " +
                                std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  std::string name() const override { return "replay"; }

  ModelResponse complete(const CompletionRequest& request) override {
    check_request(request);
    if (cursor_ >= entries_.size()) {
      throw ReplayMismatch("replay exhausted: no recorded response for call " +
                           std::to_string(cursor_ + 1));
    }
    std::string hash = request_sha256(request);
    if (entries_[cursor_].first != hash) {
      throw ReplayMismatch("replay diverged at call " +
                           std::to_string(cursor_ + 1));
    }
    return {entries_[cursor_++].second, 0, 0};
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  size_t cursor_ = 0;
};

class RecordingBackend : public LlmBackend {
 public:
  RecordingBackend(std::unique_ptr<LlmBackend> inner, std::string sink)
      : inner_(std::move(inner)), sink_(std::move(sink)) {}

  std::string name() const override { return inner_->name() + "+record"; }

  ModelResponse complete(const CompletionRequest& request) override {
    ModelResponse response = inner_->complete(request);
    nlohmann::json line;
    line["request_sha256"] = request_sha256(request);
    line["response"] = response.text;
    std::ofstream out(sink_, std::ios::app);
    if (!out) throw FatalBackendError("cannot write recording: " + sink_);
    out << line.dump() << "\n";
    if (!out) throw FatalBackendError("recording write failed: " + sink_);
    return response;
  }

 private:
  std::unique_ptr<LlmBackend> inner_;
  std::string sink_;
};

}  // namespace

std::string request_sha256(const CompletionRequest& request) {
  return sha256_hex(request_json(request).dump());
}

std::unique_ptr<LlmBackend> make_http_backend(
    const std::string& base_url, const std::string& api_key_env,
    std::function<void(int)> sleep_ms) {
  return std::make_unique<HttpBackend>(base_url, api_key_env,
                                       std::move(sleep_ms));
}

std::unique_ptr<LlmBackend> make_scripted_backend(
    std::vector<ScriptRule> rules) {
  return std::make_unique<ScriptedBackend>(std::move(rules));
}

std::unique_ptr<LlmBackend> make_replay_backend(const std::string& path) {
  return std::make_unique<ReplayBackend>(path);
}

std::unique_ptr<LlmBackend> make_recording_backend(
    std::unique_ptr<LlmBackend> inner, const std::string& sink_path) {
  return std::make_unique<RecordingBackend>(std::move(inner), sink_path);
}

}  // namespace agentml
