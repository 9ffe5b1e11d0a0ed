#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace agentml {

struct ChatMessage {
  std::string role;  // system, user, assistant, tool
  std::string content;
};

struct CompletionRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;  // first must be the system message
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

struct ModelResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct FatalBackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ScriptExhausted : FatalBackendError {
  using FatalBackendError::FatalBackendError;
};
struct ReplayMismatch : FatalBackendError {
  using FatalBackendError::FatalBackendError;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual ModelResponse complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct ScriptRule {
  enum class Trigger { Always, Substring };
  Trigger trigger = Trigger::Always;
  std::string pattern;   // for Substring, matched against the final
                         // non-system message
  std::string response;
  int repeat = 1;        // times this rule may fire
};

// Canonical hash used by the record/replay pair.
std::string request_sha256(const CompletionRequest& request);

// OpenAI-compatible POST {base_url}/chat/completions with retries (3 attempts
// on timeout/5xx/429, backoff 1s/2s/4s with +-20% jitter). api_key_env names
// the environment variable holding the bearer token; empty = no auth header.
// sleep_ms is injectable so tests can skip real waiting.
std::unique_ptr<LlmBackend> make_http_backend(
    const std::string& base_url, const std::string& api_key_env,
    std::function<void(int)> sleep_ms = {});

std::unique_ptr<LlmBackend> make_scripted_backend(std::vector<ScriptRule> rules);

// Replays a JSONL recording ({"request_sha256","response"} per line) in
// order; divergence raises ReplayMismatch.
std::unique_ptr<LlmBackend> make_replay_backend(const std::string& path);

// Wraps any backend, appending each call to sink_path as recording lines.
std::unique_ptr<LlmBackend> make_recording_backend(
    std::unique_ptr<LlmBackend> inner, const std::string& sink_path);

}  // namespace agentml
