#include "agentml/workspace.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "agentml/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace agentml {

std::string iso_timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::string compact_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

}  // namespace

RunWorkspace::RunWorkspace(const std::string& root) : root_(root) {
  fs::create_directories(root_);
  std::random_device rd;
  for (int attempt = 0; attempt < 64; ++attempt) {
    char suffix[8];
    std::snprintf(suffix, sizeof(suffix), "%04x", rd() & 0xffff);
    std::string candidate = compact_timestamp() + "-" + suffix;
    fs::path dir = fs::path(root_) / candidate;
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      run_id_ = candidate;
      dir_ = dir.string();
      return;
    }
  }
  throw std::runtime_error("could not allocate a fresh run directory in " +
                           root_);
}

std::string RunWorkspace::transcript_path() const {
  return (fs::path(dir_) / "transcript.jsonl").string();
}

std::string RunWorkspace::manifest_path() const {
  return (fs::path(dir_) / "manifest.json").string();
}

std::string RunWorkspace::subdir(const std::string& name) {
  fs::path p = fs::path(dir_) / name;
  fs::create_directories(p);
  return p.string();
}

void RunWorkspace::add_artifact(const std::string& path) {
  for (const auto& existing : artifacts_) {
    if (existing == path) return;
  }
  artifacts_.push_back(path);
}

void RunWorkspace::write_manifest(const std::string& prompt,
                                  const std::string& backend,
                                  const std::string& started_at,
                                  const std::string& finished_at) const {
  nlohmann::json j;
  j["run_id"] = run_id_;
  j["prompt"] = prompt;
  j["backend"] = backend;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["artifacts"] = artifacts_;
  write_file(manifest_path(), j.dump(2) + "\n");
}

}  // namespace agentml
