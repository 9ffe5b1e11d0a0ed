#pragma once

#include <string>
#include <vector>

namespace agentml {

// One run directory per agent run: <root>/<run_id>/ holding transcript.jsonl,
// manifest.json, and tool artifact subdirectories. Run ids are timestamped
// with a random 4-hex suffix and never reused.
class RunWorkspace {
 public:
  explicit RunWorkspace(const std::string& root);

  const std::string& root() const { return root_; }
  const std::string& run_id() const { return run_id_; }
  const std::string& dir() const { return dir_; }

  std::string transcript_path() const;
  std::string manifest_path() const;

  // Creates (if needed) and returns <dir>/<name>.
  std::string subdir(const std::string& name);

  void add_artifact(const std::string& path);
  const std::vector<std::string>& artifacts() const { return artifacts_; }

  void write_manifest(const std::string& prompt, const std::string& backend,
                      const std::string& started_at,
                      const std::string& finished_at) const;

 private:
  std::string root_;
  std::string run_id_;
  std::string dir_;
  std::vector<std::string> artifacts_;
};

// UTC timestamp like 2026-08-23T12:34:56Z.
std::string iso_timestamp_now();

}  // namespace agentml
