#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentml {

// Shortest round-trippable decimal rendering; integral values drop the
// fractional part ("3" not "3.0"). Used everywhere a float reaches a file so
// output bytes are platform-stable.
std::string format_double(double v);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);

// Replaces characters outside [A-Za-z0-9._-] with '_'; for artifact filenames
// derived from column names.
std::string sanitize_filename(std::string_view s);

std::string base64_encode(const unsigned char* data, size_t len);
std::vector<unsigned char> base64_decode(std::string_view text);

std::string sha256_hex(std::string_view data);

// Shell-style glob (*, ?) over whole paths; '*' matches '/' as well, which is
// what artifact patterns like "out/**" expect at this granularity.
bool glob_match(std::string_view pattern, std::string_view path);

// Deterministic RNG with explicitly-defined draw algorithms. std::mt19937_64
// gives portable raw streams; the distribution shaping here is pinned so the
// same seed yields the same values on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // Uniform in [0, n)
  uint64_t uniform_int(uint64_t n);
  // Uniform in [0, 1)
  double uniform_double();
  double normal();  // standard normal, Box-Muller

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t splitmix();
  uint64_t state_;
  std::optional<double> cached_normal_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace agentml
