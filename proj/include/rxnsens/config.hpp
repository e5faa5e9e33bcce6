#ifndef RXNSENS_CONFIG_HPP
#define RXNSENS_CONFIG_HPP

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rxnsens/model.hpp"
#include "rxnsens/study.hpp"

namespace rxnsens {

inline constexpr std::string_view kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/**
 * Flat `key = value` file. Blank lines and lines starting with `#` are
 * ignored, except that when the text contains `# config: key = value`
 * lines, only those are read. This lets a report CSV serve as its own config.
 */
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  const std::vector<ConfigEntry>& entries() const { return entries_; }
  const ConfigEntry* find(std::string_view key) const;
  const ConfigEntry& require(std::string_view key) const;
  /// Throws on the first key not in `allowed`.
  void check_keys(std::initializer_list<std::string_view> allowed) const;

 private:
  std::vector<ConfigEntry> entries_;
};

// Value parsers; `line` is only used in error messages.
double parse_double(std::string_view text, int line = 0);
std::int64_t parse_int(std::string_view text, int line = 0);
std::uint64_t parse_uint(std::string_view text, int line = 0);
/// Comma and/or whitespace separated.
std::vector<std::string> split_list(std::string_view text);
/// A list of numbers, or `start:stop:step` (inclusive of stop up to rounding).
std::vector<double> parse_grid(std::string_view text, int line = 0);
std::vector<Method> parse_methods(std::string_view text, int line = 0);
Reference parse_reference(std::string_view text, int line = 0);
std::string_view reference_name(Reference reference);

struct LoadedScaling {
  std::filesystem::path model_path;
  ReactionNetwork network;
  ScalingConfig config;
};

struct LoadedTimeStudy {
  std::filesystem::path model_path;
  ReactionNetwork network;
  TimeStudyConfig config;
};

/// Model paths are resolved against `base_dir`. Model parse failures surface as ModelError.
LoadedScaling scaling_from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir);
LoadedTimeStudy time_study_from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir);
LoadedScaling load_scaling_config(const std::filesystem::path& path);
LoadedTimeStudy load_time_study_config(const std::filesystem::path& path);

/// Comment header: version line, command, and every effective setting except the worker count.
std::string scaling_header(const LoadedScaling& loaded);
std::string time_study_header(const LoadedTimeStudy& loaded);

}  // namespace rxnsens

#endif  // RXNSENS_CONFIG_HPP
