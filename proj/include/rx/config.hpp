#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rx {

/// Run configuration. Sources, lowest precedence first: defaults, a key = value
/// file, command-line overrides, then RX_<KEY> environment variables.
struct PipelineConfig {
  int k = 10;
  double quantum = 0.001;
  int augment_copies = 0;
  double augment_translation = 0.0;  // meters
  double augment_rotation = 0.0;     // radians
  double retrieval_tolerance = 3.0;  // seconds
  int min_gap = 1;                   // presence gaps shorter than this are bridged
  double ransac_threshold = 0.01;
  int ransac_iterations = 500;
  std::string gripper_model;  // empty: Robotiq 2F-85 defaults
  std::string vlm = "mock";   // mock | http
  std::string vlm_script;
  std::string vlm_endpoint;
  std::string backend = "baseline";  // baseline | llm
  std::string llm_endpoint;
  std::uint64_t seed = 0;
  int retries = 2;
  int max_steps = 40;
  int context_budget = 0;
  bool export_timings = false;

  /// Parses and assigns one key. Unknown keys and malformed values raise InvalidArgument.
  void set(std::string_view key, std::string_view value);
  /// Range checks across all fields.
  void validate() const;

  nlohmann::json to_json() const;
  static const std::vector<std::string>& keys();
};

/// Applies `key = value` lines; `#` starts a comment, values may be double-quoted.
/// Relative gripper_model / vlm_script paths resolve against `base_dir` when given.
void apply_config_text(PipelineConfig& config, std::string_view text, const std::string& source = "config",
                       const std::filesystem::path& base_dir = {});
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);
/// Reads RX_<KEY> (upper-cased key) for every known key.
void apply_environment(PipelineConfig& config);

PipelineConfig load_config(const std::optional<std::filesystem::path>& file,
                           const std::map<std::string, std::string>& overrides, bool use_environment = true);

}  // namespace rx
