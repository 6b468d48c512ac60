#include "rx/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rx/error.hpp"

namespace rx {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorKind::InvalidArgument,
              "config: " + std::string(key) + " = '" + std::string(value) + "' is not " + std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad(key, value, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad(key, value, "a boolean");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> names{
      "k",           "quantum",      "augment_copies",    "augment_translation", "augment_rotation",
      "retrieval_tolerance", "min_gap", "ransac_threshold", "ransac_iterations", "gripper_model",
      "vlm",         "vlm_script",   "vlm_endpoint",      "backend",             "llm_endpoint",
      "seed",        "retries",      "max_steps",         "context_budget",      "export_timings"};
  return names;
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  if (key == "k") k = parse_number<int>(key, value);
  else if (key == "quantum") quantum = parse_number<double>(key, value);
  else if (key == "augment_copies") augment_copies = parse_number<int>(key, value);
  else if (key == "augment_translation") augment_translation = parse_number<double>(key, value);
  else if (key == "augment_rotation") augment_rotation = parse_number<double>(key, value);
  else if (key == "retrieval_tolerance") retrieval_tolerance = parse_number<double>(key, value);
  else if (key == "min_gap") min_gap = parse_number<int>(key, value);
  else if (key == "ransac_threshold") ransac_threshold = parse_number<double>(key, value);
  else if (key == "ransac_iterations") ransac_iterations = parse_number<int>(key, value);
  else if (key == "gripper_model") gripper_model = value;
  else if (key == "vlm") vlm = value;
  else if (key == "vlm_script") vlm_script = value;
  else if (key == "vlm_endpoint") vlm_endpoint = value;
  else if (key == "backend") backend = value;
  else if (key == "llm_endpoint") llm_endpoint = value;
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "retries") retries = parse_number<int>(key, value);
  else if (key == "max_steps") max_steps = parse_number<int>(key, value);
  else if (key == "context_budget") context_budget = parse_number<int>(key, value);
  else if (key == "export_timings") export_timings = parse_bool(key, value);
  else throw Error(ErrorKind::InvalidArgument, "config: unknown key '" + std::string(key) + "'");
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, std::string("config: ") + what);
  };
  require(k >= 1 && k <= 4096, "k must be in [1, 4096]");
  require(quantum > 0.0 && quantum <= 1.0, "quantum must be in (0, 1]");
  require(augment_copies >= 0 && augment_copies <= 64, "augment_copies must be in [0, 64]");
  require(augment_translation >= 0.0, "augment_translation must be >= 0");
  require(augment_rotation >= 0.0 && augment_rotation <= 3.14159265358979323846, "augment_rotation must be in [0, pi]");
  require(retrieval_tolerance >= 0.0, "retrieval_tolerance must be >= 0");
  require(min_gap >= 1, "min_gap must be >= 1");
  require(ransac_threshold > 0.0, "ransac_threshold must be > 0");
  require(ransac_iterations >= 1, "ransac_iterations must be >= 1");
  require(vlm == "mock" || vlm == "http", "vlm must be mock or http");
  require(backend == "baseline" || backend == "llm", "backend must be baseline or llm");
  require(vlm != "http" || !vlm_endpoint.empty(), "vlm = http needs vlm_endpoint");
  require(backend != "llm" || !llm_endpoint.empty(), "backend = llm needs llm_endpoint");
  require(retries >= 0 && retries <= 10, "retries must be in [0, 10]");
  require(max_steps >= 2 && max_steps <= 10000, "max_steps must be in [2, 10000]");
  require(context_budget >= 0, "context_budget must be >= 0");
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"k", k},
          {"quantum", quantum},
          {"augment_copies", augment_copies},
          {"augment_translation", augment_translation},
          {"augment_rotation", augment_rotation},
          {"retrieval_tolerance", retrieval_tolerance},
          {"min_gap", min_gap},
          {"ransac_threshold", ransac_threshold},
          {"ransac_iterations", ransac_iterations},
          {"gripper_model", gripper_model},
          {"vlm", vlm},
          {"vlm_script", vlm_script},
          {"vlm_endpoint", vlm_endpoint},
          {"backend", backend},
          {"llm_endpoint", llm_endpoint},
          {"seed", seed},
          {"retries", retries},
          {"max_steps", max_steps},
          {"context_budget", context_budget},
          {"export_timings", export_timings}};
}

void apply_config_text(PipelineConfig& config, std::string_view text, const std::string& source,
                       const std::filesystem::path& base_dir) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    bool quoted = false;
    std::size_t cut = line.size();
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    line = trim(line.substr(0, cut));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::InvalidArgument, source + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    std::string resolved(value);
    if (!base_dir.empty() && !resolved.empty() && (key == "gripper_model" || key == "vlm_script") &&
        std::filesystem::path(resolved).is_relative())
      resolved = (base_dir / resolved).lexically_normal().string();
    try {
      config.set(key, resolved);
    } catch (const Error& e) {
      throw Error(e.kind(), source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingAsset, "config file not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str(), path.string(), path.parent_path());
}

void apply_environment(PipelineConfig& config) {
  for (const auto& key : PipelineConfig::keys()) {
    std::string var = "RX_";
    for (char c : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(var.c_str())) config.set(key, v);
  }
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& file,
                           const std::map<std::string, std::string>& overrides, bool use_environment) {
  PipelineConfig config;
  if (file) apply_config_file(config, *file);
  for (const auto& [key, value] : overrides) config.set(key, value);
  if (use_environment) apply_environment(config);
  config.validate();
  return config;
}

}  // namespace rx
