#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rx/descriptors.hpp"
#include "rx/hands.hpp"
#include "rx/http_client.hpp"

namespace rx {

/// One (keypoints -> hand trajectory) demonstration, both in the clip's first-frame coordinates.
struct ContextExample {
  KeypointSet keypoints;
  HandTrajectory trajectory;
};

/// Token-ready context text; see docs/prompt_format.md for the grammar.
struct SerializedPrompt {
  std::string text;
  int k = 0;
  int z = 0;
  int joints = 0;
  std::vector<int> lengths;  // trajectory length per example
  double quantum = 0.001;
  JointLayout layout = JointLayout::Mano21;
};

/// Fixed-point encoding: round-half-away(value / quantum).
std::int64_t quantize(double value, double quantum);

SerializedPrompt serialize_context(std::span<const ContextExample> examples, const KeypointSet& live,
                                   double quantum);

struct ParsedPrompt {
  std::vector<ContextExample> examples;
  KeypointSet live;
  double quantum = 0.001;
  JointLayout layout = JointLayout::Mano21;
};

/// Inverse of serialize_context, dequantized to meters.
ParsedPrompt parse_prompt(std::string_view text);

/// Frames in the output grammar followed by "END".
std::string serialize_trajectory(const HandTrajectory& trajectory, double quantum);

struct ParsedTrajectory {
  HandTrajectory trajectory;
  std::vector<std::string> warnings;
};

/// Strict parse of the output grammar. Text after a complete trajectory (after
/// "END" or a line that does not start a frame) is ignored with a warning.
/// Throws ParseError (MalformedOutput or WrongArity) carrying the byte offset.
ParsedTrajectory parse_trajectory(std::string_view raw, int expected_joints, double quantum = 0.001,
                                  JointLayout layout = JointLayout::Mano21);

/// Applies one seeded rigid motion (uniform translation per axis in
/// [-translation_range, translation_range], rotation by a uniform angle in
/// [-rotation_range, rotation_range] about a uniform random axis) to keypoints and trajectory.
ContextExample augment(const ContextExample& example, std::uint64_t seed, double translation_range,
                       double rotation_range);

struct NormalizedContext {
  std::vector<ContextExample> examples;
  KeypointSet live;
  Point3 live_centroid = Point3::Zero();

  /// Moves a trajectory generated in normalized coordinates into the live frame.
  HandTrajectory denormalize(const HandTrajectory& trajectory) const;
};

/// Centers every example (keypoints and trajectory) and the live set on its keypoint centroid.
NormalizedContext normalize_frame(std::span<const ContextExample> examples, const KeypointSet& live);

struct WarpResult {
  HandTrajectory trajectory;
  int example_index = 0;
  double residual_rms = 0.0;
  RigidTransform transform;
};

/// Fits each example's keypoints to the live keypoints, picks the lowest RMS
/// (lowest index on ties) and maps that example's trajectory through the fit.
WarpResult nearest_context_warp(std::span<const ContextExample> examples, const KeypointSet& live);

class SequenceBackend {
 public:
  virtual ~SequenceBackend() = default;
  virtual std::string complete(const SerializedPrompt& prompt) = 0;
  virtual bool deterministic() const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic local backend: parses the prompt, runs nearest_context_warp and
/// answers in the output grammar.
class BaselineBackend : public SequenceBackend {
 public:
  std::string complete(const SerializedPrompt& prompt) override;
  bool deterministic() const override { return true; }
  std::string name() const override { return "baseline"; }
};

/// Remote LLM: POST {"prompt", "max_tokens"} -> {"text"}.
class HttpLlmBackend : public SequenceBackend {
 public:
  explicit HttpLlmBackend(HttpJsonClient http, int max_tokens = 4096)
      : http_(std::move(http)), max_tokens_(max_tokens) {}
  std::string complete(const SerializedPrompt& prompt) override;
  bool deterministic() const override { return false; }
  std::string name() const override { return "llm"; }

 private:
  HttpJsonClient http_;
  int max_tokens_;
};

struct GenerationConfig {
  double quantum = 0.001;
  int retries = 2;          // extra backend attempts after a parse failure
  int max_steps = 40;       // longer examples are resampled, longer outputs truncated
  int context_budget = 0;   // max examples passed to the backend; 0 = all
  int augment_copies = 0;   // augmented copies appended per example
  double augment_translation = 0.0;
  double augment_rotation = 0.0;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  HandTrajectory trajectory;
  bool fallback_used = false;
  std::string backend;
  std::optional<double> residual_rms;  // best keypoint fit RMS over the context
  int attempts = 0;
  std::vector<std::string> warnings;
};

/// normalize -> serialize -> backend -> parse -> denormalize; after `retries`
/// further parse failures falls back to nearest_context_warp and flags it.
GenerationResult generate_trajectory(SequenceBackend& backend, std::span<const ContextExample> examples,
                                     const KeypointSet& live, const GenerationConfig& config);

/// `{frames: [{t, joints: [[x,y,z], ...]}], meta: {fallback_used, backend, residual_rms}}`
/// (plus the joint layout).
nlohmann::json trajectory_to_json(const GenerationResult& result);
GenerationResult trajectory_from_json(const nlohmann::json& doc);

}  // namespace rx
