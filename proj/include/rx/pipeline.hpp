#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rx/config.hpp"
#include "rx/context.hpp"
#include "rx/descriptors.hpp"
#include "rx/error.hpp"
#include "rx/gripper.hpp"
#include "rx/retrieval.hpp"

namespace rx {

/// Loads a recording manifest:
///   {recording_id, fps, intrinsics: {fx, fy, cx, cy, width, height}, depth_scale?,
///    frames: [{t, rgb, depth, descriptors, hands?, mask?, tracks?}]}
/// `t` is the frame index and must run 0, 1, 2, ... Relative paths resolve against
/// the manifest directory. Every referenced asset must exist, descriptor headers are
/// checked and hand files are loaded.
Recording ingest(const std::filesystem::path& manifest_path);

/// The new observation: a one-frame manifest with its own intrinsics.
struct LiveFrame {
  std::filesystem::path rgb;
  CameraIntrinsics intrinsics;
  DepthMap depth;
  DescriptorGrid descriptors;
};

LiveFrame load_live_frame(const std::filesystem::path& manifest_path);

/// Depth maps, tracks and descriptors of one recording, read on demand.
DepthMap load_depth(const Recording& recording, int frame_index);
DescriptorGrid load_descriptors(const Recording& recording, int frame_index);

/// Spans in the timeline of `view`, mapped back to the recording it was filtered from.
double original_span_start(const Recording& view, const ClipSpan& span);
double original_span_end(const Recording& view, const ClipSpan& span);

/// Per-clip preprocessing output.
struct ClipResult {
  ClipSpan span;                  // in the presence-filtered timeline
  double original_start_s = 0.0;  // in the ingested recording
  double original_end_s = 0.0;
  std::vector<int> frames;        // original frame indices used for the trajectory
  std::vector<int> skipped_frames;  // clip frames without a hand detection
  std::vector<int> flagged_frames;  // frames whose pose was inherited
  KeypointSet keypoints;          // in clip frame-1 coordinates
  HandTrajectory trajectory;      // 21 joints, clip frame-1 coordinates
};

struct StageFailure {
  std::string stage;
  ErrorKind kind = ErrorKind::InvalidArgument;
  std::string message;

  friend bool operator==(const StageFailure&, const StageFailure&) = default;
};

struct Diagnostics {
  std::string vlm;
  std::string backend;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_ms;  // exported only with export_timings
  std::optional<StageFailure> failure;
};

struct ExecutionResult {
  std::string recording_id;
  std::string command;
  PipelineConfig config;
  std::vector<ClipSpan> spans;
  std::vector<int> descriptor_patches;  // source patches in clip 1's first frame
  std::vector<ClipResult> clips;
  std::optional<HeuristicKind> heuristic;
  std::optional<KeypointSet> live_keypoints;
  std::optional<GenerationResult> generated;  // hand trajectory for the live scene
  std::optional<GripperTrajectory> gripper;
  Diagnostics diagnostics;

  bool ok() const { return !diagnostics.failure.has_value(); }
};

/// Clients and models selected by the configuration.
struct Components {
  std::unique_ptr<VlmClient> vlm;
  std::unique_ptr<SequenceBackend> backend;
  GripperModel gripper;
};

Components make_components(const PipelineConfig& config);

/// segment_by_presence -> retrieve_clips -> per clip (descriptor selection over the
/// first frames, keypoint lifting, stabilization, hand trajectory) -> select_heuristic
/// -> generate_trajectory -> map_trajectory. A failing stage is recorded in
/// diagnostics.failure and the outputs of earlier stages are kept.
ExecutionResult execute_command(const Recording& recording, const LiveFrame& live, const Command& command,
                                const PipelineConfig& config, Components& components);
ExecutionResult execute_command(const Recording& recording, const LiveFrame& live, const Command& command,
                                const PipelineConfig& config);

nlohmann::json result_to_json(const ExecutionResult& result);
/// Inverse of result_to_json; throws Schema on malformed documents.
ExecutionResult result_from_json(const nlohmann::json& doc);
ExecutionResult read_result(const std::filesystem::path& path);

enum class ExportFormat { Json, Ply, Svg };
ExportFormat parse_export_format(std::string_view text);

/// Writes result.json / result.ply / result.svg into out_dir and returns the paths.
std::vector<std::filesystem::path> export_result(const ExecutionResult& result,
                                                 const std::filesystem::path& out_dir,
                                                 const std::vector<ExportFormat>& formats);

/// Canonical JSON text (2-space indent, trailing newline).
std::string dump_json(const nlohmann::json& doc);

}  // namespace rx
