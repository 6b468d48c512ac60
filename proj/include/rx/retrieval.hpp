#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rx/geometry.hpp"
#include "rx/hands.hpp"
#include "rx/http_client.hpp"

namespace rx {

/// Asset references of one recorded frame. Optional assets are empty paths.
struct FrameAssets {
  int t = 0;
  std::filesystem::path rgb;
  std::filesystem::path depth;
  std::filesystem::path descriptors;
  std::filesystem::path hands;
  std::filesystem::path mask;
  std::filesystem::path tracks;
};

/// The long human video. A presence-filtered view keeps a subset of frames and
/// maps its own contiguous timeline back to the original one.
struct Recording {
  std::string id;
  double fps = 30.0;
  CameraIntrinsics intrinsics;
  double depth_scale = 0.001;  // meters per depth PNG unit
  std::vector<FrameAssets> frames;
  std::vector<int> original_index;  // original frame index of frames[i]
  HandObservations hands;           // keyed by original frame index

  int frame_count() const { return static_cast<int>(frames.size()); }
  double duration() const { return frame_count() / fps; }
  bool is_view() const;

  double to_original_time(double t) const;
  /// nullopt when the original time falls in a removed frame.
  std::optional<double> to_filtered_time(double t) const;
};

/// A retrieved sub-interval, in seconds of the recording it was retrieved from,
/// with the covered frame indices [start_frame, end_frame] of that recording.
struct ClipSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  int start_frame = 0;
  int end_frame = -1;

  friend bool operator==(const ClipSpan& a, const ClipSpan& b) {
    return a.start_s == b.start_s && a.end_s == b.end_s;
  }
};

/// Frames covered by [start_s, end_s): floor(start*fps) .. ceil(end*fps)-1.
ClipSpan make_span(double start_s, double end_s, double fps, int frame_count);

struct Command {
  std::string text;

  /// Throws InvalidArgument for empty or all-blank text.
  explicit Command(std::string t);
};

/// Vision-language model used for retrieval and heuristic selection.
class VlmClient {
 public:
  virtual ~VlmClient() = default;
  /// Raw spans in seconds; frame indices are filled in by retrieve_clips.
  virtual std::vector<ClipSpan> retrieve(const Recording& recording, const Command& command) = 0;
  virtual HeuristicKind classify_heuristic(const Command& command) = 0;
  virtual bool deterministic() const = 0;
  virtual std::string name() const = 0;
};

/// press/turn on/turn off/switch -> press; push/close -> push; otherwise grasp.
HeuristicKind keyword_heuristic(std::string_view command);

/// Scripted client: JSON `{"<command>": {"spans": [[s, e], ...], "heuristic": "grasp"}}`.
/// Unknown commands retrieve nothing; a missing heuristic falls back to the keyword table.
class MockVlmClient : public VlmClient {
 public:
  explicit MockVlmClient(nlohmann::json script);
  static MockVlmClient from_file(const std::filesystem::path& path);

  std::vector<ClipSpan> retrieve(const Recording& recording, const Command& command) override;
  HeuristicKind classify_heuristic(const Command& command) override;
  bool deterministic() const override { return true; }
  std::string name() const override { return "mock"; }

 private:
  nlohmann::json script_;
};

/// Remote VLM behind a JSON endpoint.
///   retrieve: {"task": "retrieve_clips", "command", "recording": {...}} -> {"spans": [[s, e], ...]}
///   classify: {"task": "classify_heuristic", "command", "options": [...]} -> {"heuristic": "..."}
class HttpVlmClient : public VlmClient {
 public:
  explicit HttpVlmClient(HttpJsonClient http) : http_(std::move(http)) {}

  std::vector<ClipSpan> retrieve(const Recording& recording, const Command& command) override;
  HeuristicKind classify_heuristic(const Command& command) override;
  bool deterministic() const override { return false; }
  std::string name() const override { return "http"; }

  HttpJsonClient& transport() { return http_; }

 private:
  HttpJsonClient http_;
};

/// Clamps spans to the recording, drops empty ones, sorts by start and merges
/// overlaps. Throws EmptyRetrieval when nothing valid remains.
std::vector<ClipSpan> retrieve_clips(VlmClient& client, const Recording& recording, const Command& command);

HeuristicKind select_heuristic(VlmClient& client, const Command& command);

struct RetrievalScore {
  std::optional<double> precision;  // empty when nothing was predicted
  std::optional<double> recall;     // empty when there is no ground truth
  int matches = 0;
};

/// Two spans match when both endpoints differ by at most tolerance_s. Matching is
/// one-to-one and of maximum cardinality (augmenting paths, visited in start order).
RetrievalScore evaluate_retrieval(const std::vector<ClipSpan>& predicted,
                                  const std::vector<ClipSpan>& ground_truth, double tolerance_s);

/// View keeping only the hand-present intervals of `timeline` (see filter_hand_frames).
Recording segment_by_presence(const Recording& recording, const PresenceTimeline& timeline, int min_gap);

/// JSON `{task: [[start_s, end_s], ...]}`.
std::map<std::string, std::vector<ClipSpan>> read_annotations(const std::filesystem::path& path);

}  // namespace rx
