#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rx/geometry.hpp"
#include "rx/stabilization.hpp"

namespace rx {

/// 21-keypoint hand layout (wrist, then thumb cmc/mcp/ip/tip, then mcp/pip/dip/tip
/// for index, middle, ring and pinky).
enum class Joint : int {
  Wrist = 0,
  ThumbCmc, ThumbMcp, ThumbIp, ThumbTip,
  IndexMcp, IndexPip, IndexDip, IndexTip,
  MiddleMcp, MiddlePip, MiddleDip, MiddleTip,
  RingMcp, RingPip, RingDip, RingTip,
  PinkyMcp, PinkyPip, PinkyDip, PinkyTip,
};

inline constexpr int kHandJointCount = 21;

struct HandJointFrame {
  int frame_id = 0;
  std::array<Point3, kHandJointCount> joints{};

  const Point3& operator[](Joint j) const { return joints[static_cast<int>(j)]; }
  Point3& operator[](Joint j) { return joints[static_cast<int>(j)]; }

  const Point3& index_tip() const { return (*this)[Joint::IndexTip]; }
  const Point3& index_dip() const { return (*this)[Joint::IndexDip]; }
  const Point3& index_pip() const { return (*this)[Joint::IndexPip]; }
  const Point3& index_mcp() const { return (*this)[Joint::IndexMcp]; }
  const Point3& thumb_tip() const { return (*this)[Joint::ThumbTip]; }
  // The thumb has no DIP; its distal interphalangeal joint is the IP.
  const Point3& thumb_dip() const { return (*this)[Joint::ThumbIp]; }
  const Point3& middle_tip() const { return (*this)[Joint::MiddleTip]; }
  const Point3& middle_dip() const { return (*this)[Joint::MiddleDip]; }
  const Point3& middle_pip() const { return (*this)[Joint::MiddlePip]; }
  const Point3& middle_mcp() const { return (*this)[Joint::MiddleMcp]; }

  bool finite() const;
};

enum class HeuristicKind { Grasp, Press, Push };

std::string_view to_string(HeuristicKind kind);
/// Throws InvalidArgument for anything but grasp/press/push.
HeuristicKind parse_heuristic(std::string_view text);

/// Which joints a trajectory frame carries.
///   Mano21: all 21 joints.
///   Grasp:  index_tip, thumb_tip, index_mcp, thumb_dip.
///   Press:  index tip, dip, pip, mcp.
///   Push:   index/middle midpoints of tip, dip, pip, mcp.
enum class JointLayout { Mano21, Grasp, Press, Push };

int joint_count(JointLayout layout);
std::string_view to_string(JointLayout layout);
JointLayout parse_layout(std::string_view text);
JointLayout layout_for(HeuristicKind kind);

struct JointFrame {
  int frame_id = 0;
  std::vector<Point3> joints;
};

struct HandTrajectory {
  int clip_id = 0;
  JointLayout layout = JointLayout::Mano21;
  std::vector<JointFrame> frames;

  int size() const { return static_cast<int>(frames.size()); }
};

JointFrame to_joint_frame(const HandJointFrame& frame);
HandJointFrame to_hand_frame(const JointFrame& frame);

/// The heuristic-relevant joints of a full hand frame, in layout order.
std::vector<Point3> extract_subset(const HandJointFrame& frame, HeuristicKind kind);
/// Converts a Mano21 trajectory to the heuristic's joint layout.
HandTrajectory restrict_to_heuristic(const HandTrajectory& trajectory, HeuristicKind kind);

HandTrajectory transform_trajectory(const RigidTransform& transform, const HandTrajectory& trajectory);

struct PresenceTimeline {
  std::vector<bool> present;
};

/// Inclusive frame-index interval.
struct FrameInterval {
  int first = 0;
  int last = 0;

  int length() const { return last - first + 1; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

/// Maximal runs of present frames; neighbouring runs separated by fewer than
/// `min_gap` absent frames are merged (gap frames included in the merged run).
std::vector<FrameInterval> filter_hand_frames(const PresenceTimeline& timeline, int min_gap);

/// Per-frame hand detections of a recording, in camera coordinates.
class HandObservations {
 public:
  struct Detection {
    int frame = 0;
    bool present = false;
    double confidence = 0.0;
    HandJointFrame joints;
  };

  /// Keeps, per frame, the present detection with the highest confidence.
  void add(const Detection& detection);
  const HandJointFrame* find(int frame) const;
  PresenceTimeline timeline(int frame_count) const;
  const std::map<int, Detection>& detections() const { return by_frame_; }

 private:
  std::map<int, Detection> by_frame_;
};

/// JSON `{frames: [{t, present, joints: [[x,y,z] x 21], confidence}]}`.
HandObservations read_hand_file(const std::filesystem::path& path);
void write_hand_file(const std::filesystem::path& path, const HandObservations& hands);

/// Maps each clip frame's joints into the clip's first-frame coordinates.
HandTrajectory build_hand_trajectory(int clip_id, std::span<const int> frame_ids,
                                     const HandObservations& raw, const FramePoses& poses);

/// Piecewise-linear resampling per joint at uniform parameter; endpoints are kept
/// exactly and output frames are numbered 0..target_length-1.
HandTrajectory resample_trajectory(const HandTrajectory& trajectory, int target_length);

}  // namespace rx
