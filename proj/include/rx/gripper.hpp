#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "rx/geometry.hpp"
#include "rx/hands.hpp"

namespace rx {

/// Parallel-jaw gripper landmarks in gripper-local coordinates (meters).
struct GripperModel {
  double stroke = 0.085;
  Point3 left_tip;
  Point3 right_tip;
  Point3 palm_base;
  Point3 contact_tip;   // closed-finger contact line, distal end
  Point3 contact_mid;
  Point3 contact_base;  // closed-finger contact line, proximal end

  /// Robotiq 2F-85 reference configuration: z is the approach axis, y the closing
  /// axis, origin at the palm.
  static GripperModel robotiq_2f85();

  /// Throws InvalidArgument unless stroke > 0, landmarks are finite, the contact
  /// points are collinear, the fingertips are apart and off the contact line.
  void validate() const;
};

/// JSON `{stroke, landmarks: {left_tip: [x,y,z], ...}}`.
GripperModel read_gripper_model(const std::filesystem::path& path);
void write_gripper_model(const std::filesystem::path& path, const GripperModel& model);

struct GripperPose {
  RigidTransform pose;  // gripper-local -> frame-1 world
  double opening_fraction = 0.0;
  HeuristicKind heuristic = HeuristicKind::Grasp;
  double residual_rms = 0.0;  // alignment RMS over the fitted correspondences
};

struct GripperTrajectory {
  std::vector<GripperPose> poses;
  std::vector<int> frame_ids;
  /// Binary close command per step (see close_commands).
  std::vector<bool> closed;

  int size() const { return static_cast<int>(poses.size()); }
};

/// clamp(separation / stroke, 0, 1).
double opening_fraction(double separation, double stroke);

/// Aligns {left_tip, right_tip, palm_base} with {index_tip, thumb_tip,
/// midpoint(index_mcp, thumb_dip)} by least squares.
GripperPose grasp_pose(const HandJointFrame& frame, const GripperModel& model);
/// Aligns four evenly spaced points of the closed contact line (tip to base) with
/// the index tip, dip, pip and mcp. The gripper is closed.
GripperPose press_pose(const HandJointFrame& frame, const GripperModel& model);
/// As press_pose, against the index/middle midpoints.
GripperPose push_pose(const HandJointFrame& frame, const GripperModel& model);

/// Pose from the heuristic's four subset joints (layout order of JointLayout).
GripperPose pose_from_subset(std::span<const Point3> subset, HeuristicKind kind, const GripperModel& model);

/// Close commands: grasp closes after the opening fraction stays below 0.5 for two
/// consecutive steps and reopens after two consecutive steps at or above 0.5;
/// press and push are closed throughout.
std::vector<bool> close_commands(std::span<const GripperPose> poses, HeuristicKind kind);

/// Applies the heuristic to every frame. Accepts mano21 trajectories or ones
/// already in the heuristic's joint layout. Errors name the failing frame.
GripperTrajectory map_trajectory(const HandTrajectory& trajectory, HeuristicKind kind,
                                 const GripperModel& model);

}  // namespace rx
