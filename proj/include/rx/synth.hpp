#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rx/geometry.hpp"

namespace rx {

/// Scripted desk scene: a table plane one meter in front of a camera that slides
/// 1 cm per frame, two demonstration clips of a grasp separated by hand-free
/// frames, and a live frame in which the object is a rigid transform of the one
/// seen in the first clip.
struct SynthOptions {
  std::uint64_t seed = 7;
  int k = 10;
  int descriptor_dim = 32;
  int clip_length = 12;
  int dynamic_tracks = 13;  // hand-attached tracks among 30 static ones
};

struct SynthScene {
  std::filesystem::path manifest;
  std::filesystem::path live_manifest;
  std::filesystem::path vlm_script;
  std::filesystem::path annotations;
  std::filesystem::path config;
  std::string command;

  /// Clip-1 first-frame camera coordinates -> live camera coordinates.
  RigidTransform live_transform;
  /// Scripted gripper poses and opening fractions per clip, in the clip's first-frame coordinates.
  std::vector<std::vector<RigidTransform>> clip_poses;
  std::vector<std::vector<double>> clip_openings;
  std::vector<std::vector<Point3>> clip_keypoints;
  std::vector<Point3> live_keypoints;
  /// Original-recording seconds of each clip.
  std::vector<std::pair<double, double>> clip_spans;

  /// live_transform applied to the first clip's poses.
  std::vector<RigidTransform> expected_live_poses() const;
};

/// Writes the recording, live frame, mock VLM script, annotations and a config
/// file into `dir` (created if needed).
SynthScene write_synthetic_scene(const std::filesystem::path& dir, const SynthOptions& options = {});

}  // namespace rx
