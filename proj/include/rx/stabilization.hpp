#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rx/geometry.hpp"

namespace rx {

/// Static-scene segmentation of one frame; true marks floor/wall/table minus the person.
class StaticMask {
 public:
  StaticMask() = default;
  StaticMask(int frame_id, int width, int height, std::vector<std::uint8_t> cells);

  int frame_id() const { return frame_id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int col, int row) const { return cells_[static_cast<std::size_t>(row) * width_ + col] != 0; }

 private:
  int frame_id_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// 8-bit PNG, nonzero = static.
StaticMask read_mask_png(const std::filesystem::path& path, int frame_id);

struct TrackObservation {
  int frame = 0;
  Pixel pixel;
  bool visible = true;
};

struct Track {
  int id = 0;
  std::vector<TrackObservation> observations;

  /// Visible observation at `frame`, if any.
  std::optional<Pixel> at(int frame) const;
};

struct TrackSet {
  std::vector<Track> tracks;
};

/// JSON `{tracks: [{id, points: [[t, u, v, visible], ...]}]}`.
TrackSet read_track_file(const std::filesystem::path& path);
void write_track_file(const std::filesystem::path& path, const TrackSet& tracks);

struct FramePose {
  int frame_id = 0;
  RigidTransform to_first;  // T_{1<-t}: frame-t camera coordinates into frame-1 coordinates
  bool flagged = false;     // no consensus; pose inherited from the previous frame
  int inliers = 0;
};

struct FramePoses {
  std::vector<FramePose> frames;

  const FramePose* find(int frame_id) const;
  std::vector<int> flagged_frames() const;
};

struct StabilizationParams {
  RansacParams ransac;
  std::uint64_t seed = 0;
};

/// Draws `count` static pixels in seeded random order, keeping only those at
/// least `min_separation` pixels from every earlier pick.
std::vector<Pixel> sample_static_points(const StaticMask& mask, int count, std::uint64_t seed,
                                        double min_separation);

/// Estimates every frame directly against the first one (frame_ids[0]) from tracks
/// visible with valid depth in both frames. Frames without consensus inherit the
/// previous pose and are flagged. depths[i] belongs to frame_ids[i].
FramePoses estimate_frame_poses(const TrackSet& tracks, std::span<const int> frame_ids,
                                std::span<const DepthMap> depths, const CameraIntrinsics& intrinsics,
                                const StabilizationParams& params = {});

std::vector<Point3> reexpress_in_frame1(const FramePoses& poses, int frame_id,
                                        std::span<const Point3> points);

}  // namespace rx
