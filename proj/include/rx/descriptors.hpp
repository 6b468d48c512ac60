#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "rx/geometry.hpp"
#include "rx/kernels.hpp"

namespace rx {

using kernels::RowMatrix;

/// Maps patch (row, col) to the pixel at its center:
/// u = origin_x + col * patch_size + patch_size / 2 (integer division), same for v.
struct PatchLayout {
  int patch_size = 1;
  int origin_x = 0;
  int origin_y = 0;
};

/// Dense per-patch descriptors of one frame (row-major over patches).
class DescriptorGrid {
 public:
  DescriptorGrid() = default;
  DescriptorGrid(int frame_id, int patch_rows, int patch_cols, PatchLayout layout, RowMatrix data);

  int frame_id() const { return frame_id_; }
  int patch_rows() const { return patch_rows_; }
  int patch_cols() const { return patch_cols_; }
  int patch_count() const { return patch_rows_ * patch_cols_; }
  int descriptor_dim() const { return static_cast<int>(data_.cols()); }
  const PatchLayout& layout() const { return layout_; }
  const RowMatrix& data() const { return data_; }

  Pixel patch_center(int patch_index) const;
  /// Copy of the data with every nonzero row scaled to unit length.
  RowMatrix normalized() const;

 private:
  int frame_id_ = 0;
  int patch_rows_ = 0;
  int patch_cols_ = 0;
  PatchLayout layout_;
  RowMatrix data_;
};

/// The K selected descriptors (unit rows) and the patches they came from.
struct DescriptorSet {
  RowMatrix descriptors;
  int source_frame = 0;
  std::vector<int> source_patches;

  int size() const { return static_cast<int>(descriptors.rows()); }
  int descriptor_dim() const { return static_cast<int>(descriptors.cols()); }
};

/// K lifted keypoints; index i corresponds to descriptor i.
struct KeypointSet {
  std::vector<Point3> points;
  int frame_id = 0;

  int size() const { return static_cast<int>(points.size()); }
};

/// Per-candidate commonality of the reference frame's patches.
struct CommonalityScore {
  int votes = 0;
  double mean_similarity = 0.0;
};

/// Scores every patch of frames[0] by how common it is in frames[1..].
class CommonalityScorer {
 public:
  virtual ~CommonalityScorer() = default;
  virtual std::vector<CommonalityScore> score(std::span<const RowMatrix> normalized_frames) const = 0;
};

/// One vote per other frame in which the candidate forms a mutual nearest-neighbour
/// pair under cosine similarity; mean_similarity averages its best similarity per frame.
class MutualNearestNeighborScorer : public CommonalityScorer {
 public:
  explicit MutualNearestNeighborScorer(kernels::Execution exec = kernels::Execution::Parallel)
      : exec_(exec) {}
  std::vector<CommonalityScore> score(std::span<const RowMatrix> normalized_frames) const override;

 private:
  kernels::Execution exec_;
};

/// Picks the k most common descriptors of first_frames[0] (the first clip's first
/// frame). Ranking: votes, then mean similarity (compared at 1e-9 resolution), then
/// lowest patch index.
DescriptorSet select_common_descriptors(std::span<const DescriptorGrid> first_frames, int k,
                                        const CommonalityScorer& scorer = MutualNearestNeighborScorer{});

/// Patch-center pixel of the most similar grid row for each descriptor, in descriptor order.
std::vector<Pixel> locate_keypoints(const DescriptorSet& descriptors, const DescriptorGrid& frame,
                                    kernels::Execution exec = kernels::Execution::Parallel);

/// Depth lookup used when lifting: nearest pixel, else the nearest valid sample in
/// the surrounding 5x5 window. Returns 0 when nothing valid is found.
double sample_depth_with_fallback(const DepthMap& depth, const Pixel& pixel);

/// Unprojects each pixel; invalid depths are repaired from the 5x5 neighbourhood.
/// Throws UnrepairableDepth listing every index that could not be repaired.
KeypointSet lift_keypoints(std::span<const Pixel> pixels, const DepthMap& depth,
                           const CameraIntrinsics& intrinsics, int frame_id);

// RXDG binary descriptor files (little-endian).
struct DescriptorFileHeader {
  std::uint32_t version = 1;
  std::uint32_t patch_rows = 0;
  std::uint32_t patch_cols = 0;
  std::uint32_t descriptor_dim = 0;
  std::uint32_t patch_size = 0;
  std::int32_t origin_x = 0;
  std::int32_t origin_y = 0;
};

/// Reads and checks the header and payload size without loading the payload.
DescriptorFileHeader read_descriptor_header(const std::filesystem::path& path);
DescriptorGrid read_descriptor_file(const std::filesystem::path& path, int frame_id);
void write_descriptor_file(const std::filesystem::path& path, const DescriptorGrid& grid);

}  // namespace rx
