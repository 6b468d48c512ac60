#include "rx/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rx/error.hpp"

namespace rx {

DescriptorGrid::DescriptorGrid(int frame_id, int patch_rows, int patch_cols, PatchLayout layout,
                               RowMatrix data)
    : frame_id_(frame_id), patch_rows_(patch_rows), patch_cols_(patch_cols), layout_(layout),
      data_(std::move(data)) {
  if (patch_rows <= 0 || patch_cols <= 0)
    throw Error(ErrorKind::InvalidArgument, "descriptor grid: patch counts must be positive");
  if (layout.patch_size <= 0)
    throw Error(ErrorKind::InvalidArgument, "descriptor grid: patch size must be positive");
  if (data_.rows() != static_cast<Eigen::Index>(patch_rows) * patch_cols || data_.cols() < 1)
    throw Error(ErrorKind::InvalidArgument, "descriptor grid: data has " + std::to_string(data_.rows()) +
                                                " rows, expected " + std::to_string(patch_rows * patch_cols));
  if (!data_.allFinite()) throw Error(ErrorKind::InvalidArgument, "descriptor grid: non-finite values");
}

Pixel DescriptorGrid::patch_center(int patch_index) const {
  const int row = patch_index / patch_cols_;
  const int col = patch_index % patch_cols_;
  const int half = layout_.patch_size / 2;
  return {static_cast<double>(layout_.origin_x + col * layout_.patch_size + half),
          static_cast<double>(layout_.origin_y + row * layout_.patch_size + half)};
}

RowMatrix DescriptorGrid::normalized() const {
  RowMatrix out = data_;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

std::vector<CommonalityScore> MutualNearestNeighborScorer::score(
    std::span<const RowMatrix> frames) const {
  const RowMatrix& reference = frames[0];
  std::vector<CommonalityScore> scores(static_cast<std::size_t>(reference.rows()));
  const double others = static_cast<double>(frames.size() - 1);
  for (std::size_t z = 1; z < frames.size(); ++z) {
    const auto forward = kernels::best_matches(reference, frames[z], exec_);
    const auto backward = kernels::best_matches(frames[z], reference, exec_);
    for (std::size_t i = 0; i < forward.size(); ++i) {
      const int j = forward[i].index;
      if (j >= 0 && backward[static_cast<std::size_t>(j)].index == static_cast<int>(i)) ++scores[i].votes;
      scores[i].mean_similarity += forward[i].similarity / others;
    }
  }
  return scores;
}

DescriptorSet select_common_descriptors(std::span<const DescriptorGrid> first_frames, int k,
                                        const CommonalityScorer& scorer) {
  if (first_frames.size() < 2)
    throw Error(ErrorKind::InsufficientFrames,
                "descriptor selection needs at least 2 first frames, got " + std::to_string(first_frames.size()));
  const DescriptorGrid& reference = first_frames.front();
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "descriptor selection: k must be >= 1");
  if (k > reference.patch_count())
    throw Error(ErrorKind::KTooLarge, "descriptor selection: k=" + std::to_string(k) + " exceeds " +
                                          std::to_string(reference.patch_count()) + " patches");

  std::vector<RowMatrix> normalized;
  normalized.reserve(first_frames.size());
  for (const auto& grid : first_frames) {
    if (grid.descriptor_dim() != reference.descriptor_dim())
      throw Error(ErrorKind::DimensionMismatch, "descriptor selection: frames have different descriptor dims");
    normalized.push_back(grid.normalized());
  }

  const auto scores = scorer.score(normalized);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  auto bucket = [](double s) { return std::llround(s * 1e9); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a].votes != scores[b].votes) return scores[a].votes > scores[b].votes;
    const auto sa = bucket(scores[a].mean_similarity);
    const auto sb = bucket(scores[b].mean_similarity);
    if (sa != sb) return sa > sb;
    return a < b;
  });

  DescriptorSet set;
  set.source_frame = reference.frame_id();
  set.descriptors.resize(k, reference.descriptor_dim());
  for (int i = 0; i < k; ++i) {
    set.descriptors.row(i) = normalized[0].row(order[i]);
    set.source_patches.push_back(order[i]);
  }
  return set;
}

std::vector<Pixel> locate_keypoints(const DescriptorSet& descriptors, const DescriptorGrid& frame,
                                    kernels::Execution exec) {
  if (descriptors.descriptor_dim() != frame.descriptor_dim())
    throw Error(ErrorKind::DimensionMismatch,
                "locate keypoints: descriptor dim " + std::to_string(descriptors.descriptor_dim()) +
                    " vs grid dim " + std::to_string(frame.descriptor_dim()));
  const auto matches = kernels::best_matches(descriptors.descriptors, frame.normalized(), exec);
  std::vector<Pixel> pixels;
  pixels.reserve(matches.size());
  for (const auto& m : matches) pixels.push_back(frame.patch_center(m.index));
  return pixels;
}

double sample_depth_with_fallback(const DepthMap& depth, const Pixel& pixel) {
  const int col = std::clamp(static_cast<int>(std::lround(pixel.u)), 0, depth.width() - 1);
  const int row = std::clamp(static_cast<int>(std::lround(pixel.v)), 0, depth.height() - 1);
  if (depth.at(col, row) > 0.0) return depth.at(col, row);
  double best = 0.0;
  int best_dist = 0;
  for (int dv = -2; dv <= 2; ++dv) {
    for (int du = -2; du <= 2; ++du) {
      const int c = col + du;
      const int r = row + dv;
      if (c < 0 || r < 0 || c >= depth.width() || r >= depth.height()) continue;
      const double d = depth.at(c, r);
      const int dist = du * du + dv * dv;
      if (d > 0.0 && (best == 0.0 || dist < best_dist)) {
        best = d;
        best_dist = dist;
      }
    }
  }
  return best;
}

KeypointSet lift_keypoints(std::span<const Pixel> pixels, const DepthMap& depth,
                           const CameraIntrinsics& intrinsics, int frame_id) {
  if (depth.width() != intrinsics.width || depth.height() != intrinsics.height)
    throw Error(ErrorKind::InvalidArgument, "lift keypoints: depth map size does not match intrinsics");
  KeypointSet set;
  set.frame_id = frame_id;
  std::vector<std::size_t> unrepairable;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (!intrinsics.contains(pixels[i]))
      throw Error(ErrorKind::OutOfBounds, "lift keypoints: pixel " + std::to_string(i) + " outside the image");
    const double d = sample_depth_with_fallback(depth, pixels[i]);
    if (d > 0.0) {
      set.points.push_back(unproject(pixels[i], d, intrinsics));
    } else {
      unrepairable.push_back(i);
      set.points.push_back(Point3::Zero());
    }
  }
  if (!unrepairable.empty()) {
    std::ostringstream msg;
    msg << "lift keypoints: no valid depth within 5x5 window for keypoint indices [";
    for (std::size_t i = 0; i < unrepairable.size(); ++i) msg << (i ? ", " : "") << unrepairable[i];
    msg << "]";
    throw Error(ErrorKind::UnrepairableDepth, msg.str());
  }
  return set;
}

}  // namespace rx
