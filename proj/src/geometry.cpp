#include "rx/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rx/error.hpp"
#include "rx/kernels.hpp"
#include "rx/random.hpp"

namespace rx {

namespace {

constexpr double kRotationTolerance = 1e-9;
// Relative size of the second singular value of the centered source below which
// the configuration is treated as collinear.
constexpr double kRankTolerance = 1e-9;

bool finite(const Point3& p) { return p.allFinite(); }

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw Error(ErrorKind::InvalidArgument, "intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw Error(ErrorKind::InvalidArgument, "intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw Error(ErrorKind::InvalidArgument, "intrinsics: principal point outside the image");
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite())
    throw Error(ErrorKind::InvalidArgument, "rigid transform: non-finite entries");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRotationTolerance || std::abs(rotation.determinant() - 1.0) > kRotationTolerance)
    throw Error(ErrorKind::InvalidArgument, "rigid transform: rotation is not in SO(3)");
}

RigidTransform RigidTransform::translation_only(const Point3& t) {
  return RigidTransform(Eigen::Matrix3d::Identity(), t);
}

RigidTransform RigidTransform::from_axis_angle(const Point3& axis, double angle, const Point3& t) {
  if (axis.norm() == 0.0) throw Error(ErrorKind::InvalidArgument, "rotation axis must be nonzero");
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  return RigidTransform(r, t);
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return out;
}

bool RigidTransform::is_identity() const {
  return rotation_ == Eigen::Matrix3d::Identity() && translation_ == Point3::Zero();
}

DepthMap::DepthMap(int width, int height, double fill)
    : DepthMap(width, height,
               std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill)) {}

DepthMap::DepthMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0)
    throw Error(ErrorKind::InvalidArgument, "depth map: size must be positive");
  if (values_.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorKind::InvalidArgument, "depth map: value count does not match size");
  for (double d : values_) {
    if (!std::isfinite(d) || d < 0.0)
      throw Error(ErrorKind::InvalidArgument, "depth map: values must be finite and >= 0");
  }
}

void DepthMap::set(int col, int row, double depth) {
  if (col < 0 || row < 0 || col >= width_ || row >= height_)
    throw Error(ErrorKind::OutOfBounds, "depth map: index out of bounds");
  if (!std::isfinite(depth) || depth < 0.0)
    throw Error(ErrorKind::InvalidArgument, "depth map: values must be finite and >= 0");
  values_[static_cast<std::size_t>(row) * width_ + col] = depth;
}

Point3 unproject(const Pixel& pixel, double depth, const CameraIntrinsics& k) {
  if (!k.contains(pixel))
    throw Error(ErrorKind::OutOfBounds, "unproject: pixel (" + std::to_string(pixel.u) + ", " +
                                            std::to_string(pixel.v) + ") outside the image");
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw Error(ErrorKind::InvalidDepth, "unproject: depth must be positive");
  return {(pixel.u - k.cx) / k.fx * depth, (pixel.v - k.cy) / k.fy * depth, depth};
}

Pixel project(const Point3& point, const CameraIntrinsics& k) {
  if (!(point.z() > 0.0))
    throw Error(ErrorKind::NonPositiveDepth, "project: point is not in front of the camera");
  return {k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy};
}

std::vector<Point3> transform_points(const RigidTransform& transform, std::span<const Point3> points) {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(transform.apply(p));
  return out;
}

RigidTransform estimate_rigid_transform(std::span<const Point3> source,
                                        std::span<const Point3> target) {
  if (source.size() != target.size())
    throw Error(ErrorKind::LengthMismatch, "rigid fit: source has " + std::to_string(source.size()) +
                                              " points, target has " + std::to_string(target.size()));
  if (source.size() < 3)
    throw Error(ErrorKind::DegenerateConfiguration, "rigid fit: at least 3 correspondences required");

  const auto n = static_cast<Eigen::Index>(source.size());
  Point3 src_mean = Point3::Zero();
  Point3 dst_mean = Point3::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!finite(source[i]) || !finite(target[i]))
      throw Error(ErrorKind::InvalidArgument, "rigid fit: non-finite point");
    src_mean += source[i];
    dst_mean += target[i];
  }
  src_mean /= static_cast<double>(n);
  dst_mean /= static_cast<double>(n);

  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3Xd dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = source[i] - src_mean;
    dst.col(i) = target[i] - dst_mean;
  }

  if (affine_rank(source, kRankTolerance) < 2)
    throw Error(ErrorKind::DegenerateConfiguration, "rigid fit: source points are collinear or coincident");

  const Eigen::Matrix3d cov = src * dst.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  return RigidTransform(r, dst_mean - r * src_mean);
}

int affine_rank(std::span<const Point3> points, double rel_tol) {
  if (points.size() < 2) return 0;
  Point3 mean = Point3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  // Singular values of the centred data, not the scatter, so the ratio is not squared.
  Eigen::Matrix3Xd centred(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) centred.col(static_cast<Eigen::Index>(i)) = points[i] - mean;
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3Xd>(centred).singularValues();
  if (!(sv(0) > 0.0)) return 0;
  int rank = 1;
  for (int i = 1; i < 3; ++i)
    if (sv(i) / sv(0) > rel_tol) ++rank;
  return rank;
}

double rms_residual(const RigidTransform& transform, std::span<const Point3> source,
                    std::span<const Point3> target) {
  if (source.size() != target.size())
    throw Error(ErrorKind::LengthMismatch, "residual: length mismatch");
  if (source.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i)
    sum += (transform.apply(source[i]) - target[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(source.size()));
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  // ||A - B||_F = 2 sqrt(2) sin(theta / 2) for rotations A, B.
  const double chord = (a - b).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::min(1.0, chord));
}

namespace {

using Triple = std::array<int, 3>;

std::vector<Triple> minimal_samples(int n, int max_iterations, std::uint64_t seed) {
  std::vector<Triple> samples;
  const double combos = static_cast<double>(n) * (n - 1) * (n - 2) / 6.0;
  if (combos <= static_cast<double>(max_iterations)) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c) samples.push_back({a, b, c});
    return samples;
  }
  Rng rng(seed);
  samples.reserve(static_cast<std::size_t>(max_iterations));
  while (static_cast<int>(samples.size()) < max_iterations) {
    Triple t{static_cast<int>(rng.below(n)), static_cast<int>(rng.below(n)), static_cast<int>(rng.below(n))};
    if (t[0] == t[1] || t[0] == t[2] || t[1] == t[2]) continue;
    samples.push_back(t);
  }
  return samples;
}

std::vector<bool> inliers_of(const RigidTransform& t, std::span<const Point3> source,
                             std::span<const Point3> target, double threshold, int& count) {
  std::vector<bool> mask(source.size());
  count = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    mask[i] = (t.apply(source[i]) - target[i]).norm() < threshold;
    count += mask[i] ? 1 : 0;
  }
  return mask;
}

RigidTransform fit_subset(std::span<const Point3> source, std::span<const Point3> target,
                          const std::vector<bool>& mask) {
  std::vector<Point3> s;
  std::vector<Point3> d;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    s.push_back(source[i]);
    d.push_back(target[i]);
  }
  return estimate_rigid_transform(s, d);
}

}  // namespace

RobustFit robust_rigid_transform(std::span<const Point3> source, std::span<const Point3> target,
                                 const RansacParams& params, std::uint64_t seed) {
  if (source.size() != target.size())
    throw Error(ErrorKind::LengthMismatch, "robust fit: length mismatch");
  if (source.size() < 3)
    throw Error(ErrorKind::InvalidArgument, "robust fit: at least 3 correspondences required");
  if (!(params.inlier_threshold > 0.0) || params.max_iterations < 1)
    throw Error(ErrorKind::InvalidArgument, "robust fit: threshold and iterations must be positive");

  const int n = static_cast<int>(source.size());
  const auto samples = minimal_samples(n, params.max_iterations, seed);

  std::vector<RigidTransform> hypotheses;
  hypotheses.reserve(samples.size());
  for (const auto& s : samples) {
    const std::array<Point3, 3> src{source[s[0]], source[s[1]], source[s[2]]};
    const std::array<Point3, 3> dst{target[s[0]], target[s[1]], target[s[2]]};
    try {
      hypotheses.push_back(estimate_rigid_transform(src, dst));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateConfiguration) throw;
    }
  }

  const auto counts = kernels::count_inliers(hypotheses, source, target, params.inlier_threshold);
  int best = -1;
  int best_count = 0;
  for (std::size_t h = 0; h < counts.size(); ++h) {
    if (counts[h] > best_count) {
      best_count = counts[h];
      best = static_cast<int>(h);
    }
  }
  if (best < 0 || best_count < 3)
    throw Error(ErrorKind::NoConsensus, "robust fit: best hypothesis has " + std::to_string(best_count) +
                                            " inliers, need 3");

  RobustFit fit;
  fit.transform = hypotheses[best];
  fit.inlier_mask = inliers_of(fit.transform, source, target, params.inlier_threshold, fit.inlier_count);

  // Refit on the consensus set until the set stops changing.
  for (int round = 0; round < 10; ++round) {
    RigidTransform refit;
    try {
      refit = fit_subset(source, target, fit.inlier_mask);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateConfiguration) throw;
      break;
    }
    int count = 0;
    auto mask = inliers_of(refit, source, target, params.inlier_threshold, count);
    if (count < 3) break;
    fit.transform = refit;
    const bool stable = mask == fit.inlier_mask;
    fit.inlier_mask = std::move(mask);
    fit.inlier_count = count;
    if (stable) break;
  }
  return fit;
}

}  // namespace rx
