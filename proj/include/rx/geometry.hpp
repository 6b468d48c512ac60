#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

namespace rx {

using Point3 = Eigen::Vector3d;

/// Continuous pixel coordinate; pixel (i, j) has its center at (i, j).
struct Pixel {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies inside the image.
  void validate() const;
  bool contains(const Pixel& p) const {
    return p.u >= 0.0 && p.v >= 0.0 && p.u < width && p.v < height;
  }
};

/// Proper rigid motion x -> R x + t.
class RigidTransform {
 public:
  RigidTransform() = default;

  /// Throws InvalidArgument unless R is orthonormal with det +1 (within 1e-9).
  RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation_only(const Point3& t);
  /// Rotation of `angle` radians about `axis` (normalized internally), then translation.
  static RigidTransform from_axis_angle(const Point3& axis, double angle,
                                        const Point3& t = Point3::Zero());

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;

  /// (a * b)(x) = a(b(x)).
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

  bool is_identity() const;

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Point3 translation_ = Point3::Zero();
};

/// Row-major depth image in meters; 0 marks an invalid sample.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0);
  /// Throws InvalidArgument on negative/non-finite values or a size mismatch.
  DepthMap(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int col, int row) const { return values_[static_cast<std::size_t>(row) * width_ + col]; }
  void set(int col, int row, double depth);
  std::span<const double> values() const { return values_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

Point3 unproject(const Pixel& pixel, double depth, const CameraIntrinsics& intrinsics);
Pixel project(const Point3& point, const CameraIntrinsics& intrinsics);

std::vector<Point3> transform_points(const RigidTransform& transform, std::span<const Point3> points);

/// Least-squares rigid transform mapping `source` onto `target` (Kabsch with the
/// Umeyama sign correction).
RigidTransform estimate_rigid_transform(std::span<const Point3> source,
                                        std::span<const Point3> target);

/// Dimension of the affine hull of `points` (0 to 3); singular values of the
/// centered points below rel_tol times the largest one count as zero.
int affine_rank(std::span<const Point3> points, double rel_tol = 1e-9);

/// Root-mean-square of ||T(source_i) - target_i||.
double rms_residual(const RigidTransform& transform, std::span<const Point3> source,
                    std::span<const Point3> target);

/// Geodesic angle between two rotations, stable near zero.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct RansacParams {
  double inlier_threshold = 0.01;
  int max_iterations = 500;
};

struct RobustFit {
  RigidTransform transform;
  std::vector<bool> inlier_mask;
  int inlier_count = 0;
};

/// RANSAC over minimal 3-point samples followed by Kabsch refits on the inlier set.
/// When every 3-subset fits in the iteration budget, all subsets are enumerated in
/// lexicographic order instead of sampled.
RobustFit robust_rigid_transform(std::span<const Point3> source, std::span<const Point3> target,
                                 const RansacParams& params, std::uint64_t seed);

}  // namespace rx
