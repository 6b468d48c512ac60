#pragma once

// Data-parallel inner loops. Each kernel has a serial reference path and an
// OpenMP path; both evaluate every element with identical arithmetic, so their
// results are bitwise equal and the serial path serves as the test oracle.

#include <Eigen/Core>
#include <limits>
#include <span>
#include <vector>

#include "rx/geometry.hpp"

namespace rx::kernels {

enum class Execution { Serial, Parallel };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BestMatch {
  int index = -1;
  double similarity = -std::numeric_limits<double>::infinity();
};

/// Dot product accumulated in ascending component order.
double dot(const double* a, const double* b, Eigen::Index dim);

/// For each query row, the candidate row with the largest dot product
/// (lowest index on ties). Rows are expected to be L2-normalized.
std::vector<BestMatch> best_matches(const RowMatrix& queries, const RowMatrix& candidates,
                                    Execution exec = Execution::Parallel);

/// Number of correspondences with ||T(source_i) - target_i|| < threshold, per hypothesis.
std::vector<int> count_inliers(std::span<const RigidTransform> hypotheses,
                               std::span<const Point3> source, std::span<const Point3> target,
                               double threshold, Execution exec = Execution::Parallel);

/// Number of OpenMP threads the parallel path will use.
int max_threads();

}  // namespace rx::kernels
