#include "rx/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rx::kernels {

double dot(const double* a, const double* b, Eigen::Index dim) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) sum += a[k] * b[k];
  return sum;
}

namespace {

BestMatch best_for_row(const RowMatrix& queries, Eigen::Index row, const RowMatrix& candidates) {
  BestMatch best;
  const Eigen::Index dim = queries.cols();
  const double* q = queries.data() + row * dim;
  for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
    const double s = dot(q, candidates.data() + j * dim, dim);
    if (s > best.similarity) {
      best.similarity = s;
      best.index = static_cast<int>(j);
    }
  }
  return best;
}

int inliers_for(const RigidTransform& t, std::span<const Point3> source,
                std::span<const Point3> target, double threshold) {
  int count = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if ((t.apply(source[i]) - target[i]).norm() < threshold) ++count;
  }
  return count;
}

}  // namespace

std::vector<BestMatch> best_matches(const RowMatrix& queries, const RowMatrix& candidates,
                                    Execution exec) {
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
  std::vector<BestMatch> out(static_cast<std::size_t>(n));
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = best_for_row(queries, i, candidates);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = best_for_row(queries, i, candidates);
  }
  return out;
}

std::vector<int> count_inliers(std::span<const RigidTransform> hypotheses,
                               std::span<const Point3> source, std::span<const Point3> target,
                               double threshold, Execution exec) {
  const auto n = static_cast<std::ptrdiff_t>(hypotheses.size());
  std::vector<int> out(static_cast<std::size_t>(n));
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t h = 0; h < n; ++h)
      out[h] = inliers_for(hypotheses[h], source, target, threshold);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t h = 0; h < n; ++h)
      out[h] = inliers_for(hypotheses[h], source, target, threshold);
  }
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace rx::kernels
