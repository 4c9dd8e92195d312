#include "posemo/kernels.hpp"

#include <limits>

namespace posemo::kernels {
namespace {

inline double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double chi2(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d / (a[i] + b[i] + kChi2Eps);
  }
  return s;
}

inline void nearest_one(const double* p, const double* centroids, std::size_t n, std::size_t dim, std::uint32_t& best,
                        double& best_d) {
  best = 0;
  best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    const double d = sq_dist(p, centroids + c * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
}

}  // namespace

namespace serial {

void assign_nearest(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                    std::span<std::uint32_t> assignment, std::span<double> sq_distance) {
  const std::size_t m = points.size() / dim, n = centroids.size() / dim;
  for (std::size_t i = 0; i < m; ++i) {
    nearest_one(points.data() + i * dim, centroids.data(), n, dim, assignment[i], sq_distance[i]);
  }
}

void pairwise_chi2(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                   std::span<double> out) {
  const std::size_t q = queries.size() / dim, r = refs.size() / dim;
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < r; ++j) out[i * r + j] = chi2(queries.data() + i * dim, refs.data() + j * dim, dim);
  }
}

void pairwise_sq_euclidean(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                           std::span<double> out) {
  const std::size_t q = queries.size() / dim, r = refs.size() / dim;
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < r; ++j) out[i * r + j] = sq_dist(queries.data() + i * dim, refs.data() + j * dim, dim);
  }
}

}  // namespace serial

namespace parallel {

void assign_nearest(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                    std::span<std::uint32_t> assignment, std::span<double> sq_distance) {
  const auto m = static_cast<std::ptrdiff_t>(points.size() / dim);
  const std::size_t n = centroids.size() / dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    nearest_one(points.data() + i * dim, centroids.data(), n, dim, assignment[i], sq_distance[i]);
  }
}

void pairwise_chi2(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                   std::span<double> out) {
  const auto q = static_cast<std::ptrdiff_t>(queries.size() / dim);
  const std::size_t r = refs.size() / dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < r; ++j) out[i * r + j] = chi2(queries.data() + i * dim, refs.data() + j * dim, dim);
  }
}

void pairwise_sq_euclidean(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                           std::span<double> out) {
  const auto q = static_cast<std::ptrdiff_t>(queries.size() / dim);
  const std::size_t r = refs.size() / dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < r; ++j) out[i * r + j] = sq_dist(queries.data() + i * dim, refs.data() + j * dim, dim);
  }
}

}  // namespace parallel

}  // namespace posemo::kernels
