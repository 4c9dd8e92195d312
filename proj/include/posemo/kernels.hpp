#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel` that must
// produce bit-identical results (every output element is computed by the same
// sequential arithmetic; only the assignment of elements to threads differs).

#include <cstddef>
#include <cstdint>
#include <span>

namespace posemo::kernels {

// Small constant keeping chi-square terms finite on empty bins.
inline constexpr double kChi2Eps = 1e-10;

namespace serial {

// For each of the M rows of `points` (row-major, dim columns) finds the
// nearest of the N rows of `centroids` by squared Euclidean distance; ties go
// to the lowest index.
void assign_nearest(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                    std::span<std::uint32_t> assignment, std::span<double> sq_distance);

// out[q * R + r] = sum_i (a_i - b_i)^2 / (a_i + b_i + kChi2Eps)
void pairwise_chi2(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                   std::span<double> out);

// out[q * R + r] = sum_i (a_i - b_i)^2
void pairwise_sq_euclidean(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                           std::span<double> out);

}  // namespace serial

namespace parallel {

void assign_nearest(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                    std::span<std::uint32_t> assignment, std::span<double> sq_distance);
void pairwise_chi2(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                   std::span<double> out);
void pairwise_sq_euclidean(std::span<const double> queries, std::span<const double> refs, std::size_t dim,
                           std::span<double> out);

}  // namespace parallel

}  // namespace posemo::kernels
