#pragma once

// Brute-force reference implementations and the property suites shared by the
// unit tests and the acceptance runner.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posemo/bodylang.hpp"
#include "posemo/core.hpp"

namespace posemo::oracle {

// A short synthetic clip with noise and dropped joints.
PoseSequence random_clip(std::uint64_t seed, std::size_t frames = 96);

// Every coordinate mapped to (c x + a, c y + b); validity is kept.
PoseSequence affine(const PoseSequence& seq, double c, double a, double b);
// Rotation by theta about (cx, cy).
PoseSequence rotate(const PoseSequence& seq, double theta, double cx, double cy);

// Median neck-to-hip-center distance over frames with a valid neck and hips.
double median_torso(const PoseSequence& seq);

// Lowest within-cluster squared error over every split of the points into at
// most two groups.
double exhaustive_two_means(std::span<const double> points, std::size_t dim);
// Plain two-cluster Lloyd iteration started from points a and b.
double two_means_from(std::span<const double> points, std::size_t dim, std::size_t a, std::size_t b);

// Linear-scan k-nearest-neighbour vote over `exemplars` sorted into canonical
// order by the oracle itself.
KnnResult linear_scan_knn(std::span<const double> query, DistanceKind kind, std::vector<Exemplar> exemplars,
                          std::size_t num_classes, std::size_t k);

struct SuiteResult {
  bool pass = true;
  std::string detail;
  double seconds = 0.0;
};

struct KMeansSuiteStats {
  std::size_t instances = 0, runs = 0;
  std::size_t mismatches = 0, unreachable = 0;
  std::size_t monotone_violations = 0, selection_violations = 0, below_optimum = 0;
};
KMeansSuiteStats kmeans_stats(std::size_t instances, std::uint64_t seed);

SuiteResult preprocess_suite(std::size_t sequences, std::uint64_t seed);
SuiteResult descriptor_suite(std::size_t configs, std::uint64_t seed);
SuiteResult kmeans_suite(std::size_t instances, std::uint64_t seed);
SuiteResult knn_suite(std::size_t pairs, std::uint64_t seed);
SuiteResult gradient_suite(std::size_t seeds, std::uint64_t seed);

}  // namespace posemo::oracle
