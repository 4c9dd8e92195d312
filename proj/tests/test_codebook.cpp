#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "posemo/codebook.hpp"
#include "posemo/error.hpp"
#include "posemo/preprocess.hpp"
#include "posemo/rng.hpp"

using namespace posemo;

TEST_CASE("k-means runs never beat the exhaustive optimum and never increase inertia") {
  const auto st = oracle::kmeans_stats(200, 5);
  CHECK(st.runs == 2000);
  CHECK(st.below_optimum == 0);
  CHECK(st.monotone_violations == 0);
  CHECK(st.selection_violations == 0);
  CHECK(st.unreachable <= st.mismatches);
}

TEST_CASE("two-means from a fixed start") {
  const std::vector<double> pts{0, 2, -8, -2, -2, 9};
  CHECK(oracle::two_means_from(pts, 1, 1, 5) == 56.0);
  CHECK(oracle::two_means_from(pts, 1, 0, 1) == 60.5);
  CHECK(oracle::exhaustive_two_means(pts, 1) == 56.0);
}

TEST_CASE("the exhaustive oracle itself") {
  const std::vector<double> pts{0, 1, 10, 11};
  CHECK(oracle::exhaustive_two_means(pts, 1) == 1.0);
  const std::vector<double> same{2, 2, 2};
  CHECK(oracle::exhaustive_two_means(same, 1) == 0.0);
}

TEST_CASE("k-means separates well-spaced blobs and records every restart") {
  Rng rng(3);
  std::vector<double> pts;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 30; ++i) {
      pts.push_back(100.0 * c + rng.normal());
      pts.push_back(-50.0 * c + rng.normal());
    }
  }
  KMeansTrace trace;
  const auto cb = kmeans_restarts(pts, 2, 3, 10, 1, 100, &trace);
  CHECK(trace.runs.size() == 10);
  CHECK(cb.inertia == trace.runs[trace.best].inertia);
  CHECK(cb.inertia < 90 * 4.0);
  std::vector<double> q{200.0, -100.0};
  const auto k = quantize(q, cb);
  CHECK(std::abs(cb.centroid(k)[0] - 200.0) < 1.0);
}

TEST_CASE("k-means is deterministic in the seed and checks its input") {
  Rng rng(9);
  std::vector<double> pts(60);
  for (auto& v : pts) v = rng.uniform();
  CHECK(kmeans_restarts(pts, 3, 4, 3, 7).centroids == kmeans_restarts(pts, 3, 4, 3, 7).centroids);
  CHECK_THROWS_AS(kmeans_restarts(pts, 3, 21, 1, 0), Error);
  CHECK_THROWS_AS(kmeans_restarts(pts, 7, 2, 1, 0), Error);
}

TEST_CASE("empty clusters are re-seeded") {
  // Duplicated points force an empty cluster after the first assignment.
  std::vector<double> pts{0, 0, 0, 0, 5, 9};
  const auto cb = kmeans_restarts(pts, 1, 3, 5, 2);
  CHECK(cb.inertia == 0.0);
}

TEST_CASE("codebook sets: training, histogram blocks and persistence") {
  std::vector<PoseSequence> seqs;
  for (std::uint64_t s = 0; s < 3; ++s) seqs.push_back(preprocess(oracle::random_clip(s, 48), PipelineConfig{}).sequence);
  const std::vector<std::size_t> gaps{1, 2};
  const auto set = train_codebook_set(seqs, JointSubset::lower(), FeatureKind::NTrajPlus, 5, gaps, 10, 2, 50, 500, 4);
  CHECK(set.books().size() == stream_keys(FeatureKind::NTrajPlus, gaps).size());
  CHECK(set.feature_dim() == 10 * set.books().size());
  CHECK_THROWS_AS(set.block({StreamKind::Dx, 3}), Error);

  const auto desc = extract_descriptors(seqs[0], JointSubset::lower(), 5, gaps);
  const auto h = window_feature(desc, set, 6, 6);
  for (std::size_t b = 0; b < set.books().size(); ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < 10; ++i) s += h[set.block_offset(b) + i];
    CHECK((s == 0.0 || std::abs(s - 1.0) < 1e-9));
  }

  const StartFrameCounts counts(seqs[0], JointSubset::lower(), set);
  CHECK(counts.window(6, 6) == h);

  ByteWriter out;
  set.write(out);
  ByteReader in(out.bytes());
  const auto back = CodebookSet::read(in);
  CHECK(back.feature_dim() == set.feature_dim());
  CHECK(back.books()[3].centroids == set.books()[3].centroids);
}

TEST_CASE("the sample cap bounds the descriptors each codebook sees") {
  std::vector<PoseSequence> seqs{preprocess(oracle::random_clip(1, 48), PipelineConfig{}).sequence};
  const std::vector<std::size_t> gaps{1};
  // posx on the lower subset has 7 joints x 44 descriptors; a cap of 20 still
  // leaves enough points for 10 clusters.
  CHECK_NOTHROW(train_codebook_set(seqs, JointSubset::lower(), FeatureKind::NTraj, 5, gaps, 10, 1, 20, 20, 0));
  CHECK_THROWS_AS(train_codebook_set(seqs, JointSubset::lower(), FeatureKind::NTraj, 5, gaps, 10, 1, 20, 5, 0), Error);
}
