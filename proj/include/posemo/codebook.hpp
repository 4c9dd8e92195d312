#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "posemo/binio.hpp"
#include "posemo/ntraj.hpp"

namespace posemo {

struct Codebook {
  StreamKey key;
  std::size_t size = 0;  // N
  std::size_t dim = 0;   // T
  std::vector<double> centroids;  // size x dim, row-major
  double inertia = 0.0;
  std::uint64_t seed = 0;

  std::span<const double> centroid(std::size_t i) const { return {centroids.data() + i * dim, dim}; }
};

// Per-restart record, kept for inspection and tests.
struct KMeansRun {
  double inertia = 0.0;
  std::size_t iterations = 0;
  // Inertia after each assignment step.
  std::vector<double> history;
};

struct KMeansTrace {
  std::vector<KMeansRun> runs;
  std::size_t best = 0;
};

// Lloyd's algorithm restarted `restarts` times from seeded uniform-random
// distinct points; returns the lowest-inertia run. Restart r draws from
// derive_seed(seed, r). Empty clusters are re-seeded to the point farthest from
// its centroid. Throws TooFewPoints when there are fewer points than clusters.
Codebook kmeans_restarts(std::span<const double> points, std::size_t dim, std::size_t clusters, std::size_t restarts,
                         std::uint64_t seed, std::size_t max_iter = 100, KMeansTrace* trace = nullptr);

// Nearest centroid by Euclidean distance, lowest index on ties.
std::size_t quantize(std::span<const double> descriptor, const Codebook& codebook);

// Codebooks of one feature family, one per stream kind, in block order.
class CodebookSet {
 public:
  CodebookSet() = default;
  CodebookSet(FeatureKind feature, std::size_t traj_len, std::vector<std::size_t> gaps, std::vector<Codebook> books);

  FeatureKind feature() const { return feature_; }
  std::size_t traj_len() const { return traj_len_; }
  std::span<const std::size_t> gaps() const { return gaps_; }
  std::span<const Codebook> books() const { return books_; }

  // Throws MissingCodebook.
  std::size_t block(const StreamKey& key) const;
  std::size_t block_offset(std::size_t block) const { return offsets_[block]; }
  const Codebook& at(const StreamKey& key) const { return books_[block(key)]; }
  // Length of a concatenated window histogram.
  std::size_t feature_dim() const { return offsets_.back(); }

  void write(ByteWriter& out) const;
  static CodebookSet read(ByteReader& in);

 private:
  FeatureKind feature_ = FeatureKind::NTrajPlus;
  std::size_t traj_len_ = 0;
  std::vector<std::size_t> gaps_;
  std::vector<Codebook> books_;
  std::vector<std::size_t> offsets_{0};
};

// Trains one codebook per stream kind on descriptors pooled over joints and
// training sequences. When a kind has more than `sample_cap` descriptors
// (0 = no cap) a uniform subset of that size is drawn by selection sampling.
CodebookSet train_codebook_set(std::span<const PoseSequence> sequences, const JointSubset& subset, FeatureKind feature,
                               std::size_t traj_len, std::span<const std::size_t> gaps, std::size_t clusters,
                               std::size_t restarts, std::size_t max_iter, std::size_t sample_cap,
                               std::uint64_t seed);

// L1-normalizes each codebook block of a concatenated histogram; empty blocks
// stay zero.
void normalize_blocks(std::span<double> feature, const CodebookSet& codebooks);

// Bag-of-features histogram of the descriptors whose start frame lies in
// [window_start, window_start + window_len).
std::vector<double> window_feature(std::span<const TrajectoryDescriptor> descriptors, const CodebookSet& codebooks,
                                   std::size_t window_start, std::size_t window_len);

// Codeword counts of a whole sequence bucketed by descriptor start frame, so
// any window histogram is a sum over its rows.
class StartFrameCounts {
 public:
  StartFrameCounts(const PoseSequence& seq, const JointSubset& subset, const CodebookSet& codebooks);

  std::vector<double> window(std::size_t window_start, std::size_t window_len) const;
  std::size_t frames() const { return frames_; }

 private:
  const CodebookSet* codebooks_;
  std::size_t frames_;
  std::vector<double> counts_;  // frames x feature_dim
};

}  // namespace posemo
