#include "posemo/codebook.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "posemo/error.hpp"
#include "posemo/parallel.hpp"
#include "posemo/kernels.hpp"
#include "posemo/rng.hpp"

namespace posemo {
namespace {

struct RunResult {
  std::vector<double> centroids;
  KMeansRun run;
};

RunResult lloyd(std::span<const double> points, std::size_t dim, std::size_t n, std::uint64_t seed,
                std::size_t max_iter) {
  const std::size_t m = points.size() / dim;
  Rng rng(seed);

  // Partial Fisher-Yates: n distinct point indices.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + rng.below(m - i);
    std::swap(order[i], order[j]);
  }
  std::vector<double> c(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(order[i] * dim), dim, c.begin() + i * dim);
  }

  std::vector<std::uint32_t> assign(m), prev;
  std::vector<double> d2(m);
  std::vector<double> sums(n * dim);
  std::vector<std::size_t> counts(n);
  KMeansRun run;
  const std::size_t iters = std::max<std::size_t>(max_iter, 1);
  for (std::size_t it = 0; it < iters; ++it) {
    kernels::parallel::assign_nearest(points, c, dim, assign, d2);
    double inertia = 0.0;
    for (double v : d2) inertia += v;
    run.history.push_back(inertia);
    run.iterations = it + 1;
    if (assign == prev || it + 1 == iters) break;
    prev = assign;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t p = 0; p < m; ++p) {
      const auto k = assign[p];
      ++counts[k];
      for (std::size_t d = 0; d < dim; ++d) sums[k * dim + d] += points[p * dim + d];
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (counts[k] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) c[k * dim + d] = sums[k * dim + d] / static_cast<double>(counts[k]);
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (counts[k] != 0) continue;
      std::size_t far = 0;
      double best = -1.0;
      for (std::size_t p = 0; p < m; ++p) {
        if (d2[p] > best) {
          best = d2[p];
          far = p;
        }
      }
      std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(far * dim), dim, c.begin() + k * dim);
      d2[far] = -1.0;  // not picked again this round
    }
  }
  run.inertia = run.history.back();
  return {std::move(c), std::move(run)};
}

std::size_t nearest(const double* x, std::span<const double> centroids, std::size_t dim) {
  const std::size_t n = centroids.size() / dim;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = x[d] - centroids[k * dim + d];
      s += diff * diff;
    }
    if (s < best_d) {
      best_d = s;
      best = k;
    }
  }
  return best;
}

}  // namespace

Codebook kmeans_restarts(std::span<const double> points, std::size_t dim, std::size_t clusters, std::size_t restarts,
                         std::uint64_t seed, std::size_t max_iter, KMeansTrace* trace) {
  if (dim == 0 || points.size() % dim != 0) throw Error(ErrorCode::DimensionMismatch, "point buffer is not a multiple of dim");
  if (clusters == 0 || restarts == 0) throw Error(ErrorCode::InvalidArgument, "clusters and restarts must be positive");
  const std::size_t m = points.size() / dim;
  if (m < clusters) {
    throw Error(ErrorCode::TooFewPoints,
                std::to_string(m) + " points cannot seed " + std::to_string(clusters) + " clusters");
  }
  std::vector<RunResult> results(restarts);
  for (std::size_t r = 0; r < restarts; ++r) results[r] = lloyd(points, dim, clusters, derive_seed(seed, r), max_iter);

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (results[r].run.inertia < results[best].run.inertia) best = r;
  }
  Codebook cb;
  cb.size = clusters;
  cb.dim = dim;
  cb.centroids = results[best].centroids;
  cb.inertia = results[best].run.inertia;
  cb.seed = seed;
  if (trace) {
    trace->runs.clear();
    for (auto& r : results) trace->runs.push_back(std::move(r.run));
    trace->best = best;
  }
  return cb;
}

std::size_t quantize(std::span<const double> descriptor, const Codebook& codebook) {
  if (descriptor.size() != codebook.dim) {
    throw Error(ErrorCode::DimensionMismatch, "descriptor length " + std::to_string(descriptor.size()) +
                                                  " does not match codebook dimension " + std::to_string(codebook.dim));
  }
  return nearest(descriptor.data(), codebook.centroids, codebook.dim);
}

CodebookSet::CodebookSet(FeatureKind feature, std::size_t traj_len, std::vector<std::size_t> gaps,
                         std::vector<Codebook> books)
    : feature_(feature), traj_len_(traj_len), gaps_(std::move(gaps)), books_(std::move(books)) {
  const auto keys = stream_keys(feature_, gaps_);
  if (keys.size() != books_.size()) throw Error(ErrorCode::MissingCodebook, "codebook count does not match stream kinds");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (books_[i].key != keys[i]) throw Error(ErrorCode::MissingCodebook, "codebook for " + to_string(keys[i]) + " missing");
    if (books_[i].dim != traj_len_) throw Error(ErrorCode::DimensionMismatch, "codebook dimension differs from T");
    offsets_.push_back(offsets_.back() + books_[i].size);
  }
}

std::size_t CodebookSet::block(const StreamKey& key) const {
  for (std::size_t i = 0; i < books_.size(); ++i) {
    if (books_[i].key == key) return i;
  }
  throw Error(ErrorCode::MissingCodebook, "no codebook for stream kind " + to_string(key));
}

void CodebookSet::write(ByteWriter& out) const {
  out.u8(static_cast<std::uint8_t>(feature_));
  out.u64(traj_len_);
  out.u64(gaps_.size());
  for (auto g : gaps_) out.u64(g);
  out.u64(books_.size());
  for (const auto& b : books_) {
    out.u8(static_cast<std::uint8_t>(b.key.kind));
    out.u64(b.key.gap);
    out.u64(b.size);
    out.u64(b.dim);
    out.u64(b.seed);
    out.f64(b.inertia);
    out.f64s(b.centroids);
  }
}

CodebookSet CodebookSet::read(ByteReader& in) {
  const auto feature = in.u8();
  if (feature > 1) throw Error(ErrorCode::MalformedFile, "bad feature kind in codebook artifact");
  const auto traj_len = in.u64();
  auto count = [&in] {
    const auto n = in.u64();
    if (n > in.remaining() / 8) throw Error(ErrorCode::MalformedFile, "truncated codebook artifact");
    return static_cast<std::size_t>(n);
  };
  std::vector<std::size_t> gaps(count());
  for (auto& g : gaps) g = in.u64();
  std::vector<Codebook> books(count());
  for (auto& b : books) {
    const auto kind = in.u8();
    if (kind > static_cast<std::uint8_t>(StreamKind::InnerAngle)) throw Error(ErrorCode::MalformedFile, "bad stream kind");
    b.key = {static_cast<StreamKind>(kind), in.u64()};
    b.size = in.u64();
    b.dim = in.u64();
    b.seed = in.u64();
    b.inertia = in.f64();
    if (b.dim == 0 || b.size > in.remaining() / 8 / b.dim) throw Error(ErrorCode::MalformedFile, "truncated codebook");
    b.centroids = in.f64s(b.size * b.dim);
  }
  return CodebookSet(static_cast<FeatureKind>(feature), traj_len, std::move(gaps), std::move(books));
}

CodebookSet train_codebook_set(std::span<const PoseSequence> sequences, const JointSubset& subset, FeatureKind feature,
                               std::size_t traj_len, std::span<const std::size_t> gaps, std::size_t clusters,
                               std::size_t restarts, std::size_t max_iter, std::size_t sample_cap,
                               std::uint64_t seed) {
  if (sequences.empty()) throw Error(ErrorCode::TooFewPoints, "no training sequences for codebooks");
  const auto keys = stream_keys(feature, gaps);
  const auto census = descriptor_census(subset.size(), gaps, feature);
  std::vector<std::size_t> total(keys.size(), 0), want(keys.size()), seen(keys.size(), 0);
  std::vector<std::vector<double>> points(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    for (const auto& s : sequences) total[k] += census.at(keys[k]) * descriptors_per_stream(keys[k], s.size(), traj_len);
    want[k] = sample_cap == 0 ? total[k] : std::min(total[k], sample_cap);
    points[k].reserve(want[k] * traj_len);
  }
  auto index_of = [&](const StreamKey& key) {
    return static_cast<std::size_t>(std::find(keys.begin(), keys.end(), key) - keys.begin());
  };
  std::vector<Rng> rngs;
  for (std::size_t k = 0; k < keys.size(); ++k) rngs.emplace_back(derive_seed(seed, 0x73616d70, k));  // "samp"
  std::vector<double> rows;
  for (const auto& s : sequences) {
    for (const auto& id : enumerate_streams(subset, gaps, feature)) {
      const auto k = index_of(id.key);
      const auto n = stream_descriptors(s, id, traj_len, rows);
      for (std::size_t t = 0; t < n; ++t) {
        // Knuth's selection sampling: keep with probability needed / remaining.
        const auto taken = points[k].size() / traj_len;
        const auto remaining = total[k] - seen[k]++;
        if (taken < want[k] && rngs[k].below(remaining) < want[k] - taken) {
          points[k].insert(points[k].end(), rows.begin() + static_cast<std::ptrdiff_t>(t * traj_len),
                           rows.begin() + static_cast<std::ptrdiff_t>((t + 1) * traj_len));
        }
      }
    }
  }
  std::vector<Codebook> books(keys.size());
  LoopErrors errors;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < keys.size(); ++k) {
    errors.run(k, [&] {
      books[k] = kmeans_restarts(points[k], traj_len, clusters, restarts, derive_seed(seed, 0x6b6d6e73, k), max_iter);
      books[k].key = keys[k];
    });
  }
  errors.rethrow();
  return CodebookSet(feature, traj_len, {gaps.begin(), gaps.end()}, std::move(books));
}

void normalize_blocks(std::span<double> feature, const CodebookSet& codebooks) {
  for (std::size_t b = 0; b < codebooks.books().size(); ++b) {
    const auto lo = codebooks.block_offset(b), hi = codebooks.block_offset(b + 1);
    double s = 0.0;
    for (auto i = lo; i < hi; ++i) s += feature[i];
    if (s <= 0.0) continue;
    for (auto i = lo; i < hi; ++i) feature[i] /= s;
  }
}

std::vector<double> window_feature(std::span<const TrajectoryDescriptor> descriptors, const CodebookSet& codebooks,
                                   std::size_t window_start, std::size_t window_len) {
  std::vector<double> h(codebooks.feature_dim(), 0.0);
  for (const auto& d : descriptors) {
    if (d.start_frame < window_start || d.start_frame >= window_start + window_len) continue;
    const auto b = codebooks.block(d.stream.key);
    h[codebooks.block_offset(b) + quantize(d.values, codebooks.books()[b])] += 1.0;
  }
  normalize_blocks(h, codebooks);
  return h;
}

StartFrameCounts::StartFrameCounts(const PoseSequence& seq, const JointSubset& subset, const CodebookSet& codebooks)
    : codebooks_(&codebooks), frames_(seq.size()) {
  const auto T = codebooks.traj_len();
  std::size_t max_gap = 0;
  for (auto g : codebooks.gaps()) max_gap = std::max(max_gap, g);
  if (seq.size() < T + max_gap) {
    throw Error(ErrorCode::SequenceTooShort, "sequence '" + seq.source_id() + "' is too short for descriptors");
  }
  const auto dim = codebooks.feature_dim();
  counts_.assign(frames_ * dim, 0.0);
  std::vector<double> rows;
  std::vector<std::uint32_t> assign;
  std::vector<double> d2;
  for (const auto& id : enumerate_streams(subset, codebooks.gaps(), codebooks.feature())) {
    const auto b = codebooks.block(id.key);
    const auto& book = codebooks.books()[b];
    const auto n = stream_descriptors(seq, id, T, rows);
    assign.resize(n);
    d2.resize(n);
    kernels::parallel::assign_nearest(rows, book.centroids, T, assign, d2);
    const auto off = codebooks.block_offset(b);
    for (std::size_t t = 0; t < n; ++t) counts_[t * dim + off + assign[t]] += 1.0;
  }
}

std::vector<double> StartFrameCounts::window(std::size_t window_start, std::size_t window_len) const {
  const auto dim = codebooks_->feature_dim();
  std::vector<double> h(dim, 0.0);
  const auto end = std::min(frames_, window_start + window_len);
  for (auto t = window_start; t < end; ++t) {
    const double* row = counts_.data() + t * dim;
    for (std::size_t i = 0; i < dim; ++i) h[i] += row[i];
  }
  normalize_blocks(h, *codebooks_);
  return h;
}

}  // namespace posemo
