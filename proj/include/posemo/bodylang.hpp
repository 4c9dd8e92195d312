#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "posemo/binio.hpp"
#include "posemo/codebook.hpp"
#include "posemo/core.hpp"
#include "posemo/ingest.hpp"
#include "posemo/neural.hpp"

namespace posemo {

enum class FeatureFamily { NTrajPlus, StConvPose };

std::string_view to_string(FeatureFamily f);
// Accepts "ntraj+" and "stconv".
FeatureFamily parse_feature_family(std::string_view text);

enum class DistanceKind : std::uint8_t { ChiSquare, Euclidean };

inline DistanceKind distance_for(FeatureFamily f) {
  return f == FeatureFamily::NTrajPlus ? DistanceKind::ChiSquare : DistanceKind::Euclidean;
}

// K = floor((frames - W) / stride) + 1. Throws SequenceTooShort when frames < W.
std::size_t window_count(std::size_t frames, std::size_t window_len, std::size_t stride);

// Turns a preprocessed sequence into one feature vector per window.
class WindowFeaturizer {
 public:
  virtual ~WindowFeaturizer() = default;
  virtual FeatureFamily family() const = 0;
  virtual std::size_t dim() const = 0;
  // Row-major K x dim.
  virtual std::vector<double> features(const PoseSequence& seq, std::size_t window_len, std::size_t stride) const = 0;
};

// Bag-of-features over NTraj+ descriptors of the subset's joints.
class HistogramFeaturizer : public WindowFeaturizer {
 public:
  HistogramFeaturizer(CodebookSet codebooks, JointSubset subset)
      : codebooks_(std::move(codebooks)), subset_(std::move(subset)) {}
  FeatureFamily family() const override { return FeatureFamily::NTrajPlus; }
  std::size_t dim() const override { return codebooks_.feature_dim(); }
  std::vector<double> features(const PoseSequence& seq, std::size_t window_len, std::size_t stride) const override;
  const CodebookSet& codebooks() const { return codebooks_; }
  const JointSubset& subset() const { return subset_; }

 private:
  CodebookSet codebooks_;
  JointSubset subset_;
};

// Encoder embedding of the full 18-column pose image of each window.
class EmbeddingFeaturizer : public WindowFeaturizer {
 public:
  explicit EmbeddingFeaturizer(ConvEncoder encoder) : encoder_(std::move(encoder)) {}
  FeatureFamily family() const override { return FeatureFamily::StConvPose; }
  std::size_t dim() const override { return encoder_.embedding_size(); }
  std::vector<double> features(const PoseSequence& seq, std::size_t window_len, std::size_t stride) const override;
  const ConvEncoder& encoder() const { return encoder_; }

 private:
  ConvEncoder encoder_;
};

struct Exemplar {
  std::size_t label = 0;
  std::string clip_id;
  std::size_t window_start = 0;
  std::vector<double> feature;
};

// Labeled window features of one track. Exemplars are kept in a canonical
// order (label, clip, window, feature) so results do not depend on insertion
// order.
class ExemplarStore {
 public:
  ExemplarStore() = default;
  ExemplarStore(Track track, DistanceKind kind, std::size_t num_classes, std::size_t dim)
      : track_(track), kind_(kind), num_classes_(num_classes), dim_(dim) {}

  // Throws DimensionMismatch or UnknownLabel.
  void add(Exemplar exemplar);

  Track track() const { return track_; }
  DistanceKind kind() const { return kind_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t dim() const { return dim_; }
  std::span<const Exemplar> exemplars() const { return exemplars_; }
  std::size_t size() const { return exemplars_.size(); }
  bool empty() const { return exemplars_.empty(); }
  // Row-major exemplar features in canonical order.
  std::span<const double> matrix() const { return matrix_; }

  // One line per class with fewer than 5 or more than 7 exemplars.
  std::vector<std::string> warnings(const LabelSet& labels) const;

  void write(ByteWriter& out) const;
  static ExemplarStore read(ByteReader& in);

 private:
  Track track_ = Track::Upper;
  DistanceKind kind_ = DistanceKind::ChiSquare;
  std::size_t num_classes_ = 0;
  std::size_t dim_ = 0;
  std::vector<Exemplar> exemplars_;
  std::vector<double> matrix_;
};

struct KnnResult {
  std::size_t label = 0;
  double confidence = 0.0;
};

// Majority vote of the k nearest exemplars (k clipped to the store size);
// distance ties go to the earlier exemplar in canonical order, vote ties to the
// smaller mean distance and then the lower class id. Confidence is
// 1 / (1 + mean distance of the winning votes). Throws KindMismatch, EmptyStore.
KnnResult knn_classify(std::span<const double> feature, DistanceKind kind, const ExemplarStore& store, std::size_t k);

// Same as knn_classify for each row of a K x dim matrix, in parallel.
std::vector<KnnResult> knn_classify_rows(std::span<const double> features, DistanceKind kind,
                                         const ExemplarStore& store, std::size_t k);

// Vote given the distances to every exemplar in canonical order.
KnnResult knn_vote(std::span<const double> distances, const ExemplarStore& store, std::size_t k);

struct BodyLanguageSequence {
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::vector<std::size_t> upper;
  std::vector<std::size_t> lower;
  std::vector<double> upper_confidence;
  std::vector<double> lower_confidence;

  std::size_t size() const { return upper.size(); }
  const std::vector<std::size_t>& track(Track t) const { return t == Track::Upper ? upper : lower; }
};

struct TrackModel {
  const WindowFeaturizer* featurizer = nullptr;
  const ExemplarStore* store = nullptr;
};

BodyLanguageSequence predict_sequence(const PoseSequence& seq, const TrackModel& upper, const TrackModel& lower,
                                      std::size_t window_len, std::size_t stride, std::size_t k);

BodyLanguageSequence sequence_from_labels(std::span<const WindowLabel> labels, std::size_t window_len,
                                          std::size_t stride);

// Presence per non-background class: predicted in at least `min_windows`
// windows. Length = labels.size() - 1.
std::vector<int> video_nhot(std::span<const std::size_t> track, const LabelSet& labels, std::size_t min_windows);
std::vector<std::size_t> nhot_to_ids(std::span<const int> nhot);

// Builds a store from exemplar references, looking up each window feature in
// the per-clip K x dim matrices returned by `features_of(clip_id)`.
ExemplarStore build_store(Track track, const WindowFeaturizer& featurizer, std::size_t num_classes,
                          std::span<const ExemplarRef> refs, std::size_t stride,
                          const std::function<const std::vector<double>&(const std::string&)>& features_of);

// Trains a track's encoder on ground-truth window labels of the training clips.
// Every `window_step`-th window of each clip is used.
struct EncoderData {
  const PoseSequence* sequence = nullptr;
  const std::vector<WindowLabel>* labels = nullptr;
};
ConvEncoder train_encoder(std::span<const EncoderData> clips, Track track, std::size_t num_classes,
                          const PipelineConfig& config, std::uint64_t seed, TrainResult* result = nullptr);

// `clip_id,track,window_index,class,confidence` rows.
std::string format_predictions(const std::string& clip_id, const BodyLanguageSequence& seq, const Vocabulary& vocab,
                               bool header);

struct ClipPrediction {
  std::string clip_id;
  BodyLanguageSequence sequence;
};

// Inverse of format_predictions over any number of clips, in file order.
// Window indices of each clip and track must run 0, 1, 2, ...
std::vector<ClipPrediction> parse_predictions(std::string_view text, const Vocabulary& vocab, std::size_t window_len,
                                              std::size_t stride);

}  // namespace posemo
