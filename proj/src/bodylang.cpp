#include "posemo/bodylang.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "posemo/error.hpp"
#include "posemo/parallel.hpp"
#include "posemo/kernels.hpp"
#include "posemo/poseimage.hpp"

namespace posemo {

std::string_view to_string(FeatureFamily f) { return f == FeatureFamily::NTrajPlus ? "ntraj+" : "stconv"; }

FeatureFamily parse_feature_family(std::string_view text) {
  if (text == "ntraj+" || text == "ntrajplus") return FeatureFamily::NTrajPlus;
  if (text == "stconv" || text == "st-convpose") return FeatureFamily::StConvPose;
  throw Error(ErrorCode::InvalidArgument, "unknown feature family '" + std::string(text) + "'");
}

std::size_t window_count(std::size_t frames, std::size_t window_len, std::size_t stride) {
  if (window_len == 0 || stride == 0) throw Error(ErrorCode::InvalidArgument, "window length and stride must be positive");
  if (frames < window_len) {
    throw Error(ErrorCode::SequenceTooShort,
                std::to_string(frames) + " frames cannot hold a window of " + std::to_string(window_len));
  }
  return (frames - window_len) / stride + 1;
}

std::vector<double> HistogramFeaturizer::features(const PoseSequence& seq, std::size_t window_len,
                                                  std::size_t stride) const {
  const auto K = window_count(seq.size(), window_len, stride);
  const StartFrameCounts counts(seq, subset_, codebooks_);
  const auto d = dim();
  std::vector<double> out(K * d);
  for (std::size_t k = 0; k < K; ++k) {
    const auto h = counts.window(k * stride, window_len);
    std::copy(h.begin(), h.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  return out;
}

std::vector<double> EmbeddingFeaturizer::features(const PoseSequence& seq, std::size_t window_len,
                                                  std::size_t stride) const {
  const auto K = window_count(seq.size(), window_len, stride);
  const auto d = dim();
  const auto& s = encoder_.shape();
  std::vector<double> out(K * d);
  LoopErrors errors;
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < K; ++k) {
    errors.run(k, [&] {
      const auto img = encode_pose_image(seq.frames().subspan(k * stride, window_len), s.height, s.width);
      const auto e = embed(img, encoder_);
      std::copy(e.begin(), e.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
    });
  }
  errors.rethrow();
  return out;
}

void ExemplarStore::add(Exemplar exemplar) {
  if (exemplar.feature.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "exemplar feature has " + std::to_string(exemplar.feature.size()) +
                                                  " values, store expects " + std::to_string(dim_));
  }
  if (exemplar.label >= num_classes_) throw Error(ErrorCode::UnknownLabel, "exemplar class id out of range");
  auto key = [](const Exemplar& e) { return std::tie(e.label, e.clip_id, e.window_start, e.feature); };
  const auto pos = std::upper_bound(exemplars_.begin(), exemplars_.end(), exemplar,
                                    [&](const Exemplar& a, const Exemplar& b) { return key(a) < key(b); });
  const auto at = static_cast<std::size_t>(pos - exemplars_.begin());
  matrix_.insert(matrix_.begin() + static_cast<std::ptrdiff_t>(at * dim_), exemplar.feature.begin(),
                 exemplar.feature.end());
  exemplars_.insert(pos, std::move(exemplar));
}

std::vector<std::string> ExemplarStore::warnings(const LabelSet& labels) const {
  std::vector<std::size_t> count(num_classes_, 0);
  for (const auto& e : exemplars_) ++count[e.label];
  std::vector<std::string> out;
  for (std::size_t c = 0; c < num_classes_; ++c) {
    if (count[c] < 5 || count[c] > 7) {
      out.push_back(std::string(to_string(track_)) + " class '" + (c < labels.size() ? labels.name(c) : "?") +
                    "' has " + std::to_string(count[c]) + " exemplars (expected 5 to 7)");
    }
  }
  return out;
}

void ExemplarStore::write(ByteWriter& out) const {
  out.u8(track_ == Track::Upper ? 0 : 1);
  out.u8(static_cast<std::uint8_t>(kind_));
  out.u64(num_classes_);
  out.u64(dim_);
  out.u64(exemplars_.size());
  for (const auto& e : exemplars_) {
    out.u64(e.label);
    out.str(e.clip_id);
    out.u64(e.window_start);
    out.f64s(e.feature);
  }
}

ExemplarStore ExemplarStore::read(ByteReader& in) {
  const auto track = in.u8();
  const auto kind = in.u8();
  if (track > 1 || kind > 1) throw Error(ErrorCode::MalformedFile, "bad exemplar store header");
  const auto classes = in.u64();
  const auto dim = in.u64();
  ExemplarStore s(track == 0 ? Track::Upper : Track::Lower, static_cast<DistanceKind>(kind), classes, dim);
  const auto n = in.u64();
  if (n > in.remaining() / 8 || dim > in.remaining() / 8) throw Error(ErrorCode::MalformedFile, "truncated exemplar store");
  for (std::uint64_t i = 0; i < n; ++i) {
    Exemplar e;
    e.label = in.u64();
    e.clip_id = in.str();
    e.window_start = in.u64();
    e.feature = in.f64s(dim);
    s.add(std::move(e));
  }
  return s;
}

KnnResult knn_vote(std::span<const double> distances, const ExemplarStore& store, std::size_t k) {
  const auto n = distances.size();
  k = std::min(std::max<std::size_t>(k, 1), n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](auto a, auto b) {
    return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
  });
  std::vector<std::size_t> votes(store.num_classes(), 0);
  std::vector<double> dist(store.num_classes(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto c = store.exemplars()[idx[i]].label;
    ++votes[c];
    dist[c] += distances[idx[i]];
  }
  std::size_t best = 0;
  bool found = false;
  for (std::size_t c = 0; c < votes.size(); ++c) {
    if (votes[c] == 0) continue;
    if (!found || votes[c] > votes[best] ||
        (votes[c] == votes[best] && dist[c] / static_cast<double>(votes[c]) <
                                        dist[best] / static_cast<double>(votes[best]))) {
      best = c;
      found = true;
    }
  }
  return {best, 1.0 / (1.0 + dist[best] / static_cast<double>(votes[best]))};
}

namespace {

void check_query(std::size_t width, DistanceKind kind, const ExemplarStore& store) {
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "exemplar store is empty");
  if (kind != store.kind()) throw Error(ErrorCode::KindMismatch, "query feature kind differs from the exemplar store");
  if (width != store.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(width) + " values, store expects " +
                                                  std::to_string(store.dim()));
  }
}

void finish_distances(DistanceKind kind, std::span<double> d) {
  if (kind == DistanceKind::Euclidean) {
    for (double& v : d) v = std::sqrt(v);
  }
}

}  // namespace

KnnResult knn_classify(std::span<const double> feature, DistanceKind kind, const ExemplarStore& store, std::size_t k) {
  check_query(feature.size(), kind, store);
  std::vector<double> d(store.size());
  if (kind == DistanceKind::ChiSquare) {
    kernels::serial::pairwise_chi2(feature, store.matrix(), store.dim(), d);
  } else {
    kernels::serial::pairwise_sq_euclidean(feature, store.matrix(), store.dim(), d);
  }
  finish_distances(kind, d);
  return knn_vote(d, store, k);
}

std::vector<KnnResult> knn_classify_rows(std::span<const double> features, DistanceKind kind,
                                         const ExemplarStore& store, std::size_t k) {
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "exemplar store is empty");
  if (store.dim() == 0 || features.size() % store.dim() != 0) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix width does not match the store");
  }
  check_query(store.dim(), kind, store);
  const auto rows = features.size() / store.dim();
  const auto n = store.size();
  std::vector<double> d(rows * n);
  if (kind == DistanceKind::ChiSquare) {
    kernels::parallel::pairwise_chi2(features, store.matrix(), store.dim(), d);
  } else {
    kernels::parallel::pairwise_sq_euclidean(features, store.matrix(), store.dim(), d);
  }
  finish_distances(kind, d);
  std::vector<KnnResult> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = knn_vote(std::span<const double>(d).subspan(r * n, n), store, k);
  return out;
}

BodyLanguageSequence predict_sequence(const PoseSequence& seq, const TrackModel& upper, const TrackModel& lower,
                                      std::size_t window_len, std::size_t stride, std::size_t k) {
  if (!upper.featurizer || !upper.store || !lower.featurizer || !lower.store) {
    throw Error(ErrorCode::EmptyStore, "both tracks need a featurizer and an exemplar store");
  }
  BodyLanguageSequence out{window_len, stride, {}, {}, {}, {}};
  for (auto t : {Track::Upper, Track::Lower}) {
    const auto& m = t == Track::Upper ? upper : lower;
    const auto f = m.featurizer->features(seq, window_len, stride);
    const auto res = knn_classify_rows(f, distance_for(m.featurizer->family()), *m.store, k);
    auto& ids = t == Track::Upper ? out.upper : out.lower;
    auto& conf = t == Track::Upper ? out.upper_confidence : out.lower_confidence;
    for (const auto& r : res) {
      ids.push_back(r.label);
      conf.push_back(r.confidence);
    }
  }
  return out;
}

BodyLanguageSequence sequence_from_labels(std::span<const WindowLabel> labels, std::size_t window_len,
                                          std::size_t stride) {
  BodyLanguageSequence out{window_len, stride, {}, {}, {}, {}};
  for (const auto& w : labels) {
    out.upper.push_back(w.upper);
    out.lower.push_back(w.lower);
    out.upper_confidence.push_back(1.0);
    out.lower_confidence.push_back(1.0);
  }
  return out;
}

std::vector<int> video_nhot(std::span<const std::size_t> track, const LabelSet& labels, std::size_t min_windows) {
  std::vector<std::size_t> count(labels.size(), 0);
  for (auto c : track) {
    if (c < count.size()) ++count[c];
  }
  std::vector<int> out;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (c == labels.background_index()) continue;
    out.push_back(count[c] >= min_windows ? 1 : 0);
  }
  return out;
}

std::vector<std::size_t> nhot_to_ids(std::span<const int> nhot) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nhot.size(); ++i) {
    if (nhot[i]) out.push_back(i);
  }
  return out;
}

ExemplarStore build_store(Track track, const WindowFeaturizer& featurizer, std::size_t num_classes,
                          std::span<const ExemplarRef> refs, std::size_t stride,
                          const std::function<const std::vector<double>&(const std::string&)>& features_of) {
  ExemplarStore store(track, distance_for(featurizer.family()), num_classes, featurizer.dim());
  for (const auto& r : refs) {
    if (r.track != track) continue;
    if (r.window_start % stride != 0) {
      throw Error(ErrorCode::InvalidArgument, "exemplar window " + std::to_string(r.window_start) + " of '" +
                                                  r.clip_id + "' is not on the window grid");
    }
    const auto& f = features_of(r.clip_id);
    const auto k = r.window_start / stride;
    const auto d = featurizer.dim();
    if ((k + 1) * d > f.size()) {
      throw Error(ErrorCode::InvalidArgument, "exemplar window " + std::to_string(r.window_start) + " lies beyond '" +
                                                  r.clip_id + "'");
    }
    store.add({r.label, r.clip_id, r.window_start,
               {f.begin() + static_cast<std::ptrdiff_t>(k * d), f.begin() + static_cast<std::ptrdiff_t>((k + 1) * d)}});
  }
  if (store.empty()) throw Error(ErrorCode::EmptyStore, std::string("no exemplars for the ") + std::string(to_string(track)) + " track");
  return store;
}

ConvEncoder train_encoder(std::span<const EncoderData> clips, Track track, std::size_t num_classes,
                          const PipelineConfig& config, std::uint64_t seed, TrainResult* result) {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> targets;
  const auto step = std::max<std::size_t>(config.encoder_window_stride, 1);
  for (const auto& c : clips) {
    const auto& labels = *c.labels;
    for (std::size_t k = 0; k < labels.size(); k += step) {
      const auto w0 = labels[k].window_start;
      if (w0 + config.window_len > c.sequence->size()) continue;
      const auto img =
          encode_pose_image(c.sequence->frames().subspan(w0, config.window_len), config.image_height, config.image_width);
      inputs.push_back(image_tensor(img));
      targets.push_back(track == Track::Upper ? labels[k].upper : labels[k].lower);
    }
  }
  ConvEncoder::Shape shape{kPoseImageChannels, config.image_height, config.image_width, config.encoder_channels,
                           num_classes};
  ConvEncoder enc(shape, seed);
  TrainSpec spec;
  spec.lr = config.encoder_lr;
  spec.momentum = 0.9;
  spec.epochs = config.encoder_epochs;
  spec.batch = config.encoder_batch;
  spec.seed = derive_seed(seed, 0x73687566);  // "shuf"
  spec.loss = LossKind::SoftmaxCrossEntropy;
  std::vector<std::span<const double>> views(inputs.begin(), inputs.end());
  auto r = train<ConvEncoder, std::span<const double>, std::size_t>(enc, views, targets, spec);
  if (result) *result = std::move(r);
  return enc;
}

std::string format_predictions(const std::string& clip_id, const BodyLanguageSequence& seq, const Vocabulary& vocab,
                               bool header) {
  std::ostringstream out;
  out.precision(17);
  if (header) out << "clip_id,track,window_index,class,confidence\n";
  for (auto t : {Track::Upper, Track::Lower}) {
    const auto& ids = seq.track(t);
    const auto& conf = t == Track::Upper ? seq.upper_confidence : seq.lower_confidence;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      out << clip_id << ',' << to_string(t) << ',' << k << ',' << vocab.track(t).name(ids[k]) << ',' << conf[k] << '\n';
    }
  }
  return out.str();
}

std::vector<ClipPrediction> parse_predictions(std::string_view text, const Vocabulary& vocab, std::size_t window_len,
                                              std::size_t stride) {
  std::vector<ClipPrediction> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.starts_with("clip_id,")) continue;
    const auto f = split(line, ',');
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::MalformedFile, "predictions line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != 5) throw bad("expected 5 fields");
    Track t;
    if (f[1] == "upper") {
      t = Track::Upper;
    } else if (f[1] == "lower") {
      t = Track::Lower;
    } else {
      throw bad("unknown track '" + f[1] + "'");
    }
    const auto id = vocab.track(t).find(f[3]);
    if (!id) throw Error(ErrorCode::UnknownLabel, "predictions line " + std::to_string(line_no) + ": '" + f[3] + "'");
    std::size_t k = 0;
    double conf = 0.0;
    try {
      std::size_t used = 0;
      k = std::stoul(f[2], &used);
      if (used != f[2].size()) throw bad("bad window index");
      conf = std::stod(f[4], &used);
      if (used != f[4].size()) throw bad("bad confidence");
    } catch (const std::logic_error&) {
      throw bad("bad number");
    }
    if (out.empty() || out.back().clip_id != f[0]) {
      for (const auto& c : out) {
        if (c.clip_id == f[0]) throw bad("clip '" + f[0] + "' is not contiguous");
      }
      out.push_back({f[0], BodyLanguageSequence{window_len, stride, {}, {}, {}, {}}});
    }
    auto& seq = out.back().sequence;
    auto& ids = t == Track::Upper ? seq.upper : seq.lower;
    auto& cs = t == Track::Upper ? seq.upper_confidence : seq.lower_confidence;
    if (k != ids.size()) throw bad("window index " + std::to_string(k) + " out of order");
    ids.push_back(*id);
    cs.push_back(conf);
  }
  for (const auto& c : out) {
    if (c.sequence.upper.size() != c.sequence.lower.size()) {
      throw Error(ErrorCode::LengthMismatch, "clip '" + c.clip_id + "' has tracks of different lengths");
    }
  }
  return out;
}

}  // namespace posemo
