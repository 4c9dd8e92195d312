#include "posemo/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "posemo/error.hpp"
#include "posemo/rng.hpp"

namespace posemo {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFeatTag = 0x66656174;  // "feat"

void preprocess_all(Dataset& d, const std::vector<const PoseSequence*>& raw, const PipelineConfig& config) {
  const auto n = raw.size();
  d.sequences.assign(n, PoseSequence(std::vector<Pose>(1), 1.0, ""));
  d.reports.assign(n, {});
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      auto r = preprocess(*raw[i], config);
      d.sequences[i] = std::move(r.sequence);
      d.reports[i] = std::move(r.report);
      d.reports[i].clip_id = d.manifest.entries[i].clip_id;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      throw Error(ErrorCode::Unrepairable, "clip '" + d.manifest.entries[i].clip_id + "': " + errors[i]);
    }
  }
}

std::size_t track_label(const WindowLabel& w, Track t) { return t == Track::Upper ? w.upper : w.lower; }

}  // namespace

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split == split) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::index_of(std::string_view clip_id) const {
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].clip_id == clip_id) return i;
  }
  throw Error(ErrorCode::UnknownLabel, "no clip '" + std::string(clip_id) + "' in the dataset");
}

Dataset dataset_from_synth(const SynthDataset& synth, const PipelineConfig& config) {
  Dataset d;
  d.vocab = synth.vocab;
  d.exemplars = synth.exemplars;
  std::vector<const PoseSequence*> raw;
  for (const auto& c : synth.clips) {
    ClipEntry e;
    e.clip_id = c.clip_id;
    e.path = c.clip_id + ".jsonl";
    e.frame_rate = synth.spec.fps;
    e.split = c.split;
    e.upper = c.upper;
    e.lower = c.lower;
    e.emotion = c.emotion;
    e.symptom = c.symptom;
    e.window_labels = c.windows;
    d.manifest.entries.push_back(std::move(e));
    raw.push_back(&c.raw);
  }
  preprocess_all(d, raw, config);
  return d;
}

Dataset load_dataset(const fs::path& dir, const PipelineConfig& config) {
  Dataset d;
  d.vocab = parse_label_manifest(read_file(dir / "labels.csv"));
  d.manifest = load_manifest(dir / "manifest.csv", d.vocab);
  if (fs::exists(dir / "exemplars.csv")) d.exemplars = parse_exemplar_manifest(read_file(dir / "exemplars.csv"), d.vocab);
  const auto n = d.manifest.entries.size();
  std::vector<PoseSequence> raw(n, PoseSequence(std::vector<Pose>(1), 1.0, ""));
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      raw[i] = load_sequence(d.manifest.entries[i].path, d.manifest.entries[i].frame_rate);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw Error(ErrorCode::MalformedFile, d.manifest.entries[i].path.string() + ": " + errors[i]);
  }
  std::vector<const PoseSequence*> ptrs;
  for (const auto& r : raw) ptrs.push_back(&r);
  preprocess_all(d, ptrs, config);
  return d;
}

std::vector<std::size_t> training_fraction(const Dataset& data, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidArgument, "data fraction must be in (0, 1]");
  auto train = data.indices(Split::Train);
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size()))));
  train.resize(std::min(keep, train.size()));
  return train;
}

std::unique_ptr<WindowFeaturizer> train_featurizer(const Dataset& data, Track track, FeatureFamily family,
                                                   std::span<const std::size_t> train, const PipelineConfig& config,
                                                   std::uint64_t seed, TrainResult* result) {
  if (train.empty()) throw Error(ErrorCode::EmptySequence, "no training clips");
  const auto tseed = derive_seed(seed, kFeatTag, track == Track::Upper ? 0 : 1);
  if (family == FeatureFamily::NTrajPlus) {
    std::vector<PoseSequence> seqs;
    for (auto i : train) seqs.push_back(data.sequences.at(i));
    auto books = train_codebook_set(seqs, subset_for(track), FeatureKind::NTrajPlus, config.traj_len, config.gaps,
                                    config.codebook_size, config.codebook_restarts, config.codebook_max_iter,
                                    config.codebook_sample, tseed);
    return std::make_unique<HistogramFeaturizer>(std::move(books), subset_for(track));
  }
  std::vector<EncoderData> clips;
  for (auto i : train) {
    const auto& e = data.manifest.entries.at(i);
    if (e.window_labels.empty()) {
      throw Error(ErrorCode::EmptySequence, "clip '" + e.clip_id + "' has no window labels for encoder training");
    }
    clips.push_back({&data.sequences[i], &e.window_labels});
  }
  auto enc = train_encoder(clips, track, data.vocab.track(track).size(), config, tseed, result);
  return std::make_unique<EmbeddingFeaturizer>(std::move(enc));
}

void write_featurizer(ByteWriter& out, const WindowFeaturizer& f) {
  out.str(to_string(f.family()));
  if (f.family() == FeatureFamily::NTrajPlus) {
    static_cast<const HistogramFeaturizer&>(f).codebooks().write(out);
  } else {
    static_cast<const EmbeddingFeaturizer&>(f).encoder().write(out);
  }
}

std::unique_ptr<WindowFeaturizer> read_featurizer(ByteReader& in, Track track) {
  const auto family = parse_feature_family(in.str());
  if (family == FeatureFamily::NTrajPlus) {
    return std::make_unique<HistogramFeaturizer>(CodebookSet::read(in), subset_for(track));
  }
  return std::make_unique<EmbeddingFeaturizer>(ConvEncoder::read(in));
}

std::vector<std::vector<double>> all_window_features(const WindowFeaturizer& f, const Dataset& data,
                                                     const PipelineConfig& config) {
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (const auto& s : data.sequences) out.push_back(f.features(s, config.window_len, config.window_stride));
  return out;
}

ExemplarStore exemplar_store(const Dataset& data, Track track, const WindowFeaturizer& f,
                             const std::vector<std::vector<double>>& features, const PipelineConfig& config) {
  return build_store(track, f, data.vocab.track(track).size(), data.exemplars, config.window_stride,
                     [&](const std::string& id) -> const std::vector<double>& { return features.at(data.index_of(id)); });
}

Stage1Run run_stage1(const Dataset& data, FeatureFamily family, std::span<const std::size_t> train,
                     const PipelineConfig& config, std::uint64_t seed) {
  Stage1Run run;
  run.model.family = family;
  run.predictions.assign(data.size(), BodyLanguageSequence{config.window_len, config.window_stride, {}, {}, {}, {}});
  for (auto track : {Track::Upper, Track::Lower}) {
    const auto t = track == Track::Upper ? 0 : 1;
    run.model.featurizer[t] = train_featurizer(data, track, family, train, config, seed);
    const auto& f = *run.model.featurizer[t];
    const auto features = all_window_features(f, data, config);
    run.model.store[t] = exemplar_store(data, track, f, features, config);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto r = knn_classify_rows(features[i], distance_for(family), run.model.store[t], config.knn_k);
      auto& seq = run.predictions[i];
      auto& ids = track == Track::Upper ? seq.upper : seq.lower;
      auto& conf = track == Track::Upper ? seq.upper_confidence : seq.lower_confidence;
      for (const auto& x : r) {
        ids.push_back(x.label);
        conf.push_back(x.confidence);
      }
    }
  }
  return run;
}

std::vector<BodyLanguageSequence> ground_truth_sequences(const Dataset& data, const PipelineConfig& config) {
  std::vector<BodyLanguageSequence> out;
  for (const auto& e : data.manifest.entries) {
    if (e.window_labels.empty()) throw Error(ErrorCode::EmptySequence, "clip '" + e.clip_id + "' has no window labels");
    out.push_back(sequence_from_labels(e.window_labels, config.window_len, config.window_stride));
  }
  return out;
}

Stage1Scores score_stage1(const Dataset& data, std::span<const BodyLanguageSequence> predictions,
                          std::span<const std::size_t> idx, const PipelineConfig& config) {
  if (predictions.size() != data.size()) throw Error(ErrorCode::LengthMismatch, "one prediction per clip expected");
  Stage1Scores s;
  for (auto track : {Track::Upper, Track::Lower}) {
    const auto t = track == Track::Upper ? 0 : 1;
    const auto& labels = data.vocab.track(track);
    std::size_t ok = 0, total = 0;
    std::vector<std::vector<std::size_t>> pred, truth;
    for (auto i : idx) {
      const auto& e = data.manifest.entries.at(i);
      const auto& p = predictions[i].track(track);
      if (!e.window_labels.empty()) {
        if (e.window_labels.size() != p.size()) {
          throw Error(ErrorCode::LengthMismatch, "clip '" + e.clip_id + "': " + std::to_string(p.size()) +
                                                     " predicted windows, " + std::to_string(e.window_labels.size()) +
                                                     " labelled");
        }
        for (std::size_t k = 0; k < p.size(); ++k) ok += p[k] == track_label(e.window_labels[k], track);
        total += p.size();
      }
      pred.push_back(nhot_to_ids(video_nhot(p, labels, config.min_windows)));
      truth.push_back(track == Track::Upper ? e.upper : e.lower);
    }
    s.window_accuracy[t] = total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
    s.video[t] = multilabel_scores(pred, truth);
  }
  return s;
}

std::vector<Stage2Sample> stage2_samples(const Dataset& data, std::span<const BodyLanguageSequence> sequences,
                                         std::span<const std::size_t> idx, Stage2Task task, std::size_t L,
                                         std::size_t S) {
  std::vector<Stage2Sample> out;
  for (auto i : idx) {
    const auto& e = data.manifest.entries.at(i);
    Stage2Sample s;
    s.clip_id = e.clip_id;
    s.hist = histogram_sequence(sequences[i], data.vocab.upper.size(), data.vocab.lower.size(), L, S);
    if (task == Stage2Task::Emotion) {
      s.target = emotion_target(e.emotion, data.vocab.emotion);
    } else {
      if (!e.symptom) throw Error(ErrorCode::UnknownLabel, "clip '" + e.clip_id + "' has no symptom label");
      s.target = {*e.symptom == kSymptomME ? 1.0 : 0.0};
    }
    out.push_back(std::move(s));
  }
  return out;
}

Stage2Scores score_stage2(const Stage2Model& model, std::span<const Stage2Sample> samples) {
  Stage2Scores s;
  if (model.task() == Stage2Task::Symptom) {
    s.symptom_accuracy = stage2_score(model, samples);
    return s;
  }
  std::vector<std::vector<std::size_t>> pred, truth;
  for (const auto& x : samples) {
    pred.push_back(predict_emotion(x.hist, model).ids());
    std::vector<std::size_t> t;
    for (std::size_t i = 0; i < x.target.size(); ++i) {
      if (x.target[i] >= 0.5) t.push_back(i);
    }
    truth.push_back(std::move(t));
  }
  s.emotion = multilabel_scores(pred, truth);
  return s;
}

std::size_t parse_histogram_len(std::string_view text) {
  if (text == "K" || text == "k") return kWholeVideo;
  std::size_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || v == 0) {
    throw Error(ErrorCode::InvalidArgument, "histogram length must be a positive integer or K, got '" +
                                                std::string(text) + "'");
  }
  return v;
}

std::string histogram_len_name(std::size_t L) { return L == kWholeVideo ? "K" : std::to_string(L); }

}  // namespace posemo
