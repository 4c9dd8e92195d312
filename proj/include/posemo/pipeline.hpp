#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "posemo/bodylang.hpp"
#include "posemo/emotion.hpp"
#include "posemo/ingest.hpp"
#include "posemo/metrics.hpp"
#include "posemo/preprocess.hpp"
#include "posemo/synth.hpp"

namespace posemo {

// Preprocessed clips with their labels, in manifest order.
struct Dataset {
  Vocabulary vocab;
  DatasetManifest manifest;
  std::vector<PoseSequence> sequences;
  std::vector<RepairReport> reports;
  std::vector<ExemplarRef> exemplars;

  std::size_t size() const { return sequences.size(); }
  std::vector<std::size_t> indices(Split split) const;
  std::size_t index_of(std::string_view clip_id) const;
};

// Clips are preprocessed in parallel.
Dataset dataset_from_synth(const SynthDataset& synth, const PipelineConfig& config);

// Reads labels.csv, manifest.csv and, when present, exemplars.csv from `dir`.
Dataset load_dataset(const std::filesystem::path& dir, const PipelineConfig& config);

// The first `fraction` of the training clips in manifest order (at least one).
// Smaller fractions give prefixes of larger ones.
std::vector<std::size_t> training_fraction(const Dataset& data, double fraction);

// One track's window featurizer trained on `train` (clip indices).
std::unique_ptr<WindowFeaturizer> train_featurizer(const Dataset& data, Track track, FeatureFamily family,
                                                   std::span<const std::size_t> train, const PipelineConfig& config,
                                                   std::uint64_t seed, TrainResult* result = nullptr);

void write_featurizer(ByteWriter& out, const WindowFeaturizer& f);
std::unique_ptr<WindowFeaturizer> read_featurizer(ByteReader& in, Track track);

// K x dim window features of every clip, in dataset order.
std::vector<std::vector<double>> all_window_features(const WindowFeaturizer& f, const Dataset& data,
                                                     const PipelineConfig& config);

ExemplarStore exemplar_store(const Dataset& data, Track track, const WindowFeaturizer& f,
                             const std::vector<std::vector<double>>& features, const PipelineConfig& config);

struct Stage1Model {
  FeatureFamily family = FeatureFamily::NTrajPlus;
  std::array<std::unique_ptr<WindowFeaturizer>, 2> featurizer;
  std::array<ExemplarStore, 2> store;
};

struct Stage1Run {
  Stage1Model model;
  std::vector<BodyLanguageSequence> predictions;  // every clip, dataset order
};

// Trains both tracks, builds the exemplar stores and predicts every clip.
Stage1Run run_stage1(const Dataset& data, FeatureFamily family, std::span<const std::size_t> train,
                     const PipelineConfig& config, std::uint64_t seed);

std::vector<BodyLanguageSequence> ground_truth_sequences(const Dataset& data, const PipelineConfig& config);

struct Stage1Scores {
  std::array<double, 2> window_accuracy{};
  std::array<MultilabelScores, 2> video{};

  double mean_window_accuracy() const { return 0.5 * (window_accuracy[0] + window_accuracy[1]); }
  double mean_video_f1() const { return 0.5 * (video[0].f1 + video[1].f1); }
};

// Window accuracy against the ground-truth window labels and video-level
// multi-label scores against the manifest labels, over clips `idx`.
Stage1Scores score_stage1(const Dataset& data, std::span<const BodyLanguageSequence> predictions,
                          std::span<const std::size_t> idx, const PipelineConfig& config);

std::vector<Stage2Sample> stage2_samples(const Dataset& data, std::span<const BodyLanguageSequence> sequences,
                                         std::span<const std::size_t> idx, Stage2Task task, std::size_t L,
                                         std::size_t S);

struct Stage2Scores {
  MultilabelScores emotion;
  double symptom_accuracy = 0.0;
};

Stage2Scores score_stage2(const Stage2Model& model, std::span<const Stage2Sample> samples);

// The histogram L for a configuration label: "K" means the whole video.
std::size_t parse_histogram_len(std::string_view text);
std::string histogram_len_name(std::size_t L);

}  // namespace posemo
