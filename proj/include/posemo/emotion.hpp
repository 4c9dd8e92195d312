#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "posemo/bodylang.hpp"
#include "posemo/neural.hpp"

namespace posemo {

// L value meaning "the whole video": a single histogram over all K windows.
inline constexpr std::size_t kWholeVideo = 0;

// Counts of predicted classes per L-window slice of both tracks. Each step is
// (upper classes incl. background) followed by (lower classes incl.
// background); counts are raw, not normalized.
struct HistogramSequence {
  std::size_t steps = 0;
  std::size_t width = 0;
  std::size_t upper_width = 0;
  std::vector<double> values;

  SequenceInput input() const { return {steps, values}; }
};

// Steps start at 0, S, 2S, ... while a full L-slice fits; a track shorter than
// L gives one step over the whole track.
std::size_t histogram_steps(std::size_t K, std::size_t L, std::size_t S);

HistogramSequence histogram_sequence(const BodyLanguageSequence& seq, std::size_t upper_classes,
                                     std::size_t lower_classes, std::size_t L, std::size_t S);

enum class Stage2Arch { Recurrent, Conv1D };
enum class Stage2Task { Emotion, Symptom };

std::string_view to_string(Stage2Arch a);
Stage2Arch parse_stage2_arch(std::string_view text);
std::string_view to_string(Stage2Task t);

// A trained stage-2 network with the histogram settings it was trained for.
class Stage2Model {
 public:
  Stage2Model() = default;
  Stage2Model(Stage2Task task, Stage2Arch arch, std::size_t L, std::size_t S, std::size_t input_width,
              std::size_t outputs, double input_scale, const PipelineConfig& config, std::uint64_t seed);

  Stage2Task task() const { return task_; }
  Stage2Arch arch() const { return arch_; }
  std::size_t L() const { return L_; }
  std::size_t S() const { return S_; }
  std::size_t outputs() const;
  std::size_t input_width() const;

  Net& net();
  const Net& net() const;
  // Sigmoid outputs. Throws ShapeMismatch.
  std::vector<double> predict(const HistogramSequence& hist) const;
  double loss_grad(const SequenceInput& x, std::span<const double> target, std::span<double> grad,
                   double weight = 1.0) const;
  std::size_t num_params() const { return net().num_params(); }
  std::vector<double>& params() { return net().params(); }

  void write(ByteWriter& out) const;
  static Stage2Model read(ByteReader& in);

 private:
  Stage2Task task_ = Stage2Task::Emotion;
  Stage2Arch arch_ = Stage2Arch::Recurrent;
  std::size_t L_ = 7, S_ = 3;
  std::variant<RecurrentNet, Conv1DNet> net_;
};

struct EmotionPrediction {
  std::vector<double> probabilities;  // kEmotionSlots + 1 entries
  std::vector<int> nhot;              // probability >= 0.5

  std::vector<std::size_t> ids() const;
};

EmotionPrediction predict_emotion(const HistogramSequence& hist, const Stage2Model& model);
// Probability of ME (versus MDD).
double predict_symptom(const HistogramSequence& hist, const Stage2Model& model);

// Emotion target: the emotion ids, or only the background slot when empty.
std::vector<double> emotion_target(std::span<const std::size_t> emotion, const LabelSet& labels);
std::vector<std::size_t> emotion_ids(std::span<const int> nhot);

struct Stage2Sample {
  std::string clip_id;
  HistogramSequence hist;
  std::vector<double> target;
};

struct Stage2Training {
  Stage2Model model;
  TrainResult result;
};

// Trains on `train` with early stopping on the validation score (example F1 for
// emotion, accuracy for symptom). Samples are visited in clip-id order before
// the seeded shuffle, so the input order does not matter.
Stage2Training train_stage2(Stage2Task task, Stage2Arch arch, std::size_t L, std::size_t S,
                            std::vector<Stage2Sample> train, std::vector<Stage2Sample> val,
                            const PipelineConfig& config, std::uint64_t seed);

// Validation score used for early stopping.
double stage2_score(const Stage2Model& model, std::span<const Stage2Sample> samples);

}  // namespace posemo
