#include "posemo/emotion.hpp"

#include <algorithm>

#include "posemo/error.hpp"
#include "posemo/metrics.hpp"
#include "posemo/rng.hpp"

namespace posemo {

std::size_t histogram_steps(std::size_t K, std::size_t L, std::size_t S) {
  if (K == 0) throw Error(ErrorCode::EmptySequence, "no windows to histogram");
  if (S == 0) throw Error(ErrorCode::InvalidArgument, "histogram stride must be >= 1");
  if (L == kWholeVideo || K <= L) return 1;
  return (K - L) / S + 1;
}

HistogramSequence histogram_sequence(const BodyLanguageSequence& seq, std::size_t upper_classes,
                                     std::size_t lower_classes, std::size_t L, std::size_t S) {
  const std::size_t K = seq.size();
  if (seq.lower.size() != K) throw Error(ErrorCode::LengthMismatch, "upper and lower tracks differ in length");
  const std::size_t steps = histogram_steps(K, L, S);
  const std::size_t len = L == kWholeVideo ? K : std::min(L, K);
  HistogramSequence h;
  h.steps = steps;
  h.upper_width = upper_classes;
  h.width = upper_classes + lower_classes;
  h.values.assign(steps * h.width, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    double* row = h.values.data() + s * h.width;
    for (std::size_t k = s * S; k < s * S + len; ++k) {
      if (seq.upper[k] >= upper_classes || seq.lower[k] >= lower_classes) {
        throw Error(ErrorCode::UnknownLabel, "class id out of range at window " + std::to_string(k));
      }
      row[seq.upper[k]] += 1.0;
      row[upper_classes + seq.lower[k]] += 1.0;
    }
  }
  return h;
}

std::string_view to_string(Stage2Arch a) { return a == Stage2Arch::Recurrent ? "lstm" : "conv1d"; }

Stage2Arch parse_stage2_arch(std::string_view text) {
  if (text == "lstm") return Stage2Arch::Recurrent;
  if (text == "conv1d") return Stage2Arch::Conv1D;
  throw Error(ErrorCode::InvalidArgument, "unknown stage-2 architecture '" + std::string(text) + "'");
}

std::string_view to_string(Stage2Task t) { return t == Stage2Task::Emotion ? "emotion" : "symptom"; }

Stage2Model::Stage2Model(Stage2Task task, Stage2Arch arch, std::size_t L, std::size_t S, std::size_t input_width,
                         std::size_t outputs, double input_scale, const PipelineConfig& config, std::uint64_t seed)
    : task_(task), arch_(arch), L_(L), S_(S) {
  if (arch == Stage2Arch::Recurrent) {
    net_ = RecurrentNet({input_width, config.lstm_hidden, outputs, input_scale}, seed);
  } else {
    net_ = Conv1DNet({input_width, config.conv1d_channels, outputs, input_scale}, seed);
  }
}

Net& Stage2Model::net() {
  return std::visit([](auto& n) -> Net& { return n; }, net_);
}

const Net& Stage2Model::net() const {
  return std::visit([](const auto& n) -> const Net& { return n; }, net_);
}

std::size_t Stage2Model::outputs() const {
  return std::visit([](const auto& n) { return n.shape().outputs; }, net_);
}

std::size_t Stage2Model::input_width() const {
  return std::visit([](const auto& n) { return n.shape().input; }, net_);
}

std::vector<double> Stage2Model::predict(const HistogramSequence& hist) const {
  if (hist.width != input_width()) {
    throw Error(ErrorCode::ShapeMismatch, "histogram width " + std::to_string(hist.width) + ", model expects " +
                                              std::to_string(input_width()));
  }
  return std::visit([&](const auto& n) { return n.forward(hist.input()); }, net_);
}

double Stage2Model::loss_grad(const SequenceInput& x, std::span<const double> target, std::span<double> grad,
                              double weight) const {
  return std::visit([&](const auto& n) { return n.loss_grad(x, target, grad, weight); }, net_);
}

void Stage2Model::write(ByteWriter& out) const {
  out.str("stage2");
  out.str(to_string(task_));
  out.str(to_string(arch_));
  out.u64(L_);
  out.u64(S_);
  std::visit([&](const auto& n) { n.write(out); }, net_);
}

Stage2Model Stage2Model::read(ByteReader& in) {
  if (in.str() != "stage2") throw Error(ErrorCode::MalformedFile, "not a stage-2 checkpoint");
  Stage2Model m;
  const auto task = in.str();
  if (task == "emotion") {
    m.task_ = Stage2Task::Emotion;
  } else if (task == "symptom") {
    m.task_ = Stage2Task::Symptom;
  } else {
    throw Error(ErrorCode::MalformedFile, "unknown stage-2 task '" + task + "'");
  }
  m.arch_ = parse_stage2_arch(in.str());
  m.L_ = in.u64();
  m.S_ = in.u64();
  if (m.arch_ == Stage2Arch::Recurrent) {
    m.net_ = RecurrentNet::read(in);
  } else {
    m.net_ = Conv1DNet::read(in);
  }
  return m;
}

std::vector<std::size_t> EmotionPrediction::ids() const { return emotion_ids(nhot); }

std::vector<std::size_t> emotion_ids(std::span<const int> nhot) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nhot.size(); ++i) {
    if (nhot[i]) out.push_back(i);
  }
  return out;
}

EmotionPrediction predict_emotion(const HistogramSequence& hist, const Stage2Model& model) {
  if (model.outputs() != kEmotionSlots + 1) {
    throw Error(ErrorCode::ShapeMismatch, "emotion model must have " + std::to_string(kEmotionSlots + 1) + " outputs");
  }
  EmotionPrediction p;
  p.probabilities = model.predict(hist);
  p.nhot.reserve(p.probabilities.size());
  for (double v : p.probabilities) p.nhot.push_back(v >= 0.5 ? 1 : 0);
  return p;
}

double predict_symptom(const HistogramSequence& hist, const Stage2Model& model) {
  if (model.outputs() != 1) throw Error(ErrorCode::ShapeMismatch, "symptom model must have one output");
  return model.predict(hist)[0];
}

std::vector<double> emotion_target(std::span<const std::size_t> emotion, const LabelSet& labels) {
  std::vector<double> t(labels.size(), 0.0);
  for (auto e : emotion) {
    if (e >= labels.size()) throw Error(ErrorCode::UnknownLabel, "emotion id " + std::to_string(e) + " out of range");
    t[e] = 1.0;
  }
  if (emotion.empty()) t[labels.background_index()] = 1.0;
  return t;
}

double stage2_score(const Stage2Model& model, std::span<const Stage2Sample> samples) {
  if (samples.empty()) return 0.0;
  if (model.task() == Stage2Task::Symptom) {
    std::vector<std::size_t> pred, truth;
    for (const auto& s : samples) {
      pred.push_back(predict_symptom(s.hist, model) >= 0.5 ? 1 : 0);
      truth.push_back(s.target.at(0) >= 0.5 ? 1 : 0);
    }
    return binary_accuracy(pred, truth);
  }
  std::vector<std::vector<std::size_t>> pred, truth;
  for (const auto& s : samples) {
    pred.push_back(predict_emotion(s.hist, model).ids());
    std::vector<std::size_t> t;
    for (std::size_t i = 0; i < s.target.size(); ++i) {
      if (s.target[i] >= 0.5) t.push_back(i);
    }
    truth.push_back(std::move(t));
  }
  return multilabel_scores(pred, truth).f1;
}

namespace {

// Wraps a Stage2Model so the generic trainer sees one loss_grad signature.
struct Stage2Trainee {
  Stage2Model* model;
  std::size_t num_params() const { return model->num_params(); }
  std::vector<double>& params() { return model->params(); }
  double loss_grad(const SequenceInput& x, const std::vector<double>& y, std::span<double> grad, double w) const {
    return model->loss_grad(x, y, grad, w);
  }
};

}  // namespace

Stage2Training train_stage2(Stage2Task task, Stage2Arch arch, std::size_t L, std::size_t S,
                            std::vector<Stage2Sample> train, std::vector<Stage2Sample> val,
                            const PipelineConfig& config, std::uint64_t seed) {
  if (train.empty()) throw Error(ErrorCode::EmptySequence, "no stage-2 training clips");
  auto by_id = [](const Stage2Sample& a, const Stage2Sample& b) { return a.clip_id < b.clip_id; };
  std::sort(train.begin(), train.end(), by_id);
  std::sort(val.begin(), val.end(), by_id);

  const std::size_t width = train.front().hist.width;
  const std::size_t outputs = train.front().target.size();
  for (const auto& s : train) {
    if (s.hist.width != width || s.target.size() != outputs) {
      throw Error(ErrorCode::ShapeMismatch, "stage-2 sample " + s.clip_id + " has a different shape");
    }
  }
  // Each step half sums to the slice length, so this keeps inputs near [0, 1].
  double scale = 1.0;
  if (L == kWholeVideo) {
    std::size_t k = 1;
    for (const auto& s : train) {
      double sum = 0.0;
      for (std::size_t i = 0; i < s.hist.upper_width; ++i) sum += s.hist.values[i];
      k = std::max(k, static_cast<std::size_t>(sum));
    }
    scale = 1.0 / static_cast<double>(k);
  } else {
    scale = 1.0 / static_cast<double>(L);
  }

  Stage2Training out;
  out.model = Stage2Model(task, arch, L, S, width, outputs, scale, config, derive_seed(seed, 0x696e6974));

  std::vector<SequenceInput> xs;
  std::vector<std::vector<double>> ys;
  for (const auto& s : train) {
    xs.push_back(s.hist.input());
    ys.push_back(s.target);
  }

  TrainSpec spec;
  spec.lr = config.stage2_lr;
  spec.epochs = config.stage2_epochs;
  spec.batch = config.stage2_batch;
  spec.seed = derive_seed(seed, 0x73687566);
  spec.loss = LossKind::BinaryCrossEntropy;
  spec.patience = val.empty() ? 0 : config.stage2_patience;

  Stage2Trainee trainee{&out.model};
  std::function<double(const Stage2Trainee&)> validator;
  if (!val.empty()) {
    validator = [&val](const Stage2Trainee& t) { return stage2_score(*t.model, val); };
  }
  out.result = posemo::train<Stage2Trainee, SequenceInput, std::vector<double>>(
      trainee, std::span<const SequenceInput>(xs), std::span<const std::vector<double>>(ys), spec, validator);
  return out;
}

}  // namespace posemo
