#include "posemo/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "posemo/binio.hpp"
#include "posemo/error.hpp"
#include "posemo/pipeline.hpp"

namespace posemo::cli {
namespace fs = std::filesystem;

namespace {

struct Global {
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string config_path;
  std::vector<std::string> sets;
};

struct Context {
  PipelineConfig config;
  std::uint64_t seed = 0;
  std::ostream& out;
  std::ostream& err;
};

// Paths a command is about to create; removed again unless the command
// finishes.
class Outputs {
 public:
  ~Outputs() {
    if (done_) return;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) {
      std::error_code ec;
      if (!it->second) fs::remove_all(it->first, ec);
    }
  }
  fs::path add(const fs::path& p) {
    paths_.emplace_back(p, fs::exists(p));
    return p;
  }
  void commit() { done_ = true; }

 private:
  std::vector<std::pair<fs::path, bool>> paths_;
  bool done_ = false;
};

std::string provenance(const Context& c) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "# config=%016" PRIx64 " seed=%" PRIu64 "\n", c.config.hash(), c.seed);
  return buf;
}

// Checks the provenance line of a CSV artifact and returns the rest.
std::string_view require_provenance(const Context& c, std::string_view text, const std::string& what) {
  const auto line = provenance(c);
  if (!text.starts_with("# config=")) {
    throw Error(ErrorCode::ConfigMismatch, what + " carries no config provenance line");
  }
  const auto eol = text.find('\n');
  const auto first = text.substr(0, eol == std::string_view::npos ? text.size() : eol + 1);
  const auto want = std::string_view(line).substr(0, line.find(' '));
  if (!first.starts_with(want)) {
    throw Error(ErrorCode::ConfigMismatch, what + " was produced under another config (" +
                                               std::string(trim(first.substr(2))) + ")");
  }
  return text.substr(first.size());
}

void save_artifact(const Context& c, const fs::path& path, std::string_view type,
                   const std::function<void(ByteWriter&)>& body) {
  ByteWriter w;
  write_header(w, {std::string(type), 1, c.config.hash(), c.seed});
  body(w);
  write_file_atomic(path, w.bytes());
}

template <class F>
auto load_artifact(const Context& c, const fs::path& path, std::string_view type, F&& body) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  const auto h = read_header(r, type);
  require_config(h, c.config.hash(), path.string());
  return body(r);
}

std::vector<std::size_t> split_indices(const Dataset& d, const std::string& split) {
  if (split == "all") {
    std::vector<std::size_t> all(d.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  const auto s = parse_split(split);
  if (!s) throw Error(ErrorCode::InvalidArgument, "unknown split '" + split + "'");
  return d.indices(*s);
}

Track track_index(std::size_t t) { return t == 0 ? Track::Upper : Track::Lower; }

// Per-clip sequences for stage 2: ground truth, or a predictions file.
std::vector<BodyLanguageSequence> load_sequences(const Context& c, const Dataset& d, const std::string& source,
                                                 std::span<const std::size_t> needed) {
  if (source == "gt") return ground_truth_sequences(d, c.config);
  const auto text = read_file(source);
  const auto body = require_provenance(c, text, source);
  std::vector<BodyLanguageSequence> out(d.size());
  std::vector<bool> have(d.size(), false);
  for (auto& p : parse_predictions(body, d.vocab, c.config.window_len, c.config.window_stride)) {
    const auto i = d.index_of(p.clip_id);
    out[i] = std::move(p.sequence);
    have[i] = true;
  }
  for (auto i : needed) {
    if (!have[i]) {
      throw Error(ErrorCode::LengthMismatch, source + " has no predictions for clip '" + d.manifest.entries[i].clip_id + "'");
    }
  }
  return out;
}

MultilabelScores mean_scores(const MultilabelScores& a, const MultilabelScores& b) {
  return {0.5 * (a.accuracy + b.accuracy), 0.5 * (a.precision + b.precision), 0.5 * (a.recall + b.recall),
          0.5 * (a.f1 + b.f1)};
}

void emit_table(const Context& c, const MetricsTable& t, const std::string& out_path, Outputs& outputs) {
  c.out << t.text();
  if (!out_path.empty()) write_file_atomic(outputs.add(out_path), provenance(c) + t.csv());
}

MetricsTable bodylang_table(const Stage1Scores& s) {
  MetricsTable t;
  t.columns = {"track", "window_acc", "accuracy", "precision", "recall", "f1"};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& v = s.video[k];
    const double row[] = {s.window_accuracy[k], v.accuracy, v.precision, v.recall, v.f1};
    t.add(std::string(to_string(track_index(k))), row);
  }
  const auto m = mean_scores(s.video[0], s.video[1]);
  const double row[] = {s.mean_window_accuracy(), m.accuracy, m.precision, m.recall, m.f1};
  t.add("mean", row);
  return t;
}

// ---- emotion / symptom prediction files ----

struct Stage2Row {
  std::string clip_id;
  std::vector<std::size_t> emotion;
  double score = 0.0;
};

std::string format_stage2_rows(Stage2Task task, const std::vector<Stage2Row>& rows, const Vocabulary& vocab) {
  std::ostringstream out;
  out.precision(17);
  out << "clip_id,task,class_or_score,score\n";
  for (const auto& r : rows) {
    out << r.clip_id << ',' << to_string(task) << ',';
    if (task == Stage2Task::Emotion) {
      for (std::size_t i = 0; i < r.emotion.size(); ++i) out << (i ? "|" : "") << vocab.emotion.name(r.emotion[i]);
      out << ',' << r.emotion.size() << '\n';
    } else {
      out << (r.score >= 0.5 ? "ME" : "MDD") << ',' << r.score << '\n';
    }
  }
  return out.str();
}

std::vector<Stage2Row> parse_stage2_rows(Stage2Task task, std::string_view text, const Vocabulary& vocab) {
  std::vector<Stage2Row> rows;
  for (const auto& raw : split(text, '\n')) {
    const auto line = trim(raw);
    if (line.empty() || line.starts_with("clip_id,")) continue;
    const auto f = split(line, ',');
    if (f.size() != 4 || f[1] != to_string(task)) {
      throw Error(ErrorCode::MalformedFile, "bad " + std::string(to_string(task)) + " prediction row '" + std::string(line) + "'");
    }
    Stage2Row r{f[0], {}, 0.0};
    if (task == Stage2Task::Emotion) {
      for (const auto& name : split(f[2], '|')) {
        if (name.empty()) continue;
        const auto id = vocab.emotion.find(name);
        if (!id) throw Error(ErrorCode::UnknownLabel, "unknown emotion '" + name + "'");
        r.emotion.push_back(*id);
      }
    } else {
      try {
        r.score = std::stod(f[3]);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::MalformedFile, "bad symptom score '" + f[3] + "'");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- commands ----

struct Opts {
  std::string spec, out, manifest, labels, data, kind = "ntraj+", featurizer, exemplars, feature, split, sequences = "gt",
                                                   model, L = "7", arch = "lstm", task, axis, values, predictions;
  std::optional<double> noise;
  std::optional<std::size_t> clips, N;
  std::size_t S = 3;
  double fraction = 1.0;
};

int synth_gen(Context& c, const Opts& o) {
  auto spec = ScenarioSpec::standard();
  if (!o.spec.empty()) spec.apply_text(read_file(o.spec));
  spec.seed = c.seed;
  spec.window_len = c.config.window_len;
  spec.window_stride = c.config.window_stride;
  if (o.noise) spec.noise_std = *o.noise;
  if (o.clips) spec.clips_per_split = *o.clips;
  spec.validate();
  Outputs outputs;
  outputs.add(o.out);
  const auto ds = generate_dataset(spec);
  write_dataset(ds, o.out);
  outputs.commit();
  c.out << "wrote " << ds.clips.size() << " clips and " << ds.exemplars.size() << " exemplar windows to " << o.out
        << '\n';
  return 0;
}

int preprocess_cmd(Context& c, const Opts& o) {
  const fs::path manifest_path = o.manifest;
  const fs::path labels = o.labels.empty() ? manifest_path.parent_path() / "labels.csv" : fs::path(o.labels);
  const auto vocab = parse_label_manifest(read_file(labels));
  const auto manifest = load_manifest(manifest_path, vocab);
  Outputs outputs;
  outputs.add(o.out);
  fs::create_directories(o.out);
  std::vector<RepairReport> reports(manifest.entries.size());
  std::vector<std::string> errors(manifest.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    try {
      const auto& e = manifest.entries[i];
      auto r = preprocess(load_sequence(e.path, e.frame_rate), c.config);
      r.report.clip_id = e.clip_id;
      reports[i] = std::move(r.report);
      write_file_atomic(fs::path(o.out) / (e.clip_id + ".pseq"), serialize_sequence(r.sequence, true));
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error(ErrorCode::Unrepairable, manifest.entries[i].clip_id + ": " + errors[i]);
  }
  write_file_atomic(fs::path(o.out) / "repairs.csv", provenance(c) + format_repair_report(reports));
  outputs.commit();
  c.out << "preprocessed " << reports.size() << " clips into " << o.out << '\n';
  return 0;
}

int train_featurizers(Context& c, const Opts& o, FeatureFamily family) {
  if (family == FeatureFamily::NTrajPlus && o.kind != "ntraj+") {
    throw Error(ErrorCode::InvalidArgument, "codebook kind must be ntraj+, got '" + o.kind + "'");
  }
  const auto data = load_dataset(o.data, c.config);
  const auto train = training_fraction(data, o.fraction);
  Outputs outputs;
  std::array<std::unique_ptr<WindowFeaturizer>, 2> f;
  for (std::size_t t = 0; t < 2; ++t) {
    TrainResult r;
    f[t] = train_featurizer(data, track_index(t), family, train, c.config, c.seed, &r);
    if (family == FeatureFamily::StConvPose && !r.epoch_loss.empty()) {
      c.out << to_string(track_index(t)) << " encoder final loss " << format_fixed(r.epoch_loss.back(), 6) << '\n';
    }
  }
  save_artifact(c, outputs.add(o.out), "featurizer", [&](ByteWriter& w) {
    for (const auto& x : f) write_featurizer(w, *x);
  });
  outputs.commit();
  c.out << "trained " << to_string(family) << " featurizers on " << train.size() << " clips -> " << o.out << '\n';
  return 0;
}

std::array<std::unique_ptr<WindowFeaturizer>, 2> load_featurizers(const Context& c, const fs::path& path) {
  return load_artifact(c, path, "featurizer", [](ByteReader& r) {
    std::array<std::unique_ptr<WindowFeaturizer>, 2> f;
    for (std::size_t t = 0; t < 2; ++t) f[t] = read_featurizer(r, track_index(t));
    return f;
  });
}

int exemplars_build(Context& c, const Opts& o) {
  auto data = load_dataset(o.data, c.config);
  if (!o.manifest.empty()) data.exemplars = parse_exemplar_manifest(read_file(o.manifest), data.vocab);
  const auto f = load_featurizers(c, o.featurizer);
  Outputs outputs;
  std::array<ExemplarStore, 2> stores;
  for (std::size_t t = 0; t < 2; ++t) {
    // Only clips that hold an exemplar need features.
    std::vector<std::vector<double>> feats(data.size());
    for (const auto& r : data.exemplars) {
      const auto i = data.index_of(r.clip_id);
      if (feats[i].empty()) feats[i] = f[t]->features(data.sequences[i], c.config.window_len, c.config.window_stride);
    }
    stores[t] = exemplar_store(data, track_index(t), *f[t], feats, c.config);
    for (const auto& w : stores[t].warnings(data.vocab.track(track_index(t)))) c.err << "warning: " << w << '\n';
  }
  save_artifact(c, outputs.add(o.out), "exemplars", [&](ByteWriter& w) {
    for (const auto& s : stores) s.write(w);
  });
  outputs.commit();
  c.out << "built exemplar stores (" << stores[0].size() << " upper, " << stores[1].size() << " lower) -> " << o.out
        << '\n';
  return 0;
}

int bodylang_predict(Context& c, const Opts& o) {
  const auto data = load_dataset(o.data, c.config);
  const auto f = load_featurizers(c, o.featurizer);
  if (!o.feature.empty() && parse_feature_family(o.feature) != f[0]->family()) {
    throw Error(ErrorCode::KindMismatch, o.featurizer + " holds " + std::string(to_string(f[0]->family())) +
                                             " featurizers, not " + o.feature);
  }
  const auto stores = load_artifact(c, o.exemplars, "exemplars", [](ByteReader& r) {
    std::array<ExemplarStore, 2> s;
    for (auto& x : s) x = ExemplarStore::read(r);
    return s;
  });
  const auto idx = split_indices(data, o.split.empty() ? "all" : o.split);
  Outputs outputs;
  std::vector<std::string> parts(idx.size());
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto i = idx[n];
    const auto seq = predict_sequence(data.sequences[i], {f[0].get(), &stores[0]}, {f[1].get(), &stores[1]},
                                      c.config.window_len, c.config.window_stride, c.config.knn_k);
    parts[n] = format_predictions(data.manifest.entries[i].clip_id, seq, data.vocab, n == 0);
  }
  std::string text = provenance(c);
  for (const auto& p : parts) text += p;
  write_file_atomic(outputs.add(o.out), text);
  outputs.commit();
  c.out << "predicted " << idx.size() << " clips -> " << o.out << '\n';
  return 0;
}

int stage2_train(Context& c, const Opts& o, Stage2Task task) {
  const auto data = load_dataset(o.data, c.config);
  const auto L = parse_histogram_len(o.L);
  const auto arch = parse_stage2_arch(o.arch);
  const auto train = data.indices(Split::Train), val = data.indices(Split::Val);
  std::vector<std::size_t> needed = train;
  needed.insert(needed.end(), val.begin(), val.end());
  const auto seqs = load_sequences(c, data, o.sequences, needed);
  Outputs outputs;
  auto run = train_stage2(task, arch, L, o.S, stage2_samples(data, seqs, train, task, L, o.S),
                          stage2_samples(data, seqs, val, task, L, o.S), c.config, c.seed);
  save_artifact(c, outputs.add(o.out), "stage2", [&](ByteWriter& w) { run.model.write(w); });
  outputs.commit();
  c.out << to_string(task) << " " << to_string(arch) << " L=" << histogram_len_name(L) << " S=" << o.S
        << " best epoch " << run.result.best_epoch + 1 << " of " << run.result.epoch_loss.size();
  if (!run.result.val_score.empty()) c.out << ", val " << format_fixed(run.result.val_score[run.result.best_epoch], 4);
  c.out << " -> " << o.out << '\n';
  return 0;
}

int stage2_predict(Context& c, const Opts& o, Stage2Task task) {
  const auto data = load_dataset(o.data, c.config);
  const auto model = load_artifact(c, o.model, "stage2", [](ByteReader& r) { return Stage2Model::read(r); });
  if (model.task() != task) {
    throw Error(ErrorCode::KindMismatch, o.model + " is a " + std::string(to_string(model.task())) + " model");
  }
  const auto idx = split_indices(data, o.split.empty() ? "test" : o.split);
  const auto seqs = load_sequences(c, data, o.sequences, idx);
  std::vector<Stage2Row> rows;
  for (auto i : idx) {
    const auto hist =
        histogram_sequence(seqs[i], data.vocab.upper.size(), data.vocab.lower.size(), model.L(), model.S());
    Stage2Row r{data.manifest.entries[i].clip_id, {}, 0.0};
    if (task == Stage2Task::Emotion) {
      r.emotion = predict_emotion(hist, model).ids();
    } else {
      r.score = predict_symptom(hist, model);
    }
    rows.push_back(std::move(r));
  }
  Outputs outputs;
  write_file_atomic(outputs.add(o.out), provenance(c) + format_stage2_rows(task, rows, data.vocab));
  outputs.commit();
  c.out << "predicted " << to_string(task) << " for " << rows.size() << " clips -> " << o.out << '\n';
  return 0;
}

int eval_cmd(Context& c, const Opts& o) {
  const auto data = load_dataset(o.data, c.config);
  const auto idx = split_indices(data, o.split.empty() ? "test" : o.split);
  Outputs outputs;
  if (o.task == "bodylang") {
    const auto seqs = load_sequences(c, data, o.predictions, idx);
    emit_table(c, bodylang_table(score_stage1(data, seqs, idx, c.config)), o.out, outputs);
    outputs.commit();
    return 0;
  }
  Stage2Task task;
  if (o.task == "emotion") {
    task = Stage2Task::Emotion;
  } else if (o.task == "symptom") {
    task = Stage2Task::Symptom;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown eval task '" + o.task + "'");
  }
  const auto text = read_file(o.predictions);
  std::map<std::string, Stage2Row> rows;
  for (auto& r : parse_stage2_rows(task, require_provenance(c, text, o.predictions), data.vocab)) {
    rows[r.clip_id] = std::move(r);
  }
  auto row_of = [&](std::size_t i) -> const Stage2Row& {
    const auto& id = data.manifest.entries[i].clip_id;
    const auto it = rows.find(id);
    if (it == rows.end()) throw Error(ErrorCode::LengthMismatch, o.predictions + " has no row for clip '" + id + "'");
    return it->second;
  };
  MetricsTable t;
  if (task == Stage2Task::Emotion) {
    std::vector<std::vector<std::size_t>> pred, truth;
    for (auto i : idx) {
      pred.push_back(row_of(i).emotion);
      const auto target = emotion_target(data.manifest.entries[i].emotion, data.vocab.emotion);
      std::vector<std::size_t> ids;
      for (std::size_t k = 0; k < target.size(); ++k) {
        if (target[k] > 0.5) ids.push_back(k);
      }
      truth.push_back(std::move(ids));
    }
    const auto s = multilabel_scores(pred, truth);
    t.columns = {"task", "accuracy", "precision", "recall", "f1"};
    const double row[] = {s.accuracy, s.precision, s.recall, s.f1};
    t.add("emotion", row);
  } else {
    std::vector<std::size_t> pred, truth;
    std::size_t me = 0;
    for (auto i : idx) {
      pred.push_back(row_of(i).score >= 0.5 ? kSymptomME : kSymptomMDD);
      const auto& e = data.manifest.entries[i];
      if (!e.symptom) throw Error(ErrorCode::UnknownLabel, "clip '" + e.clip_id + "' has no symptom label");
      truth.push_back(*e.symptom);
      me += *e.symptom == kSymptomME;
    }
    t.columns = {"task", "accuracy"};
    const double acc[] = {binary_accuracy(pred, truth)};
    t.add("symptom", acc);
    const auto n = static_cast<double>(truth.size());
    const double base[] = {n > 0 ? std::max<double>(static_cast<double>(me), n - static_cast<double>(me)) / n : 0.0};
    t.add("majority", base);
  }
  emit_table(c, t, o.out, outputs);
  outputs.commit();
  return 0;
}

std::vector<std::string> list_values(const std::string& text, std::vector<std::string> fallback) {
  if (text.empty()) return fallback;
  std::vector<std::string> out;
  for (const auto& v : split(text, ',')) {
    if (!trim(v).empty()) out.emplace_back(trim(v));
  }
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::InvalidArgument, "expected a number, got '" + s + "'");
}

int sweep_cmd(Context& c, const Opts& o) {
  const auto data = load_dataset(o.data, c.config);
  const auto test = data.indices(Split::Test);
  const auto train = data.indices(Split::Train), val = data.indices(Split::Val);
  MetricsTable t;
  auto stage1_row = [&](const std::string& label, FeatureFamily family, const PipelineConfig& cfg,
                        std::span<const std::size_t> train_idx) {
    const auto run = run_stage1(data, family, train_idx, cfg, c.seed);
    const auto s = score_stage1(data, run.predictions, test, cfg);
    const auto m = mean_scores(s.video[0], s.video[1]);
    std::vector<double> row{s.mean_window_accuracy(), m.accuracy, m.precision, m.recall, m.f1};
    t.add(label, row);
    return s.mean_window_accuracy();
  };
  const std::vector<std::string> stage1_columns{"window_acc", "accuracy", "precision", "recall", "f1"};
  const auto family = parse_feature_family(o.feature.empty() ? "ntraj+" : o.feature);
  if (o.axis == "N") {
    t.columns = {"N"};
    t.columns.insert(t.columns.end(), stage1_columns.begin(), stage1_columns.end());
    for (const auto& v : list_values(o.values, {"20", "50", "100"})) {
      auto cfg = c.config;
      cfg.set("codebook_size", v);
      cfg.validate();
      stage1_row(v, FeatureFamily::NTrajPlus, cfg, train);
    }
  } else if (o.axis == "feature") {
    t.columns = {"feature"};
    t.columns.insert(t.columns.end(), stage1_columns.begin(), stage1_columns.end());
    for (const auto& v : list_values(o.values, {"ntraj+", "stconv"})) {
      stage1_row(v, parse_feature_family(v), c.config, train);
    }
  } else if (o.axis == "datafrac") {
    t.columns = {"fraction"};
    t.columns.insert(t.columns.end(), stage1_columns.begin(), stage1_columns.end());
    t.columns.push_back("drop_pct");
    std::optional<double> full;
    const auto fam = o.feature.empty() ? FeatureFamily::StConvPose : family;
    for (const auto& v : list_values(o.values, {"1", "0.5", "0.2"})) {
      const auto frac = parse_double(v);
      const auto acc = stage1_row(format_fixed(100.0 * frac, 0) + "%", fam, c.config, training_fraction(data, frac));
      if (!full) full = acc;
      const double drop = *full > 0.0 ? 100.0 * (*full - acc) / *full : 0.0;
      t.rows.back().push_back(format_fixed(drop, 2));
    }
  } else if (o.axis == "LS") {
    t.columns = {"config", "accuracy", "precision", "recall", "f1"};
    std::vector<std::size_t> needed = train;
    needed.insert(needed.end(), val.begin(), val.end());
    const auto gt = ground_truth_sequences(data, c.config);
    const auto eval_seqs = load_sequences(c, data, o.sequences, test);
    const auto arch = parse_stage2_arch(o.arch);
    for (const auto& v : list_values(o.values, {"1/1", "7/3", "K/1"})) {
      const auto slash = v.find('/');
      if (slash == std::string::npos) throw Error(ErrorCode::InvalidArgument, "LS values look like L/S, got '" + v + "'");
      const auto L = parse_histogram_len(v.substr(0, slash));
      const auto S = static_cast<std::size_t>(parse_double(v.substr(slash + 1)));
      if (S == 0) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
      const auto run = train_stage2(Stage2Task::Emotion, arch, L, S, stage2_samples(data, gt, train, Stage2Task::Emotion, L, S),
                                    stage2_samples(data, gt, val, Stage2Task::Emotion, L, S), c.config, c.seed);
      const auto s = score_stage2(run.model, stage2_samples(data, eval_seqs, test, Stage2Task::Emotion, L, S)).emotion;
      const double row[] = {s.accuracy, s.precision, s.recall, s.f1};
      t.add("L=" + histogram_len_name(L) + ",S=" + std::to_string(S), row);
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown sweep axis '" + o.axis + "'");
  }
  Outputs outputs;
  emit_table(c, t, o.out, outputs);
  outputs.commit();
  return 0;
}

}  // namespace

int run_pipeline(const Global& g, Context& c, const Opts& o, std::ostream& out, std::ostream& err);

namespace {

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage body-language and emotion pipeline over 2D pose sequences", "posemo"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Global g;
  Opts o;
  app.add_option("--seed", g.seed, "Master seed (default: config seed)");
  app.add_option("--jobs", g.jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--config", g.config_path, "key=value pipeline config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Config override key=value (repeatable)");

  auto data_opt = [&](CLI::App* a) { a->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory); };
  auto out_opt = [&](CLI::App* a) { a->add_option("--out", o.out, "Output path")->required(); };

  auto* synth = app.add_subcommand("synth", "Synthetic data");
  synth->require_subcommand(1);
  auto* gen = synth->add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--spec", o.spec, "Scenario key=value overrides")->check(CLI::ExistingFile);
  gen->add_option("--noise", o.noise, "Joint noise std in pixels");
  gen->add_option("--clips", o.clips, "Clips per split");
  out_opt(gen);

  auto* pre = app.add_subcommand("preprocess", "Repair, scale and center every clip of a manifest");
  pre->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required()->check(CLI::ExistingFile);
  pre->add_option("--labels", o.labels, "Label manifest (default: labels.csv next to the manifest)");
  out_opt(pre);

  auto* cb = app.add_subcommand("codebook", "NTraj+ codebooks");
  cb->require_subcommand(1);
  auto* cbt = cb->add_subcommand("train", "Train per-track codebook sets");
  data_opt(cbt);
  cbt->add_option("--kind", o.kind, "Descriptor family")->check(CLI::IsMember({"ntraj+"}));
  cbt->add_option("--N", o.N, "Codebook size");
  cbt->add_option("--fraction", o.fraction, "Fraction of training clips")->check(CLI::Range(0.0, 1.0));
  out_opt(cbt);

  auto* enc = app.add_subcommand("encoder", "ST-ConvPose encoders");
  enc->require_subcommand(1);
  auto* enct = enc->add_subcommand("train", "Train per-track encoders on labelled windows");
  data_opt(enct);
  enct->add_option("--fraction", o.fraction, "Fraction of training clips")->check(CLI::Range(0.0, 1.0));
  out_opt(enct);

  auto* ex = app.add_subcommand("exemplars", "Exemplar stores");
  ex->require_subcommand(1);
  auto* exb = ex->add_subcommand("build", "Featurize the designated exemplar windows");
  data_opt(exb);
  exb->add_option("--featurizer", o.featurizer, "Codebook or encoder artifact")->required()->check(CLI::ExistingFile);
  exb->add_option("--manifest", o.manifest, "Exemplar CSV (default: exemplars.csv of the dataset)")->check(CLI::ExistingFile);
  out_opt(exb);

  auto* bl = app.add_subcommand("bodylang", "Stage-1 inference");
  bl->require_subcommand(1);
  auto* blp = bl->add_subcommand("predict", "Predict window labels of both tracks");
  data_opt(blp);
  blp->add_option("--featurizer", o.featurizer, "Codebook or encoder artifact")->required()->check(CLI::ExistingFile);
  blp->add_option("--exemplars", o.exemplars, "Exemplar store artifact")->required()->check(CLI::ExistingFile);
  blp->add_option("--feature", o.feature, "Expected feature family")->check(CLI::IsMember({"ntraj+", "stconv"}));
  blp->add_option("--split", o.split, "all, train, val or test")->check(CLI::IsMember({"all", "train", "val", "test"}));
  out_opt(blp);

  std::map<CLI::App*, std::pair<Stage2Task, bool>> stage2_cmds;
  for (auto task : {Stage2Task::Emotion, Stage2Task::Symptom}) {
    auto* s = app.add_subcommand(std::string(to_string(task)), "Stage-2 " + std::string(to_string(task)) + " model");
    s->require_subcommand(1);
    auto* tr = s->add_subcommand("train", "Train on histogram sequences of the train split");
    data_opt(tr);
    tr->add_option("--sequences", o.sequences, "gt or a predictions CSV");
    tr->add_option("--L", o.L, "Histogram window in stage-1 windows, or K for the whole video");
    tr->add_option("--S", o.S, "Histogram stride")->check(CLI::PositiveNumber);
    tr->add_option("--arch", o.arch, "lstm or conv1d")->check(CLI::IsMember({"lstm", "conv1d"}));
    out_opt(tr);
    auto* pr = s->add_subcommand("predict", "Predict from histogram sequences");
    data_opt(pr);
    pr->add_option("--model", o.model, "Stage-2 checkpoint")->required()->check(CLI::ExistingFile);
    pr->add_option("--sequences", o.sequences, "gt or a predictions CSV");
    pr->add_option("--split", o.split, "all, train, val or test")->check(CLI::IsMember({"all", "train", "val", "test"}));
    out_opt(pr);
    stage2_cmds[tr] = {task, true};
    stage2_cmds[pr] = {task, false};
  }

  auto* ev = app.add_subcommand("eval", "Metric tables");
  data_opt(ev);
  ev->add_option("--task", o.task, "bodylang, emotion or symptom")->required()->check(CLI::IsMember({"bodylang", "emotion", "symptom"}));
  ev->add_option("--predictions", o.predictions, "Prediction CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", o.split, "all, train, val or test")->check(CLI::IsMember({"all", "train", "val", "test"}));
  ev->add_option("--out", o.out, "Also write the table as CSV");

  auto* sw = app.add_subcommand("sweep", "Ablation sweeps");
  data_opt(sw);
  sw->add_option("--axis", o.axis, "N, LS, datafrac or feature")->required()->check(CLI::IsMember({"N", "LS", "datafrac", "feature"}));
  sw->add_option("--values", o.values, "Comma-separated axis values");
  sw->add_option("--feature", o.feature, "Feature family for datafrac")->check(CLI::IsMember({"ntraj+", "stconv"}));
  sw->add_option("--sequences", o.sequences, "LS axis: evaluation sequences, gt or a predictions CSV");
  sw->add_option("--arch", o.arch, "LS axis: lstm or conv1d")->check(CLI::IsMember({"lstm", "conv1d"}));
  sw->add_option("--out", o.out, "Also write the table as CSV");

  auto* full = app.add_subcommand("run", "Whole pipeline on a dataset directory");
  data_opt(full);
  full->add_option("--feature", o.feature, "ntraj+ or stconv")->check(CLI::IsMember({"ntraj+", "stconv"}));
  full->add_option("--L", o.L, "Histogram window, or K");
  full->add_option("--S", o.S, "Histogram stride")->check(CLI::PositiveNumber);
  full->add_option("--arch", o.arch, "lstm or conv1d")->check(CLI::IsMember({"lstm", "conv1d"}));
  out_opt(full);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  PipelineConfig cfg;
  try {
    if (!g.config_path.empty()) cfg.apply_text(read_file(g.config_path));
    for (const auto& kv : g.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + kv + "'");
      cfg.set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
    }
    if (g.seed) cfg.seed = *g.seed;
    if (o.N) cfg.codebook_size = *o.N;
    cfg.validate();
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (g.jobs > 0) omp_set_num_threads(g.jobs);
    Context c{cfg, cfg.seed, out, err};

    if (gen->parsed()) return synth_gen(c, o);
    if (pre->parsed()) return preprocess_cmd(c, o);
    if (cbt->parsed()) return train_featurizers(c, o, FeatureFamily::NTrajPlus);
    if (enct->parsed()) return train_featurizers(c, o, FeatureFamily::StConvPose);
    if (exb->parsed()) return exemplars_build(c, o);
    if (blp->parsed()) return bodylang_predict(c, o);
    for (const auto& [cmd, what] : stage2_cmds) {
      if (cmd->parsed()) return what.second ? stage2_train(c, o, what.first) : stage2_predict(c, o, what.first);
    }
    if (ev->parsed()) return eval_cmd(c, o);
    if (sw->parsed()) return sweep_cmd(c, o);
    if (full->parsed()) return run_pipeline(g, c, o, out, err);
    err << "usage error: no command\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

// Chains the individual commands through `run`, so the whole pipeline uses
// exactly the code paths a user would.
int run_pipeline(const Global& g, Context& c, const Opts& o, std::ostream& out, std::ostream& err) {
  const fs::path dir = o.out;
  Outputs outputs;
  outputs.add(dir);
  fs::create_directories(dir);
  std::vector<std::string> common;
  if (!g.config_path.empty()) common.insert(common.end(), {"--config", g.config_path});
  for (const auto& s : g.sets) common.insert(common.end(), {"--set", s});
  common.insert(common.end(), {"--seed", std::to_string(c.seed)});
  if (g.jobs > 0) common.insert(common.end(), {"--jobs", std::to_string(g.jobs)});
  auto step = [&](std::vector<std::string> args) {
    args.insert(args.begin(), common.begin(), common.end());
    const int rc = dispatch(args, out, err);
    if (rc != 0) throw rc;
  };
  const auto p = [&](const char* name) { return (dir / name).string(); };
  const std::string feature = o.feature.empty() ? "ntraj+" : o.feature;
  const std::string L = o.L, S = std::to_string(o.S);
  try {
    if (feature == "ntraj+") {
      step({"codebook", "train", "--data", o.data, "--out", p("featurizer.bin")});
    } else {
      step({"encoder", "train", "--data", o.data, "--out", p("featurizer.bin")});
    }
    step({"exemplars", "build", "--data", o.data, "--featurizer", p("featurizer.bin"), "--out", p("exemplars.bin")});
    step({"bodylang", "predict", "--data", o.data, "--featurizer", p("featurizer.bin"), "--exemplars",
          p("exemplars.bin"), "--out", p("bodylang.csv")});
    step({"eval", "--data", o.data, "--task", "bodylang", "--predictions", p("bodylang.csv"), "--out",
          p("bodylang_eval.csv")});
    for (const std::string task : {"emotion", "symptom"}) {
      step({task, "train", "--data", o.data, "--L", L, "--S", S, "--arch", o.arch, "--out", p((task + ".bin").c_str())});
      step({task, "predict", "--data", o.data, "--model", p((task + ".bin").c_str()), "--sequences", p("bodylang.csv"),
            "--out", p((task + ".csv").c_str())});
      step({"eval", "--data", o.data, "--task", task, "--predictions", p((task + ".csv").c_str()), "--out",
            p((task + "_eval.csv").c_str())});
    }
  } catch (int rc) {
    return rc;
  }
  outputs.commit();
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) { return dispatch(args, out, err); }

}  // namespace posemo::cli
