// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is 0 only when every selected criterion passes.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "posemo/cli.hpp"
#include "posemo/pipeline.hpp"

using namespace posemo;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point t) { return std::chrono::duration<double>(clock_type::now() - t).count(); }

std::string fixed(double v, int d = 4) { return format_fixed(v, d); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome from_suite(const oracle::SuiteResult& r, double limit_s = 0.0) {
  Outcome o{r.pass, r.detail};
  if (limit_s > 0.0 && r.seconds >= limit_s) {
    o.pass = false;
    o.detail += "; took " + fixed(r.seconds, 1) + " s, limit " + fixed(limit_s, 0) + " s";
  }
  return o;
}

// The standard synthetic dataset and the stage-1 runs shared by several criteria.
struct Shared {
  PipelineConfig config;
  std::optional<Dataset> data;
  std::optional<Stage1Run> ntraj, conv;
  std::optional<Stage1Scores> ntraj_scores, conv_scores;
  double stage1_seconds = 0.0;

  const Dataset& dataset() {
    if (!data) data = dataset_from_synth(generate_dataset(ScenarioSpec::standard()), config);
    return *data;
  }

  void stage1() {
    if (ntraj && conv) return;
    const auto t = clock_type::now();
    const auto& d = dataset();
    const auto train = d.indices(Split::Train), test = d.indices(Split::Test);
    ntraj = run_stage1(d, FeatureFamily::NTrajPlus, train, config, config.seed);
    ntraj_scores = score_stage1(d, ntraj->predictions, test, config);
    conv = run_stage1(d, FeatureFamily::StConvPose, train, config, config.seed);
    conv_scores = score_stage1(d, conv->predictions, test, config);
    stage1_seconds = since(t);
  }
};

std::string describe(const char* name, const Stage1Scores& s) {
  std::ostringstream os;
  os << name << " window " << fixed(s.window_accuracy[0]) << "/" << fixed(s.window_accuracy[1]) << " video F1 "
     << fixed(s.video[0].f1) << "/" << fixed(s.video[1].f1);
  return os.str();
}

Outcome stage1_accuracy(Shared& sh) {
  sh.stage1();
  const auto& a = *sh.ntraj_scores;
  const auto& b = *sh.conv_scores;
  bool pass = true;
  for (const auto* s : {&a, &b}) {
    for (int t = 0; t < 2; ++t) pass = pass && s->window_accuracy[t] >= 0.90 && s->video[t].f1 >= 0.85;
  }
  pass = pass && b.mean_window_accuracy() >= a.mean_window_accuracy() - 0.05;
  std::string detail = describe("ntraj+", a) + "; " + describe("stconv", b) + " (upper/lower); " +
                       fixed(sh.stage1_seconds, 0) + " s";
  if (sh.stage1_seconds >= 600.0) {
    pass = false;
    detail += ", limit 600 s";
  }
  return {pass, detail};
}

Outcome stage2_ordering(Shared& sh) {
  const auto& d = sh.dataset();
  const auto gt = ground_truth_sequences(d, sh.config);
  const auto train = d.indices(Split::Train), val = d.indices(Split::Val), test = d.indices(Split::Test);
  auto f1 = [&](std::size_t L, std::size_t S) {
    const auto run =
        train_stage2(Stage2Task::Emotion, Stage2Arch::Recurrent, L, S,
                     stage2_samples(d, gt, train, Stage2Task::Emotion, L, S),
                     stage2_samples(d, gt, val, Stage2Task::Emotion, L, S), sh.config, sh.config.seed);
    return score_stage2(run.model, stage2_samples(d, gt, test, Stage2Task::Emotion, L, S)).emotion.f1;
  };
  const double l7 = f1(7, 3), lk = f1(kWholeVideo, 1), l1 = f1(1, 1);
  const bool pass = l7 - lk >= 0.15 && l1 < l7;
  return {pass, "F1 L=7,S=3 " + fixed(l7) + ", L=K " + fixed(lk) + ", L=1,S=1 " + fixed(l1)};
}

Outcome symptom_gap(Shared& sh) {
  sh.stage1();
  const auto& d = sh.dataset();
  const auto gt = ground_truth_sequences(d, sh.config);
  const auto train = d.indices(Split::Train), val = d.indices(Split::Val), test = d.indices(Split::Test);
  const std::size_t L = sh.config.emo_hist_len, S = sh.config.emo_hist_stride;
  auto accuracy = [&](const std::vector<BodyLanguageSequence>& seqs) {
    const auto run = train_stage2(Stage2Task::Symptom, Stage2Arch::Recurrent, L, S,
                                  stage2_samples(d, seqs, train, Stage2Task::Symptom, L, S),
                                  stage2_samples(d, seqs, val, Stage2Task::Symptom, L, S), sh.config, sh.config.seed);
    return score_stage2(run.model, stage2_samples(d, seqs, test, Stage2Task::Symptom, L, S)).symptom_accuracy;
  };
  const double on_gt = accuracy(gt), on_pred = accuracy(sh.ntraj->predictions);
  std::size_t positives = 0;
  for (auto i : test) positives += d.manifest.entries[i].symptom.value_or(0);
  const double majority = std::max(positives, test.size() - positives) / static_cast<double>(test.size());
  return {on_gt >= 0.90 && on_pred < on_gt, "ground truth " + fixed(on_gt) + ", ntraj+ predictions " + fixed(on_pred) +
                                                ", majority baseline " + fixed(majority)};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "posemo_acceptance";
  fs::remove_all(root);
  std::ostringstream out, err;
  auto cli = [&](std::vector<std::string> args) { return cli::run(args, out, err); };
  if (cli({"synth", "gen", "--out", (root / "data").string()}) != 0) return {false, "synth gen failed: " + err.str()};
  std::size_t files = 0, differ = 0;
  for (const std::string feature : {"ntraj+", "stconv"}) {
    const auto a = root / (feature + "_a"), b = root / (feature + "_b");
    for (const auto& dir : {a, b}) {
      if (cli({"--seed", "11", "run", "--data", (root / "data").string(), "--feature", feature, "--out", dir.string()}) !=
          0) {
        return {false, feature + " run failed: " + err.str()};
      }
    }
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
    for (const auto& n : names) {
      ++files;
      if (!fs::exists(a / n) || !fs::exists(b / n) || read_bytes(a / n) != read_bytes(b / n)) ++differ;
    }
  }
  fs::remove_all(root);
  return {files > 0 && differ == 0,
          std::to_string(files) + " artifacts over two feature paths, " + std::to_string(differ) + " differ"};
}

Outcome data_fraction(Shared& sh) {
  sh.stage1();
  const auto& d = sh.dataset();
  const auto test = d.indices(Split::Test);
  auto accuracy = [&](FeatureFamily family, double fraction) {
    const auto run = run_stage1(d, family, training_fraction(d, fraction), sh.config, sh.config.seed);
    return score_stage1(d, run.predictions, test, sh.config).mean_window_accuracy();
  };
  const double c100 = sh.conv_scores->mean_window_accuracy();
  const double c50 = accuracy(FeatureFamily::StConvPose, 0.5), c20 = accuracy(FeatureFamily::StConvPose, 0.2);
  const double n100 = sh.ntraj_scores->mean_window_accuracy(), n20 = accuracy(FeatureFamily::NTrajPlus, 0.2);
  auto drop = [](double full, double part) { return full > 0.0 ? 100.0 * (full - part) / full : 0.0; };
  return {c100 >= c50 && c50 >= c20, "stconv window accuracy 100% " + fixed(c100) + ", 50% " + fixed(c50) + ", 20% " +
                                         fixed(c20) + " (drop " + fixed(drop(c100, c20), 2) + "%); ntraj+ 20% " +
                                         fixed(n20) + " (drop " + fixed(drop(n100, n20), 2) + "%)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criterion numbers to run (default: all)")->delimiter(',')->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  Shared sh;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "preprocess invariance", [] { return from_suite(oracle::preprocess_suite(100, 1), 10.0); }},
      {2, "descriptor suite", [] { return from_suite(oracle::descriptor_suite(50, 2)); }},
      {3, "k-means oracle", [] { return from_suite(oracle::kmeans_suite(200, 3)); }},
      {4, "knn oracle", [] { return from_suite(oracle::knn_suite(1000, 4)); }},
      {5, "gradient checks", [] { return from_suite(oracle::gradient_suite(20, 5), 60.0); }},
      {6, "stage-1 synthetic accuracy", [&] { return stage1_accuracy(sh); }},
      {7, "stage-2 L/S ordering", [&] { return stage2_ordering(sh); }},
      {8, "symptom ground truth vs predicted", [&] { return symptom_gap(sh); }},
      {9, "determinism", [] { return determinism(); }},
      {10, "data-fraction sweep", [&] { return data_fraction(sh); }},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t = clock_type::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), since(t));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
