#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "posemo/core.hpp"
#include "posemo/ingest.hpp"
#include "posemo/rng.hpp"

namespace posemo {

// Offset of one joint from the rest skeleton: base + amp * sin(2 pi f t + phase),
// per axis; the y axis lags x by `phase_y`.
struct JointMotion {
  std::size_t joint = 0;
  double base_x = 0.0, base_y = 0.0;
  double amp_x = 0.0, amp_y = 0.0;
  double freq_hz = 0.0;
  double phase_y = 0.0;
};

struct MotionTemplate {
  std::string name;
  Track track = Track::Upper;
  // Repeated short actions; the rest are held postures.
  bool dynamic = false;
  std::vector<JointMotion> joints;
};

struct EmotionRule {
  enum class Kind {
    StaticFirst,   // first held posture of `track` precedes its first dynamic class
    DynamicFirst,  // the reverse
    AllPresent,    // every listed class appears
  };
  std::string name;
  Kind kind = Kind::AllPresent;
  Track track = Track::Upper;
  std::vector<std::string> upper;  // AllPresent operands
  std::vector<std::string> lower;
};

struct ScenarioSpec {
  std::vector<MotionTemplate> upper;
  std::vector<MotionTemplate> lower;
  // Idle motion rendered during background segments.
  MotionTemplate upper_idle;
  MotionTemplate lower_idle;
  std::vector<EmotionRule> emotions;
  // ME iff the fraction of dynamic windows over both tracks exceeds this.
  double symptom_threshold = 0.5;
  // Per-clip dynamic fraction is drawn from threshold +/- [margin, spread].
  double symptom_margin = 0.05;
  double symptom_spread = 0.35;
  std::size_t frames = 720;
  double fps = 24.0;
  std::size_t clips_per_split = 48;
  double noise_std = 0.0;   // pixels, after scaling
  double dropout = 0.0;     // per-joint invalid rate
  double scale_min = 0.5;
  double scale_max = 2.0;
  double background_prob = 0.5;
  std::size_t transition = 6;
  std::size_t exemplars_per_class = 6;
  std::size_t window_len = 6;
  std::size_t window_stride = 3;
  std::uint64_t seed = 0;

  // Six classes per track, order-dependent and co-occurrence emotion rules.
  static ScenarioSpec standard();

  // Flat `key=value` overrides of the scalar fields; the result is validated.
  void apply_text(std::string_view text);
  std::string to_text() const;
  void validate() const;

  Vocabulary vocabulary() const;
};

// Rest skeleton, neck at the origin, torso length 120.
const Pose& rest_pose();

struct Segment {
  std::size_t label = 0;  // id in the track's LabelSet
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct GeneratedClip {
  std::string clip_id;
  Split split = Split::Train;
  PoseSequence raw{std::vector<Pose>(1), 1.0, ""};
  std::vector<Segment> upper_segments;
  std::vector<Segment> lower_segments;
  std::vector<WindowLabel> windows;
  std::vector<std::size_t> upper;  // video-level labels
  std::vector<std::size_t> lower;
  std::vector<std::size_t> emotion;
  std::size_t symptom = kSymptomMDD;
};

// Clip `index`, drawn from its own stream derive_seed(spec.seed, "clip", index).
GeneratedClip generate_clip(const ScenarioSpec& spec, std::size_t index, Split split);

// Evaluates the emotion rules on ground-truth window labels.
std::vector<std::size_t> emotion_labels(const ScenarioSpec& spec, std::span<const WindowLabel> windows);
// ME iff the dynamic window fraction over both tracks exceeds the threshold.
std::size_t symptom_label(const ScenarioSpec& spec, std::span<const WindowLabel> windows);
// Classes present in at least one window.
std::vector<std::size_t> present_labels(const ScenarioSpec& spec, Track track, std::span<const WindowLabel> windows);

struct SynthDataset {
  ScenarioSpec spec;
  Vocabulary vocab;
  std::vector<GeneratedClip> clips;  // train, then val, then test
  std::vector<ExemplarRef> exemplars;
};

SynthDataset generate_dataset(const ScenarioSpec& spec);

// Picks exemplars_per_class windows per class (background included) from
// distinct training clips, each window at least one window length away from a
// segment boundary.
std::vector<ExemplarRef> select_exemplars(const ScenarioSpec& spec, std::span<const GeneratedClip> clips);

// Writes labels.csv, manifest.csv, exemplars.csv, scenario.txt, clips/*.jsonl
// and windows/*.csv.
void write_dataset(const SynthDataset& dataset, const std::filesystem::path& dir);

}  // namespace posemo
