#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <tuple>

#include "posemo/error.hpp"
#include "posemo/pipeline.hpp"
#include "posemo/synth.hpp"

using namespace posemo;
namespace fs = std::filesystem;

namespace {

ScenarioSpec small_spec() {
  auto s = ScenarioSpec::standard();
  s.clips_per_split = 8;
  s.frames = 360;
  return s;
}

// Emotion rules of the standard scenario, evaluated from window labels by name.
std::vector<std::string> expected_emotions(const Vocabulary& v, const std::vector<WindowLabel>& w) {
  static const std::set<std::string> dynamic{"finger_tapping", "gesturing",    "head_nodding",
                                             "leg_bouncing",   "foot_tapping", "pacing"};
  auto first = [&](bool upper, bool dyn) -> std::ptrdiff_t {
    for (std::size_t k = 0; k < w.size(); ++k) {
      const auto& name = upper ? v.upper.name(w[k].upper) : v.lower.name(w[k].lower);
      if (name == "background") continue;
      if (dynamic.count(name) == static_cast<std::size_t>(dyn)) return static_cast<std::ptrdiff_t>(k);
    }
    return -1;
  };
  auto present = [&](bool upper, const std::string& name) {
    return std::count_if(w.begin(), w.end(), [&](const WindowLabel& x) {
             return (upper ? v.upper.name(x.upper) : v.lower.name(x.lower)) == name;
           }) > 0;
  };
  std::vector<std::string> out;
  for (bool upper : {true, false}) {
    const auto s = first(upper, false), d = first(upper, true);
    if (s >= 0 && d >= 0) out.push_back(s < d ? (upper ? "calm" : "withdrawn") : (upper ? "agitated" : "restless"));
  }
  if (present(true, "finger_tapping") && present(false, "leg_bouncing")) out.push_back("anxious");
  if (present(true, "arm_crossed") && present(false, "locking_ankles")) out.push_back("guarded");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("clips are a pure function of seed and index") {
  const auto spec = small_spec();
  const auto a = generate_clip(spec, 5, Split::Val);
  const auto b = generate_clip(spec, 5, Split::Val);
  CHECK(a.raw == b.raw);
  CHECK(a.emotion == b.emotion);
  auto other = spec;
  other.seed = 1;
  CHECK_FALSE(generate_clip(other, 5, Split::Val).raw == a.raw);
  const auto ds = generate_dataset(spec);
  CHECK(ds.clips[5].raw == a.raw);
}

TEST_CASE("labels are recomputable from the ground-truth windows") {
  const auto spec = small_spec();
  const auto ds = generate_dataset(spec);
  const auto K = (spec.frames - spec.window_len) / spec.window_stride + 1;
  std::size_t me = 0, with_emotion = 0;
  for (const auto& c : ds.clips) {
    REQUIRE(c.windows.size() == K);
    std::vector<std::string> names;
    for (auto e : c.emotion) names.push_back(ds.vocab.emotion.name(e));
    std::sort(names.begin(), names.end());
    CHECK(names == expected_emotions(ds.vocab, c.windows));
    CHECK(c.emotion == emotion_labels(spec, c.windows));
    CHECK(c.symptom == symptom_label(spec, c.windows));
    CHECK(c.upper == present_labels(spec, Track::Upper, c.windows));
    me += c.symptom == kSymptomME;
    with_emotion += !c.emotion.empty();
  }
  CHECK(me == ds.clips.size() / 2);
  CHECK(with_emotion > ds.clips.size() / 2);
}

TEST_CASE("segments tile the clip and window labels follow them") {
  const auto spec = small_spec();
  const auto c = generate_clip(spec, 2, Split::Train);
  for (const auto* segs : {&c.upper_segments, &c.lower_segments}) {
    CHECK(segs->front().begin == 0);
    CHECK(segs->back().end == spec.frames);
    for (std::size_t i = 1; i < segs->size(); ++i) CHECK((*segs)[i].begin == (*segs)[i - 1].end);
  }
  for (const auto& w : c.windows) {
    const auto mid = w.window_start + spec.window_len / 2;
    for (const auto& s : c.upper_segments) {
      if (s.begin <= mid && mid < s.end) CHECK(s.label == w.upper);
    }
  }
}

TEST_CASE("exemplars come from distinct training clips, away from boundaries") {
  const auto spec = ScenarioSpec::standard();
  auto small = spec;
  small.clips_per_split = 24;
  const auto ds = generate_dataset(small);
  std::map<std::pair<Track, std::size_t>, std::set<std::string>> per_class;
  for (const auto& e : ds.exemplars) {
    const auto& clip = *std::find_if(ds.clips.begin(), ds.clips.end(), [&](const auto& c) { return c.clip_id == e.clip_id; });
    CHECK(clip.split == Split::Train);
    CHECK(per_class[{e.track, e.label}].insert(e.clip_id).second);
    const auto& segs = e.track == Track::Upper ? clip.upper_segments : clip.lower_segments;
    bool inside = false;
    for (const auto& s : segs) {
      inside = inside || (s.label == e.label && s.begin + small.window_len <= e.window_start &&
                          e.window_start + 2 * small.window_len <= s.end);
    }
    CHECK(inside);
  }
  CHECK(per_class.size() == 14);
  for (const auto& [k, clips] : per_class) CHECK(clips.size() == small.exemplars_per_class);
}

TEST_CASE("classes of a track differ in their motion templates") {
  const auto spec = ScenarioSpec::standard();
  for (const auto* tm : {&spec.upper, &spec.lower}) {
    CHECK(tm->size() == 6);
    for (std::size_t a = 0; a < tm->size(); ++a) {
      for (std::size_t b = a + 1; b < tm->size(); ++b) {
        auto key = [](const MotionTemplate& m) {
          std::vector<std::tuple<std::size_t, double, double, double, double, double>> v;
          for (const auto& j : m.joints) v.emplace_back(j.joint, j.base_x, j.base_y, j.amp_x, j.amp_y, j.freq_hz);
          std::sort(v.begin(), v.end());
          return v;
        };
        CHECK(key((*tm)[a]) != key((*tm)[b]));
      }
    }
  }
}

TEST_CASE("scenario text round-trips and validates") {
  auto s = ScenarioSpec::standard();
  s.noise_std = 2.5;
  s.clips_per_split = 3;
  auto t = ScenarioSpec::standard();
  t.apply_text(s.to_text());
  CHECK(t.to_text() == s.to_text());
  CHECK_THROWS_AS(t.apply_text("dropout=2\n"), Error);
  CHECK_THROWS_AS(t.apply_text("colour=blue\n"), Error);
}

TEST_CASE("written datasets load back with the same labels and valid joints") {
  auto spec = small_spec();
  spec.clips_per_split = 2;
  spec.dropout = 0.02;
  const auto ds = generate_dataset(spec);
  const auto dir = fs::temp_directory_path() / "posemo_synth_roundtrip";
  fs::remove_all(dir);
  write_dataset(ds, dir);
  const auto loaded = load_dataset(dir, PipelineConfig{});
  REQUIRE(loaded.size() == ds.clips.size());
  CHECK(loaded.exemplars == ds.exemplars);
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    const auto& e = loaded.manifest.entries[i];
    CHECK(e.clip_id == ds.clips[i].clip_id);
    CHECK(e.upper == ds.clips[i].upper);
    CHECK(e.emotion == ds.clips[i].emotion);
    CHECK(e.symptom == ds.clips[i].symptom);
    CHECK(e.window_labels.size() == ds.clips[i].windows.size());
    const auto raw = load_sequence(e.path, e.frame_rate);
    for (std::size_t t = 0; t < raw.size(); ++t) {
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        const auto& g = ds.clips[i].raw[t].joints[j];
        if (g.valid) CHECK(raw[t].joints[j] == g);
      }
    }
  }
}
