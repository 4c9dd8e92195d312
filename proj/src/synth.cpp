#include "posemo/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "posemo/binio.hpp"
#include "posemo/error.hpp"
#include "posemo/parallel.hpp"

namespace posemo {
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kClipTag = 0x636c6970;     // "clip"
constexpr std::uint64_t kExemplarTag = 0x6578656d;  // "exem"

Pose make_rest() {
  using namespace joint;
  Pose p;
  auto set = [&](std::size_t j, double x, double y) { p.joints[j] = {x, y, 1.0, true}; };
  set(kNose, 0, -40);
  set(kNeck, 0, 0);
  set(kRShoulder, -40, 0);
  set(kRElbow, -48, 55);
  set(kRWrist, -52, 108);
  set(kLShoulder, 40, 0);
  set(kLElbow, 48, 55);
  set(kLWrist, 52, 108);
  set(kRHip, -22, 120);
  set(kRKnee, -25, 185);
  set(kRAnkle, -26, 250);
  set(kLHip, 22, 120);
  set(kLKnee, 25, 185);
  set(kLAnkle, 26, 250);
  set(kREye, -8, -48);
  set(kLEye, 8, -48);
  set(kREar, -17, -43);
  set(kLEar, 17, -43);
  return p;
}

// Held joint at an absolute rest-frame position.
JointMotion hold(std::size_t j, double x, double y) {
  const auto& r = rest_pose().joints[j];
  return {j, x - r.x, y - r.y, 0, 0, 0, 0};
}

JointMotion wave(std::size_t j, double x, double y, double ax, double ay, double hz, double phase_y = 0.0) {
  auto m = hold(j, x, y);
  m.amp_x = ax;
  m.amp_y = ay;
  m.freq_hz = hz;
  m.phase_y = phase_y;
  return m;
}

JointMotion wave_in_place(std::size_t j, double ax, double ay, double hz, double phase_y = 0.0) {
  const auto& r = rest_pose().joints[j];
  return wave(j, r.x, r.y, ax, ay, hz, phase_y);
}

// Per-segment randomization of a template.
struct SegmentDraw {
  const MotionTemplate* tmpl = nullptr;
  double amp = 1.0;
  double freq = 1.0;
  double phase = 0.0;
  std::array<double, 2 * kNumJoints> jitter{};
};

void add_offsets(const SegmentDraw& d, double t_sec, double weight, std::array<double, 2 * kNumJoints>& out) {
  if (!d.tmpl) return;
  for (const auto& m : d.tmpl->joints) {
    double x = m.base_x + d.jitter[2 * m.joint];
    double y = m.base_y + d.jitter[2 * m.joint + 1];
    if (m.freq_hz > 0.0) {
      const double a = kTwoPi * m.freq_hz * d.freq * t_sec + d.phase;
      x += d.amp * m.amp_x * std::sin(a);
      y += d.amp * m.amp_y * std::sin(a + m.phase_y);
    }
    out[2 * m.joint] += weight * x;
    out[2 * m.joint + 1] += weight * y;
  }
}

SegmentDraw draw_segment(const MotionTemplate* tmpl, Rng& rng) {
  SegmentDraw d;
  d.tmpl = tmpl;
  d.amp = rng.uniform(0.8, 1.2);
  d.freq = rng.uniform(0.85, 1.15);
  d.phase = rng.uniform(0.0, kTwoPi);
  if (tmpl && !tmpl->dynamic) {
    for (auto& j : d.jitter) j = rng.uniform(-2.0, 2.0);
  }
  return d;
}

const std::vector<MotionTemplate>& templates(const ScenarioSpec& spec, Track t) {
  return t == Track::Upper ? spec.upper : spec.lower;
}

const MotionTemplate& idle(const ScenarioSpec& spec, Track t) {
  return t == Track::Upper ? spec.upper_idle : spec.lower_idle;
}

// Splits `total` frames among weights, summing exactly.
std::vector<std::size_t> allocate(std::size_t total, const std::vector<double>& weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<std::size_t> out;
  double acc = 0.0;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    const auto cut = i + 1 == weights.size() ? total : static_cast<std::size_t>(std::llround(total * acc / sum));
    out.push_back(cut - prev);
    prev = cut;
  }
  return out;
}

struct TrackPlan {
  std::vector<Segment> segments;
  std::vector<SegmentDraw> draws;
};

TrackPlan plan_track(const ScenarioSpec& spec, Track track, double dynamic_fraction, Rng& rng) {
  const auto& tm = templates(spec, track);
  std::vector<std::size_t> stat, dyn;
  for (std::size_t i = 0; i < tm.size(); ++i) (tm[i].dynamic ? dyn : stat).push_back(i);
  std::vector<std::size_t> chosen{stat[rng.below(stat.size())], dyn[rng.below(dyn.size())]};
  if (rng.bernoulli(0.5)) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < tm.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
    }
    chosen.push_back(rest[rng.below(rest.size())]);
  }
  rng.shuffle(chosen.begin(), chosen.end());
  const std::size_t bg = tm.size();  // background id in the LabelSet
  if (rng.bernoulli(spec.background_prob)) {
    const auto pos = rng.below(chosen.size() + 1);
    chosen.insert(chosen.begin() + static_cast<std::ptrdiff_t>(pos), bg);
  }

  std::vector<double> wd, ws;
  for (auto c : chosen) (c != bg && tm[c].dynamic ? wd : ws).push_back(rng.uniform(1.0, 2.0));
  const auto nd = static_cast<std::size_t>(std::llround(dynamic_fraction * static_cast<double>(spec.frames)));
  const auto ld = allocate(nd, wd);
  const auto ls = allocate(spec.frames - nd, ws);

  TrackPlan plan;
  std::size_t at = 0, id = 0, is = 0;
  for (auto c : chosen) {
    const bool d = c != bg && tm[c].dynamic;
    const auto len = d ? ld[id++] : ls[is++];
    plan.segments.push_back({c, at, at + len});
    plan.draws.push_back(draw_segment(c == bg ? &idle(spec, track) : &tm[c], rng));
    at += len;
  }
  return plan;
}

std::size_t segment_at(const std::vector<Segment>& segs, std::size_t t) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (t >= segs[i].begin && t < segs[i].end) return i;
  }
  return segs.size() - 1;
}

void track_offsets(const TrackPlan& plan, std::size_t t, double fps, std::size_t transition,
                   std::array<double, 2 * kNumJoints>& out) {
  const auto i = segment_at(plan.segments, t);
  const double ts = static_cast<double>(t) / fps;
  const auto b = plan.segments[i].begin;
  if (i > 0 && t < b + transition) {
    const double a = static_cast<double>(t - b + 1) / static_cast<double>(transition + 1);
    add_offsets(plan.draws[i - 1], ts, 1.0 - a, out);
    add_offsets(plan.draws[i], ts, a, out);
  } else {
    add_offsets(plan.draws[i], ts, 1.0, out);
  }
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

PoseSequence render(const ScenarioSpec& spec, const TrackPlan& upper, const TrackPlan& lower, Rng& rng,
                    const std::string& id) {
  const double scale = rng.uniform(spec.scale_min, spec.scale_max);
  const double tx = rng.uniform(200.0, 440.0), ty = rng.uniform(150.0, 250.0);
  const auto& rest = rest_pose();
  std::vector<Pose> frames(spec.frames);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    std::array<double, 2 * kNumJoints> off{};
    track_offsets(upper, t, spec.fps, spec.transition, off);
    track_offsets(lower, t, spec.fps, spec.transition, off);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      auto& out = frames[t].joints[j];
      double x = (rest.joints[j].x + off[2 * j]) * scale + tx;
      double y = (rest.joints[j].y + off[2 * j + 1]) * scale + ty;
      if (spec.noise_std > 0.0) {
        x += rng.normal(0.0, spec.noise_std);
        y += rng.normal(0.0, spec.noise_std);
      }
      const double conf = round3(rng.uniform(0.5, 1.0));
      if (spec.dropout > 0.0 && rng.bernoulli(spec.dropout)) {
        out = Joint{};
      } else {
        out = {round3(x), round3(y), conf, true};
      }
    }
  }
  return PoseSequence(std::move(frames), spec.fps, id);
}

std::size_t window_count(const ScenarioSpec& spec) { return (spec.frames - spec.window_len) / spec.window_stride + 1; }

}  // namespace

const Pose& rest_pose() {
  static const Pose p = make_rest();
  return p;
}

ScenarioSpec ScenarioSpec::standard() {
  using namespace joint;
  using std::numbers::pi;
  ScenarioSpec s;
  s.upper = {
      {"arm_crossed", Track::Upper, false,
       {hold(kRElbow, -30, 55), hold(kRWrist, 20, 40), hold(kLElbow, 30, 63), hold(kLWrist, -20, 48)}},
      {"touching_face", Track::Upper, false, {hold(kRElbow, -50, 30), hold(kRWrist, -12, -30)}},
      {"hands_behind_head", Track::Upper, false,
       {hold(kRElbow, -72, -30), hold(kRWrist, -25, -60), hold(kLElbow, 70, -22), hold(kLWrist, 20, -72)}},
      {"finger_tapping", Track::Upper, true, {hold(kRElbow, -45, 55), wave(kRWrist, -15, 75, 0, 8, 4.0)}},
      {"gesturing", Track::Upper, true,
       {wave(kRElbow, -55, 40, 10, 8, 1.5, pi / 2), wave(kRWrist, -50, 30, 28, 22, 1.5, pi / 2),
        wave(kLElbow, 55, 40, -10, 8, 1.5, pi / 2), wave(kLWrist, 50, 30, -28, 22, 1.5, pi / 2)}},
      {"head_nodding", Track::Upper, true,
       {wave_in_place(kNose, 0, 16, 2.0), wave_in_place(kREye, 0, 15, 2.0), wave_in_place(kLEye, 0, 15, 2.0),
        wave_in_place(kREar, 0, 11, 2.0), wave_in_place(kLEar, 0, 11, 2.0)}},
  };
  s.lower = {
      {"leg_crossed", Track::Lower, false, {hold(kRKnee, 8, 176), hold(kRAnkle, 34, 226)}},
      {"locking_ankles", Track::Lower, false,
       {hold(kRAnkle, 8, 244), hold(kLAnkle, -8, 254)}},
      {"legs_apart", Track::Lower, false,
       {hold(kRKnee, -55, 176), hold(kRAnkle, -80, 236), hold(kLKnee, 55, 192), hold(kLAnkle, 80, 252)}},
      {"leg_bouncing", Track::Lower, true, {wave(kRKnee, -25, 172, 0, 16, 4.0), wave(kRAnkle, -24, 238, 0, 6, 4.0)}},
      {"foot_tapping", Track::Lower, true, {wave(kLKnee, 30, 180, 0, 4, 3.0), wave(kLAnkle, 40, 246, 0, 14, 3.0)}},
      {"pacing", Track::Lower, true,
       {wave_in_place(kRKnee, 10, 8, 1.5, pi / 2), wave_in_place(kRAnkle, 14, 14, 1.5, pi / 2),
        wave_in_place(kLKnee, -10, -8, 1.5, pi / 2), wave_in_place(kLAnkle, -14, -14, 1.5, pi / 2)}},
  };
  s.upper_idle = {"background", Track::Upper, true,
                  {wave_in_place(kRWrist, 5, 4, 0.25), wave_in_place(kLWrist, -4, 5, 0.2, pi / 3),
                   wave_in_place(kRElbow, 2, 2, 0.25), wave_in_place(kLElbow, -2, 2, 0.2, pi / 3)}};
  s.lower_idle = {"background", Track::Lower, true,
                  {wave_in_place(kRAnkle, 5, 2, 0.25), wave_in_place(kLAnkle, -4, 3, 0.2, pi / 3),
                   wave_in_place(kRKnee, 2, 1, 0.25), wave_in_place(kLKnee, -2, 1, 0.2, pi / 3)}};
  using K = EmotionRule::Kind;
  s.emotions = {
      {"calm", K::StaticFirst, Track::Upper, {}, {}},
      {"agitated", K::DynamicFirst, Track::Upper, {}, {}},
      {"withdrawn", K::StaticFirst, Track::Lower, {}, {}},
      {"restless", K::DynamicFirst, Track::Lower, {}, {}},
      {"anxious", K::AllPresent, Track::Upper, {"finger_tapping"}, {"leg_bouncing"}},
      {"guarded", K::AllPresent, Track::Upper, {"arm_crossed"}, {"locking_ankles"}},
  };
  return s;
}

void ScenarioSpec::apply_text(std::string_view text) {
  for (const auto& raw : split(text, '\n')) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "expected key=value: " + std::string(line));
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    auto num = [&](auto& field) {
      auto r = std::from_chars(val.data(), val.data() + val.size(), field);
      if (r.ec != std::errc{} || r.ptr != val.data() + val.size()) {
        throw Error(ErrorCode::InvalidArgument, "bad value for " + std::string(key) + ": '" + std::string(val) + "'");
      }
    };
    if (key == "symptom_threshold") num(symptom_threshold);
    else if (key == "symptom_margin") num(symptom_margin);
    else if (key == "symptom_spread") num(symptom_spread);
    else if (key == "frames") num(frames);
    else if (key == "fps") num(fps);
    else if (key == "clips_per_split") num(clips_per_split);
    else if (key == "noise_std") num(noise_std);
    else if (key == "dropout") num(dropout);
    else if (key == "scale_min") num(scale_min);
    else if (key == "scale_max") num(scale_max);
    else if (key == "background_prob") num(background_prob);
    else if (key == "transition") num(transition);
    else if (key == "exemplars_per_class") num(exemplars_per_class);
    else if (key == "window_len") num(window_len);
    else if (key == "window_stride") num(window_stride);
    else if (key == "seed") num(seed);
    else throw Error(ErrorCode::InvalidArgument, "unknown scenario key '" + std::string(key) + "'");
  }
  validate();
}

std::string ScenarioSpec::to_text() const {
  std::ostringstream out;
  auto d = [](double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  };
  out << "symptom_threshold=" << d(symptom_threshold) << "\nsymptom_margin=" << d(symptom_margin)
      << "\nsymptom_spread=" << d(symptom_spread) << "\nframes=" << frames << "\nfps=" << d(fps)
      << "\nclips_per_split=" << clips_per_split << "\nnoise_std=" << d(noise_std) << "\ndropout=" << d(dropout)
      << "\nscale_min=" << d(scale_min) << "\nscale_max=" << d(scale_max) << "\nbackground_prob=" << d(background_prob)
      << "\ntransition=" << transition << "\nexemplars_per_class=" << exemplars_per_class
      << "\nwindow_len=" << window_len << "\nwindow_stride=" << window_stride << "\nseed=" << seed << '\n';
  return out.str();
}

void ScenarioSpec::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "scenario: " + what); };
  for (auto t : {Track::Upper, Track::Lower}) {
    const auto& tm = templates(*this, t);
    const bool has_s = std::any_of(tm.begin(), tm.end(), [](const auto& m) { return !m.dynamic; });
    const bool has_d = std::any_of(tm.begin(), tm.end(), [](const auto& m) { return m.dynamic; });
    if (!has_s || !has_d || tm.size() < 3) bad("each track needs held and dynamic classes (at least 3)");
  }
  if (emotions.size() > kEmotionSlots) bad("too many emotions");
  if (window_len == 0 || window_stride == 0 || frames < 4 * window_len) bad("clip too short for the window grid");
  if (!(fps > 0.0)) bad("fps must be positive");
  if (clips_per_split == 0) bad("clips_per_split must be positive");
  if (!(symptom_margin >= 0.0 && symptom_spread > symptom_margin && symptom_threshold - symptom_spread >= 0.05 &&
        symptom_threshold + symptom_spread <= 0.95)) {
    bad("dynamic fraction range out of bounds");
  }
  if (!(noise_std >= 0.0) || !(dropout >= 0.0 && dropout < 1.0)) bad("noise and dropout must be in range");
  if (!(scale_min > 0.0 && scale_max >= scale_min)) bad("bad scale range");
  if (!(background_prob >= 0.0 && background_prob <= 1.0)) bad("background_prob must be a probability");
}

Vocabulary ScenarioSpec::vocabulary() const {
  std::string text;
  for (const auto& m : upper) text += "upper," + m.name + "\n";
  for (const auto& m : lower) text += "lower," + m.name + "\n";
  for (const auto& e : emotions) text += "emotion," + e.name + "\n";
  return parse_label_manifest(text);
}

std::vector<std::size_t> present_labels(const ScenarioSpec& spec, Track track, std::span<const WindowLabel> windows) {
  const auto bg = templates(spec, track).size();
  std::set<std::size_t> s;
  for (const auto& w : windows) {
    const auto c = track == Track::Upper ? w.upper : w.lower;
    if (c != bg) s.insert(c);
  }
  return {s.begin(), s.end()};
}

std::vector<std::size_t> emotion_labels(const ScenarioSpec& spec, std::span<const WindowLabel> windows) {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < spec.emotions.size(); ++e) {
    const auto& rule = spec.emotions[e];
    bool on = false;
    if (rule.kind == EmotionRule::Kind::AllPresent) {
      on = true;
      for (auto t : {Track::Upper, Track::Lower}) {
        const auto present = present_labels(spec, t, windows);
        const auto& tm = templates(spec, t);
        for (const auto& name : t == Track::Upper ? rule.upper : rule.lower) {
          const auto it = std::find_if(tm.begin(), tm.end(), [&](const auto& m) { return m.name == name; });
          const auto id = static_cast<std::size_t>(it - tm.begin());
          on = on && std::find(present.begin(), present.end(), id) != present.end();
        }
      }
    } else {
      const auto& tm = templates(spec, rule.track);
      std::optional<std::size_t> first_s, first_d;
      for (std::size_t k = 0; k < windows.size(); ++k) {
        const auto c = rule.track == Track::Upper ? windows[k].upper : windows[k].lower;
        if (c >= tm.size()) continue;
        auto& slot = tm[c].dynamic ? first_d : first_s;
        if (!slot) slot = k;
      }
      if (first_s && first_d) {
        on = rule.kind == EmotionRule::Kind::StaticFirst ? *first_s < *first_d : *first_d < *first_s;
      }
    }
    if (on) out.push_back(e);
  }
  return out;
}

std::size_t symptom_label(const ScenarioSpec& spec, std::span<const WindowLabel> windows) {
  if (windows.empty()) return kSymptomMDD;
  std::size_t dyn = 0;
  for (const auto& w : windows) {
    if (w.upper < spec.upper.size() && spec.upper[w.upper].dynamic) ++dyn;
    if (w.lower < spec.lower.size() && spec.lower[w.lower].dynamic) ++dyn;
  }
  const double frac = static_cast<double>(dyn) / static_cast<double>(2 * windows.size());
  return frac > spec.symptom_threshold ? kSymptomME : kSymptomMDD;
}

GeneratedClip generate_clip(const ScenarioSpec& spec, std::size_t index, Split split) {
  Rng rng(derive_seed(spec.seed, kClipTag, index));
  GeneratedClip clip;
  char id[32];
  std::snprintf(id, sizeof(id), "clip_%03zu", index);
  clip.clip_id = id;
  clip.split = split;

  const bool me = index % 2 == 1;
  const double off = rng.uniform(spec.symptom_margin, spec.symptom_spread);
  const double frac = spec.symptom_threshold + (me ? off : -off);
  const auto up = plan_track(spec, Track::Upper, frac, rng);
  const auto lo = plan_track(spec, Track::Lower, frac, rng);
  clip.upper_segments = up.segments;
  clip.lower_segments = lo.segments;
  clip.raw = render(spec, up, lo, rng, clip.clip_id);

  const auto K = window_count(spec);
  for (std::size_t k = 0; k < K; ++k) {
    const auto w0 = k * spec.window_stride;
    const auto center = w0 + spec.window_len / 2;
    clip.windows.push_back({w0, up.segments[segment_at(up.segments, center)].label,
                            lo.segments[segment_at(lo.segments, center)].label});
  }
  clip.upper = present_labels(spec, Track::Upper, clip.windows);
  clip.lower = present_labels(spec, Track::Lower, clip.windows);
  clip.emotion = emotion_labels(spec, clip.windows);
  clip.symptom = symptom_label(spec, clip.windows);
  return clip;
}

std::vector<ExemplarRef> select_exemplars(const ScenarioSpec& spec, std::span<const GeneratedClip> clips) {
  std::vector<ExemplarRef> out;
  const auto W = spec.window_len, S = spec.window_stride;
  for (auto track : {Track::Upper, Track::Lower}) {
    const auto n = templates(spec, track).size() + 1;
    for (std::size_t label = 0; label < n; ++label) {
      Rng rng(derive_seed(spec.seed, kExemplarTag, label + (track == Track::Lower ? 1000 : 0)));
      // Candidate (clip, window start) per training clip: one random grid
      // window inside the safe interior of a segment of this class.
      std::vector<ExemplarRef> cand;
      for (const auto& c : clips) {
        if (c.split != Split::Train) continue;
        const auto& segs = track == Track::Upper ? c.upper_segments : c.lower_segments;
        std::vector<std::size_t> starts;
        for (const auto& s : segs) {
          if (s.label != label) continue;
          const auto lo = s.begin + W + spec.transition, hi = s.end >= 2 * W ? s.end - 2 * W : 0;
          for (auto w0 = (lo + S - 1) / S * S; w0 <= hi && w0 + W <= spec.frames; w0 += S) starts.push_back(w0);
        }
        if (starts.empty()) continue;
        cand.push_back({track, c.clip_id, starts[rng.below(starts.size())], label});
      }
      rng.shuffle(cand.begin(), cand.end());
      if (cand.size() > spec.exemplars_per_class) cand.resize(spec.exemplars_per_class);
      std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
      out.insert(out.end(), cand.begin(), cand.end());
    }
  }
  return out;
}

SynthDataset generate_dataset(const ScenarioSpec& spec) {
  spec.validate();
  SynthDataset ds{spec, spec.vocabulary(), {}, {}};
  const auto n = 3 * spec.clips_per_split;
  ds.clips.resize(n);
  LoopErrors errors;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    errors.run(i, [&] {
      const auto split =
          i < spec.clips_per_split ? Split::Train : i < 2 * spec.clips_per_split ? Split::Val : Split::Test;
      ds.clips[i] = generate_clip(spec, i, split);
    });
  }
  errors.rethrow();
  ds.exemplars = select_exemplars(spec, ds.clips);
  return ds;
}

void write_dataset(const SynthDataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "clips", ec);
  fs::create_directories(dir / "windows", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  DatasetManifest manifest;
  for (const auto& c : ds.clips) {
    ClipEntry e;
    e.clip_id = c.clip_id;
    e.path = dir / "clips" / (c.clip_id + ".jsonl");
    e.frame_rate = ds.spec.fps;
    e.split = c.split;
    e.upper = c.upper;
    e.lower = c.lower;
    e.emotion = c.emotion;
    e.symptom = c.symptom;
    e.window_labels_path = dir / "windows" / (c.clip_id + ".csv");
    write_file_atomic(e.path, format_jsonl(c.raw));
    write_file_atomic(*e.window_labels_path, format_window_labels(c.windows, ds.vocab));
    manifest.entries.push_back(std::move(e));
  }
  write_file_atomic(dir / "labels.csv", format_label_manifest(ds.vocab));
  write_file_atomic(dir / "manifest.csv", format_manifest(manifest, ds.vocab, dir));
  write_file_atomic(dir / "exemplars.csv", format_exemplar_manifest(ds.exemplars, ds.vocab));
  write_file_atomic(dir / "scenario.txt", ds.spec.to_text());
}

}  // namespace posemo
