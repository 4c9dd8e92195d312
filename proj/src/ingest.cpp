#include "posemo/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "posemo/binio.hpp"
#include "posemo/error.hpp"

namespace posemo {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::size_t kValuesPerPerson = 3 * kNumJoints;

Pose pose_from_values(const std::array<double, kValuesPerPerson>& v) {
  Pose pose;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    auto& joint = pose.joints[j];
    joint.x = v[3 * j];
    joint.y = v[3 * j + 1];
    joint.confidence = std::clamp(v[3 * j + 2], 0.0, 1.0);
    const bool sentinel = joint.x == 0.0 && joint.y == 0.0;
    joint.valid = joint.confidence >= kMinJointConfidence && !sentinel;
  }
  return pose;
}

struct FrameFile {
  std::size_t index;
  fs::path path;
};

// Splits a frame file name into (prefix, digits, suffix) around the last run of
// digits in the stem.
bool frame_name_parts(const std::string& name, std::string& prefix, std::string& digits, std::string& suffix) {
  const auto last = name.find_last_of("0123456789");
  if (last == std::string::npos) return false;
  auto first = last;
  while (first > 0 && std::isdigit(static_cast<unsigned char>(name[first - 1]))) --first;
  prefix = name.substr(0, first);
  digits = name.substr(first, last - first + 1);
  suffix = name.substr(last + 1);
  return true;
}

PoseSequence assemble(std::vector<std::optional<Pose>> frames, double frame_rate, std::string id) {
  if (frames.empty()) throw Error(ErrorCode::EmptySequence, "no frames found for '" + id + "'");
  const bool any = std::any_of(frames.begin(), frames.end(), [](const auto& f) { return f.has_value(); });
  if (!any) throw Error(ErrorCode::EmptySequence, "no frame of '" + id + "' contains a person");
  std::vector<Pose> out;
  out.reserve(frames.size());
  for (auto& f : frames) out.push_back(f ? *f : Pose::invalid());
  return PoseSequence(std::move(out), frame_rate, std::move(id));
}

// Missing and person-less frames are represented as nullopt.
std::optional<Pose> parse_or_none(std::string_view bytes, const std::string& where) {
  try {
    return parse_keypoint_frame(bytes);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoPerson) return std::nullopt;
    throw Error(e.code(), where + ": " + e.what());
  }
}

PoseSequence load_directory(const fs::path& dir, double frame_rate) {
  std::vector<FrameFile> files;
  std::optional<std::string> schema;
  std::set<std::size_t> seen;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    std::string prefix, digits, suffix;
    const auto name = entry.path().filename().string();
    if (!frame_name_parts(name, prefix, digits, suffix)) {
      throw Error(ErrorCode::MixedSchema, "frame file without index: " + name);
    }
    const auto key = prefix + "#" + std::to_string(digits.size()) + "#" + suffix;
    if (schema && *schema != key) throw Error(ErrorCode::MixedSchema, "inconsistent frame file naming: " + name);
    schema = key;
    std::size_t index = 0;
    std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (!seen.insert(index).second) throw Error(ErrorCode::MixedSchema, "duplicate frame index in " + name);
    files.push_back({index, entry.path()});
  }
  const auto id = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  if (files.empty()) throw Error(ErrorCode::EmptySequence, "no frame files in " + dir.string());
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  std::vector<std::optional<Pose>> frames(files.back().index + 1);
  std::vector<std::string> contents(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) contents[i] = read_file(files[i].path);
  std::vector<std::optional<Pose>> parsed(files.size());
  std::vector<std::string> errors(files.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(files.size()); ++i) {
    try {
      parsed[i] = parse_or_none(contents[i], files[i].path.string());
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!errors[i].empty()) throw Error(ErrorCode::MalformedFile, errors[i]);
    frames[files[i].index] = std::move(parsed[i]);
  }
  return assemble(std::move(frames), frame_rate, id);
}

PoseSequence load_jsonl(const fs::path& path, double frame_rate) {
  const auto text = read_file(path);
  auto lines = split(text, '\n');
  if (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  std::vector<std::optional<Pose>> frames(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    frames[i] = parse_or_none(line, path.string() + " line " + std::to_string(i + 1));
  }
  return assemble(std::move(frames), frame_rate, path.stem().string());
}

std::string join_ids(const std::vector<std::size_t>& ids, const LabelSet& labels) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += '|';
    s += labels.name(ids[i]);
  }
  return s;
}

std::size_t resolve(const LabelSet& labels, std::string_view name, std::string_view task, std::string_view clip) {
  auto id = labels.find(name);
  if (!id) {
    throw Error(ErrorCode::UnknownLabel, "unknown " + std::string(task) + " label '" + std::string(name) +
                                             "' in clip '" + std::string(clip) + "'");
  }
  return *id;
}

}  // namespace

namespace {

Pose parse_keypoint_frame_impl(std::string_view bytes) {
  const json doc = json::parse(bytes.begin(), bytes.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedFile, "not a JSON object");
  const auto people = doc.find("people");
  if (people == doc.end() || !people->is_array()) throw Error(ErrorCode::MalformedFile, "missing 'people' array");
  if (people->empty()) throw Error(ErrorCode::NoPerson, "frame has no detected person");

  std::optional<std::array<double, kValuesPerPerson>> best;
  double best_mean = -1.0;
  for (const auto& person : *people) {
    if (!person.is_object()) throw Error(ErrorCode::MalformedFile, "person entry is not an object");
    const auto kp = person.find("pose_keypoints_2d");
    if (kp == person.end() || !kp->is_array()) throw Error(ErrorCode::MalformedFile, "missing pose_keypoints_2d");
    if (kp->size() != kValuesPerPerson) {
      throw Error(ErrorCode::MalformedFile, "pose_keypoints_2d has " + std::to_string(kp->size()) + " values, expected 54");
    }
    std::array<double, kValuesPerPerson> values{};
    for (std::size_t i = 0; i < kValuesPerPerson; ++i) {
      const auto& v = (*kp)[i];
      if (!v.is_number()) throw Error(ErrorCode::MalformedFile, "non-numeric keypoint value");
      values[i] = v.get<double>();
      if (!std::isfinite(values[i])) throw Error(ErrorCode::MalformedFile, "non-finite keypoint value");
    }
    double mean = 0.0;
    for (std::size_t j = 0; j < kNumJoints; ++j) mean += values[3 * j + 2];
    mean /= static_cast<double>(kNumJoints);
    if (mean > best_mean) {
      best_mean = mean;
      best = values;
    }
  }
  return pose_from_values(*best);
}

}  // namespace

Pose parse_keypoint_frame(std::string_view bytes) {
  try {
    return parse_keypoint_frame_impl(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, e.what());
  }
}

std::string format_keypoint_frame(const Pose& pose) {
  json kp = json::array();
  for (const auto& j : pose.joints) {
    if (j.valid) {
      kp.push_back(j.x);
      kp.push_back(j.y);
      kp.push_back(j.confidence);
    } else {
      kp.push_back(0.0);
      kp.push_back(0.0);
      kp.push_back(0.0);
    }
  }
  json person = {{"person_id", json::array({-1})}, {"pose_keypoints_2d", std::move(kp)}};
  json doc = {{"version", 1.3}, {"people", json::array({std::move(person)})}};
  return doc.dump();
}

std::string format_jsonl(const PoseSequence& seq) {
  std::string out;
  for (const auto& pose : seq.frames()) {
    out += format_keypoint_frame(pose);
    out += '\n';
  }
  return out;
}

PoseSequence load_sequence(const std::filesystem::path& path, double frame_rate) {
  if (fs::is_directory(path)) return load_directory(path, frame_rate);
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "no such pose source: " + path.string());
  if (path.extension() == ".pseq") {
    auto seq = deserialize_sequence(read_file(path));
    return PoseSequence(std::vector<Pose>(seq.frames().begin(), seq.frames().end()), seq.frame_rate(),
                        path.stem().string());
  }
  if (path.extension() == ".jsonl") return load_jsonl(path, frame_rate);
  throw Error(ErrorCode::MixedSchema, "unsupported pose container: " + path.string());
}

std::string serialize_sequence(const PoseSequence& seq, bool preprocessed) {
  ByteWriter out;
  write_header(out, {"pose_sequence", 1, 0, 0});
  out.u8(preprocessed ? 1 : 0);
  out.str(seq.source_id());
  out.f64(seq.frame_rate());
  out.u64(seq.size());
  for (const auto& pose : seq.frames()) {
    for (const auto& j : pose.joints) {
      out.f64(j.x);
      out.f64(j.y);
      out.f64(j.confidence);
      out.u8(j.valid ? 1 : 0);
    }
  }
  return out.bytes();
}

PoseSequence deserialize_sequence(std::string_view bytes, bool* preprocessed) {
  ByteReader in(bytes);
  read_header(in, "pose_sequence");
  const bool pre = in.u8() != 0;
  if (preprocessed) *preprocessed = pre;
  auto id = in.str();
  const double fps = in.f64();
  const auto n = in.u64();
  if (n > in.remaining() / (kNumJoints * 25)) throw Error(ErrorCode::MalformedFile, "truncated pose store");
  std::vector<Pose> frames(n);
  for (auto& pose : frames) {
    for (auto& j : pose.joints) {
      j.x = in.f64();
      j.y = in.f64();
      j.confidence = in.f64();
      j.valid = in.u8() != 0;
    }
  }
  return PoseSequence(std::move(frames), fps, std::move(id));
}

bool is_preprocessed_store(const std::filesystem::path& path) {
  if (path.extension() != ".pseq" || !fs::is_regular_file(path)) return false;
  bool pre = false;
  deserialize_sequence(read_file(path), &pre);
  return pre;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  return std::nullopt;
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.split == split; }));
}

const ClipEntry& DatasetManifest::find(std::string_view clip_id) const {
  for (const auto& e : entries) {
    if (e.clip_id == clip_id) return e;
  }
  throw Error(ErrorCode::InvalidArgument, "no clip '" + std::string(clip_id) + "' in manifest");
}

std::vector<WindowLabel> parse_window_labels(std::string_view text, const Vocabulary& vocab) {
  std::vector<WindowLabel> out;
  for (const auto& raw : split(text, '\n')) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("window_start")) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw Error(ErrorCode::MalformedFile, "window label row needs 3 fields");
    WindowLabel w;
    const auto start = trim(f[0]);
    auto res = std::from_chars(start.data(), start.data() + start.size(), w.window_start);
    if (res.ec != std::errc{}) throw Error(ErrorCode::MalformedFile, "bad window start '" + std::string(start) + "'");
    w.upper = resolve(vocab.upper, trim(f[1]), "upper", "window labels");
    w.lower = resolve(vocab.lower, trim(f[2]), "lower", "window labels");
    out.push_back(w);
  }
  return out;
}

std::string format_window_labels(std::span<const WindowLabel> labels, const Vocabulary& vocab) {
  std::string out = "window_start,upper,lower\n";
  for (const auto& w : labels) {
    out += std::to_string(w.window_start) + ',' + vocab.upper.name(w.upper) + ',' + vocab.lower.name(w.lower) + '\n';
  }
  return out;
}

std::vector<ExemplarRef> parse_exemplar_manifest(std::string_view text, const Vocabulary& vocab) {
  std::vector<ExemplarRef> out;
  for (const auto& raw : split(text, '\n')) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("set,")) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw Error(ErrorCode::MalformedFile, "exemplar row needs 4 fields: '" + std::string(line) + "'");
    ExemplarRef r;
    const auto set = trim(f[0]);
    if (set == "upper") {
      r.track = Track::Upper;
    } else if (set == "lower") {
      r.track = Track::Lower;
    } else {
      throw Error(ErrorCode::MalformedFile, "unknown exemplar set '" + std::string(set) + "'");
    }
    r.clip_id = std::string(trim(f[1]));
    const auto start = trim(f[2]);
    auto res = std::from_chars(start.data(), start.data() + start.size(), r.window_start);
    if (res.ec != std::errc{} || res.ptr != start.data() + start.size()) {
      throw Error(ErrorCode::MalformedFile, "bad window start '" + std::string(start) + "'");
    }
    r.label = resolve(vocab.track(r.track), trim(f[3]), set, "exemplar manifest");
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_exemplar_manifest(std::span<const ExemplarRef> refs, const Vocabulary& vocab) {
  std::string out = "set,clip_id,window_start,class\n";
  for (const auto& r : refs) {
    out += std::string(to_string(r.track)) + ',' + r.clip_id + ',' + std::to_string(r.window_start) + ',' +
           vocab.track(r.track).name(r.label) + '\n';
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text, const Vocabulary& vocab, const std::filesystem::path& base_dir) {
  DatasetManifest manifest;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("clip_id,")) continue;
    const auto where = "manifest line " + std::to_string(line_no);
    const auto f = split(line, ',');
    if (f.size() != 5 && f.size() != 6) throw Error(ErrorCode::MalformedFile, where + ": expected 5 or 6 fields");
    ClipEntry e;
    e.clip_id = std::string(trim(f[0]));
    if (e.clip_id.empty()) throw Error(ErrorCode::MalformedFile, where + ": empty clip id");
    if (!ids.insert(e.clip_id).second) throw Error(ErrorCode::DuplicateClipId, "duplicate clip id '" + e.clip_id + "'");
    fs::path p(std::string(trim(f[1])));
    e.path = p.is_relative() ? base_dir / p : p;
    const auto fps_text = trim(f[2]);
    auto res = std::from_chars(fps_text.data(), fps_text.data() + fps_text.size(), e.frame_rate);
    if (res.ec != std::errc{} || !(e.frame_rate > 0.0)) throw Error(ErrorCode::MalformedFile, where + ": bad fps");
    auto split_tag = parse_split(trim(f[3]));
    if (!split_tag) throw Error(ErrorCode::MalformedFile, where + ": split must be train, val or test");
    e.split = *split_tag;
    for (const auto& task_field : split(trim(f[4]), ';')) {
      const auto tf = trim(task_field);
      if (tf.empty()) continue;
      const auto colon = tf.find(':');
      if (colon == std::string_view::npos) throw Error(ErrorCode::MalformedFile, where + ": task field needs ':'");
      const auto task = trim(tf.substr(0, colon));
      std::vector<std::string> names;
      for (const auto& n : split(tf.substr(colon + 1), '|')) {
        if (!trim(n).empty()) names.emplace_back(trim(n));
      }
      if (task == "upper" || task == "lower" || task == "emotion") {
        const auto& labels = task == "upper" ? vocab.upper : task == "lower" ? vocab.lower : vocab.emotion;
        auto& dst = task == "upper" ? e.upper : task == "lower" ? e.lower : e.emotion;
        for (const auto& n : names) {
          const auto id = resolve(labels, n, task, e.clip_id);
          if (task == "emotion" && id == labels.background_index()) continue;
          dst.push_back(id);
        }
        std::sort(dst.begin(), dst.end());
        dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
      } else if (task == "symptom") {
        if (names.size() != 1) throw Error(ErrorCode::MalformedFile, where + ": symptom takes one value");
        if (names[0] == "MDD") e.symptom = kSymptomMDD;
        else if (names[0] == "ME") e.symptom = kSymptomME;
        else throw Error(ErrorCode::UnknownLabel, "unknown symptom label '" + names[0] + "' in clip '" + e.clip_id + "'");
      } else {
        throw Error(ErrorCode::MalformedFile, where + ": unknown task '" + std::string(task) + "'");
      }
    }
    if (f.size() == 6 && !trim(f[5]).empty()) {
      fs::path wp(std::string(trim(f[5])));
      e.window_labels_path = wp.is_relative() ? base_dir / wp : wp;
      e.window_labels = parse_window_labels(read_file(*e.window_labels_path), vocab);
    }
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyManifest, "manifest has no clips");
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const Vocabulary& vocab) {
  return parse_manifest(read_file(path), vocab, path.parent_path());
}

std::string format_manifest(const DatasetManifest& manifest, const Vocabulary& vocab,
                            const std::filesystem::path& base_dir) {
  auto rel = [&](const fs::path& p) {
    if (base_dir.empty()) return p.generic_string();
    return p.lexically_relative(base_dir).generic_string();
  };
  std::ostringstream out;
  out << "clip_id,path,fps,split,labels,window_labels\n";
  for (const auto& e : manifest.entries) {
    char fps[32];
    auto r = std::to_chars(fps, fps + sizeof(fps), e.frame_rate);
    out << e.clip_id << ',' << rel(e.path) << ',' << std::string(fps, r.ptr) << ',' << to_string(e.split) << ','
        << "upper:" << join_ids(e.upper, vocab.upper) << ";lower:" << join_ids(e.lower, vocab.lower)
        << ";emotion:" << join_ids(e.emotion, vocab.emotion);
    if (e.symptom) out << ";symptom:" << (*e.symptom == kSymptomME ? "ME" : "MDD");
    out << ',';
    if (e.window_labels_path) out << rel(*e.window_labels_path);
    out << '\n';
  }
  return out.str();
}

}  // namespace posemo
