#include "posemo/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "posemo/binio.hpp"
#include "posemo/error.hpp"

namespace posemo {

PoseSequence::PoseSequence(std::vector<Pose> frames, double frame_rate, std::string source_id)
    : frames_(std::move(frames)), frame_rate_(frame_rate), source_id_(std::move(source_id)) {
  if (frames_.empty()) throw Error(ErrorCode::EmptySequence, "pose sequence '" + source_id_ + "' has no frames");
  if (!(frame_rate_ > 0.0) || !std::isfinite(frame_rate_)) {
    throw Error(ErrorCode::InvalidArgument, "frame rate must be positive");
  }
  for (const auto& pose : frames_) {
    for (const auto& j : pose.joints) {
      if (!(j.confidence >= 0.0 && j.confidence <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "joint confidence outside [0,1]");
      }
    }
  }
}

JointSubset::JointSubset(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) throw Error(ErrorCode::InvalidArgument, "joint subset is empty");
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] >= kNumJoints) throw Error(ErrorCode::InvalidArgument, "joint index out of range");
    if (k > 0 && indices_[k] <= indices_[k - 1]) {
      throw Error(ErrorCode::InvalidArgument, "joint subset must be sorted and unique");
    }
  }
}

const JointSubset& JointSubset::lower() {
  using namespace joint;
  static const JointSubset s({kNeck, kRHip, kRKnee, kRAnkle, kLHip, kLKnee, kLAnkle});
  return s;
}

const JointSubset& JointSubset::upper() {
  using namespace joint;
  static const JointSubset s(
      {kNose, kNeck, kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow, kLWrist, kREye, kLEye, kREar, kLEar});
  return s;
}

const JointSubset& JointSubset::all() {
  static const JointSubset s = [] {
    std::vector<std::size_t> idx(kNumJoints);
    for (std::size_t i = 0; i < kNumJoints; ++i) idx[i] = i;
    return JointSubset(std::move(idx));
  }();
  return s;
}

std::string_view to_string(Track track) { return track == Track::Upper ? "upper" : "lower"; }

const JointSubset& subset_for(Track track) {
  return track == Track::Upper ? JointSubset::upper() : JointSubset::lower();
}

LabelSet::LabelSet(std::vector<std::string> names, std::string background) : names_(std::move(names)) {
  names_.push_back(std::move(background));
  background_index_ = names_.size() - 1;
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(ErrorCode::InvalidArgument, "empty class name");
    if (!seen.insert(n).second) throw Error(ErrorCode::InvalidArgument, "duplicate class name '" + n + "'");
  }
}

std::optional<std::size_t> LabelSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const auto ws = " \t\r\n";
  const auto b = text.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = text.find_last_not_of(ws);
  return text.substr(b, e - b + 1);
}

Vocabulary parse_label_manifest(std::string_view text) {
  std::vector<std::string> upper, lower, emotion;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2) {
      throw Error(ErrorCode::MalformedFile, "label manifest line " + std::to_string(line_no) + ": expected set,name");
    }
    const auto set = trim(fields[0]);
    std::string name(trim(fields[1]));
    if (set == "upper") {
      upper.push_back(std::move(name));
    } else if (set == "lower") {
      lower.push_back(std::move(name));
    } else if (set == "emotion") {
      emotion.push_back(std::move(name));
    } else {
      throw Error(ErrorCode::MalformedFile,
                  "label manifest line " + std::to_string(line_no) + ": unknown set '" + std::string(set) + "'");
    }
  }
  if (emotion.size() > kEmotionSlots) {
    throw Error(ErrorCode::InvalidArgument, "at most 24 emotion classes are supported");
  }
  for (std::size_t i = emotion.size(); i < kEmotionSlots; ++i) emotion.push_back("unused_" + std::to_string(i));
  return Vocabulary{LabelSet(std::move(upper)), LabelSet(std::move(lower)), LabelSet(std::move(emotion))};
}

std::string format_label_manifest(const Vocabulary& vocab) {
  std::ostringstream out;
  auto emit = [&](const char* set, const LabelSet& labels, bool skip_unused) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i == labels.background_index()) continue;
      if (skip_unused && labels.name(i).starts_with("unused_")) continue;
      out << set << ',' << labels.name(i) << '\n';
    }
  };
  emit("upper", vocab.upper, false);
  emit("lower", vocab.lower, false);
  emit("emotion", vocab.emotion, true);
  return out.str();
}

Vocabulary load_label_manifest(const std::string& path) { return parse_label_manifest(read_file(path)); }

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  value = trim(value);
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
  }
  return out;
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  for (const auto& part : split(value, ',')) out.push_back(parse_number<std::size_t>(key, part));
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(ErrorCode::InvalidArgument, std::string("config '") + name + "' must be positive");
  };
  if (!(torso_target > 0.0)) throw Error(ErrorCode::InvalidArgument, "torso_target must be positive");
  positive(traj_len, "traj_len");
  if (gaps.empty()) throw Error(ErrorCode::InvalidArgument, "gaps must be nonempty");
  for (auto g : gaps) positive(g, "gaps");
  positive(codebook_size, "codebook_size");
  if (codebook_eval && std::find(kAdmissibleCodebookSizes.begin(), kAdmissibleCodebookSizes.end(), codebook_size) ==
                           kAdmissibleCodebookSizes.end()) {
    throw Error(ErrorCode::InvalidArgument, "codebook_size must be one of 10,20,50,100,200,500 in evaluation mode");
  }
  positive(codebook_restarts, "codebook_restarts");
  positive(codebook_max_iter, "codebook_max_iter");
  positive(codebook_sample, "codebook_sample");
  positive(window_len, "window_len");
  positive(window_stride, "window_stride");
  positive(knn_k, "knn_k");
  positive(min_windows, "min_windows");
  positive(emo_hist_len, "emo_hist_len");
  positive(emo_hist_stride, "emo_hist_stride");
  positive(image_height, "image_height");
  positive(image_width, "image_width");
  if (encoder_channels.empty()) throw Error(ErrorCode::InvalidArgument, "encoder_channels must be nonempty");
  for (auto c : encoder_channels) positive(c, "encoder_channels");
  positive(encoder_epochs, "encoder_epochs");
  if (!(encoder_lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "encoder_lr must be positive");
  positive(encoder_batch, "encoder_batch");
  positive(encoder_window_stride, "encoder_window_stride");
  positive(lstm_hidden, "lstm_hidden");
  positive(conv1d_channels, "conv1d_channels");
  positive(stage2_epochs, "stage2_epochs");
  if (!(stage2_lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "stage2_lr must be positive");
  positive(stage2_batch, "stage2_batch");
  positive(stage2_patience, "stage2_patience");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream o;
  o << "torso_target=" << fmt_double(torso_target) << '\n'
    << "neck_smooth_radius=" << neck_smooth_radius << '\n'
    << "traj_len=" << traj_len << '\n'
    << "gaps=" << fmt_list(gaps) << '\n'
    << "codebook_size=" << codebook_size << '\n'
    << "codebook_eval=" << (codebook_eval ? 1 : 0) << '\n'
    << "codebook_restarts=" << codebook_restarts << '\n'
    << "codebook_max_iter=" << codebook_max_iter << '\n'
    << "codebook_sample=" << codebook_sample << '\n'
    << "window_len=" << window_len << '\n'
    << "window_stride=" << window_stride << '\n'
    << "knn_k=" << knn_k << '\n'
    << "min_windows=" << min_windows << '\n'
    << "emo_hist_len=" << emo_hist_len << '\n'
    << "emo_hist_stride=" << emo_hist_stride << '\n'
    << "image_height=" << image_height << '\n'
    << "image_width=" << image_width << '\n'
    << "encoder_channels=" << fmt_list(encoder_channels) << '\n'
    << "encoder_epochs=" << encoder_epochs << '\n'
    << "encoder_lr=" << fmt_double(encoder_lr) << '\n'
    << "encoder_batch=" << encoder_batch << '\n'
    << "encoder_window_stride=" << encoder_window_stride << '\n'
    << "lstm_hidden=" << lstm_hidden << '\n'
    << "conv1d_channels=" << conv1d_channels << '\n'
    << "stage2_epochs=" << stage2_epochs << '\n'
    << "stage2_lr=" << fmt_double(stage2_lr) << '\n'
    << "stage2_batch=" << stage2_batch << '\n'
    << "stage2_patience=" << stage2_patience << '\n'
    << "seed=" << seed << '\n';
  return o.str();
}

std::uint64_t PipelineConfig::hash() const { return fnv1a(to_text()); }

void PipelineConfig::set(std::string_view key, std::string_view value) {
  using sz = std::size_t;
  if (key == "torso_target") torso_target = parse_number<double>(key, value);
  else if (key == "neck_smooth_radius") neck_smooth_radius = parse_number<sz>(key, value);
  else if (key == "traj_len") traj_len = parse_number<sz>(key, value);
  else if (key == "gaps") gaps = parse_list(key, value);
  else if (key == "codebook_size") codebook_size = parse_number<sz>(key, value);
  else if (key == "codebook_eval") codebook_eval = parse_number<int>(key, value) != 0;
  else if (key == "codebook_restarts") codebook_restarts = parse_number<sz>(key, value);
  else if (key == "codebook_max_iter") codebook_max_iter = parse_number<sz>(key, value);
  else if (key == "codebook_sample") codebook_sample = parse_number<sz>(key, value);
  else if (key == "window_len") window_len = parse_number<sz>(key, value);
  else if (key == "window_stride") window_stride = parse_number<sz>(key, value);
  else if (key == "knn_k") knn_k = parse_number<sz>(key, value);
  else if (key == "min_windows") min_windows = parse_number<sz>(key, value);
  else if (key == "emo_hist_len") emo_hist_len = parse_number<sz>(key, value);
  else if (key == "emo_hist_stride") emo_hist_stride = parse_number<sz>(key, value);
  else if (key == "image_height") image_height = parse_number<sz>(key, value);
  else if (key == "image_width") image_width = parse_number<sz>(key, value);
  else if (key == "encoder_channels") encoder_channels = parse_list(key, value);
  else if (key == "encoder_epochs") encoder_epochs = parse_number<sz>(key, value);
  else if (key == "encoder_lr") encoder_lr = parse_number<double>(key, value);
  else if (key == "encoder_batch") encoder_batch = parse_number<sz>(key, value);
  else if (key == "encoder_window_stride") encoder_window_stride = parse_number<sz>(key, value);
  else if (key == "lstm_hidden") lstm_hidden = parse_number<sz>(key, value);
  else if (key == "conv1d_channels") conv1d_channels = parse_number<sz>(key, value);
  else if (key == "stage2_epochs") stage2_epochs = parse_number<sz>(key, value);
  else if (key == "stage2_lr") stage2_lr = parse_number<double>(key, value);
  else if (key == "stage2_batch") stage2_batch = parse_number<sz>(key, value);
  else if (key == "stage2_patience") stage2_patience = parse_number<sz>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

void PipelineConfig::apply_text(std::string_view text) {
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line without '=': " + std::string(line));
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace posemo
