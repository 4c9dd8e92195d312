#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace posemo {

inline constexpr std::size_t kNumJoints = 18;

// Positional joint indices of the 18-point keypoint layout. Every other module
// addresses joints through these names.
namespace joint {
inline constexpr std::size_t kNose = 0;
inline constexpr std::size_t kNeck = 1;
inline constexpr std::size_t kRShoulder = 2;
inline constexpr std::size_t kRElbow = 3;
inline constexpr std::size_t kRWrist = 4;
inline constexpr std::size_t kLShoulder = 5;
inline constexpr std::size_t kLElbow = 6;
inline constexpr std::size_t kLWrist = 7;
inline constexpr std::size_t kRHip = 8;
inline constexpr std::size_t kRKnee = 9;
inline constexpr std::size_t kRAnkle = 10;
inline constexpr std::size_t kLHip = 11;
inline constexpr std::size_t kLKnee = 12;
inline constexpr std::size_t kLAnkle = 13;
inline constexpr std::size_t kREye = 14;
inline constexpr std::size_t kLEye = 15;
inline constexpr std::size_t kREar = 16;
inline constexpr std::size_t kLEar = 17;
}  // namespace joint

struct Joint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  bool valid = false;

  friend bool operator==(const Joint&, const Joint&) = default;
};

struct Pose {
  std::array<Joint, kNumJoints> joints{};

  static Pose invalid() { return Pose{}; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

// Time-ordered skeletons of one clip. Immutable once built.
class PoseSequence {
 public:
  PoseSequence(std::vector<Pose> frames, double frame_rate, std::string source_id);

  std::span<const Pose> frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  const Pose& operator[](std::size_t t) const { return frames_[t]; }
  double frame_rate() const { return frame_rate_; }
  const std::string& source_id() const { return source_id_; }

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;

 private:
  std::vector<Pose> frames_;
  double frame_rate_;
  std::string source_id_;
};

// Ordered, unique, in-range joint indices.
class JointSubset {
 public:
  explicit JointSubset(std::vector<std::size_t> indices);

  // Torso and legs: neck, both hips, knees, ankles.
  static const JointSubset& lower();
  // Head and arms, anchored at the neck.
  static const JointSubset& upper();
  static const JointSubset& all();

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  std::size_t operator[](std::size_t k) const { return indices_[k]; }

  friend bool operator==(const JointSubset&, const JointSubset&) = default;

 private:
  std::vector<std::size_t> indices_;
};

// Read-only projection of a sequence onto a joint subset. Holds references;
// the sequence and subset must outlive the view.
class SubsetView {
 public:
  SubsetView(const PoseSequence& seq, const JointSubset& subset) : seq_(&seq), subset_(&subset) {}

  std::size_t frames() const { return seq_->size(); }
  std::size_t joints() const { return subset_->size(); }
  std::size_t joint_index(std::size_t k) const { return (*subset_)[k]; }
  const Joint& at(std::size_t frame, std::size_t k) const {
    return (*seq_)[frame].joints[(*subset_)[k]];
  }

 private:
  const PoseSequence* seq_;
  const JointSubset* subset_;
};

inline SubsetView joint_subset_view(const PoseSequence& seq, const JointSubset& subset) {
  return SubsetView(seq, subset);
}

enum class Track { Upper, Lower };

std::string_view to_string(Track track);
const JointSubset& subset_for(Track track);

// Class vocabulary of one task. The background class is always appended last.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names, std::string background = "background");

  std::span<const std::string> names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t background_index() const { return background_index_; }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  std::optional<std::size_t> find(std::string_view name) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::string> names_;
  std::size_t background_index_ = 0;
};

inline constexpr std::size_t kEmotionSlots = 24;

// Label vocabularies for both body-language tracks and the emotion task.
struct Vocabulary {
  LabelSet upper;
  LabelSet lower;
  // Always kEmotionSlots named emotions plus background (25 entries).
  LabelSet emotion;

  const LabelSet& track(Track t) const { return t == Track::Upper ? upper : lower; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

// Parses the label manifest: one `set,name` record per line, set in
// {upper, lower, emotion}; '#' starts a comment. Emotion names are padded with
// unused placeholder slots up to 24.
Vocabulary parse_label_manifest(std::string_view text);
std::string format_label_manifest(const Vocabulary& vocab);
Vocabulary load_label_manifest(const std::string& path);

struct PipelineConfig {
  double torso_target = 240.0;
  std::size_t neck_smooth_radius = 2;
  std::size_t traj_len = 5;
  std::vector<std::size_t> gaps{1, 2, 3};
  std::size_t codebook_size = 100;
  bool codebook_eval = false;
  std::size_t codebook_restarts = 10;
  std::size_t codebook_max_iter = 100;
  std::size_t codebook_sample = 20000;
  std::size_t window_len = 6;
  std::size_t window_stride = 3;
  std::size_t knn_k = 3;
  std::size_t min_windows = 2;
  std::size_t emo_hist_len = 7;
  std::size_t emo_hist_stride = 3;
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::vector<std::size_t> encoder_channels{8, 16, 32};
  std::size_t encoder_epochs = 12;
  double encoder_lr = 0.02;
  std::size_t encoder_batch = 16;
  std::size_t encoder_window_stride = 2;
  std::size_t lstm_hidden = 64;
  std::size_t conv1d_channels = 32;
  std::size_t stage2_epochs = 150;
  double stage2_lr = 0.5;
  std::size_t stage2_batch = 4;
  std::size_t stage2_patience = 30;
  std::uint64_t seed = 0;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;

  // Canonical `key=value` text, one field per line in declaration order.
  std::string to_text() const;
  std::uint64_t hash() const;

  // Applies `key=value` lines on top of the current values.
  void apply_text(std::string_view text);
  void set(std::string_view key, std::string_view value);
};

inline constexpr std::array<std::size_t, 6> kAdmissibleCodebookSizes{10, 20, 50, 100, 200, 500};

// Small text helpers shared by the line-oriented formats.
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace posemo
