#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posemo/core.hpp"

namespace posemo {

// Joints below this confidence, or at the (0,0) sentinel, are marked invalid.
inline constexpr double kMinJointConfidence = 0.1;

// Parses one per-frame keypoint document (`people[*].pose_keypoints_2d`, 54
// numbers per person) and returns the person with the highest mean confidence.
// Throws MalformedFile or NoPerson; never crashes on arbitrary bytes.
Pose parse_keypoint_frame(std::string_view bytes);

// Inverse of parse_keypoint_frame for a single person; invalid joints are
// written as the (0,0,0) sentinel.
std::string format_keypoint_frame(const Pose& pose);

// Loads a clip from a directory of per-frame documents (zero-padded indices in
// the file names), a `.jsonl` container (one document per line, blank line =
// missing frame) or a `.pseq` binary pose store.
PoseSequence load_sequence(const std::filesystem::path& path, double frame_rate);

// Binary pose store. `preprocessed` marks sequences that already went through
// repair/scale/centering.
std::string serialize_sequence(const PoseSequence& seq, bool preprocessed = false);
PoseSequence deserialize_sequence(std::string_view bytes, bool* preprocessed = nullptr);
bool is_preprocessed_store(const std::filesystem::path& path);

std::string format_jsonl(const PoseSequence& seq);

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

// Ground-truth body-language class of one stage-1 window.
struct WindowLabel {
  std::size_t window_start = 0;
  std::size_t upper = 0;
  std::size_t lower = 0;
};

inline constexpr std::size_t kSymptomMDD = 0;
inline constexpr std::size_t kSymptomME = 1;

struct ClipEntry {
  std::string clip_id;
  std::filesystem::path path;
  double frame_rate = 0.0;
  Split split = Split::Train;
  std::vector<std::size_t> upper;    // video-level body-language ids
  std::vector<std::size_t> lower;
  std::vector<std::size_t> emotion;  // empty means the background emotion
  std::optional<std::size_t> symptom;
  std::optional<std::filesystem::path> window_labels_path;
  std::vector<WindowLabel> window_labels;
};

struct DatasetManifest {
  std::vector<ClipEntry> entries;

  std::size_t count(Split split) const;
  const ClipEntry& find(std::string_view clip_id) const;
};

// CSV rows: `clip_id,path,fps,split,task:label|label;task:...[,window_labels]`
// with tasks upper, lower, emotion, symptom. Relative paths resolve against the
// manifest's directory. Window-label files are `window_start,upper,lower`.
DatasetManifest parse_manifest(std::string_view text, const Vocabulary& vocab,
                               const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path, const Vocabulary& vocab);

std::string format_manifest(const DatasetManifest& manifest, const Vocabulary& vocab,
                            const std::filesystem::path& base_dir = {});
std::vector<WindowLabel> parse_window_labels(std::string_view text, const Vocabulary& vocab);
std::string format_window_labels(std::span<const WindowLabel> labels, const Vocabulary& vocab);

// One designated exemplar window: `set,clip_id,window_start,class`.
struct ExemplarRef {
  Track track = Track::Upper;
  std::string clip_id;
  std::size_t window_start = 0;
  std::size_t label = 0;

  friend bool operator==(const ExemplarRef&, const ExemplarRef&) = default;
};

std::vector<ExemplarRef> parse_exemplar_manifest(std::string_view text, const Vocabulary& vocab);
std::string format_exemplar_manifest(std::span<const ExemplarRef> refs, const Vocabulary& vocab);

}  // namespace posemo
