#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "posemo/core.hpp"

namespace posemo {

enum class StreamKind : std::uint8_t { PosX, PosY, Dx, Dy, Angle, PairOrient, InnerAngle };

enum class FeatureKind { NTraj, NTrajPlus };

std::string_view to_string(StreamKind kind);
inline bool is_motion(StreamKind k) { return k == StreamKind::Dx || k == StreamKind::Dy || k == StreamKind::Angle; }

// Joint-pooled stream kind: the unit that owns a codebook.
struct StreamKey {
  StreamKind kind = StreamKind::PosX;
  std::size_t gap = 0;  // nonzero iff motion kind

  auto operator<=>(const StreamKey&) const = default;
};

std::string to_string(const StreamKey& key);

// One scalar time series: a kind applied to a joint, a joint pair (i<j), or a
// triple (vertex; arm1<arm2). Unused joint slots hold kNumJoints.
struct StreamId {
  StreamKey key;
  std::array<std::size_t, 3> joints{kNumJoints, kNumJoints, kNumJoints};

  auto operator<=>(const StreamId&) const = default;
};

struct Stream {
  StreamId id;
  std::vector<double> values;
};

struct TrajectoryDescriptor {
  StreamId stream;
  std::size_t start_frame = 0;
  std::vector<double> values;
  bool degenerate = false;
};

// Descriptors whose absolute sum falls below this are emitted as zeros.
inline constexpr double kDegenerateSum = 1e-8;

// Kind keys of a feature family in their fixed block order:
// posx, posy, dx(gaps...), dy(gaps...), angle(gaps...), [pair_orient, inner_angle].
std::vector<StreamKey> stream_keys(FeatureKind feature, std::span<const std::size_t> gaps);

// Every stream id of the family over a subset, in emission order: per joint
// (posx, posy, then dx/dy/angle per gap), then pairs, then triples with each
// vertex in turn.
std::vector<StreamId> enumerate_streams(const JointSubset& subset, std::span<const std::size_t> gaps,
                                        FeatureKind feature);

// Per-frame values of every stream. Motion streams at gap s have size - s
// values. Throws SequenceTooShort when the sequence has at most max(gaps) frames.
std::vector<Stream> raw_streams(const PoseSequence& seq, const JointSubset& subset, std::span<const std::size_t> gaps,
                                FeatureKind feature = FeatureKind::NTrajPlus);

// Unsigned angle at `vertex` between rays to a and c, in [0, pi]; 0 when a ray
// has zero length.
double inner_angle(double vx, double vy, double ax, double ay, double cx, double cy);
// Two-argument arctangent mapped to (-pi, pi] with atan2(0,0) = 0.
double direction(double dy, double dx);

// Normalizes one T-vector in place by its absolute sum. Returns false (and
// zeroes the vector) when the sum is below kDegenerateSum.
bool l1_normalize(std::span<double> values);

// Streams every descriptor to `sink(stream_index, key, start_frame, values)`
// without materializing the whole list. `values` is reused between calls.
using DescriptorSink =
    std::function<void(std::size_t stream_index, const StreamId& id, std::size_t start, std::span<const double> values)>;
void for_each_descriptor(const PoseSequence& seq, const JointSubset& subset, std::size_t traj_len,
                         std::span<const std::size_t> gaps, FeatureKind feature, const DescriptorSink& sink);

// Normalized descriptors of one stream, row-major, one row per start frame.
// Returns the row count.
std::size_t stream_descriptors(const PoseSequence& seq, const StreamId& id, std::size_t traj_len,
                               std::vector<double>& out);

// All T-length descriptors of the sequence, stream-major. Throws
// SequenceTooShort with fewer than T + max(gaps) frames.
std::vector<TrajectoryDescriptor> extract_descriptors(const PoseSequence& seq, const JointSubset& subset,
                                                      std::size_t traj_len, std::span<const std::size_t> gaps,
                                                      FeatureKind feature = FeatureKind::NTrajPlus);

// Number of streams per kind key for a subset.
std::map<StreamKey, std::size_t> descriptor_census(std::size_t num_joints, std::span<const std::size_t> gaps,
                                                   FeatureKind feature);

// Descriptors emitted per stream of this key for a sequence of `frames` frames.
std::size_t descriptors_per_stream(const StreamKey& key, std::size_t frames, std::size_t traj_len);

}  // namespace posemo
