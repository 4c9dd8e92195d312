#include "posemo/ntraj.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "posemo/error.hpp"

namespace posemo {

std::string_view to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::PosX: return "posx";
    case StreamKind::PosY: return "posy";
    case StreamKind::Dx: return "dx";
    case StreamKind::Dy: return "dy";
    case StreamKind::Angle: return "angle";
    case StreamKind::PairOrient: return "pair_orient";
    case StreamKind::InnerAngle: return "inner_angle";
  }
  return "?";
}

std::string to_string(const StreamKey& key) {
  std::string s(to_string(key.kind));
  if (key.gap) s += "(" + std::to_string(key.gap) + ")";
  return s;
}

std::vector<StreamKey> stream_keys(FeatureKind feature, std::span<const std::size_t> gaps) {
  std::vector<StreamKey> keys{{StreamKind::PosX, 0}, {StreamKind::PosY, 0}};
  for (auto kind : {StreamKind::Dx, StreamKind::Dy, StreamKind::Angle}) {
    for (auto s : gaps) keys.push_back({kind, s});
  }
  if (feature == FeatureKind::NTrajPlus) {
    keys.push_back({StreamKind::PairOrient, 0});
    keys.push_back({StreamKind::InnerAngle, 0});
  }
  return keys;
}

std::vector<StreamId> enumerate_streams(const JointSubset& subset, std::span<const std::size_t> gaps,
                                        FeatureKind feature) {
  std::vector<StreamId> ids;
  const auto J = subset.size();
  for (std::size_t k = 0; k < J; ++k) {
    const auto j = subset[k];
    ids.push_back({{StreamKind::PosX, 0}, {j, kNumJoints, kNumJoints}});
    ids.push_back({{StreamKind::PosY, 0}, {j, kNumJoints, kNumJoints}});
    for (auto s : gaps) {
      ids.push_back({{StreamKind::Dx, s}, {j, kNumJoints, kNumJoints}});
      ids.push_back({{StreamKind::Dy, s}, {j, kNumJoints, kNumJoints}});
      ids.push_back({{StreamKind::Angle, s}, {j, kNumJoints, kNumJoints}});
    }
  }
  if (feature == FeatureKind::NTrajPlus) {
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = a + 1; b < J; ++b) {
        ids.push_back({{StreamKind::PairOrient, 0}, {subset[a], subset[b], kNumJoints}});
      }
    }
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = a + 1; b < J; ++b) {
        for (std::size_t c = b + 1; c < J; ++c) {
          const auto ja = subset[a], jb = subset[b], jc = subset[c];
          ids.push_back({{StreamKind::InnerAngle, 0}, {ja, jb, jc}});
          ids.push_back({{StreamKind::InnerAngle, 0}, {jb, ja, jc}});
          ids.push_back({{StreamKind::InnerAngle, 0}, {jc, ja, jb}});
        }
      }
    }
  }
  return ids;
}

double direction(double dy, double dx) {
  if (dx == 0.0 && dy == 0.0) return 0.0;
  const double a = std::atan2(dy, dx);
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

double inner_angle(double vx, double vy, double ax, double ay, double cx, double cy) {
  const double ux = ax - vx, uy = ay - vy;
  const double wx = cx - vx, wy = cy - vy;
  if ((ux == 0.0 && uy == 0.0) || (wx == 0.0 && wy == 0.0)) return 0.0;
  const double cross = ux * wy - uy * wx;
  const double dot = ux * wx + uy * wy;
  return std::atan2(std::abs(cross), dot);
}

bool l1_normalize(std::span<double> values) {
  double sum = 0.0;
  for (double v : values) sum += std::abs(v);
  if (sum < kDegenerateSum) {
    std::fill(values.begin(), values.end(), 0.0);
    return false;
  }
  for (double& v : values) v /= sum;
  return true;
}

namespace {

std::size_t max_gap(std::span<const std::size_t> gaps) {
  return gaps.empty() ? 0 : *std::max_element(gaps.begin(), gaps.end());
}

void stream_values(const PoseSequence& seq, const StreamId& id, std::vector<double>& out) {
  const auto F = seq.size();
  const auto& k = id.key;
  const auto j0 = id.joints[0];
  out.clear();
  switch (k.kind) {
    case StreamKind::PosX:
    case StreamKind::PosY:
      for (std::size_t t = 0; t < F; ++t) {
        const auto& p = seq[t].joints[j0];
        out.push_back(k.kind == StreamKind::PosX ? p.x : p.y);
      }
      break;
    case StreamKind::Dx:
    case StreamKind::Dy:
    case StreamKind::Angle:
      for (std::size_t t = 0; t + k.gap < F; ++t) {
        const auto& a = seq[t].joints[j0];
        const auto& b = seq[t + k.gap].joints[j0];
        const double dx = b.x - a.x, dy = b.y - a.y;
        out.push_back(k.kind == StreamKind::Dx ? dx : k.kind == StreamKind::Dy ? dy : direction(dy, dx));
      }
      break;
    case StreamKind::PairOrient:
      for (std::size_t t = 0; t < F; ++t) {
        const auto& a = seq[t].joints[j0];
        const auto& b = seq[t].joints[id.joints[1]];
        out.push_back(direction(b.y - a.y, b.x - a.x));
      }
      break;
    case StreamKind::InnerAngle:
      for (std::size_t t = 0; t < F; ++t) {
        const auto& v = seq[t].joints[j0];
        const auto& a = seq[t].joints[id.joints[1]];
        const auto& c = seq[t].joints[id.joints[2]];
        out.push_back(inner_angle(v.x, v.y, a.x, a.y, c.x, c.y));
      }
      break;
  }
}

}  // namespace

std::vector<Stream> raw_streams(const PoseSequence& seq, const JointSubset& subset, std::span<const std::size_t> gaps,
                                FeatureKind feature) {
  if (seq.size() < max_gap(gaps) + 1) {
    throw Error(ErrorCode::SequenceTooShort, "sequence shorter than the largest gap + 1");
  }
  std::vector<Stream> out;
  for (const auto& id : enumerate_streams(subset, gaps, feature)) {
    Stream s{id, {}};
    stream_values(seq, id, s.values);
    out.push_back(std::move(s));
  }
  return out;
}

void for_each_descriptor(const PoseSequence& seq, const JointSubset& subset, std::size_t traj_len,
                         std::span<const std::size_t> gaps, FeatureKind feature, const DescriptorSink& sink) {
  if (traj_len == 0) throw Error(ErrorCode::InvalidArgument, "trajectory length must be positive");
  if (seq.size() < traj_len + max_gap(gaps)) {
    throw Error(ErrorCode::SequenceTooShort, "sequence '" + seq.source_id() + "' has " + std::to_string(seq.size()) +
                                                 " frames, needs at least T + max(gaps)");
  }
  const auto ids = enumerate_streams(subset, gaps, feature);
  std::vector<double> values;
  std::vector<double> desc(traj_len);
  for (std::size_t si = 0; si < ids.size(); ++si) {
    stream_values(seq, ids[si], values);
    for (std::size_t t = 0; t + traj_len <= values.size(); ++t) {
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(t), traj_len, desc.begin());
      l1_normalize(desc);
      sink(si, ids[si], t, desc);
    }
  }
}

std::size_t stream_descriptors(const PoseSequence& seq, const StreamId& id, std::size_t traj_len,
                               std::vector<double>& out) {
  std::vector<double> values;
  stream_values(seq, id, values);
  out.clear();
  if (traj_len == 0 || values.size() < traj_len) return 0;
  const std::size_t rows = values.size() + 1 - traj_len;
  out.resize(rows * traj_len);
  for (std::size_t t = 0; t < rows; ++t) {
    std::span<double> row(out.data() + t * traj_len, traj_len);
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(t), traj_len, row.begin());
    l1_normalize(row);
  }
  return rows;
}

std::vector<TrajectoryDescriptor> extract_descriptors(const PoseSequence& seq, const JointSubset& subset,
                                                      std::size_t traj_len, std::span<const std::size_t> gaps,
                                                      FeatureKind feature) {
  std::vector<TrajectoryDescriptor> out;
  for_each_descriptor(seq, subset, traj_len, gaps, feature,
                      [&](std::size_t, const StreamId& id, std::size_t start, std::span<const double> v) {
                        const bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
                        out.push_back({id, start, {v.begin(), v.end()}, zero});
                      });
  return out;
}

std::map<StreamKey, std::size_t> descriptor_census(std::size_t num_joints, std::span<const std::size_t> gaps,
                                                   FeatureKind feature) {
  std::map<StreamKey, std::size_t> census;
  for (const auto& key : stream_keys(feature, gaps)) {
    const auto J = num_joints;
    switch (key.kind) {
      case StreamKind::PairOrient: census[key] = J * (J - (J > 0)) / 2; break;
      case StreamKind::InnerAngle: census[key] = J < 3 ? 0 : 3 * (J * (J - 1) * (J - 2) / 6); break;
      default: census[key] = J; break;
    }
  }
  return census;
}

std::size_t descriptors_per_stream(const StreamKey& key, std::size_t frames, std::size_t traj_len) {
  const std::size_t need = traj_len + key.gap;
  return frames + 1 > need ? frames + 1 - need : 0;
}

}  // namespace posemo
