#include "posemo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "posemo/error.hpp"

namespace posemo {
namespace {

std::vector<Pose> copy_frames(const PoseSequence& seq) { return {seq.frames().begin(), seq.frames().end()}; }

// Interpolates one joint track in place. Returns the number of frames filled,
// or nullopt when the joint is never valid.
std::optional<std::size_t> fill_track(std::vector<Pose>& frames, std::size_t j) {
  const auto n = frames.size();
  std::optional<std::size_t> prev;
  std::size_t filled = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!frames[t].joints[j].valid) continue;
    const auto& cur = frames[t].joints[j];
    const std::size_t gap_begin = prev ? *prev + 1 : 0;
    for (std::size_t u = gap_begin; u < t; ++u) {
      auto& dst = frames[u].joints[j];
      if (prev) {
        const auto& a = frames[*prev].joints[j];
        const double w = static_cast<double>(u - *prev) / static_cast<double>(t - *prev);
        dst.x = a.x + w * (cur.x - a.x);
        dst.y = a.y + w * (cur.y - a.y);
      } else {
        dst.x = cur.x;
        dst.y = cur.y;
      }
      dst.valid = true;
      ++filled;
    }
    prev = t;
  }
  if (!prev) return std::nullopt;
  for (std::size_t u = *prev + 1; u < n; ++u) {
    auto& dst = frames[u].joints[j];
    dst.x = frames[*prev].joints[j].x;
    dst.y = frames[*prev].joints[j].y;
    dst.valid = true;
    ++filled;
  }
  return filled;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PoseSequence repair_joints(const PoseSequence& seq, RepairReport* report) {
  auto frames = copy_frames(seq);
  RepairReport local{seq.source_id(), {}};

  const auto neck_filled = fill_track(frames, joint::kNeck);
  if (!neck_filled) throw Error(ErrorCode::Unrepairable, "neck is invalid in every frame of '" + seq.source_id() + "'");
  if (*neck_filled > 0) local.joints.push_back({joint::kNeck, *neck_filled, false});

  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (j == joint::kNeck) continue;
    const auto filled = fill_track(frames, j);
    if (!filled) {
      for (auto& pose : frames) {
        pose.joints[j].x = pose.joints[joint::kNeck].x;
        pose.joints[j].y = pose.joints[joint::kNeck].y;
        pose.joints[j].valid = true;
      }
      local.joints.push_back({j, frames.size(), true});
    } else if (*filled > 0) {
      local.joints.push_back({j, *filled, false});
    }
  }
  std::sort(local.joints.begin(), local.joints.end(), [](const auto& a, const auto& b) { return a.joint < b.joint; });
  if (report) *report = std::move(local);
  return PoseSequence(std::move(frames), seq.frame_rate(), seq.source_id());
}

ScaledSequence torso_scale(const PoseSequence& seq, double target) {
  std::vector<double> lengths;
  lengths.reserve(seq.size());
  for (const auto& pose : seq.frames()) {
    const auto& neck = pose.joints[joint::kNeck];
    const auto& rh = pose.joints[joint::kRHip];
    const auto& lh = pose.joints[joint::kLHip];
    if (!neck.valid || !rh.valid || !lh.valid) continue;
    const double cx = 0.5 * (rh.x + lh.x);
    const double cy = 0.5 * (rh.y + lh.y);
    lengths.push_back(std::hypot(neck.x - cx, neck.y - cy));
  }
  if (lengths.empty()) {
    throw Error(ErrorCode::DegenerateTorso, "no frame of '" + seq.source_id() + "' has a valid neck and hips");
  }
  const double m = median(std::move(lengths));
  if (m < 1e-6) throw Error(ErrorCode::DegenerateTorso, "median torso length of '" + seq.source_id() + "' is zero");
  const double scale = target / m;
  auto frames = copy_frames(seq);
  for (auto& pose : frames) {
    for (auto& j : pose.joints) {
      j.x *= scale;
      j.y *= scale;
    }
  }
  return {PoseSequence(std::move(frames), seq.frame_rate(), seq.source_id()), scale};
}

PoseSequence center_on_reference(const PoseSequence& seq, std::size_t radius) {
  const auto n = seq.size();
  auto frames = copy_frames(seq);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= radius ? t - radius : 0;
    const std::size_t hi = std::min(n - 1, t + radius);
    double rx = 0.0, ry = 0.0;
    for (std::size_t u = lo; u <= hi; ++u) {
      rx += seq[u].joints[joint::kNeck].x;
      ry += seq[u].joints[joint::kNeck].y;
    }
    const double count = static_cast<double>(hi - lo + 1);
    rx /= count;
    ry /= count;
    for (auto& j : frames[t].joints) {
      j.x -= rx;
      j.y -= ry;
    }
  }
  return PoseSequence(std::move(frames), seq.frame_rate(), seq.source_id());
}

PreprocessResult preprocess(const PoseSequence& seq, const PipelineConfig& config) {
  RepairReport report;
  auto repaired = repair_joints(seq, &report);
  auto scaled = torso_scale(repaired, config.torso_target);
  auto centered = center_on_reference(scaled.sequence, config.neck_smooth_radius);
  return {std::move(centered), std::move(report), scaled.scale};
}

std::string format_repair_report(const std::vector<RepairReport>& reports) {
  std::ostringstream out;
  out << "clip_id,joint_index,frames_repaired\n";
  for (const auto& r : reports) {
    for (const auto& j : r.joints) out << r.clip_id << ',' << j.joint << ',' << j.frames_repaired << '\n';
  }
  return out.str();
}

}  // namespace posemo
