#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "posemo/core.hpp"

namespace posemo {

struct JointRepair {
  std::size_t joint = 0;
  std::size_t frames_repaired = 0;
  // The joint was invalid in every frame and now follows the neck.
  bool replaced_by_neck = false;
};

struct RepairReport {
  std::string clip_id;
  std::vector<JointRepair> joints;

  bool empty() const { return joints.empty(); }
};

// Fills invalid joints by per-joint linear interpolation in time, holding the
// nearest valid value at the sequence edges. A joint that is never valid is
// placed on the neck. Throws Unrepairable when the neck itself is never valid.
PoseSequence repair_joints(const PoseSequence& seq, RepairReport* report = nullptr);

struct ScaledSequence {
  PoseSequence sequence;
  double scale;
};

// Rescales all coordinates so the median neck-to-hip-center distance equals
// `target`. Only frames where neck and both hips are valid contribute.
ScaledSequence torso_scale(const PoseSequence& seq, double target);

// Subtracts from every joint the neck position averaged over
// [t - radius, t + radius] (clipped to the sequence).
PoseSequence center_on_reference(const PoseSequence& seq, std::size_t radius);

struct PreprocessResult {
  PoseSequence sequence;
  RepairReport report;
  double scale;
};

PreprocessResult preprocess(const PoseSequence& seq, const PipelineConfig& config);

// `clip_id,joint_index,frames_repaired` rows.
std::string format_repair_report(const std::vector<RepairReport>& reports);

}  // namespace posemo
