#pragma once

#include "stride/height_field.hpp"
#include "stride/motion.hpp"

#include <vector>

namespace stride {

struct ContactThresholds {
  double height = 0.05;  // m above terrain (foot bottom)
  double speed = 0.05;   // m per frame, horizontal
};

/// Foot bottom height above the terrain: joint height minus foot radius.
inline double foot_clearance(const Skeleton& skeleton, const Vec3& joint, double terrain) {
  return joint.y() - skeleton.foot_radius - terrain;
}

/// Labels a foot joint as in contact when it is low (clearance below the
/// height threshold) and slow (horizontal speed below the speed threshold).
/// Speed uses the backward difference, forward difference on frame 0.
std::vector<ContactLabels> detect_foot_contacts(const Skeleton& skeleton,
                                                const JointPositions& positions,
                                                const HeightField& terrain,
                                                const ContactThresholds& thresholds = {});

}  // namespace stride
