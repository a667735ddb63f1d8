#include "stride/contacts.hpp"

namespace stride {

std::vector<ContactLabels> detect_foot_contacts(const Skeleton& skeleton,
                                                const JointPositions& positions,
                                                const HeightField& terrain,
                                                const ContactThresholds& thresholds) {
  const int n = positions.frames;
  std::vector<ContactLabels> labels(n, ContactLabels{0, 0, 0, 0});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      const int j = skeleton.foot_joints[c];
      const Vec3& p = positions.at(i, j);
      const double h = terrain.height_at(p.x(), p.z());
      double speed = 0.0;
      if (n > 1) {
        const Vec3 d = i > 0 ? Vec3(p - positions.at(i - 1, j)) : Vec3(positions.at(1, j) - p);
        speed = std::hypot(d.x(), d.z());
      }
      const bool low = foot_clearance(skeleton, p, h) < thresholds.height;
      labels[i][c] = (low && speed < thresholds.speed) ? 1 : 0;
    }
  }
  return labels;
}

}  // namespace stride
