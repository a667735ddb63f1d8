#include "stride/mirror.hpp"

#include "stride/rotation.hpp"

namespace stride {

MotionSegment mirror_motion(const MotionSegment& segment, const Skeleton& skeleton) {
  const Mat3 M = Vec3(-1.0, 1.0, 1.0).asDiagonal();
  const auto& swap = skeleton.mirror_table();
  MotionSegment out(segment.frame_count(), segment.fps);
  for (int i = 0; i < segment.frame_count(); ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      const Mat3 R = sixd_to_matrix(segment.rotation(i, swap[j]));
      out.rotation(i, j) = orthonormalize_sixd(matrix_to_sixd(M * R * M));
    }
    out.root[i] = M * segment.root[i];
    for (int c = 0; c < kFootCount; ++c) {
      out.contacts[i][c] = segment.contacts[i][kFootMirror[c]];
    }
  }
  return out;
}

}  // namespace stride
