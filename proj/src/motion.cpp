#include "stride/motion.hpp"

#include "stride/rotation.hpp"

namespace stride {

MotionSegment::MotionSegment(int frames, double fps_)
    : fps(fps_),
      rotations(static_cast<size_t>(frames) * kJointCount, matrix_to_sixd(Mat3::Identity())),
      root(frames, Vec3::Zero()),
      contacts(frames, ContactLabels{0, 0, 0, 0}) {}

MotionSegment MotionSegment::slice(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > frame_count()) {
    throw InvalidParams("motion slice out of range");
  }
  MotionSegment out;
  out.fps = fps;
  out.rotations.assign(rotations.begin() + begin * kJointCount,
                       rotations.begin() + (begin + count) * kJointCount);
  out.root.assign(root.begin() + begin, root.begin() + begin + count);
  out.contacts.assign(contacts.begin() + begin, contacts.begin() + begin + count);
  return out;
}

void MotionSegment::append(const MotionSegment& other) {
  rotations.insert(rotations.end(), other.rotations.begin(), other.rotations.end());
  root.insert(root.end(), other.root.begin(), other.root.end());
  contacts.insert(contacts.end(), other.contacts.begin(), other.contacts.end());
}

void MotionSegment::validate() const {
  const size_t n = root.size();
  if (rotations.size() != n * kJointCount || contacts.size() != n) {
    throw InvalidParams("motion segment arrays have inconsistent sizes");
  }
  if (!(fps > 0.0)) throw InvalidParams("fps must be positive");
  for (const Rotation6D& r : rotations) {
    if (!r.allFinite()) throw InvalidParams("non-finite rotation");
    try {
      sixd_to_matrix(r);
    } catch (const DegenerateRotation&) {
      throw InvalidParams("rotation does not decode");
    }
  }
  for (const Vec3& p : root) {
    if (!p.allFinite()) throw InvalidParams("non-finite root position");
  }
  for (const ContactLabels& c : contacts) {
    for (auto v : c) {
      if (v > 1) throw InvalidParams("contact labels must be 0 or 1");
    }
  }
}

MotionSegment rest_pose_segment(const Skeleton& skeleton, int frames, const Vec3& ground,
                                double yaw) {
  MotionSegment seg(frames);
  const Rotation6D heading = matrix_to_sixd(rot_y(yaw));
  for (int i = 0; i < frames; ++i) {
    seg.rotation(i, 0) = heading;
    seg.root[i] = ground + Vec3(0.0, rest_pelvis_height(skeleton), 0.0);
    seg.contacts[i] = {1, 1, 1, 1};
  }
  return seg;
}

FeatureMatrix to_features(const MotionSegment& segment) {
  const int n = segment.frame_count();
  FeatureMatrix f(n, kFeatureWidth);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      f.row(i).segment<6>(j * 6) = segment.rotation(i, j).transpose();
    }
    f.row(i).segment<3>(kRootFeatureOffset) = segment.root[i].transpose();
    for (int c = 0; c < kFootCount; ++c) {
      f(i, kContactFeatureOffset + c) = segment.contacts[i][c];
    }
  }
  return f;
}

MotionSegment from_features(const FeatureMatrix& features, double fps) {
  if (features.cols() != kFeatureWidth) {
    throw InvalidParams("feature matrix has the wrong width");
  }
  const int n = static_cast<int>(features.rows());
  MotionSegment seg(n, fps);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      seg.rotation(i, j) = orthonormalize_sixd(features.row(i).segment<6>(j * 6).transpose());
    }
    seg.root[i] = features.row(i).segment<3>(kRootFeatureOffset).transpose();
    for (int c = 0; c < kFootCount; ++c) {
      seg.contacts[i][c] = features(i, kContactFeatureOffset + c) >= 0.5 ? 1 : 0;
    }
  }
  return seg;
}

}  // namespace stride
