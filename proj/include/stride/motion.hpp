#pragma once

#include "stride/common.hpp"
#include "stride/skeleton.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace stride {

using ContactLabels = std::array<std::uint8_t, kFootCount>;

/// N frames of local joint rotations (6D, joint 0 global), root translation
/// and foot-contact labels.
struct MotionSegment {
  double fps = 30.0;
  std::vector<Rotation6D> rotations;  // frame-major, kJointCount per frame
  std::vector<Vec3> root;
  std::vector<ContactLabels> contacts;

  MotionSegment() = default;
  explicit MotionSegment(int frames, double fps = 30.0);

  int frame_count() const { return static_cast<int>(root.size()); }

  Rotation6D& rotation(int frame, int joint) { return rotations[frame * kJointCount + joint]; }
  const Rotation6D& rotation(int frame, int joint) const {
    return rotations[frame * kJointCount + joint];
  }

  /// Frames [begin, begin + count).
  MotionSegment slice(int begin, int count) const;
  /// Appends all frames of other.
  void append(const MotionSegment& other);

  /// Throws InvalidParams when array sizes disagree, a rotation does not
  /// decode, a label is not binary or a root position is non-finite.
  void validate() const;
};

/// A rest-pose segment: identity local rotations, pelvis at rest height above
/// `ground`, facing `yaw`, all feet in contact.
MotionSegment rest_pose_segment(const Skeleton& skeleton, int frames, const Vec3& ground,
                                double yaw);

// Per-frame feature vector: 22 x 6 rotations, 3 root, 4 contacts.
inline constexpr int kRotationFeatures = kJointCount * 6;
inline constexpr int kRootFeatureOffset = kRotationFeatures;
inline constexpr int kContactFeatureOffset = kRootFeatureOffset + 3;
inline constexpr int kFeatureWidth = kContactFeatureOffset + kFootCount;

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

FeatureMatrix to_features(const MotionSegment& segment);

/// Inverse of to_features. Rotations are re-orthonormalized and contacts
/// thresholded at 0.5 so the result satisfies the segment invariants.
MotionSegment from_features(const FeatureMatrix& features, double fps = 30.0);

/// Global joint positions, frame-major.
struct JointPositions {
  int frames = 0;
  std::vector<Vec3> points;

  JointPositions() = default;
  explicit JointPositions(int n) : frames(n), points(static_cast<size_t>(n) * kJointCount) {}

  Vec3& at(int frame, int joint) { return points[frame * kJointCount + joint]; }
  const Vec3& at(int frame, int joint) const { return points[frame * kJointCount + joint]; }
};

}  // namespace stride
