#pragma once

#include "stride/motion.hpp"

namespace stride {

/// Global joint positions. position(i, 0) == root[i]; every other joint is its
/// parent's position plus the parent's global rotation applied to its offset.
JointPositions forward_kinematics(const Skeleton& skeleton, const MotionSegment& segment);

/// Same, from a feature matrix (6D columns are Gram-Schmidt decoded, so they
/// need not be orthonormal).
JointPositions forward_kinematics(const Skeleton& skeleton, const FeatureMatrix& features);

/// Pulls dL/d(position) back onto the feature matrix. Only the rotation and
/// root columns receive gradient; contact columns are zero.
FeatureMatrix forward_kinematics_backward(const Skeleton& skeleton, const FeatureMatrix& features,
                                          const JointPositions& grad_positions);

/// Global rotation of every joint for one frame.
std::array<Mat3, kJointCount> global_rotations(const Skeleton& skeleton,
                                               const FeatureMatrix& features, int frame);

}  // namespace stride
