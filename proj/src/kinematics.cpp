#include "stride/kinematics.hpp"

#include "stride/rotation.hpp"

namespace stride {

namespace {

Rotation6D rotation_at(const FeatureMatrix& f, int frame, int joint) {
  return f.row(frame).segment<6>(joint * 6).transpose();
}

}  // namespace

std::array<Mat3, kJointCount> global_rotations(const Skeleton& skeleton,
                                               const FeatureMatrix& features, int frame) {
  std::array<Mat3, kJointCount> global;
  for (int j = 0; j < kJointCount; ++j) {
    const Mat3 local = sixd_to_matrix(rotation_at(features, frame, j));
    const int p = skeleton.parent[j];
    global[j] = p == kRootParent ? local : Mat3(global[p] * local);
  }
  return global;
}

JointPositions forward_kinematics(const Skeleton& skeleton, const FeatureMatrix& features) {
  const int n = static_cast<int>(features.rows());
  JointPositions out(n);
  for (int i = 0; i < n; ++i) {
    const auto global = global_rotations(skeleton, features, i);
    out.at(i, 0) = features.row(i).segment<3>(kRootFeatureOffset).transpose();
    for (int j = 1; j < kJointCount; ++j) {
      const int p = skeleton.parent[j];
      out.at(i, j) = out.at(i, p) + global[p] * skeleton.offset[j];
    }
  }
  return out;
}

JointPositions forward_kinematics(const Skeleton& skeleton, const MotionSegment& segment) {
  return forward_kinematics(skeleton, to_features(segment));
}

FeatureMatrix forward_kinematics_backward(const Skeleton& skeleton, const FeatureMatrix& features,
                                          const JointPositions& grad_positions) {
  const int n = static_cast<int>(features.rows());
  FeatureMatrix grad = FeatureMatrix::Zero(n, kFeatureWidth);
  for (int i = 0; i < n; ++i) {
    std::array<Mat3, kJointCount> local;
    std::array<Mat3, kJointCount> global;
    for (int j = 0; j < kJointCount; ++j) {
      local[j] = sixd_to_matrix(rotation_at(features, i, j));
      const int p = skeleton.parent[j];
      global[j] = p == kRootParent ? local[j] : Mat3(global[p] * local[j]);
    }
    std::array<Vec3, kJointCount> dpos;
    std::array<Mat3, kJointCount> dglobal;
    for (int j = 0; j < kJointCount; ++j) {
      dpos[j] = grad_positions.at(i, j);
      dglobal[j].setZero();
    }
    for (int j = kJointCount - 1; j >= 1; --j) {
      const int p = skeleton.parent[j];
      // pos[j] = pos[p] + G[p] * offset[j]
      dpos[p] += dpos[j];
      dglobal[p] += dpos[j] * skeleton.offset[j].transpose();
      // G[j] = G[p] * R[j]
      dglobal[p] += dglobal[j] * local[j].transpose();
      const Mat3 dlocal = global[p].transpose() * dglobal[j];
      grad.row(i).segment<6>(j * 6) =
          sixd_to_matrix_backward(rotation_at(features, i, j), dlocal).transpose();
    }
    grad.row(i).segment<6>(0) = sixd_to_matrix_backward(rotation_at(features, i, 0), dglobal[0]).transpose();
    grad.row(i).segment<3>(kRootFeatureOffset) = dpos[0].transpose();
  }
  return grad;
}

}  // namespace stride
