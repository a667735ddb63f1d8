#include "stride/skeleton.hpp"

#include <set>

namespace stride {

namespace {

Skeleton make_default() {
  Skeleton s;
  s.parent = {kRootParent, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  s.offset[kPelvis] = Vec3::Zero();
  s.offset[kLeftHip] = {0.09, -0.07, 0.0};
  s.offset[kRightHip] = {-0.09, -0.07, 0.0};
  s.offset[kSpine1] = {0.0, 0.11, -0.01};
  s.offset[kLeftKnee] = {0.0, -0.40, 0.0};
  s.offset[kRightKnee] = {0.0, -0.40, 0.0};
  s.offset[kSpine2] = {0.0, 0.13, 0.0};
  s.offset[kLeftAnkle] = {0.0, -0.42, 0.0};
  s.offset[kRightAnkle] = {0.0, -0.42, 0.0};
  s.offset[kSpine3] = {0.0, 0.06, 0.01};
  s.offset[kLeftToe] = {0.0, 0.0, 0.14};
  s.offset[kRightToe] = {0.0, 0.0, 0.14};
  s.offset[kNeck] = {0.0, 0.21, -0.02};
  s.offset[kLeftCollar] = {0.07, 0.12, -0.01};
  s.offset[kRightCollar] = {-0.07, 0.12, -0.01};
  s.offset[kHead] = {0.0, 0.10, 0.03};
  s.offset[kLeftShoulder] = {0.11, 0.03, -0.01};
  s.offset[kRightShoulder] = {-0.11, 0.03, -0.01};
  s.offset[kLeftElbow] = {0.27, 0.0, 0.0};
  s.offset[kRightElbow] = {-0.27, 0.0, 0.0};
  s.offset[kLeftWrist] = {0.25, 0.0, 0.0};
  s.offset[kRightWrist] = {-0.25, 0.0, 0.0};
  s.foot_joints = {kLeftAnkle, kRightAnkle, kLeftToe, kRightToe};
  s.foot_radius = 0.02;
  return s;
}

constexpr std::array<int, kJointCount> kMirrorTable = {
    0, 2, 1, 3, 5, 4, 6, 8, 7, 9, 11, 10, 12, 14, 13, 15, 17, 16, 19, 18, 21, 20};

}  // namespace

void Skeleton::validate() const {
  if (parent[0] != kRootParent) throw InvalidParams("joint 0 must be the root");
  for (int i = 1; i < kJointCount; ++i) {
    if (parent[i] < 0 || parent[i] >= i) {
      throw InvalidParams("skeleton joints must be topologically ordered");
    }
  }
  for (const Vec3& o : offset) {
    if (!o.allFinite()) throw InvalidParams("non-finite bone offset");
  }
  std::set<int> feet;
  for (int j : foot_joints) {
    if (j < 0 || j >= kJointCount) throw InvalidParams("foot joint index out of range");
    feet.insert(j);
  }
  if (feet.size() != kFootCount) throw InvalidParams("foot joints must be distinct");
  if (!(foot_radius >= 0.0)) throw InvalidParams("foot radius must be non-negative");
}

const std::array<int, kJointCount>& Skeleton::mirror_table() const { return kMirrorTable; }

const Skeleton& default_skeleton() {
  static const Skeleton skeleton = make_default();
  return skeleton;
}

double rest_pelvis_height(const Skeleton& skeleton) {
  // Sum of vertical offsets along the left leg chain down to the heel.
  double drop = 0.0;
  for (int j = skeleton.foot_joints[0]; j != kRootParent; j = skeleton.parent[j]) {
    drop += skeleton.offset[j].y();
  }
  return skeleton.foot_radius - drop;
}

}  // namespace stride
