#pragma once

#include "stride/common.hpp"

#include <array>

namespace stride {

inline constexpr int kJointCount = 22;
inline constexpr int kFootCount = 4;
inline constexpr int kRootParent = -1;

// SMPL joint order.
enum Joint : int {
  kPelvis = 0,
  kLeftHip,
  kRightHip,
  kSpine1,
  kLeftKnee,
  kRightKnee,
  kSpine2,
  kLeftAnkle,
  kRightAnkle,
  kSpine3,
  kLeftToe,
  kRightToe,
  kNeck,
  kLeftCollar,
  kRightCollar,
  kHead,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
};

/// Fixed 22-joint stick skeleton. Joints are topologically ordered
/// (parent[i] < i), +Y is up and the rest pose faces +Z with the character's
/// left side on +X.
struct Skeleton {
  std::array<int, kJointCount> parent{};
  std::array<Vec3, kJointCount> offset{};
  /// Contact channel order: left heel, right heel, left toe, right toe.
  std::array<int, kFootCount> foot_joints{};
  double foot_radius = 0.02;

  /// Throws InvalidParams if the invariants do not hold.
  void validate() const;

  /// Left/right mirror partner of each joint (identity for the spine chain).
  const std::array<int, kJointCount>& mirror_table() const;
};

/// Hand-authored rest skeleton, about 1.7 m tall. With the pelvis at
/// rest_pelvis_height() the heel and toe joints sit exactly foot_radius above
/// the ground.
const Skeleton& default_skeleton();

double rest_pelvis_height(const Skeleton& skeleton);

/// Contact channel partner under left/right mirroring.
inline constexpr std::array<int, kFootCount> kFootMirror = {1, 0, 3, 2};

}  // namespace stride
