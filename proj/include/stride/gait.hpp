#pragma once

#include "stride/height_field.hpp"
#include "stride/motion.hpp"

namespace stride {

/// Oscillator parameters of one locomotion style.
struct GaitParams {
  double speed = 0.9;          // m/s along the path
  double cycle = 1.05;         // s per gait cycle
  double duty = 0.6;           // stance fraction per foot
  double pelvis_scale = 0.98;  // nominal pelvis height over rest height
  double bob = 0.02;           // m, vertical pelvis oscillation
  double lean = 0.05;          // rad, forward torso pitch
  double step_width = 0.09;    // m, lateral footprint offset
  double lift = 0.08;          // m, swing clearance
  double arm_swing = 0.35;     // rad
  double arm_raise = 0.0;      // rad, 0 hanging, pi/2 pointing forward
  double elbow = 0.2;          // rad
  double hop_height = 0.0;     // m; > 0 selects the two-footed hop gait

  void validate() const;
};

/// Styles the synthesizer knows; others throw InvalidParams.
bool gait_supported(int style);
GaitParams gait_params(int style);

/// Constant-speed arc: the heading turns by `curvature` radians per meter.
struct GaitPath {
  Vec2 start = Vec2::Zero();  // world (x, z) at t = 0
  double yaw = 0.0;           // heading at t = 0
  double curvature = 0.0;     // rad / m
  double phase = 0.0;         // gait cycle offset in [0, 1)

  Vec2 position(double speed, double t) const;
  double heading(double speed, double t) const;
};

/// Scripted locomotion over a height field. Stance feet are pinned to
/// footprints on the terrain (heel and toe joints foot_radius above it),
/// swing feet arc between footprints, legs follow by two-bone IK and the
/// pelvis drops where a leg would otherwise overextend. Contacts are the
/// stance phases. Throws OutOfBounds if the motion leaves the field.
MotionSegment synthesize_gait(const Skeleton& skeleton, const HeightField& terrain,
                              const GaitParams& params, const GaitPath& path, int frames,
                              double fps = 30.0);

/// Path start that centers the root track of a clip on `center`.
Vec2 centered_start(const GaitParams& params, const GaitPath& path, int frames, double fps,
                    const Vec2& center);

}  // namespace stride
