#include "stride/gait.hpp"

#include "stride/diffusion.hpp"
#include "stride/rotation.hpp"
#include "stride/terrain.hpp"

#include <cmath>

namespace stride {

namespace {

Mat3 rot_x(double a) { return axis_angle(Vec3::UnitX(), a); }
Mat3 rot_z(double a) { return axis_angle(Vec3::UnitZ(), a); }

/// Rotation taking the orthonormalized frame (a, b) onto (c, d).
Mat3 align_frames(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  auto frame = [](const Vec3& p, const Vec3& s) {
    const Vec3 x = p.normalized();
    const Vec3 y = (s - s.dot(x) * x).normalized();
    Mat3 m;
    m << x, y, x.cross(y);
    return m;
  };
  return frame(c, d) * frame(a, b).transpose();
}

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

Vec3 ground_point(const HeightField& terrain, const Vec2& g, double lift) {
  return {g.x(), terrain.height_at(g.x(), g.y()) + lift, g.y()};
}

struct FootTrack {
  Vec3 heel;
  Vec3 toe;
  bool stance = false;
};

class Synth {
 public:
  Synth(const Skeleton& s, const HeightField& t, const GaitParams& p, const GaitPath& path)
      : skel_(s), terrain_(t), p_(p), path_(path) {
    foot_length_ = s.offset[kLeftToe].norm();
    thigh_ = s.offset[kLeftKnee].norm();
    shin_ = s.offset[kLeftAnkle].norm();
  }

  double cycles(double t) const { return path_.phase + t / p_.cycle; }
  double foot_offset(int side) const { return p_.hop_height > 0.0 || side == 0 ? 0.0 : 0.5; }

  // Footprint of stance interval m (heel and toe on the ground).
  FootTrack footprint(int side, double m) const {
    const double tm = (m + 0.5 * p_.duty - path_.phase - foot_offset(side)) * p_.cycle;
    const Vec2 g = path_.position(p_.speed, tm);
    const double yaw = path_.heading(p_.speed, tm);
    const double lateral = side == 0 ? p_.step_width : -p_.step_width;
    const Vec2 heel = g + rotate_ground(Vec2(lateral, 0.0), yaw);
    const Vec2 toe = heel + rotate_ground(Vec2(0.0, foot_length_), yaw);
    return {ground_point(terrain_, heel, skel_.foot_radius), ground_point(terrain_, toe, skel_.foot_radius),
            true};
  }

  FootTrack foot(int side, double t) const {
    const double c = cycles(t) + foot_offset(side);
    const double m = std::floor(c);
    const double u = c - m;
    if (u < p_.duty) return footprint(side, m);
    const double s = (u - p_.duty) / (1.0 - p_.duty);
    const FootTrack a = footprint(side, m);
    const FootTrack b = footprint(side, m + 1);
    const double w = smoothstep(s);
    const double arc = std::sin(kPi * s);
    const double hop = p_.hop_height > 0.0 ? 4.0 * p_.hop_height * s * (1.0 - s) : 0.0;
    auto blend = [&](const Vec3& x, const Vec3& y) {
      Vec3 q = (1.0 - w) * x + w * y;
      q.y() = std::max(q.y(), terrain_.height_at(q.x(), q.z()) + skel_.foot_radius);
      q.y() += p_.lift * arc + hop;
      return q;
    };
    return {blend(a.heel, b.heel), blend(a.toe, b.toe), false};
  }

  double swing_of(double u) const {
    return p_.arm_swing * std::sin(2.0 * kPi * (u - 0.5 * p_.duty));
  }

  void frame(double t, MotionSegment& out, int i) const {
    const Vec2 g = path_.position(p_.speed, t);
    const double yaw = path_.heading(p_.speed, t);
    const Mat3 facing = rot_y(yaw);
    const Vec3 fwd = facing * Vec3::UnitZ();

    // Pelvis height: smoothed terrain plus the style profile.
    double base = 0.0;
    const double r = 0.2;
    for (const Vec2& d : {Vec2(0, 0), Vec2(r, 0), Vec2(-r, 0), Vec2(0, r), Vec2(0, -r)}) {
      base += terrain_.height_at(g.x() + d.x(), g.y() + d.y()) / 5.0;
    }
    const double u_left = cycles(t) - std::floor(cycles(t));
    double y = base + p_.pelvis_scale * rest_pelvis_height(skel_);
    if (p_.hop_height > 0.0) {
      if (u_left < p_.duty) {
        y -= p_.bob * std::sin(kPi * u_left / p_.duty);
      } else {
        const double s = (u_left - p_.duty) / (1.0 - p_.duty);
        y += 4.0 * p_.hop_height * s * (1.0 - s);
      }
    } else {
      y += p_.bob * std::cos(4.0 * kPi * (u_left - 0.5 * p_.duty));
    }

    const Mat3 pelvis = facing * rot_x(0.2 * p_.lean);
    const std::array<FootTrack, 2> feet = {foot(0, t), foot(1, t)};
    const std::array<int, 2> hips = {kLeftHip, kRightHip};

    // Lower the pelvis where a leg would overextend.
    const double reach = 0.98 * (thigh_ + shin_);
    for (int side = 0; side < 2; ++side) {
      const Vec3 d = pelvis * skel_.offset[hips[side]];
      const Vec2 h(g.x() + d.x() - feet[side].heel.x(), g.y() + d.z() - feet[side].heel.z());
      const double v = std::sqrt(std::max(reach * reach - h.squaredNorm(), 0.0));
      y = std::min(y, feet[side].heel.y() + v - d.y());
    }
    const Vec3 root(g.x(), y, g.y());

    std::array<Mat3, kJointCount> G;
    G.fill(Mat3::Identity());
    G[kPelvis] = pelvis;
    G[kSpine1] = facing * rot_x(0.5 * p_.lean);
    G[kSpine2] = facing * rot_x(0.75 * p_.lean);
    G[kSpine3] = facing * rot_x(p_.lean);
    G[kNeck] = facing * rot_x(0.5 * p_.lean);
    G[kHead] = facing * rot_x(0.3 * p_.lean);
    G[kLeftCollar] = G[kRightCollar] = G[kSpine3];

    const double hang = 0.5 * kPi - 0.15;
    const double sl = p_.hop_height > 0.0 ? swing_of(u_left + 0.25) : swing_of(u_left);
    const double sr = p_.hop_height > 0.0 ? sl : -sl;
    G[kLeftShoulder] = G[kSpine3] * rot_x(-(p_.arm_raise + sl)) * rot_z(-hang);
    G[kRightShoulder] = G[kSpine3] * rot_x(-(p_.arm_raise + sr)) * rot_z(hang);
    G[kLeftElbow] = G[kLeftWrist] = G[kLeftShoulder] * rot_y(-p_.elbow);
    G[kRightElbow] = G[kRightWrist] = G[kRightShoulder] * rot_y(p_.elbow);

    const std::array<int, 2> knees = {kLeftKnee, kRightKnee};
    const std::array<int, 2> ankles = {kLeftAnkle, kRightAnkle};
    const std::array<int, 2> toes = {kLeftToe, kRightToe};
    for (int side = 0; side < 2; ++side) {
      const Vec3 hip = root + pelvis * skel_.offset[hips[side]];
      const Vec3& ankle = feet[side].heel;
      const Vec3 to_ankle = ankle - hip;
      const double dist = std::clamp(to_ankle.norm(), std::abs(thigh_ - shin_) + 1e-6, thigh_ + shin_ - 1e-9);
      const Vec3 axis = to_ankle.normalized();
      const double x = (thigh_ * thigh_ - shin_ * shin_ + dist * dist) / (2.0 * dist);
      const double h = std::sqrt(std::max(thigh_ * thigh_ - x * x, 0.0));
      const Vec3 pole = (fwd - fwd.dot(axis) * axis).normalized();
      const Vec3 knee = hip + x * axis + h * pole;
      const Vec3 ankle_reached = hip + dist * axis;

      G[hips[side]] = align_frames(skel_.offset[knees[side]], Vec3::UnitZ(), knee - hip, fwd);
      G[knees[side]] = align_frames(skel_.offset[ankles[side]], Vec3::UnitZ(), ankle_reached - knee, fwd);
      G[ankles[side]] = align_frames(skel_.offset[toes[side]], Vec3::UnitY(), feet[side].toe - ankle_reached,
                                     Vec3::UnitY());
      G[toes[side]] = G[ankles[side]];
    }

    out.root[i] = root;
    for (int j = 0; j < kJointCount; ++j) {
      const int parent = skel_.parent[j];
      const Mat3 local = parent == kRootParent ? G[j] : Mat3(G[parent].transpose() * G[j]);
      out.rotation(i, j) = orthonormalize_sixd(matrix_to_sixd_loose(local));
    }
    out.contacts[i] = {feet[0].stance, feet[1].stance, feet[0].stance, feet[1].stance};
  }

 private:
  static Rotation6D matrix_to_sixd_loose(const Mat3& R) {
    Rotation6D r;
    r << R.col(0), R.col(1);
    return r;
  }

  const Skeleton& skel_;
  const HeightField& terrain_;
  GaitParams p_;
  GaitPath path_;
  double foot_length_ = 0.0;
  double thigh_ = 0.0;
  double shin_ = 0.0;
};

}  // namespace

void GaitParams::validate() const {
  const bool ok = speed > 0.0 && speed <= 3.0 && cycle > 0.2 && duty > 0.2 && duty < 0.9 &&
                  pelvis_scale > 0.5 && pelvis_scale <= 1.0 && bob >= 0.0 && step_width >= 0.0 &&
                  lift >= 0.0 && hop_height >= 0.0;
  if (!ok) throw InvalidParams("gait parameters out of range");
}

bool gait_supported(int style) {
  const auto& names = style_names();
  if (style < 0 || style >= static_cast<int>(names.size())) return false;
  const std::string& n = names[style];
  return n == "walk" || n == "crouch" || n == "zombie" || n == "jump";
}

GaitParams gait_params(int style) {
  if (!gait_supported(style)) throw InvalidParams("no gait oscillator for this style");
  const std::string& n = style_names()[style];
  GaitParams p;
  if (n == "crouch") {
    p.speed = 0.5;
    p.cycle = 1.2;
    p.duty = 0.65;
    p.pelvis_scale = 0.72;
    p.bob = 0.01;
    p.lean = 0.45;
    p.step_width = 0.12;
    p.lift = 0.06;
    p.arm_swing = 0.2;
    p.arm_raise = 0.3;
    p.elbow = 0.8;
  } else if (n == "zombie") {
    p.speed = 0.35;
    p.cycle = 1.5;
    p.duty = 0.7;
    p.pelvis_scale = 0.93;
    p.bob = 0.03;
    p.lean = 0.2;
    p.step_width = 0.14;
    p.lift = 0.03;
    p.arm_swing = 0.05;
    p.arm_raise = 1.45;
    p.elbow = 0.05;
  } else if (n == "jump") {
    p.speed = 0.8;
    p.cycle = 0.75;
    p.duty = 0.45;
    p.pelvis_scale = 0.9;
    p.bob = 0.06;
    p.lean = 0.15;
    p.step_width = 0.1;
    p.lift = 0.04;
    p.arm_swing = 0.5;
    p.arm_raise = 0.2;
    p.elbow = 0.4;
    p.hop_height = 0.12;
  }
  return p;
}

Vec2 GaitPath::position(double speed, double t) const {
  const double a = heading(speed, t);
  if (std::abs(curvature) < 1e-9) return start + speed * t * facing_from_yaw(yaw);
  return start + Vec2(std::cos(yaw) - std::cos(a), std::sin(a) - std::sin(yaw)) / curvature;
}

double GaitPath::heading(double speed, double t) const { return yaw + curvature * speed * t; }

MotionSegment synthesize_gait(const Skeleton& skeleton, const HeightField& terrain,
                              const GaitParams& params, const GaitPath& path, int frames, double fps) {
  params.validate();
  if (frames < 1 || !(fps > 0.0)) throw InvalidParams("gait clip needs frames >= 1 and fps > 0");
  const Synth synth(skeleton, terrain, params, path);
  MotionSegment out(frames, fps);
  for (int i = 0; i < frames; ++i) synth.frame(i / fps, out, i);
  return out;
}

Vec2 centered_start(const GaitParams& params, const GaitPath& path, int frames, double fps,
                    const Vec2& center) {
  GaitPath p = path;
  p.start = Vec2::Zero();
  Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
  for (int i = 0; i < frames; ++i) {
    const Vec2 q = p.position(params.speed, i / fps);
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  return center - 0.5 * (lo + hi);
}

}  // namespace stride
