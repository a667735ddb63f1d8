#include "stride/scene.hpp"

#include "stride/rotation.hpp"
#include "stride/terrain.hpp"

#include <cmath>

namespace stride {

void GoalFrame::validate() const {
  if (!position.allFinite()) throw InvalidParams("goal position is not finite");
  if (!facing.allFinite() || std::abs(facing.norm() - 1.0) > 1e-6) {
    throw InvalidParams("goal facing must be a unit vector");
  }
}

namespace {

Vec3 rotate_point(const Vec3& p, double yaw) {
  const Vec2 g = rotate_ground(Vec2(p.x(), p.z()), yaw);
  return {g.x(), p.y(), g.y()};
}

Rotation6D rotate_sixd(const Rotation6D& r, double yaw) {
  // Left-multiplying by R_y acts on each encoded column independently.
  Rotation6D out;
  out.head<3>() = rotate_point(r.head<3>(), yaw);
  out.tail<3>() = rotate_point(r.tail<3>(), yaw);
  return out;
}

}  // namespace

Vec3 CanonicalTransform::apply_point(const Vec3& p) const { return rotate_point(p - translation, -yaw); }
Vec3 CanonicalTransform::inverse_point(const Vec3& q) const { return rotate_point(q, yaw) + translation; }
Vec2 CanonicalTransform::apply_direction(const Vec2& d) const { return rotate_ground(d, -yaw); }
Vec2 CanonicalTransform::inverse_direction(const Vec2& d) const { return rotate_ground(d, yaw); }
Rotation6D CanonicalTransform::apply_rotation(const Rotation6D& r) const { return rotate_sixd(r, -yaw); }
Rotation6D CanonicalTransform::inverse_rotation(const Rotation6D& r) const { return rotate_sixd(r, yaw); }

CanonicalTransform CanonicalTransform::inverse() const {
  return {-yaw, -rotate_point(translation, -yaw)};
}

CanonicalTransform operator*(const CanonicalTransform& a, const CanonicalTransform& b) {
  return {a.yaw + b.yaw, b.translation + rotate_point(a.translation, b.yaw)};
}

MotionSegment apply_transform(const MotionSegment& segment, const CanonicalTransform& t) {
  MotionSegment out = segment;
  for (int i = 0; i < out.frame_count(); ++i) {
    out.root[i] = t.apply_point(segment.root[i]);
    out.rotation(i, 0) = t.apply_rotation(segment.rotation(i, 0));
  }
  return out;
}

MotionSegment canonicalize_motion(const MotionSegment& segment, const GoalFrame& goal,
                                  CanonicalTransform* transform) {
  const CanonicalTransform t = CanonicalTransform::to_goal(goal);
  if (transform) *transform = t;
  return apply_transform(segment, t);
}

MotionSegment decanonicalize_motion(const MotionSegment& segment, const CanonicalTransform& t) {
  MotionSegment out = segment;
  for (int i = 0; i < out.frame_count(); ++i) {
    out.root[i] = t.inverse_point(segment.root[i]);
    out.rotation(i, 0) = t.inverse_rotation(segment.rotation(i, 0));
  }
  return out;
}

Vec2 TerrainView::to_world(double x, double z) const {
  return rotate_ground(Vec2(x, z), t_.yaw) + Vec2(t_.translation.x(), t_.translation.z());
}

bool TerrainView::contains(double x, double z) const {
  const Vec2 w = to_world(x, z);
  return edges_ == EdgeMode::kClamp || field_->contains(w.x(), w.y());
}

double TerrainView::height_at(double x, double z) const {
  return sample(x, z).height;
}

HeightSample TerrainView::sample(double x, double z) const {
  const Vec2 w = to_world(x, z);
  HeightSample s = edges_ == EdgeMode::kClamp ? field_->sample_clamped(w.x(), w.y()) : field_->sample(w.x(), w.y());
  s.height -= t_.translation.y();
  // Chain rule through world = R_y(yaw) canonical.
  const double c = std::cos(t_.yaw);
  const double sn = std::sin(t_.yaw);
  const double dx = s.dx * c - s.dz * sn;
  const double dz = s.dx * sn + s.dz * c;
  s.dx = dx;
  s.dz = dz;
  return s;
}

const std::array<Vec2, kSceneGridSize>& scene_grid_offsets() {
  static const std::array<Vec2, kSceneGridSize> offsets = [] {
    std::array<Vec2, kSceneGridSize> o;
    const double spacing = kSceneGridExtent / (kSceneGridSide - 1);
    for (int r = 0; r < kSceneGridSide; ++r) {
      for (int c = 0; c < kSceneGridSide; ++c) {
        o[r * kSceneGridSide + c] = Vec2(-0.5 * kSceneGridExtent + c * spacing,
                                         -0.5 * kSceneGridExtent + r * spacing);
      }
    }
    return o;
  }();
  return offsets;
}

void sample_scene_grid(const TerrainView& terrain, const Vec2& root_xz, double yaw, double reference,
                       double* out) {
  const auto& offsets = scene_grid_offsets();
  for (int k = 0; k < kSceneGridSize; ++k) {
    const Vec2 q = root_xz + rotate_ground(offsets[k], yaw);
    out[k] = terrain.height_at(q.x(), q.y()) - reference;
  }
}

SceneEmbedding sample_scene_embedding(const TerrainView& terrain, const MotionSegment& segment,
                                      double reference) {
  SceneEmbedding e;
  const int n = segment.frame_count();
  e.grids.resize(n);
  e.root_height_rel.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec3& root = segment.root[i];
    const double yaw = heading_yaw(sixd_to_matrix(segment.rotation(i, 0)));
    sample_scene_grid(terrain, Vec2(root.x(), root.z()), yaw, reference, e.grids[i].data());
    e.root_height_rel[i] = root.y() - reference;
  }
  return e;
}

SceneEmbedding sample_scene_embedding(const HeightField& field, const MotionSegment& segment,
                                      const GoalFrame& goal) {
  return sample_scene_embedding(TerrainView(field), segment, goal.position.y());
}

}  // namespace stride
