#pragma once

#include "stride/height_field.hpp"
#include "stride/motion.hpp"
#include "stride/rotation.hpp"

#include <array>
#include <vector>

namespace stride {

/// Target root position and desired ground-plane facing (sin yaw, cos yaw).
struct GoalFrame {
  Vec3 position = Vec3::Zero();
  Vec2 facing = Vec2(0.0, 1.0);

  double yaw() const { return yaw_from_facing(facing); }
  /// Throws InvalidParams unless position is finite and |facing| = 1 (1e-6).
  void validate() const;
  static GoalFrame from_yaw(const Vec3& position, double yaw) { return {position, facing_from_yaw(yaw)}; }
};

/// Pure yaw + translation: p -> R_y(-yaw) (p - translation).
struct CanonicalTransform {
  double yaw = 0.0;
  Vec3 translation = Vec3::Zero();

  static CanonicalTransform to_goal(const GoalFrame& goal) { return {goal.yaw(), goal.position}; }

  Vec3 apply_point(const Vec3& p) const;
  Vec3 inverse_point(const Vec3& q) const;
  /// Ground-plane direction (x, z), rotated only.
  Vec2 apply_direction(const Vec2& d) const;
  Vec2 inverse_direction(const Vec2& d) const;
  /// Pre-multiplies a global rotation by R_y(-yaw).
  Rotation6D apply_rotation(const Rotation6D& r) const;
  Rotation6D inverse_rotation(const Rotation6D& r) const;

  CanonicalTransform inverse() const;
  /// (a * b)(p) == a(b(p)).
  friend CanonicalTransform operator*(const CanonicalTransform& a, const CanonicalTransform& b);
};

/// Expresses the segment in the goal frame: roots and the root joint's
/// global rotation are transformed, parent-relative rotations are untouched.
MotionSegment canonicalize_motion(const MotionSegment& segment, const GoalFrame& goal,
                                  CanonicalTransform* transform = nullptr);
MotionSegment apply_transform(const MotionSegment& segment, const CanonicalTransform& t);
MotionSegment decanonicalize_motion(const MotionSegment& segment, const CanonicalTransform& t);

/// A world height field seen from a canonical frame: queries take canonical
/// (x, z) and return canonical heights (world height - translation.y).
enum class EdgeMode { kStrict, kClamp };

class TerrainView {
 public:
  /// kStrict queries throw OutOfBounds off the grid; kClamp queries see the
  /// terrain extended flat past its border.
  TerrainView(const HeightField& field, const CanonicalTransform& t = {}, EdgeMode edges = EdgeMode::kStrict)
      : field_(&field), t_(t), edges_(edges) {}

  const HeightField& field() const { return *field_; }
  const CanonicalTransform& transform() const { return t_; }

  bool contains(double x, double z) const;
  double height_at(double x, double z) const;
  /// Height and its gradient with respect to canonical x and z.
  HeightSample sample(double x, double z) const;

 private:
  Vec2 to_world(double x, double z) const;

  const HeightField* field_;
  CanonicalTransform t_;
  EdgeMode edges_;
};

inline constexpr int kSceneGridSide = 12;
inline constexpr int kSceneGridSize = kSceneGridSide * kSceneGridSide;
inline constexpr double kSceneGridExtent = 1.2;  // meters per side

/// Per-frame scene grids plus the root height relative to the reference.
struct SceneEmbedding {
  std::vector<std::array<double, kSceneGridSize>> grids;
  std::vector<double> root_height_rel;

  int frame_count() const { return static_cast<int>(grids.size()); }
};

/// Lattice offsets (lx, lz) of the scene grid in the root's heading frame,
/// row-major with rows along lz and columns along lx.
const std::array<Vec2, kSceneGridSize>& scene_grid_offsets();

/// One grid: terrain height minus `reference` at the lattice centered on
/// `root_xz` and rotated by `yaw`. Throws OutOfBounds; no clamping.
void sample_scene_grid(const TerrainView& terrain, const Vec2& root_xz, double yaw, double reference,
                       double* out);

/// Embedding of a segment expressed in the view's frame.
SceneEmbedding sample_scene_embedding(const TerrainView& terrain, const MotionSegment& segment,
                                      double reference = 0.0);
/// World-frame segment and goal: heights are relative to the goal height.
SceneEmbedding sample_scene_embedding(const HeightField& field, const MotionSegment& segment,
                                      const GoalFrame& goal);

}  // namespace stride
