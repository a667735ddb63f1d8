#include "stride/kinematics.hpp"
#include "stride/object.hpp"
#include "stride/scene.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace stride {
namespace {

TEST(Canonicalize, IdentityGoalLeavesSegmentUnchanged) {
  std::mt19937_64 rng(1);
  const auto rs = testing::random_segment(rng, 4);
  CanonicalTransform t;
  const MotionSegment c = canonicalize_motion(rs.segment, GoalFrame{}, &t);
  EXPECT_EQ(t.yaw, 0.0);
  EXPECT_EQ(t.translation, Vec3::Zero());
  EXPECT_EQ(c.root, rs.segment.root);
  EXPECT_EQ(c.rotations, rs.segment.rotations);
}

TEST(Canonicalize, PureTranslation) {
  MotionSegment seg(1);
  seg.root[0] = Vec3(3, 0, 0);
  const MotionSegment c = canonicalize_motion(seg, GoalFrame{Vec3(2, 0, 0), Vec2(0, 1)});
  EXPECT_LT((c.root[0] - Vec3(1, 0, 0)).norm(), 1e-15);
}

TEST(Canonicalize, GoalFacingPlusX) {
  MotionSegment seg(1);
  seg.root[0] = Vec3(1, 0, 0);
  seg.rotation(0, 0) = matrix_to_sixd(rot_y(kPi / 2));  // facing the goal direction
  const MotionSegment c = canonicalize_motion(seg, GoalFrame{Vec3::Zero(), Vec2(1, 0)});
  EXPECT_LT((c.root[0] - Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_NEAR(heading_yaw(sixd_to_matrix(c.rotation(0, 0))), 0.0, 1e-15);
}

TEST(Canonicalize, GoalFacingMapsToPlusZ) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int k = 0; k < 50; ++k) {
    const double yaw = u(rng);
    const GoalFrame g = GoalFrame::from_yaw(Vec3(u(rng), u(rng), u(rng)), yaw);
    const CanonicalTransform t = CanonicalTransform::to_goal(g);
    EXPECT_LT((t.apply_direction(g.facing) - Vec2(0, 1)).norm(), 1e-12);
    EXPECT_LT(t.apply_point(g.position).norm(), 1e-12);
  }
}

TEST(Canonicalize, RoundTripOnThousandSegments) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto rs = testing::random_segment(rng, 3, kPi);
    const GoalFrame g = GoalFrame::from_yaw(Vec3(u(rng), 0.2 * u(rng), u(rng)), u(rng));
    CanonicalTransform t;
    const MotionSegment c = canonicalize_motion(rs.segment, g, &t);
    const MotionSegment back = decanonicalize_motion(c, t);
    for (size_t r = 0; r < back.rotations.size(); ++r) {
      worst = std::max(worst, (back.rotations[r] - rs.segment.rotations[r]).cwiseAbs().maxCoeff());
    }
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, (back.root[i] - rs.segment.root[i]).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Canonicalize, IsRigid) {
  std::mt19937_64 rng(4);
  const Skeleton& s = default_skeleton();
  const auto rs = testing::random_segment(rng, 3);
  const GoalFrame g = GoalFrame::from_yaw(Vec3(1.5, 0.3, -2.0), 2.2);
  const JointPositions a = forward_kinematics(s, rs.segment);
  const JointPositions b = forward_kinematics(s, canonicalize_motion(rs.segment, g));
  for (size_t p = 0; p < a.points.size(); ++p) {
    for (size_t q = p + 1; q < a.points.size(); q += 7) {
      EXPECT_NEAR((a.points[p] - a.points[q]).norm(), (b.points[p] - b.points[q]).norm(), 1e-12);
    }
  }
}

TEST(CanonicalTransform, ComposeAndInverse) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const CanonicalTransform a{u(rng), Vec3(u(rng), u(rng), u(rng))};
    const CanonicalTransform b{u(rng), Vec3(u(rng), u(rng), u(rng))};
    const Vec3 p(u(rng), u(rng), u(rng));
    EXPECT_LT(((a * b).apply_point(p) - a.apply_point(b.apply_point(p))).norm(), 1e-12);
    EXPECT_LT((a.inverse().apply_point(a.apply_point(p)) - p).norm(), 1e-12);
    EXPECT_LT(((a * a.inverse()).apply_point(p) - p).norm(), 1e-12);
    EXPECT_LT((a.apply_point(p) - a.inverse().inverse_point(p)).norm(), 1e-12);
  }
}

TEST(TerrainView, GradientMatchesFiniteDifferences) {
  TerrainParams params;
  params.rows = params.cols = 81;
  params.origin = Vec2(-2, -2);
  const HeightField f = generate_terrain(3, TerrainKind::kFractal, params);
  const TerrainView v(f, CanonicalTransform{0.7, Vec3(0.3, 0.5, -0.2)});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double x = u(rng), z = u(rng);
    const HeightSample s = v.sample(x, z);
    const double e = 1e-7;
    EXPECT_NEAR(s.dx, (v.height_at(x + e, z) - v.height_at(x - e, z)) / (2 * e), 1e-5);
    EXPECT_NEAR(s.dz, (v.height_at(x, z + e) - v.height_at(x, z - e)) / (2 * e), 1e-5);
  }
}

TEST(SceneGrid, OffsetsSpanTheGrid) {
  const auto& o = scene_grid_offsets();
  EXPECT_EQ(o[0], Vec2(-0.6, -0.6));
  EXPECT_NEAR(o[kSceneGridSize - 1].x(), 0.6, 1e-15);
  EXPECT_NEAR(o[kSceneGridSize - 1].y(), 0.6, 1e-15);
  EXPECT_NEAR(o[1].x() - o[0].x(), 1.2 / 11, 1e-15);
  EXPECT_NEAR(o[kSceneGridSide].y() - o[0].y(), 1.2 / 11, 1e-15);
}

TEST(SceneEmbedding, FlatTerrainIsConstant) {
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  std::mt19937_64 rng(7);
  auto seg = testing::random_segment(rng, 5).segment;
  for (auto& r : seg.root) r = Vec3(0.3 * r.x(), r.y(), 0.3 * r.z());
  for (double goal_h : {0.0, 1.0, -0.35}) {
    const SceneEmbedding e = sample_scene_embedding(f, seg, GoalFrame{Vec3(0.2, goal_h, 0.1), Vec2(0, 1)});
    ASSERT_EQ(e.frame_count(), 5);
    for (int i = 0; i < 5; ++i) {
      for (double v : e.grids[i]) EXPECT_NEAR(v, -goal_h, 1e-9);
      EXPECT_NEAR(e.root_height_rel[i], seg.root[i].y() - goal_h, 1e-12);
    }
  }
}

// Rotates the field a quarter turn about the world origin by permuting
// nodes: new (r, c) takes old (c, n - 1 - r). Heights shift by `lift`.
HeightField quarter_turn(const HeightField& f, double lift, const Vec2& shift) {
  const int n = f.rows();
  std::vector<double> h(f.heights().size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) h[r * n + c] = f.node(c, n - 1 - r) + lift;
  }
  return HeightField(n, n, f.cell_size(), f.origin() + shift, std::move(h));
}

TEST(SceneEmbedding, InvariantToJointYawAndTranslation) {
  TerrainParams params;
  params.rows = params.cols = 121;
  params.origin = Vec2(-3, -3);
  const HeightField f = generate_terrain(8, TerrainKind::kFractal, params);
  std::mt19937_64 rng(9);
  auto seg = testing::random_segment(rng, 6).segment;
  for (auto& r : seg.root) r = Vec3(0.4 * r.x(), r.y(), 0.4 * r.z());
  const GoalFrame goal = GoalFrame::from_yaw(Vec3(0.5, 0.2, -0.3), 0.4);

  const Vec2 shift(0.5, -0.25);
  const double lift = 0.3;
  const HeightField f2 = quarter_turn(f, lift, shift);
  // Applying a transform with yaw -pi/2 maps p -> R_y(pi/2) p.
  const CanonicalTransform move{-kPi / 2, Vec3::Zero()};
  MotionSegment seg2 = apply_transform(seg, move);
  for (auto& r : seg2.root) r += Vec3(shift.x(), lift, shift.y());
  GoalFrame goal2 = goal;
  goal2.position = move.apply_point(goal.position) + Vec3(shift.x(), lift, shift.y());
  goal2.facing = move.apply_direction(goal.facing);

  const SceneEmbedding a = sample_scene_embedding(f, seg, goal);
  const SceneEmbedding b = sample_scene_embedding(f2, seg2, goal2);
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    for (int k = 0; k < kSceneGridSize; ++k) worst = std::max(worst, std::abs(a.grids[i][k] - b.grids[i][k]));
    worst = std::max(worst, std::abs(a.root_height_rel[i] - b.root_height_rel[i]));
  }
  EXPECT_LT(worst, 1e-5);
  // The canonical view of either world gives the same numbers.
  CanonicalTransform t;
  const MotionSegment c = canonicalize_motion(seg, goal, &t);
  const SceneEmbedding e = sample_scene_embedding(TerrainView(f, t), c);
  for (int i = 0; i < 6; ++i) {
    for (int k = 0; k < kSceneGridSize; ++k) EXPECT_NEAR(e.grids[i][k], a.grids[i][k], 1e-9);
  }
}

TEST(SceneEmbedding, OffTerrainThrows) {
  const HeightField f(11, 11, 0.1, Vec2(-0.5, -0.5), 0.0);
  MotionSegment seg(1);
  seg.root[0] = Vec3(0.3, 0.9, 0.0);
  EXPECT_THROW(sample_scene_embedding(f, seg, GoalFrame{}), OutOfBounds);
}

TEST(PointTriangle, RegionsAndDegenerates) {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  EXPECT_NEAR(point_triangle_distance(Vec3(0.2, 0.2, 0.5), a, b, c), 0.5, 1e-15);
  EXPECT_NEAR(point_triangle_distance(Vec3(-1, -1, 0), a, b, c), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(point_triangle_distance(Vec3(0.5, -2, 0), a, b, c), 2.0, 1e-15);
  EXPECT_NEAR(point_triangle_distance(Vec3(1, 1, 0), a, b, c), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(point_triangle_distance(Vec3(0, 0, 2), a, a, a), 2.0, 1e-15);
  EXPECT_NEAR(point_triangle_distance(Vec3(0.5, 1, 0), a, b, b), 1.0, 1e-15);
}

TEST(Bps, BasisIsOnUnitSphereAndDeterministic) {
  const auto a = bps_basis();
  const auto b = bps_basis();
  ASSERT_EQ(a.size(), 512u);
  EXPECT_EQ(a, b);
  for (const auto& p : a) EXPECT_NEAR(p.norm(), 1.0, 1e-12);
  EXPECT_NE(bps_basis(1), a);
}

TEST(Bps, UnitSphereObjectHasZeroDistances) {
  const TriangleMesh m = sphere_mesh(Vec3::Zero(), 1.0, 48, 96);
  const ObjectEncoding e = bps_object_encoding(m, {Vec3::Zero(), Vec3::Zero()}, Vec3::Zero());
  for (double d : e.bps_dist) EXPECT_LT(d, 3e-3);  // tessellation sag of a 48-ring sphere
}

TEST(Bps, PointObjectGivesUnitDistances) {
  TriangleMesh m;
  m.vertices = {Vec3(1, 2, 3)};
  m.triangles = {{0, 0, 0}};
  const ObjectEncoding e = bps_object_encoding(m, {Vec3::Zero(), Vec3::Zero()}, Vec3::Zero());
  for (double d : e.bps_dist) EXPECT_NEAR(d, 1.0, 1e-12);
}

TEST(Bps, TranslationInvariantAndMonotoneUnderDilation) {
  const TriangleMesh a = box_mesh(Vec3::Zero(), Vec3(0.3, 0.2, 0.4));
  const TriangleMesh b = box_mesh(Vec3(5, -1, 2), Vec3(0.3, 0.2, 0.4));
  const TriangleMesh big = box_mesh(Vec3::Zero(), Vec3(0.45, 0.3, 0.6));
  const std::array<Vec3, 2> hands{Vec3::Zero(), Vec3::Zero()};
  const ObjectEncoding ea = bps_object_encoding(a, hands, Vec3::Zero());
  const ObjectEncoding eb = bps_object_encoding(b, hands, Vec3::Zero());
  const ObjectEncoding ebig = bps_object_encoding(big, hands, Vec3::Zero());
  for (int k = 0; k < kBpsPoints; ++k) {
    EXPECT_NEAR(ea.bps_dist[k], eb.bps_dist[k], 1e-12);
    EXPECT_LT(ebig.bps_dist[k], ea.bps_dist[k]);
  }
}

TEST(Bps, CenterVoxelOnlyAndZeroedElsewhere) {
  const TriangleMesh m = box_mesh(Vec3::Zero(), Vec3(0.8, 0.8, 0.8));
  VoxelGrid v;
  v.bounds = mesh_bounds(m);
  v.occupied[VoxelGrid::index(4, 4, 4)] = 1;
  const Vec3 hip = v.center(4, 4, 4);
  const ObjectEncoding e = bps_object_encoding(m, v, {Vec3(1, 0, 0), Vec3(-1, 0, 0.2)}, hip);
  for (int k = 0; k < kVoxelCount; ++k) {
    if (k == VoxelGrid::index(4, 4, 4)) {
      EXPECT_EQ(e.hip_dist[k], 0.0);
      EXPECT_NEAR(e.hand_dist[k], (Vec3(0, 0, 0.1) - hip).norm(), 1e-15);
    } else {
      EXPECT_EQ(e.hip_dist[k], 0.0);
      EXPECT_EQ(e.hand_dist[k], 0.0);
    }
  }
  const auto flat = e.flatten();
  ASSERT_EQ(flat.size(), 2048u);
  for (int k = 1536; k < 2048; ++k) EXPECT_EQ(flat[k], 0.0);
}

TEST(Bps, VoxelizedBoxOccupiesOnlyTheShell) {
  const TriangleMesh m = box_mesh(Vec3::Zero(), Vec3(1, 1, 1));
  const VoxelGrid v = voxelize(m);
  int count = 0;
  for (auto o : v.occupied) count += o;
  EXPECT_EQ(count, 512 - 6 * 6 * 6);
  EXPECT_FALSE(v.occupied[VoxelGrid::index(3, 3, 3)]);
  EXPECT_THROW(voxelize(TriangleMesh{}), EmptyMesh);
}

TEST(Meshes, BoxAndSphereAreClosedAndOutward) {
  const MeshAudit box = audit_mesh(box_mesh(Vec3(1, 2, 3), Vec3(0.5, 1, 1.5)));
  EXPECT_TRUE(box.watertight());
  EXPECT_NEAR(box.signed_volume, 6.0, 1e-12);
  const MeshAudit sph = audit_mesh(sphere_mesh(Vec3::Zero(), 1.0));
  EXPECT_TRUE(sph.watertight());
  EXPECT_NEAR(sph.signed_volume, 4.0 / 3.0 * kPi, 0.05);
}

TEST(Sdf, BoxGridValuesAndGradient) {
  const SdfGrid g = box_sdf(Vec3::Zero(), Vec3(0.5, 0.5, 0.5), 0.05, 0.3);
  EXPECT_NEAR(g.sample(Vec3(0, 0, 0)).value, -0.5, 1e-9);
  EXPECT_NEAR(g.sample(Vec3(0.7, 0, 0)).value, 0.2, 1e-9);
  const SdfSample s = g.sample(Vec3(0.45, 0.01, 0.02));
  EXPECT_NEAR(s.value, -0.05, 1e-9);
  EXPECT_NEAR(s.gradient.x(), 1.0, 1e-9);
  EXPECT_THROW(g.sample(Vec3(2, 0, 0)), OutOfBounds);
}

TEST(Sdf, TrilinearGradientMatchesFiniteDifferences) {
  const SdfGrid g = box_sdf(Vec3(0.1, 0.2, 0.3), Vec3(0.4, 0.3, 0.2), 0.07, 0.2);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 50; ++k) {
    const Vec3 p = Vec3(0.1, 0.2, 0.3) + Vec3(u(rng), u(rng), u(rng));
    const SdfSample s = g.sample(p);
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = 1e-7;
      EXPECT_NEAR(s.gradient[a], (g.sample(p + e).value - g.sample(p - e).value) / 2e-7, 1e-5);
    }
  }
}

TEST(Sdf, MeshSdfMatchesAnalyticBox) {
  const Vec3 c(0.2, 0.1, -0.1);
  const Vec3 h(0.3, 0.25, 0.2);
  const SdfGrid a = mesh_sdf(box_mesh(c, h), 0.05, 0.15);
  const SdfGrid b = box_sdf(c, h, 0.05, 0.15);
  ASSERT_EQ(a.values().size(), b.values().size());
  for (size_t k = 0; k < a.values().size(); ++k) {
    EXPECT_NEAR(a.values()[k], b.values()[k], 1e-9);
  }
}

}  // namespace
}  // namespace stride
