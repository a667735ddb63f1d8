#include "stride/fitting.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace stride {
namespace {

const Skeleton& skel() { return default_skeleton(); }

// Foot-only pose: every joint parked high above the patch except the feet.
struct Pose {
  MotionSegment segment;
  JointPositions positions;
};

Pose feet_pose(int frames) {
  Pose p{MotionSegment(frames), JointPositions(frames)};
  for (int i = 0; i < frames; ++i) {
    for (int j = 0; j < kJointCount; ++j) p.positions.at(i, j) = Vec3(0, 1, 0);
    p.segment.contacts[i] = {0, 0, 0, 0};
  }
  return p;
}

// Places foot channel c of frame i at ground location (x, z), `above` meters
// over the terrain (measured from the foot bottom).
void place(Pose& p, const HeightField& f, int i, int c, double x, double z, double above, bool contact) {
  p.positions.at(i, skel().foot_joints[c]) = Vec3(x, f.height_at(x, z) + skel().foot_radius + above, z);
  p.segment.contacts[i][c] = contact ? 1 : 0;
}

TerrainPatch patch_from(const HeightField& source, int id, double yaw = 0.0) {
  TerrainPatch p = sample_patch(source, Vec2::Zero(), yaw);
  p.id = id;
  return p;
}

HeightField fractal(std::uint64_t seed) {
  TerrainParams params;
  params.rows = params.cols = 101;
  params.origin = Vec2(-2.5, -2.5);
  return generate_terrain(seed, TerrainKind::kFractal, params);
}

// A walking clip drawn on `f`: alternating planted feet, swing feet raised.
Pose walk_on(const HeightField& f, std::uint64_t seed, int frames = 60) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  Pose p = feet_pose(frames);
  for (int i = 0; i < frames; ++i) {
    const double z = -1.2 + 2.4 * i / (frames - 1);
    const bool left_down = (i / 10) % 2 == 0;
    for (int c = 0; c < kFootCount; ++c) {
      const bool left = c == 0 || c == 2;
      const bool toe = c >= 2;
      const double x = (left ? 0.1 : -0.1) + jitter(rng);
      const double zz = z + (toe ? 0.14 : 0.0) + jitter(rng);
      const bool contact = left == left_down;
      place(p, f, i, c, x, zz, contact ? 0.0 : 0.08, contact);
    }
  }
  return p;
}

TEST(FitError, FeetOnTerrainGiveZero) {
  const HeightField f = fractal(1);
  const Pose p = walk_on(f, 2);
  const FitResult r = fit_error(skel(), p.segment, p.positions, f, 0.0);
  EXPECT_LT(r.error_contact, 1e-20);
  EXPECT_EQ(r.error_penetration, 0.0);
  EXPECT_EQ(r.error_jump, 0.0);
  EXPECT_LT(r.error_total, 1e-20);
}

TEST(FitError, SinglePenetratingSwingFoot) {
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  Pose p = feet_pose(3);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < kFootCount; ++c) place(p, f, i, c, 0.1 * c, 0.2 * i, 0.1, false);
  }
  place(p, f, 1, 2, 0.3, 0.2, -0.05, false);
  const FitResult r = fit_error(skel(), p.segment, p.positions, f, 0.0);
  EXPECT_NEAR(r.error_penetration, 0.05, 1e-12);
  EXPECT_EQ(r.error_contact, 0.0);
  EXPECT_EQ(r.error_jump, 0.0);
}

TEST(FitError, JumpTermOnlyForJumpGait) {
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  Pose p = feet_pose(1);
  for (int c = 0; c < kFootCount; ++c) place(p, f, 0, c, 0.1 * c, 0.0, 0.1, false);
  place(p, f, 0, 0, 0.0, 0.0, 0.5, false);
  FitOptions jump;
  jump.jump_gait = true;
  const FitResult r = fit_error(skel(), p.segment, p.positions, f, 0.0, jump);
  EXPECT_NEAR(r.error_jump, 0.2, 1e-12);
  EXPECT_EQ(r.error_penetration, 0.0);
  EXPECT_EQ(fit_error(skel(), p.segment, p.positions, f, 0.0).error_jump, 0.0);
}

TEST(FitError, ContactResidualIsSquared) {
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  Pose p = feet_pose(1);
  for (int c = 0; c < kFootCount; ++c) place(p, f, 0, c, 0.1 * c, 0.0, 0.0, true);
  place(p, f, 0, 1, 0.1, 0.0, 0.2, true);
  const FitResult r = fit_error(skel(), p.segment, p.positions, f, 0.0);
  EXPECT_NEAR(r.error_contact, 0.04, 1e-12);
  // A contact foot below ground counts only in the contact term.
  place(p, f, 0, 1, 0.1, 0.0, -0.2, true);
  const FitResult below = fit_error(skel(), p.segment, p.positions, f, 0.0);
  EXPECT_NEAR(below.error_contact, 0.04, 1e-12);
  EXPECT_EQ(below.error_penetration, 0.0);
}

TEST(FitError, OffsetRaisesTerrain) {
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  Pose p = feet_pose(1);
  for (int c = 0; c < kFootCount; ++c) place(p, f, 0, c, 0.1 * c, 0.0, 0.0, c < 2);
  const FitResult r = fit_error(skel(), p.segment, p.positions, f, 0.1);
  EXPECT_NEAR(r.error_contact, 2 * 0.01, 1e-12);
  EXPECT_NEAR(r.error_penetration, 2 * 0.1, 1e-12);
  EXPECT_EQ(r.vertical_offset, 0.1);
}

TEST(FitError, OffPatchThrows) {
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  Pose p = feet_pose(1);
  for (int c = 0; c < kFootCount; ++c) place(p, f, 0, c, 0.0, 0.0, 0.0, true);
  p.positions.at(0, skel().foot_joints[3]) = Vec3(2.5, 0.0, 0.0);
  EXPECT_THROW(fit_error(skel(), p.segment, p.positions, f, 0.0), OutOfBounds);
}

TEST(FitError, ComponentsNonNegativeAndScaleCovariant) {
  // Flat ground at 0 so residual heights scale with the foot heights.
  const HeightField f(41, 41, 0.1, Vec2(-2, -2), 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.6);
  std::bernoulli_distribution coin(0.5);
  FitOptions jump;
  jump.jump_gait = true;
  jump.jump_threshold = 0.0;  // l = 0 keeps the jump term linear in the heights
  for (int trial = 0; trial < 20; ++trial) {
    Pose p = feet_pose(5);
    Pose q = feet_pose(5);
    for (int i = 0; i < 5; ++i) {
      for (int c = 0; c < kFootCount; ++c) {
        const double above = u(rng);
        const bool contact = coin(rng);
        place(p, f, i, c, 0.1 * c, 0.1 * i, above, contact);
        place(q, f, i, c, 0.1 * c, 0.1 * i, 2 * above, contact);
      }
    }
    const FitResult a = fit_error(skel(), p.segment, p.positions, f, 0.0, jump);
    const FitResult b = fit_error(skel(), q.segment, q.positions, f, 0.0, jump);
    for (const FitResult& r : {a, b}) {
      EXPECT_GE(r.error_contact, 0.0);
      EXPECT_GE(r.error_penetration, 0.0);
      EXPECT_GE(r.error_jump, 0.0);
      EXPECT_NEAR(r.error_total, r.error_contact + r.error_penetration + r.error_jump, 1e-9);
    }
    EXPECT_NEAR(b.error_contact, 4 * a.error_contact, 1e-9);
    EXPECT_NEAR(b.error_penetration, 2 * a.error_penetration, 1e-9);
    EXPECT_NEAR(b.error_jump, 2 * a.error_jump, 1e-9);
  }
}

TEST(BestOffset, IsMeanContactResidualAndMinimizesContactError) {
  const HeightField f = fractal(4);
  Pose p = walk_on(f, 5, 20);
  for (auto& pt : p.positions.points) pt.y() += 0.37;
  const double off = best_vertical_offset(skel(), p.segment, p.positions, f);
  EXPECT_NEAR(off, 0.37, 1e-12);
  EXPECT_LT(fit_error(skel(), p.segment, p.positions, f, off).error_contact, 1e-20);
  // Without contacts the lowest foot lands on the terrain.
  for (auto& c : p.segment.contacts) c = {0, 0, 0, 0};
  const double lowest = best_vertical_offset(skel(), p.segment, p.positions, f);
  EXPECT_NEAR(lowest, 0.37, 1e-12);
  EXPECT_EQ(fit_error(skel(), p.segment, p.positions, f, lowest).error_penetration, 0.0);
}

TEST(PatchSearch, OwnTerrainRanksFirst) {
  std::vector<TerrainPatch> bank;
  for (int k = 0; k < 12; ++k) bank.push_back(patch_from(fractal(100 + k), k));
  const int own = 7;
  const Pose p = walk_on(bank[own].field, 9);
  const auto top = patch_search(skel(), p.segment, p.positions, bank);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].patch_id, own);
  EXPECT_LT(top[0].error_total, 1e-6);
  EXPECT_LE(top[0].error_total, top[1].error_total);
  EXPECT_LE(top[1].error_total, top[2].error_total);
}

TEST(PatchSearch, FlatBeatsRamp) {
  TerrainParams params;
  params.rows = params.cols = 101;
  params.origin = Vec2(-2.5, -2.5);
  params.slope_deg = 30.0;
  std::vector<TerrainPatch> bank = {
      patch_from(generate_terrain(1, TerrainKind::kSlope, params), 0),
      patch_from(generate_terrain(1, TerrainKind::kFlat, params), 1)};
  const Pose p = walk_on(bank[1].field, 11);
  const auto top = patch_search(skel(), p.segment, p.positions, bank);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].patch_id, 1);
  EXPECT_GT(top[1].error_total, top[0].error_total);
}

TEST(PatchSearch, TiesBrokenByPatchId) {
  const HeightField f = fractal(21);
  std::vector<TerrainPatch> bank = {patch_from(f, 5), patch_from(f, 2), patch_from(f, 9)};
  const Pose p = walk_on(fractal(22), 3);
  const auto top = patch_search(skel(), p.segment, p.positions, bank);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].patch_id, 2);
  EXPECT_EQ(top[1].patch_id, 5);
  EXPECT_EQ(top[2].patch_id, 9);
}

TEST(PatchSearch, MatchesExhaustiveSortOracle) {
  std::vector<TerrainPatch> bank;
  for (int k = 0; k < 100; ++k) bank.push_back(patch_from(fractal(300 + k % 25), k, 0.5 * kPi * (k / 25)));
  // A few patches the clip cannot stay on.
  for (int k = 0; k < 3; ++k) {
    TerrainPatch small;
    small.field = HeightField(5, 5, 0.1, Vec2(-0.2, -0.2), 0.0);
    small.id = 100 + k;
    bank.push_back(small);
  }
  FitOptions opts;
  opts.jump_gait = true;
  opts.jump_threshold = 0.05;
  const Pose p = walk_on(fractal(999), 17);
  const auto parallel = patch_search(skel(), p.segment, p.positions, bank, opts, 3, 4);

  std::vector<FitResult> all;
  for (const auto& patch : bank) {
    if (patch.field.extent_x() < 1.0) continue;
    const double off = best_vertical_offset(skel(), p.segment, p.positions, patch.field);
    FitResult r = fit_error(skel(), p.segment, p.positions, patch.field, off, opts);
    r.patch_id = patch.id;
    all.push_back(r);
  }
  std::stable_sort(all.begin(), all.end(), [](const FitResult& a, const FitResult& b) {
    return std::tie(a.error_total, a.patch_id) < std::tie(b.error_total, b.patch_id);
  });
  ASSERT_EQ(parallel.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(parallel[k].patch_id, all[k].patch_id);
    EXPECT_EQ(parallel[k].error_total, all[k].error_total);
  }
  const auto everything = patch_search(skel(), p.segment, p.positions, bank, opts, 1000, 1);
  EXPECT_EQ(everything.size(), all.size());
}

TEST(PatchSearch, NoValidPatch) {
  TerrainPatch small;
  small.field = HeightField(3, 3, 0.1, Vec2(5, 5), 0.0);
  const Pose p = walk_on(fractal(1), 1, 5);
  EXPECT_THROW(patch_search(skel(), p.segment, p.positions, {small}), NoValidPatch);
}

TEST(ContactConstraints, OnePerContactLabel) {
  const HeightField f = fractal(6);
  const Pose p = walk_on(f, 6, 30);
  const auto cs = contact_constraints(skel(), p.segment, p.positions);
  int expected = 0;
  for (const auto& c : p.segment.contacts) expected += c[0] + c[1] + c[2] + c[3];
  ASSERT_EQ(static_cast<int>(cs.size()), expected);
  for (const auto& c : cs) {
    EXPECT_TRUE(p.segment.contacts[c.frame][c.foot]);
    EXPECT_NEAR(c.height, f.height_at(c.location.x(), c.location.y()), 1e-12);
  }
}

std::vector<ContactConstraint> random_constraints(std::mt19937_64& rng, int n, const HeightField& f,
                                                  double spread) {
  std::uniform_real_distribution<double> pos(-1.8, 1.8);
  std::uniform_real_distribution<double> dh(-spread, spread);
  std::vector<ContactConstraint> cs;
  for (int k = 0; k < n; ++k) {
    const Vec2 q(pos(rng), pos(rng));
    cs.push_back({q, f.height_at(q.x(), q.y()) + dh(rng), k, k % 4});
  }
  return cs;
}

TEST(RbfRefine, ZeroResidualLeavesPatchUnchanged) {
  const TerrainPatch patch = patch_from(fractal(8), 0);
  std::mt19937_64 rng(8);
  const auto cs = random_constraints(rng, 40, patch.field, 0.0);
  const TerrainPatch out = rbf_refine(patch, cs);
  for (size_t k = 0; k < out.field.heights().size(); ++k) {
    EXPECT_NEAR(out.field.heights()[k], patch.field.heights()[k], 1e-9);
  }
}

TEST(RbfRefine, SingleConstraintRaisesPoint) {
  const TerrainPatch patch = patch_from(fractal(9), 0);
  const Vec2 q(0.33, -0.71);
  const double before = patch.field.height_at(q.x(), q.y());
  const TerrainPatch out = rbf_refine(patch, {{q, before + 0.10, 0, 0}});
  EXPECT_NEAR(out.field.height_at(q.x(), q.y()) - before, 0.10, 1e-12);
}

TEST(RbfRefine, InterpolatesRandomConstraints) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const TerrainPatch patch = patch_from(fractal(40 + trial), 0);
    const auto cs = random_constraints(rng, 20 + 40 * trial, patch.field, 0.15);
    const TerrainPatch out = rbf_refine(patch, cs);
    for (const auto& c : cs) {
      EXPECT_NEAR(out.field.height_at(c.location.x(), c.location.y()), c.height, 1e-4);
    }
  }
}

TEST(RbfRefine, CollinearAndDuplicateConstraints) {
  const TerrainPatch patch = patch_from(fractal(11), 0);
  std::vector<ContactConstraint> cs;
  for (int k = 0; k < 5; ++k) cs.push_back({Vec2(-1.0 + 0.5 * k, 0.3), 0.05 * k, k, 0});
  cs.push_back({Vec2(0.0, 0.3), 0.20, 9, 1});  // duplicates k = 2 with height 0.10
  const TerrainPatch out = rbf_refine(patch, cs);
  EXPECT_NEAR(out.field.height_at(0.0, 0.3), 0.15, 1e-9);
  EXPECT_NEAR(out.field.height_at(1.0, 0.3), 0.20, 1e-9);
}

TEST(RbfRefine, OutsidePatchThrows) {
  const TerrainPatch patch = patch_from(fractal(12), 0);
  EXPECT_THROW(rbf_refine(patch, {{Vec2(3.0, 0.0), 0.0, 0, 0}}), OutOfBounds);
}

TEST(RbfRefine, FittedClipHasNoContactErrorAfterRefine) {
  std::vector<TerrainPatch> bank;
  for (int k = 0; k < 6; ++k) bank.push_back(patch_from(fractal(500 + k), k));
  const Pose p = walk_on(fractal(77), 13);
  const FitResult best = patch_search(skel(), p.segment, p.positions, bank)[0];
  const TerrainPatch shifted = shift_patch(bank[best.patch_id], best.vertical_offset);
  const TerrainPatch refined = rbf_refine(shifted, contact_constraints(skel(), p.segment, p.positions));
  EXPECT_GT(best.error_contact, 1e-3);
  EXPECT_LT(fit_error(skel(), p.segment, p.positions, refined.field, 0.0).error_contact, 1e-6);
}

TEST(RbfRefine, DeterministicAndPermutationInvariant) {
  const TerrainPatch patch = patch_from(fractal(13), 0);
  std::mt19937_64 rng(14);
  auto cs = random_constraints(rng, 60, patch.field, 0.1);
  const TerrainPatch a = rbf_refine(patch, cs);
  const TerrainPatch again = rbf_refine(patch, cs);
  std::shuffle(cs.begin(), cs.end(), rng);
  const TerrainPatch b = rbf_refine(patch, cs);
  EXPECT_EQ(a.field.heights(), again.field.heights());
  EXPECT_EQ(a.field.heights(), b.field.heights());
}

TEST(ShiftPatch, AddsOffsetEverywhere) {
  const TerrainPatch patch = patch_from(fractal(15), 3);
  const TerrainPatch s = shift_patch(patch, -0.25);
  EXPECT_EQ(s.id, 3);
  for (size_t k = 0; k < s.field.heights().size(); ++k) {
    EXPECT_EQ(s.field.heights()[k], patch.field.heights()[k] - 0.25);
  }
}

}  // namespace
}  // namespace stride
