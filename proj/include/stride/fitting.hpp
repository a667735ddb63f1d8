#pragma once

#include "stride/motion.hpp"
#include "stride/terrain.hpp"

#include <vector>

namespace stride {

/// Error terms of one motion clip against one patch at a vertical offset.
/// All terms are raw sums over frames and the four foot joints.
struct FitResult {
  int patch_id = -1;
  double vertical_offset = 0.0;
  double error_total = 0.0;
  double error_contact = 0.0;      // sum c (h - f)^2
  double error_penetration = 0.0;  // sum (1 - c) max(h - f, 0)
  double error_jump = 0.0;         // sum jump (1 - c) max((f - l) - h, 0)
};

struct FitOptions {
  double jump_threshold = 0.3;  // l, meters
  bool jump_gait = false;       // clip-level jump indicator (from its style)
};

/// Foot heights f are foot-joint heights minus the skeleton's foot radius;
/// terrain heights h are the patch heights plus `offset`. The clip is given
/// in patch-local coordinates (centered on the patch). Throws
/// OutOfBounds if a foot projects off the patch.
FitResult fit_error(const Skeleton& skeleton, const MotionSegment& segment,
                    const JointPositions& positions, const HeightField& patch, double offset,
                    const FitOptions& options = {});

/// Offset minimizing E_contact: the mean contact residual (f - h). Without
/// contacts, the offset that puts the lowest foot sample on the terrain.
double best_vertical_offset(const Skeleton& skeleton, const MotionSegment& segment,
                            const JointPositions& positions, const HeightField& patch);

/// Brute-force retrieval: every patch is evaluated at its best offset and the
/// `top` lowest error_total results are returned ascending, ties broken by
/// ascending patch id. Patches the clip leaves are skipped; NoValidPatch if
/// none remains.
std::vector<FitResult> patch_search(const Skeleton& skeleton, const MotionSegment& segment,
                                    const JointPositions& positions,
                                    const std::vector<TerrainPatch>& bank,
                                    const FitOptions& options = {}, int top = 3, int jobs = 1);

/// Required foot-bottom height at a ground location.
struct ContactConstraint {
  Vec2 location = Vec2::Zero();
  double height = 0.0;
  int frame = 0;
  int foot = 0;  // contact channel index
};

/// One constraint per (frame, foot channel) labeled in contact.
std::vector<ContactConstraint> contact_constraints(const Skeleton& skeleton,
                                                   const MotionSegment& segment,
                                                   const JointPositions& positions);

/// Interpolates the constraint residuals (required - current height) with a
/// linear-kernel RBF plus a polynomial term and adds it to every grid node.
/// The kernel is evaluated through the grid's bilinear interpolation, so the
/// refined height_at meets each constraint to solver precision. Constraints
/// closer than 1e-6 m are merged by averaging their heights. The polynomial
/// is affine with at least three non-collinear centers, constant otherwise.
/// Throws SingularSystem if the system cannot be solved, OutOfBounds if a
/// constraint lies off the patch.
TerrainPatch rbf_refine(const TerrainPatch& patch, const std::vector<ContactConstraint>& constraints);

/// Patch with every height shifted by `offset`.
TerrainPatch shift_patch(const TerrainPatch& patch, double offset);

}  // namespace stride
