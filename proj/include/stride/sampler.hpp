#pragma once

#include "stride/guidance.hpp"

namespace stride {

/// Optional sampling inputs. With a canonical terrain view the future scene
/// rows are re-sampled at every step along the current clean estimate.
struct SamplingContext {
  const Skeleton* skeleton = nullptr;
  const TerrainView* terrain = nullptr;
  const SdfGrid* sdf = nullptr;
  bool refresh_scene = true;
};

/// Ancestral sampling of the future frames in normalized space, returned
/// denormalized ((N - k) x 139). Guidance moves the clean estimate by the
/// objective gradient pulled back to the noisy input through the denoiser.
/// At step 0 the (guided) clean estimate is returned without noise. Throws
/// DenoiserShapeMismatch.
FeatureMatrix sample_future(const Denoiser& denoiser, DiffusionCondition condition,
                            const NoiseSchedule& schedule, const GuidanceSpec& guidance,
                            std::mt19937_64& rng, const SamplingContext& context = {});

/// H- ++ sampled H+ as a canonical segment. Seed frames are copied verbatim
/// from the condition; future rotations are re-orthonormalized.
MotionSegment sample_segment(const Denoiser& denoiser, const DiffusionCondition& condition,
                             const NoiseSchedule& schedule, const GuidanceSpec& guidance,
                             std::mt19937_64& rng, const SamplingContext& context = {});

/// Scene rows for the future frames before any estimate exists: a straight
/// root path from the last seed frame to the canonical origin with the yaw
/// blended to zero.
void initial_future_scene(DiffusionCondition& condition, const TerrainView& terrain);

/// Re-samples future scene rows along the root path and yaw of a raw future;
/// rows whose lattice leaves the terrain keep their previous values.
void refresh_future_scene(DiffusionCondition& condition, const FeatureMatrix& future_raw,
                          const TerrainView& terrain);

/// Seed-frame scene rows; throws OutOfBounds if the seed lattice leaves the
/// terrain.
void seed_scene(DiffusionCondition& condition, const TerrainView& terrain);

struct StyleChange {
  int frame_start = 0;
  int style = 0;
};

/// Style id of a global frame under a change-point schedule (style 0 before
/// the first change).
int style_at(const std::vector<StyleChange>& schedule, int frame);

struct RolloutOptions {
  int max_segments = 8;
  double goal_reach_eps = 0.15;  // meters, horizontal
  GuidanceSpec guidance = GuidanceSpec::none();
  bool refresh_scene = true;
};

struct RolloutResult {
  MotionSegment motion;  // world frame
  std::vector<int> styles;
  int segments = 0;
  int goals_reached = 0;
  bool reached_all = false;
};

/// Autoregressive synthesis from a k-frame world seed: each segment is
/// sampled in the current goal's frame, only its N - k new frames are
/// appended, and the goal advances once the final root is within
/// goal_reach_eps of it. Stops when every goal is reached or after
/// max_segments (reached_all == false). Terrain queries clamp to the grid,
/// so a rollout may leave the terrain without failing.
RolloutResult autoregressive_rollout(const Denoiser& denoiser, const Skeleton& skeleton,
                                     const HeightField& field, const std::vector<GoalFrame>& goals,
                                     const std::vector<StyleChange>& styles,
                                     const MotionSegment& seed, const NoiseSchedule& schedule,
                                     const RolloutOptions& options, std::mt19937_64& rng);

}  // namespace stride
