#include "stride/sampler.hpp"

#include "stride/rotation.hpp"

#include <cmath>

namespace stride {

namespace {

double row_yaw(const FeatureMatrix& f, int row) {
  Rotation6D r;
  for (int c = 0; c < 6; ++c) r(c) = f(row, c);
  return heading_yaw(sixd_to_matrix(r));
}

Vec2 row_ground(const FeatureMatrix& f, int row) {
  return {f(row, kRootFeatureOffset), f(row, kRootFeatureOffset + 2)};
}

void try_grid(const TerrainView& terrain, const Vec2& root, double yaw, double* out) {
  std::array<double, kSceneGridSize> g;
  try {
    sample_scene_grid(terrain, root, yaw, 0.0, g.data());
  } catch (const OutOfBounds&) {
    return;  // keep the previous row
  }
  std::copy(g.begin(), g.end(), out);
}

}  // namespace

void seed_scene(DiffusionCondition& condition, const TerrainView& terrain) {
  condition.scene.resize(kSegmentFrames);
  for (int i = 0; i < kSeedFrames; ++i) {
    sample_scene_grid(terrain, row_ground(condition.seed, i), row_yaw(condition.seed, i), 0.0,
                      condition.scene[i].data());
  }
}

void initial_future_scene(DiffusionCondition& condition, const TerrainView& terrain) {
  condition.scene.resize(kSegmentFrames);
  const Vec2 start = row_ground(condition.seed, kSeedFrames - 1);
  const double yaw0 = row_yaw(condition.seed, kSeedFrames - 1);
  for (int i = kSeedFrames; i < kSegmentFrames; ++i) {
    const double t = static_cast<double>(i - kSeedFrames + 1) / kFutureFrames;
    const Vec2 p = (1.0 - t) * start;
    const double yaw = wrap_angle((1.0 - t) * yaw0);
    // Off-terrain rows fall back to the nearest seed row.
    condition.scene[i] = condition.scene[i - 1];
    try_grid(terrain, p, yaw, condition.scene[i].data());
  }
}

void refresh_future_scene(DiffusionCondition& condition, const FeatureMatrix& future_raw,
                          const TerrainView& terrain) {
  for (int i = 0; i < kFutureFrames; ++i) {
    try_grid(terrain, row_ground(future_raw, i), row_yaw(future_raw, i),
             condition.scene[kSeedFrames + i].data());
  }
}

FeatureMatrix sample_future(const Denoiser& denoiser, DiffusionCondition condition,
                            const NoiseSchedule& schedule, const GuidanceSpec& guidance,
                            std::mt19937_64& rng, const SamplingContext& context) {
  condition.validate();
  const Normalizer& norm = denoiser.normalizer();
  const GuidanceContext gctx{context.skeleton, context.terrain, context.sdf};
  const bool refresh = context.refresh_scene && context.terrain;
  FeatureMatrix x = standard_normal(kFutureFrames, kFeatureWidth, rng);
  FeatureMatrix x0;
  for (int n = schedule.steps() - 1; n >= 0; --n) {
    if (refresh && x0.size() > 0) refresh_future_scene(condition, norm.denormalize(x0), *context.terrain);
    x0 = denoiser.predict(x, n, condition);
    if (x0.rows() != kFutureFrames || x0.cols() != kFeatureWidth) {
      throw DenoiserShapeMismatch("denoiser returned the wrong shape");
    }
    if (guidance.active_at(n)) {
      // The objective gradient at the prediction is pulled back to the noisy
      // input, through the denoiser's Jacobian.
      const FeatureMatrix g = guidance_gradient(x0, condition.seed, norm, guidance, gctx);
      if (!g.isZero(0.0)) x0 -= denoiser.pullback(x, n, condition, g);
    }
    if (n == 0) {
      x = x0;
    } else {
      const FeatureMatrix eps = standard_normal(kFutureFrames, kFeatureWidth, rng);
      x = schedule.posterior_coef_x0(n) * x0 + schedule.posterior_coef_xn(n) * x +
          std::sqrt(schedule.posterior_variance(n)) * eps;
    }
  }
  return norm.denormalize(x);
}

MotionSegment sample_segment(const Denoiser& denoiser, const DiffusionCondition& condition,
                             const NoiseSchedule& schedule, const GuidanceSpec& guidance,
                             std::mt19937_64& rng, const SamplingContext& context) {
  const FeatureMatrix future = sample_future(denoiser, condition, schedule, guidance, rng, context);
  MotionSegment out(kSegmentFrames);
  for (int i = 0; i < kSeedFrames; ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      for (int c = 0; c < 6; ++c) out.rotation(i, j)(c) = condition.seed(i, j * 6 + c);
    }
    for (int c = 0; c < 3; ++c) out.root[i](c) = condition.seed(i, kRootFeatureOffset + c);
    for (int c = 0; c < kFootCount; ++c) {
      out.contacts[i][c] = condition.seed(i, kContactFeatureOffset + c) > 0.5 ? 1 : 0;
    }
  }
  const MotionSegment tail = from_features(future);
  for (int i = 0; i < kFutureFrames; ++i) {
    for (int j = 0; j < kJointCount; ++j) out.rotation(kSeedFrames + i, j) = tail.rotation(i, j);
    out.root[kSeedFrames + i] = tail.root[i];
    out.contacts[kSeedFrames + i] = tail.contacts[i];
  }
  return out;
}

int style_at(const std::vector<StyleChange>& schedule, int frame) {
  int style = 0;
  for (const auto& c : schedule) {
    if (c.frame_start <= frame) style = c.style;
  }
  return style;
}

RolloutResult autoregressive_rollout(const Denoiser& denoiser, const Skeleton& skeleton,
                                     const HeightField& field, const std::vector<GoalFrame>& goals,
                                     const std::vector<StyleChange>& styles,
                                     const MotionSegment& seed, const NoiseSchedule& schedule,
                                     const RolloutOptions& options, std::mt19937_64& rng) {
  if (goals.empty()) throw InvalidParams("rollout needs at least one goal");
  if (seed.frame_count() != kSeedFrames) throw InvalidParams("rollout seed must have 10 frames");
  if (options.max_segments < 1) throw InvalidParams("max_segments must be positive");
  for (const auto& g : goals) g.validate();

  RolloutResult result;
  result.motion = seed;
  for (int i = 0; i < kSeedFrames; ++i) result.styles.push_back(style_at(styles, i));
  size_t goal = 0;
  while (goal < goals.size() && result.segments < options.max_segments) {
    const int start = result.motion.frame_count() - kSeedFrames;
    CanonicalTransform t;
    const MotionSegment world_seed = result.motion.slice(start, kSeedFrames);
    const MotionSegment cano_seed = canonicalize_motion(world_seed, goals[goal], &t);
    const TerrainView view(field, t, EdgeMode::kClamp);

    DiffusionCondition cond;
    cond.seed = to_features(cano_seed);
    std::vector<int> seg_styles;
    for (int i = 0; i < kSegmentFrames; ++i) seg_styles.push_back(style_at(styles, start + i));
    cond.text = style_codebook().text_rows(seg_styles);
    seed_scene(cond, view);
    initial_future_scene(cond, view);

    SamplingContext ctx{&skeleton, &view, nullptr, options.refresh_scene};
    const FeatureMatrix future = sample_future(denoiser, cond, schedule, options.guidance, rng, ctx);
    const MotionSegment world = decanonicalize_motion(from_features(future), t);
    result.motion.append(world);
    for (int i = kSeedFrames; i < kSegmentFrames; ++i) result.styles.push_back(seg_styles[i]);
    ++result.segments;

    const Vec3& last = result.motion.root.back();
    const Vec3& g = goals[goal].position;
    if (std::hypot(last.x() - g.x(), last.z() - g.z()) <= options.goal_reach_eps) {
      ++goal;
      ++result.goals_reached;
    }
  }
  result.reached_all = goal == goals.size();
  return result;
}

}  // namespace stride
