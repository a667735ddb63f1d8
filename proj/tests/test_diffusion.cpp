#include "stride/kinematics.hpp"
#include "stride/model.hpp"
#include "stride/io_util.hpp"
#include "stride/sampler.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace stride {
namespace {

const Skeleton& skel() { return default_skeleton(); }

FeatureMatrix random_features(std::mt19937_64& rng, int frames, double spread = 0.5) {
  auto rs = testing::random_segment(rng, frames, spread);
  for (auto& r : rs.segment.root) r = Vec3(0.5 * r.x(), r.y(), 0.5 * r.z());
  FeatureMatrix f = to_features(rs.segment);
  // Perturb off the rotation manifold so decoding is exercised.
  std::normal_distribution<double> n(0.0, 0.05);
  for (int i = 0; i < frames; ++i) {
    for (int c = 0; c < kRotationFeatures; ++c) f(i, c) += n(rng);
  }
  return f;
}

// Norm-wise relative error between an analytic and a central-difference
// gradient.
template <typename Fn>
double fd_relative_error(const FeatureMatrix& x, const FeatureMatrix& grad, Fn&& value, double h = 1e-5) {
  FeatureMatrix fd(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    for (int c = 0; c < x.cols(); ++c) {
      FeatureMatrix p = x, m = x;
      p(i, c) += h;
      m(i, c) -= h;
      fd(i, c) = (value(p) - value(m)) / (2 * h);
    }
  }
  const double scale = std::max({grad.norm(), fd.norm(), 1e-12});
  return (grad - fd).norm() / scale;
}

TEST(NoiseSchedule, CosineScheduleInvariants) {
  const NoiseSchedule s(100);
  ASSERT_EQ(s.steps(), 100);
  for (int n = 0; n < 100; ++n) {
    EXPECT_GT(s.beta(n), 0.0);
    EXPECT_LT(s.beta(n), 1.0);
    if (n > 0) {
      EXPECT_LT(s.alpha_bar(n), s.alpha_bar(n - 1));
      const double expect = s.beta(n) * (1 - s.alpha_bar(n - 1)) / (1 - s.alpha_bar(n));
      EXPECT_NEAR(s.posterior_variance(n), expect, 1e-15);
    }
  }
  EXPECT_GT(s.alpha_bar(0), 0.999);
  EXPECT_LT(s.alpha_bar(99), 1e-3);
  EXPECT_EQ(s.posterior_variance(0), 0.0);
  EXPECT_NO_THROW(NoiseSchedule(1));
  EXPECT_THROW(NoiseSchedule(0), InvalidParams);
}

TEST(NoiseSchedule, PosteriorMeanOfCleanSignal) {
  // If x_n is exactly sqrt(abar_n) x0, the posterior mean is sqrt(abar_{n-1}) x0.
  const NoiseSchedule s(100);
  for (int n = 1; n < 100; n += 7) {
    const double mean = s.posterior_coef_x0(n) + s.posterior_coef_xn(n) * std::sqrt(s.alpha_bar(n));
    EXPECT_NEAR(mean, std::sqrt(s.alpha_bar(n - 1)), 1e-12);
  }
}

TEST(ForwardNoise, StepZeroIsNearlyClean) {
  const NoiseSchedule s(100);
  std::mt19937_64 rng(1);
  const FeatureMatrix x0 = standard_normal(30, 139, rng);
  const FeatureMatrix eps = standard_normal(30, 139, rng);
  const FeatureMatrix xn = forward_noise(x0, 0, s, eps);
  const double bound = std::sqrt(1 - s.alpha_bar(0)) * eps.cwiseAbs().maxCoeff() +
                       (1 - std::sqrt(s.alpha_bar(0))) * x0.cwiseAbs().maxCoeff();
  EXPECT_LE((xn - x0).cwiseAbs().maxCoeff(), bound + 1e-15);
}

TEST(ForwardNoise, DeterministicPerSeed) {
  const NoiseSchedule s(100);
  std::mt19937_64 a(5), b(5);
  const FeatureMatrix x0 = FeatureMatrix::Ones(3, 139);
  EXPECT_EQ(forward_noise(x0, 40, s, a), forward_noise(x0, 40, s, b));
  EXPECT_THROW(forward_noise(x0, 100, s, a), InvalidParams);
}

TEST(ForwardNoise, MonteCarloVariance) {
  const NoiseSchedule s(100);
  std::mt19937_64 rng(7);
  const int n = 60;
  const FeatureMatrix x0 = FeatureMatrix::Constant(1, 1, 0.7);
  double sum = 0, sq = 0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const double d = forward_noise(x0, n, s, rng)(0, 0) - std::sqrt(s.alpha_bar(n)) * 0.7;
    sum += d;
    sq += d * d;
  }
  const double var = sq / draws - (sum / draws) * (sum / draws);
  EXPECT_NEAR(var / (1 - s.alpha_bar(n)), 1.0, 0.01);
}

TEST(StyleCodebook, OrthonormalCodes) {
  const StyleCodebook& book = style_codebook();
  ASSERT_EQ(book.size(), 10);
  for (int a = 0; a < book.size(); ++a) {
    for (int b = 0; b < book.size(); ++b) {
      EXPECT_NEAR(book.code(a).dot(book.code(b)), a == b ? 1.0 : 0.0, 1e-12);
    }
  }
  const FeatureMatrix t = book.text_rows({0, 0, 3});
  EXPECT_EQ(t.row(2), book.code(3));
  EXPECT_TRUE(is_jump_style(style_id("jump")));
  EXPECT_THROW(style_id("moonwalk"), InvalidParams);
}

TEST(Normalizer, FitAndRoundTrip) {
  std::mt19937_64 rng(9);
  std::vector<FeatureMatrix> samples;
  for (int k = 0; k < 5; ++k) samples.push_back(random_features(rng, 8));
  const Normalizer n = Normalizer::fit(samples);
  for (int c = 0; c < kFeatureWidth; ++c) EXPECT_GE(n.std(c), 0.01);
  const FeatureMatrix z = n.normalize(samples[0]);
  EXPECT_LT((n.denormalize(z) - samples[0]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TrainingLoss, PerfectPredictionAndFeatureOnly) {
  std::mt19937_64 rng(11);
  const FeatureMatrix a = random_features(rng, 6);
  const FeatureMatrix b = random_features(rng, 6);
  EXPECT_EQ(training_loss(a, a, skel()).value, 0.0);
  const LossValue l0 = training_loss(a, b, skel(), 0.0);
  EXPECT_NEAR(l0.value, (a - b).squaredNorm() / a.size(), 1e-15);
}

// Naive two-term oracle: explicit loops, positions from FK.
double naive_loss(const FeatureMatrix& p, const FeatureMatrix& t, double lambda) {
  double feat = 0;
  for (int i = 0; i < p.rows(); ++i) {
    for (int c = 0; c < p.cols(); ++c) feat += (p(i, c) - t(i, c)) * (p(i, c) - t(i, c));
  }
  feat /= p.rows() * p.cols();
  const JointPositions a = forward_kinematics(skel(), p);
  const JointPositions b = forward_kinematics(skel(), t);
  double pos = 0;
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      for (int d = 0; d < 3; ++d) pos += std::pow(a.at(i, j)(d) - b.at(i, j)(d), 2);
    }
  }
  pos /= p.rows() * kJointCount * 3;
  return feat + lambda * pos;
}

TEST(TrainingLoss, MatchesNaiveOracleAndFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 10; ++k) {
    const FeatureMatrix p = random_features(rng, 3);
    const FeatureMatrix t = random_features(rng, 3);
    const LossValue l = training_loss(p, t, skel(), 4.0);
    EXPECT_NEAR(l.value, naive_loss(p, t, 4.0), 1e-8);
    const double err = fd_relative_error(p, l.gradient, [&](const FeatureMatrix& x) {
      return training_loss(x, t, skel(), 4.0).value;
    });
    EXPECT_LT(err, 1e-3);
  }
}

TEST(TrainingLoss, NormalizedSpaceGradient) {
  std::mt19937_64 rng(13);
  std::vector<FeatureMatrix> samples;
  for (int k = 0; k < 4; ++k) samples.push_back(random_features(rng, 5));
  const Normalizer n = Normalizer::fit(samples);
  const FeatureMatrix p = n.normalize(random_features(rng, 3));
  const FeatureMatrix t = n.normalize(random_features(rng, 3));
  const LossValue l = training_loss(p, t, skel(), 4.0, &n);
  const double feat = (p - t).squaredNorm() / p.size();
  EXPECT_NEAR(l.feature_term, feat, 1e-15);
  EXPECT_LT(fd_relative_error(p, l.gradient, [&](const FeatureMatrix& x) {
              return training_loss(x, t, skel(), 4.0, &n).value;
            }),
            1e-3);
}

// Single frame with feet placed by root height on flat ground.
FeatureMatrix standing(double lift, std::array<bool, 4> contact) {
  const MotionSegment seg = rest_pose_segment(skel(), 1, Vec3::Zero(), 0.0);
  FeatureMatrix f = to_features(seg);
  f(0, kRootFeatureOffset + 1) += lift;
  for (int c = 0; c < kFootCount; ++c) f(0, kContactFeatureOffset + c) = contact[c] ? 1.0 : 0.0;
  return f;
}

TEST(GuidancePhys, Examples) {
  const HeightField flat(41, 41, 0.1, Vec2(-2, -2), 0.0);
  const TerrainView view(flat);
  EXPECT_NEAR(guidance_phys(standing(0.0, {1, 1, 1, 1}), skel(), view).value, 0.0, 1e-12);
  // All four feet 0.1 above: each contact foot contributes 0.1.
  EXPECT_NEAR(guidance_phys(standing(0.1, {1, 0, 0, 0}), skel(), view).value, 0.1, 1e-12);
  EXPECT_NEAR(guidance_phys(standing(0.1, {1, 1, 1, 1}), skel(), view).value, 0.4, 1e-12);
  // Non-contact feet: only penetration counts.
  EXPECT_NEAR(guidance_phys(standing(-0.05, {0, 1, 1, 1}), skel(), view).value, 0.05 + 3 * 0.05, 1e-12);
  EXPECT_NEAR(guidance_phys(standing(-0.05, {0, 0, 0, 0}), skel(), view).value, 4 * 0.05, 1e-12);
  EXPECT_EQ(guidance_phys(standing(0.05, {0, 0, 0, 0}), skel(), view).value, 0.0);
}

TEST(GuidanceSmooth, Examples) {
  FeatureMatrix f(2, kFeatureWidth);
  f.row(0) = standing(0.0, {1, 1, 1, 1}).row(0);
  f.row(1) = f.row(0);
  EXPECT_EQ(guidance_smooth(f, skel()).value, 0.0);
  f(1, kRootFeatureOffset + 2) += 0.1;
  EXPECT_NEAR(guidance_smooth(f, skel()).value, 0.1 * std::sqrt(22.0), 1e-12);
  EXPECT_THROW(guidance_smooth(f.topRows(1), skel()), InvalidParams);
}

TEST(GuidanceCollision, Examples) {
  const FeatureMatrix f = standing(0.0, {1, 1, 1, 1});
  const JointPositions p = forward_kinematics(skel(), f);
  // A box far away: nothing penetrates.
  const SdfGrid far = box_sdf(Vec3(5, 5, 5), Vec3(0.2, 0.2, 0.2), 0.1, 8.0);
  EXPECT_EQ(guidance_collision(f, skel(), far).value, 0.0);
  // A box whose top face sits 0.02 above the pelvis only.
  const Vec3 pelvis = p.at(0, kPelvis);
  const SdfGrid sdf = box_sdf(pelvis + Vec3(0, -0.03, 0), Vec3(0.02, 0.05, 0.02), 0.01, 1.6);
  ASSERT_NEAR(sdf.sample(pelvis).value, -0.02, 1e-9);
  for (int j = 1; j < kJointCount; ++j) ASSERT_GE(sdf.sample(p.at(0, j)).value, 0.0);
  EXPECT_NEAR(guidance_collision(f, skel(), sdf).value, 0.02 / 22, 1e-9);
}

TEST(Guidance, GradientsMatchFiniteDifferences) {
  // Coarse bilinear terrain: FD steps rarely straddle a cell edge.
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<double> h(81);
  for (double& v : h) v = u(rng);
  const HeightField field(9, 9, 0.75, Vec2(-3, -3), h);
  const TerrainView view(field, CanonicalTransform{0.3, Vec3(0.1, 0.05, -0.2)});
  const SdfGrid sdf = box_sdf(Vec3(0, 0.9, 0), Vec3(0.3, 0.3, 0.3), 0.05, 4.0);
  for (int k = 0; k < 20; ++k) {
    FeatureMatrix f = random_features(rng, 3);
    for (int i = 0; i < 3; ++i) {
      f(i, kRootFeatureOffset + 1) = 0.8 + u(rng);
      for (int c = 0; c < kFootCount; ++c) f(i, kContactFeatureOffset + c) = (k + i + c) % 2;
    }
    const auto phys = guidance_phys(f, skel(), view);
    EXPECT_LT(fd_relative_error(f, phys.gradient,
                                [&](const FeatureMatrix& x) { return guidance_phys(x, skel(), view).value; }),
              1e-3);
    const auto smooth = guidance_smooth(f, skel());
    EXPECT_LT(fd_relative_error(f, smooth.gradient,
                                [&](const FeatureMatrix& x) { return guidance_smooth(x, skel()).value; }),
              1e-3);
    const auto col = guidance_collision(f, skel(), sdf);
    EXPECT_LT(fd_relative_error(f, col.gradient,
                                [&](const FeatureMatrix& x) { return guidance_collision(x, skel(), sdf).value; }),
              1e-3);
  }
}

TEST(ApplyGuidance, ZeroWeightsAreNoOp) {
  std::mt19937_64 rng(15);
  const HeightField flat(41, 41, 0.1, Vec2(-2, -2), 0.0);
  const TerrainView view(flat);
  const FeatureMatrix seed = random_features(rng, kSeedFrames, 0.2);
  const FeatureMatrix fut = random_features(rng, kFutureFrames, 0.2);
  GuidanceSpec spec;
  spec.weights = {0.0, 0.0, 0.0};
  const GuidanceContext ctx{&skel(), &view, nullptr};
  EXPECT_EQ(apply_guidance(fut, seed, Normalizer::identity(), spec, ctx), fut);
  EXPECT_EQ(apply_guidance(fut, seed, Normalizer::identity(), GuidanceSpec::none(), ctx), fut);
}

TEST(ApplyGuidance, PhysStepReducesPenetration) {
  const HeightField flat(41, 41, 0.1, Vec2(-2, -2), 0.0);
  const TerrainView view(flat);
  FeatureMatrix seed(kSeedFrames, kFeatureWidth), fut(kFutureFrames, kFeatureWidth);
  for (int i = 0; i < kSeedFrames; ++i) seed.row(i) = standing(0.0, {1, 1, 1, 1}).row(0);
  for (int i = 0; i < kFutureFrames; ++i) fut.row(i) = standing(-0.04, {0, 0, 0, 0}).row(0);
  // Scale the step so a unit gradient moves the root a few millimeters.
  Normalizer n;
  n.std.setConstant(0.03);
  GuidanceSpec spec;
  spec.weights = {3.0, 0.0, 0.0};
  const GuidanceContext ctx{&skel(), &view, nullptr};
  const FeatureMatrix z = n.normalize(fut);
  const FeatureMatrix guided = n.denormalize(apply_guidance(z, seed, n, spec, ctx));
  EXPECT_LT(guidance_phys(guided, skel(), view).value, guidance_phys(fut, skel(), view).value);
}

TEST(ApplyGuidance, CollisionStepReducesDepth) {
  FeatureMatrix seed(kSeedFrames, kFeatureWidth), fut(kFutureFrames, kFeatureWidth);
  for (int i = 0; i < kSeedFrames; ++i) seed.row(i) = standing(0.0, {1, 1, 1, 1}).row(0);
  for (int i = 0; i < kFutureFrames; ++i) fut.row(i) = standing(0.0, {1, 1, 1, 1}).row(0);
  const Vec3 pelvis = forward_kinematics(skel(), fut.topRows(1)).at(0, kPelvis);
  // A thin slab the hip joints sink 3 cm into; nothing else touches it.
  const SdfGrid sdf = box_sdf(pelvis + Vec3(0, -0.11, 0), Vec3(0.25, 0.07, 0.25), 0.02, 1.8);
  GuidanceSpec spec;
  spec.weights = {0.0, 0.0, 50.0};
  const GuidanceContext ctx{&skel(), nullptr, &sdf};
  const FeatureMatrix guided = apply_guidance(fut, seed, Normalizer::identity(), spec, ctx);
  EXPECT_LT(guidance_collision(guided, skel(), sdf).value, guidance_collision(fut, skel(), sdf).value);
}

// Always predicts a fixed normalized future.
class OracleDenoiser : public Denoiser {
 public:
  explicit OracleDenoiser(FeatureMatrix truth) : truth_(std::move(truth)) {}
  FeatureMatrix predict(const FeatureMatrix&, int, const DiffusionCondition&) const override {
    return truth_;
  }
  const Normalizer& normalizer() const override { return norm_; }

 private:
  FeatureMatrix truth_;
  Normalizer norm_;
};

// Repeats the last seed frame: a character standing still.
class StillDenoiser : public Denoiser {
 public:
  FeatureMatrix predict(const FeatureMatrix&, int, const DiffusionCondition& c) const override {
    FeatureMatrix f(kFutureFrames, kFeatureWidth);
    for (int i = 0; i < kFutureFrames; ++i) f.row(i) = c.seed.row(kSeedFrames - 1);
    return f;
  }
  const Normalizer& normalizer() const override { return norm_; }

 private:
  Normalizer norm_;
};

DiffusionCondition flat_condition(const MotionSegment& seed) {
  DiffusionCondition c;
  c.seed = to_features(seed);
  c.text = style_codebook().text_rows(std::vector<int>(kSegmentFrames, 0));
  c.scene.assign(kSegmentFrames, {});
  return c;
}

TEST(Sampler, SingleStepReturnsDenoiserOutputExactly) {
  std::mt19937_64 rng(16);
  const FeatureMatrix truth = random_features(rng, kFutureFrames);
  const OracleDenoiser d(truth);
  const DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0));
  EXPECT_EQ(sample_future(d, c, NoiseSchedule(1), GuidanceSpec::none(), rng), truth);
  // The full schedule also ends on the oracle's prediction.
  EXPECT_EQ(sample_future(d, c, NoiseSchedule(100), GuidanceSpec::none(), rng), truth);
}

TEST(Sampler, SegmentKeepsSeedFramesBitExact) {
  std::mt19937_64 rng(17);
  const MotionSegment seed = testing::random_segment(rng, kSeedFrames).segment;
  const OracleDenoiser d(random_features(rng, kFutureFrames));
  const MotionSegment out = sample_segment(d, flat_condition(seed), NoiseSchedule(10), GuidanceSpec::none(), rng);
  ASSERT_EQ(out.frame_count(), kSegmentFrames);
  for (int i = 0; i < kSeedFrames; ++i) {
    EXPECT_EQ(out.root[i], seed.root[i]);
    EXPECT_EQ(out.contacts[i], seed.contacts[i]);
    for (int j = 0; j < kJointCount; ++j) EXPECT_EQ(out.rotation(i, j), seed.rotation(i, j));
  }
  EXPECT_NO_THROW(out.validate());
}

TEST(Sampler, DeterministicForFixedSeed) {
  MotionTransformer model(ModelConfig{16, 2, 1, 32, 3});
  const TransformerDenoiser d(std::move(model), Normalizer::identity());
  const DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0));
  std::mt19937_64 a(18), b(18);
  const NoiseSchedule s(8);
  EXPECT_EQ(sample_future(d, c, s, GuidanceSpec::none(), a), sample_future(d, c, s, GuidanceSpec::none(), b));
}

TEST(Sampler, ZeroWeightGuidanceMatchesUnguided) {
  MotionTransformer model(ModelConfig{16, 2, 1, 32, 4});
  const TransformerDenoiser d(std::move(model), Normalizer::identity());
  const HeightField flat(81, 81, 0.1, Vec2(-4, -4), 0.0);
  const TerrainView view(flat);
  DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3(0, 0, -1), 0.0));
  seed_scene(c, view);
  initial_future_scene(c, view);
  GuidanceSpec zero;
  zero.weights = {0, 0, 0};
  zero.policy = GuidancePolicy::kEveryStep;
  const SamplingContext ctx{&skel(), &view, nullptr, true};
  std::mt19937_64 a(19), b(19);
  const NoiseSchedule s(6);
  EXPECT_EQ(sample_future(d, c, s, zero, a, ctx), sample_future(d, c, s, GuidanceSpec::none(), b, ctx));
}

TEST(Sampler, ShapeMismatchIsReported) {
  class Bad : public StillDenoiser {
   public:
    FeatureMatrix predict(const FeatureMatrix&, int, const DiffusionCondition&) const override {
      return FeatureMatrix::Zero(3, 3);
    }
  };
  std::mt19937_64 rng(20);
  const DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0));
  EXPECT_THROW(sample_future(Bad(), c, NoiseSchedule(2), GuidanceSpec::none(), rng), DenoiserShapeMismatch);
}

TEST(Rollout, StitchesSegmentsWithSharedOverlap) {
  const HeightField flat(161, 161, 0.05, Vec2(-4, -4), 0.0);
  const StillDenoiser d;
  const MotionSegment seed = rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0);
  RolloutOptions opt;
  opt.max_segments = 4;
  std::mt19937_64 rng(21);
  const RolloutResult r = autoregressive_rollout(d, skel(), flat, {GoalFrame::from_yaw(Vec3(0, 0, 2), 0.0)},
                                                 {}, seed, NoiseSchedule(3), opt, rng);
  EXPECT_EQ(r.segments, 4);
  EXPECT_FALSE(r.reached_all);
  EXPECT_EQ(r.motion.frame_count(), 40 + 30 * 3);
  EXPECT_EQ(static_cast<int>(r.styles.size()), r.motion.frame_count());
  for (int m = 0; m + 1 < r.segments; ++m) {
    // Segment m spans [30m, 30m + 40); segment m+1 starts at 30(m+1).
    const MotionSegment a = r.motion.slice(30 * m, kSegmentFrames);
    const MotionSegment b = r.motion.slice(30 * (m + 1), kSegmentFrames);
    for (int i = 0; i < kSeedFrames; ++i) {
      EXPECT_EQ(b.root[i], a.root[kFutureFrames + i]);
      EXPECT_EQ(b.rotations[i * kJointCount], a.rotations[(kFutureFrames + i) * kJointCount]);
    }
  }
  EXPECT_NO_THROW(r.motion.validate());
}

TEST(Rollout, GoalAtSeedTerminatesAfterOneSegment) {
  const HeightField flat(161, 161, 0.05, Vec2(-4, -4), 0.0);
  const StillDenoiser d;
  const MotionSegment seed = rest_pose_segment(skel(), kSeedFrames, Vec3(0.5, 0, 0.2), 0.7);
  std::mt19937_64 rng(22);
  const RolloutResult r = autoregressive_rollout(
      d, skel(), flat, {GoalFrame::from_yaw(Vec3(0.5, 0, 0.2), 0.7)}, {{0, 2}}, seed, NoiseSchedule(3), {}, rng);
  EXPECT_EQ(r.segments, 1);
  EXPECT_TRUE(r.reached_all);
  EXPECT_EQ(r.motion.frame_count(), kSegmentFrames);
  EXPECT_LT((r.motion.root.back() - seed.root.back()).norm(), 1e-9);
  EXPECT_EQ(r.styles.back(), 2);
}

TEST(Rollout, StyleSchedule) {
  const std::vector<StyleChange> s = {{0, 1}, {25, 4}, {60, 2}};
  EXPECT_EQ(style_at(s, 0), 1);
  EXPECT_EQ(style_at(s, 24), 1);
  EXPECT_EQ(style_at(s, 25), 4);
  EXPECT_EQ(style_at(s, 100), 2);
  EXPECT_EQ(style_at({}, 5), 0);
}

ModelInput random_input(std::mt19937_64& rng, int batch) {
  ModelInput in;
  in.batch = batch;
  std::normal_distribution<float> n(0.0f, 1.0f);
  in.motion = nn::Mat(batch * kSegmentFrames, kMotionTokenWidth).unaryExpr([&](float) { return n(rng); });
  in.scene = nn::Mat(batch * kSegmentFrames, kSceneGridSize).unaryExpr([&](float) { return 0.3f * n(rng); });
  for (int b = 0; b < batch; ++b) in.steps.push_back(7 * b + 3);
  return in;
}

TEST(MotionTransformer, DefaultSizeIsUnderOneMillionParameters) {
  MotionTransformer m;
  EXPECT_LT(m.parameter_count(), 1000000u);
  EXPECT_GT(m.parameter_count(), 100000u);
}

TEST(MotionTransformer, BackwardMatchesFiniteDifferences) {
  MotionTransformer m(ModelConfig{16, 2, 2, 24, 5});
  std::mt19937_64 rng(23);
  const ModelInput in = random_input(rng, 2);
  std::normal_distribution<float> n(0.0f, 1.0f);
  const nn::Mat w = nn::Mat(2 * kFutureFrames, kFeatureWidth).unaryExpr([&](float) { return n(rng); });
  auto loss = [&] { return static_cast<double>((m.forward(in).array() * w.array()).sum()); };
  auto cache = m.make_cache();
  m.forward(in, cache.get());
  m.backward(*cache, w);
  std::uniform_int_distribution<int> pick(0, 1 << 30);
  int checked = 0;
  for (nn::Tensor* t : m.parameters()) {
    for (int trial = 0; trial < 3; ++trial) {
      const int k = pick(rng) % static_cast<int>(t->value.size());
      const float saved = t->value.data()[k];
      const float h = 1e-2f;
      t->value.data()[k] = saved + h;
      const double up = loss();
      t->value.data()[k] = saved - h;
      const double down = loss();
      t->value.data()[k] = saved;
      const double fd = (up - down) / (2 * h);
      const double g = t->grad.data()[k];
      EXPECT_NEAR(g, fd, 2e-2 * std::max(1.0, std::abs(fd))) << t->name << "[" << k << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(MotionTransformer, PullbackMatchesFiniteDifferences) {
  std::mt19937_64 rng(26);
  const TransformerDenoiser d(MotionTransformer(ModelConfig{16, 2, 2, 24, 6}), Normalizer::identity());
  const DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0));
  const FeatureMatrix x = random_features(rng, kFutureFrames);
  const FeatureMatrix w = random_features(rng, kFutureFrames);
  const FeatureMatrix before = d.predict(x, 3, c);
  const FeatureMatrix g = d.pullback(x, 3, c, w);
  EXPECT_EQ(d.predict(x, 3, c), before);  // no side effects on the model
  std::uniform_int_distribution<int> row(0, kFutureFrames - 1);
  std::uniform_int_distribution<int> col(0, kFeatureWidth - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int i = row(rng);
    const int j = col(rng);
    const double h = 1e-2;
    FeatureMatrix up = x;
    FeatureMatrix down = x;
    up(i, j) += h;
    down(i, j) -= h;
    const double fd = ((d.predict(up, 3, c) - d.predict(down, 3, c)).array() * w.array()).sum() / (2 * h);
    EXPECT_NEAR(g(i, j), fd, 2e-2 * std::max(1.0, std::abs(fd))) << i << "," << j;
  }
}

TEST(Denoiser, DefaultPullbackIsIdentity) {
  std::mt19937_64 rng(27);
  const StillDenoiser d;
  const DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0));
  const FeatureMatrix w = random_features(rng, kFutureFrames);
  EXPECT_EQ(d.pullback(w, 0, c, w), w);
}

TEST(MotionTransformer, RejectsBadShapes) {
  MotionTransformer m(ModelConfig{16, 2, 1, 16, 1});
  std::mt19937_64 rng(24);
  ModelInput in = random_input(rng, 1);
  in.steps.push_back(0);
  EXPECT_THROW(m.forward(in), DenoiserShapeMismatch);
  EXPECT_THROW(MotionTransformer(ModelConfig{18, 4, 1, 16, 1}), InvalidParams);
}

TEST(Checkpoint, RoundTripReproducesPredictions) {
  std::mt19937_64 rng(25);
  std::vector<FeatureMatrix> samples = {random_features(rng, 12)};
  const Normalizer norm = Normalizer::fit(samples);
  MotionTransformer model(ModelConfig{16, 2, 1, 16, 9});
  const auto path = std::filesystem::temp_directory_path() / "stride_ckpt_test.bin";
  save_checkpoint(path, model, Checkpoint{model.config(), norm, 42});
  Checkpoint meta;
  const TransformerDenoiser loaded = load_checkpoint(path, &meta);
  const TransformerDenoiser original(std::move(model), norm);
  EXPECT_EQ(meta.train_steps, 42);
  EXPECT_EQ(meta.normalizer.std, norm.std);
  const DiffusionCondition c = flat_condition(rest_pose_segment(skel(), kSeedFrames, Vec3::Zero(), 0.0));
  const FeatureMatrix x = standard_normal(kFutureFrames, kFeatureWidth, rng);
  EXPECT_EQ(loaded.predict(x, 5, c), original.predict(x, 5, c));

  auto bytes = read_binary_file(path);
  bytes.resize(bytes.size() - 4);
  write_binary_file(path, bytes);
  EXPECT_THROW(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace stride
