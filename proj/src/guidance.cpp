#include "stride/guidance.hpp"

#include "stride/kinematics.hpp"

#include <cmath>

namespace stride {

namespace {

JointPositions zero_positions(int frames) {
  JointPositions g(frames);
  for (auto& p : g.points) p.setZero();
  return g;
}

}  // namespace

ObjectiveValue guidance_phys(const FeatureMatrix& features, const Skeleton& skeleton,
                             const TerrainView& terrain) {
  const JointPositions p = forward_kinematics(skeleton, features);
  JointPositions dp = zero_positions(p.frames);
  ObjectiveValue out;
  for (int i = 0; i < p.frames; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      const int j = skeleton.foot_joints[c];
      const Vec3& q = p.at(i, j);
      const HeightSample h = terrain.sample(q.x(), q.z());
      const double r = q.y() - skeleton.foot_radius - h.height;  // f - h
      // d(f - h)/d position
      const Vec3 dr(-h.dx, 1.0, -h.dz);
      if (features(i, kContactFeatureOffset + c) > 0.5) {
        out.value += std::abs(r);
        if (r != 0.0) dp.at(i, j) += (r > 0.0 ? 1.0 : -1.0) * dr;
      } else if (r < 0.0) {
        out.value += -r;
        dp.at(i, j) -= dr;
      }
    }
  }
  out.gradient = forward_kinematics_backward(skeleton, features, dp);
  return out;
}

ObjectiveValue guidance_smooth(const FeatureMatrix& features, const Skeleton& skeleton) {
  if (features.rows() < 2) throw InvalidParams("smoothness needs at least two frames");
  const JointPositions p = forward_kinematics(skeleton, features);
  double sq = 0.0;
  for (int i = 1; i < p.frames; ++i) {
    for (int j = 0; j < kJointCount; ++j) sq += (p.at(i, j) - p.at(i - 1, j)).squaredNorm();
  }
  ObjectiveValue out;
  out.value = std::sqrt(sq);
  JointPositions dp = zero_positions(p.frames);
  if (out.value > 0.0) {
    for (int i = 1; i < p.frames; ++i) {
      for (int j = 0; j < kJointCount; ++j) {
        const Vec3 d = (p.at(i, j) - p.at(i - 1, j)) / out.value;
        dp.at(i, j) += d;
        dp.at(i - 1, j) -= d;
      }
    }
  }
  out.gradient = forward_kinematics_backward(skeleton, features, dp);
  return out;
}

ObjectiveValue guidance_collision(const FeatureMatrix& features, const Skeleton& skeleton,
                                  const SdfGrid& sdf) {
  const JointPositions p = forward_kinematics(skeleton, features);
  JointPositions dp = zero_positions(p.frames);
  const double scale = 1.0 / (static_cast<double>(p.frames) * kJointCount);
  ObjectiveValue out;
  for (int i = 0; i < p.frames; ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      const SdfSample s = sdf.sample(p.at(i, j));
      if (s.value < 0.0) {
        out.value -= scale * s.value;
        dp.at(i, j) -= scale * s.gradient;
      }
    }
  }
  out.gradient = forward_kinematics_backward(skeleton, features, dp);
  return out;
}

void GuidanceSpec::validate() const {
  if (!(weights.phys >= 0.0) || !(weights.smooth >= 0.0) || !(weights.collision >= 0.0)) {
    throw InvalidParams("guidance weights must be non-negative");
  }
}

FeatureMatrix guidance_gradient(const FeatureMatrix& future, const FeatureMatrix& seed_raw,
                                const Normalizer& normalizer, const GuidanceSpec& spec,
                                const GuidanceContext& context) {
  spec.validate();
  const FeatureMatrix none = FeatureMatrix::Zero(future.rows(), future.cols());
  if (!spec.enabled || !context.skeleton) return none;
  const auto& w = spec.weights;
  const bool phys = w.phys > 0.0 && context.terrain;
  const bool smooth = w.smooth > 0.0;
  const bool collision = w.collision > 0.0 && context.sdf;
  if (!phys && !smooth && !collision) return none;

  FeatureMatrix full(seed_raw.rows() + future.rows(), kFeatureWidth);
  full.topRows(seed_raw.rows()) = seed_raw;
  full.bottomRows(future.rows()) = normalizer.denormalize(future);
  FeatureMatrix grad = FeatureMatrix::Zero(full.rows(), full.cols());
  if (phys) grad += w.phys * guidance_phys(full, *context.skeleton, *context.terrain).gradient;
  if (smooth) grad += w.smooth * guidance_smooth(full, *context.skeleton).gradient;
  if (collision) grad += w.collision * guidance_collision(full, *context.skeleton, *context.sdf).gradient;
  const FeatureMatrix g = grad.bottomRows(future.rows());
  return (g.array().rowwise() * normalizer.std.array()).matrix();
}

FeatureMatrix apply_guidance(const FeatureMatrix& future, const FeatureMatrix& seed_raw,
                             const Normalizer& normalizer, const GuidanceSpec& spec,
                             const GuidanceContext& context) {
  return future - guidance_gradient(future, seed_raw, normalizer, spec, context);
}

LossValue training_loss(const FeatureMatrix& prediction, const FeatureMatrix& target,
                        const Skeleton& skeleton, double lambda, const Normalizer* normalizer) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols() ||
      prediction.cols() != kFeatureWidth) {
    throw InvalidParams("loss operands must have matching N x 139 shapes");
  }
  LossValue out;
  const FeatureMatrix diff = prediction - target;
  const double nf = static_cast<double>(diff.size());
  out.feature_term = diff.squaredNorm() / nf;
  out.gradient = 2.0 / nf * diff;
  if (lambda != 0.0) {
    const FeatureMatrix raw_pred = normalizer ? normalizer->denormalize(prediction) : prediction;
    const FeatureMatrix raw_true = normalizer ? normalizer->denormalize(target) : target;
    const JointPositions a = forward_kinematics(skeleton, raw_pred);
    const JointPositions b = forward_kinematics(skeleton, raw_true);
    const double np = static_cast<double>(a.points.size()) * 3.0;
    JointPositions dp(a.frames);
    for (size_t k = 0; k < a.points.size(); ++k) {
      const Vec3 d = a.points[k] - b.points[k];
      out.position_term += d.squaredNorm() / np;
      dp.points[k] = 2.0 * lambda / np * d;
    }
    FeatureMatrix g = forward_kinematics_backward(skeleton, raw_pred, dp);
    if (normalizer) g = (g.array().rowwise() * normalizer->std.array()).matrix();
    out.gradient += g;
  }
  out.value = out.feature_term + lambda * out.position_term;
  return out;
}

}  // namespace stride
