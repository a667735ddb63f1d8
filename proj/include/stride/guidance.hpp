#pragma once

#include "stride/diffusion.hpp"
#include "stride/object.hpp"
#include "stride/scene.hpp"

namespace stride {

/// An objective value and its gradient with respect to the raw feature
/// matrix it was evaluated on (same shape).
struct ObjectiveValue {
  double value = 0.0;
  FeatureMatrix gradient;
};

/// Sum over frames and foot channels of |f - h| for contact feet and of
/// max(h - f, 0) for the others. f is the foot joint height minus the foot
/// radius, h the terrain under it; contacts come from the contact columns
/// thresholded at 0.5 and receive no gradient. Throws OutOfBounds.
ObjectiveValue guidance_phys(const FeatureMatrix& features, const Skeleton& skeleton,
                             const TerrainView& terrain);

/// Frobenius norm of all consecutive-frame joint displacements.
ObjectiveValue guidance_smooth(const FeatureMatrix& features, const Skeleton& skeleton);

/// Mean over frames and joints of max(-sdf(p), 0). Throws OutOfBounds.
ObjectiveValue guidance_collision(const FeatureMatrix& features, const Skeleton& skeleton,
                                  const SdfGrid& sdf);

struct GuidanceWeights {
  double phys = 3.0;
  double smooth = 50.0;
  double collision = 50.0;
};

enum class GuidancePolicy { kFinalStep, kEveryStep };

struct GuidanceSpec {
  GuidanceWeights weights;
  GuidancePolicy policy = GuidancePolicy::kFinalStep;
  bool enabled = true;

  static GuidanceSpec none() {
    GuidanceSpec s;
    s.enabled = false;
    return s;
  }
  bool active_at(int step) const {
    return enabled && (policy == GuidancePolicy::kEveryStep || step == 0);
  }
  void validate() const;
};

/// What the objectives need; null members switch their objective off.
struct GuidanceContext {
  const Skeleton* skeleton = nullptr;
  const TerrainView* terrain = nullptr;
  const SdfGrid* sdf = nullptr;
};

/// Weighted objective gradient for a normalized future prediction: the
/// objectives are evaluated on seed ++ denormalized future and the result is
/// sum alpha * (std * dJ/dx) over the future rows, the gradient with respect
/// to the normalized state.
FeatureMatrix guidance_gradient(const FeatureMatrix& future, const FeatureMatrix& seed_raw,
                                const Normalizer& normalizer, const GuidanceSpec& spec,
                                const GuidanceContext& context);

/// future - guidance_gradient(...). With the identity normalizer this is
/// H0 - alpha grad J(H0).
FeatureMatrix apply_guidance(const FeatureMatrix& future, const FeatureMatrix& seed_raw,
                             const Normalizer& normalizer, const GuidanceSpec& spec,
                             const GuidanceContext& context);

struct LossValue {
  double value = 0.0;
  double feature_term = 0.0;
  double position_term = 0.0;
  FeatureMatrix gradient;  // with respect to `prediction`
};

/// Mean squared feature error plus lambda times the mean squared FK joint
/// position error. With a normalizer, prediction and target are normalized:
/// the feature term is taken there and FK runs on the denormalized values.
LossValue training_loss(const FeatureMatrix& prediction, const FeatureMatrix& target,
                        const Skeleton& skeleton, double lambda = 4.0,
                        const Normalizer* normalizer = nullptr);

}  // namespace stride
