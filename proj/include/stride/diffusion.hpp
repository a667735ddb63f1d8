#pragma once

#include "stride/motion.hpp"
#include "stride/scene.hpp"

#include <random>
#include <string>
#include <vector>

namespace stride {

inline constexpr int kSegmentFrames = 40;  // N
inline constexpr int kSeedFrames = 10;     // k
inline constexpr int kFutureFrames = kSegmentFrames - kSeedFrames;
inline constexpr int kTextWidth = 64;
inline constexpr int kDefaultSteps = 100;

/// Cosine alpha-bar schedule. Step n (0-based) is diffusion time n + 1, so
/// alpha_bar[0] is the least noisy level.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(int steps = kDefaultSteps, double offset = 0.008);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int n) const { return betas_.at(n); }
  double alpha(int n) const { return 1.0 - betas_.at(n); }
  double alpha_bar(int n) const { return alpha_bars_.at(n); }
  /// Posterior variance beta-tilde of q(x_{n-1} | x_n, x_0); 0 at n = 0.
  double posterior_variance(int n) const { return posterior_variances_.at(n); }
  /// Coefficients of the posterior mean: c0 * x0 + cn * x_n (n >= 1).
  double posterior_coef_x0(int n) const;
  double posterior_coef_xn(int n) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::vector<double> posterior_variances_;
};

/// x_n = sqrt(abar_n) x0 + sqrt(1 - abar_n) eps.
FeatureMatrix forward_noise(const FeatureMatrix& x0, int n, const NoiseSchedule& schedule,
                            std::mt19937_64& rng);
FeatureMatrix forward_noise(const FeatureMatrix& x0, int n, const NoiseSchedule& schedule,
                            const FeatureMatrix& eps);

FeatureMatrix standard_normal(int rows, int cols, std::mt19937_64& rng);

/// Style names in codebook order.
const std::vector<std::string>& style_names();
int style_id(const std::string& name);
bool is_jump_style(int style);

/// Fixed orthonormal 64-d codes, one per style (a deterministic orthogonal
/// matrix, so codes are unit length and mutually orthogonal).
class StyleCodebook {
 public:
  StyleCodebook();
  const Eigen::Matrix<double, 1, kTextWidth>& code(int style) const;
  int size() const { return static_cast<int>(codes_.size()); }
  /// One text row per frame.
  FeatureMatrix text_rows(const std::vector<int>& styles) const;

 private:
  std::vector<Eigen::Matrix<double, 1, kTextWidth>> codes_;
};

const StyleCodebook& style_codebook();

/// Per-feature affine normalization; the diffusion state lives in the
/// normalized space.
struct Normalizer {
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(kFeatureWidth);
  Eigen::RowVectorXd std = Eigen::RowVectorXd::Ones(kFeatureWidth);

  static Normalizer identity() { return {}; }
  /// Mean and standard deviation over all rows, std floored at `min_std`.
  static Normalizer fit(const std::vector<FeatureMatrix>& samples, double min_std = 0.01);

  FeatureMatrix normalize(const FeatureMatrix& raw) const;
  FeatureMatrix denormalize(const FeatureMatrix& z) const;
};

/// C = (S, T, H-): per-frame scene grids for all N frames, per-frame text
/// rows, and the k canonical seed frames (raw features).
struct DiffusionCondition {
  std::vector<std::array<double, kSceneGridSize>> scene;
  FeatureMatrix text;
  FeatureMatrix seed;

  /// Throws InvalidParams on shape or finiteness violations.
  void validate() const;
};

/// Predicts the clean future from a noisy one, both normalized,
/// (N - k) x 139.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual FeatureMatrix predict(const FeatureMatrix& noisy_future, int step,
                                const DiffusionCondition& condition) const = 0;
  /// (d predict / d noisy_future)^T * cotangent. Denoisers without a
  /// Jacobian return the cotangent unchanged.
  virtual FeatureMatrix pullback(const FeatureMatrix& noisy_future, int step,
                                 const DiffusionCondition& condition, const FeatureMatrix& cotangent) const {
    (void)noisy_future;
    (void)step;
    (void)condition;
    return cotangent;
  }
  virtual const Normalizer& normalizer() const = 0;
};

}  // namespace stride
