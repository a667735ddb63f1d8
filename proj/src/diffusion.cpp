#include "stride/diffusion.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace stride {

NoiseSchedule::NoiseSchedule(int steps, double offset) {
  if (steps < 1) throw InvalidParams("noise schedule needs at least one step");
  auto f = [&](double t) {
    const double a = std::cos((t / steps + offset) / (1.0 + offset) * kPi / 2.0);
    return a * a;
  };
  double prev = 1.0;
  for (int n = 0; n < steps; ++n) {
    const double target = f(n + 1.0) / f(0.0);
    const double beta = std::clamp(1.0 - target / prev, 1e-8, 0.999);
    betas_.push_back(beta);
    prev *= 1.0 - beta;
    alpha_bars_.push_back(prev);
  }
  for (int n = 0; n < steps; ++n) {
    const double prev_bar = n == 0 ? 1.0 : alpha_bars_[n - 1];
    posterior_variances_.push_back(betas_[n] * (1.0 - prev_bar) / (1.0 - alpha_bars_[n]));
  }
}

double NoiseSchedule::posterior_coef_x0(int n) const {
  const double prev_bar = n == 0 ? 1.0 : alpha_bars_.at(n - 1);
  return std::sqrt(prev_bar) * betas_.at(n) / (1.0 - alpha_bars_.at(n));
}

double NoiseSchedule::posterior_coef_xn(int n) const {
  const double prev_bar = n == 0 ? 1.0 : alpha_bars_.at(n - 1);
  return std::sqrt(alpha(n)) * (1.0 - prev_bar) / (1.0 - alpha_bars_.at(n));
}

FeatureMatrix standard_normal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureMatrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

FeatureMatrix forward_noise(const FeatureMatrix& x0, int n, const NoiseSchedule& schedule,
                            const FeatureMatrix& eps) {
  if (n < 0 || n >= schedule.steps()) throw InvalidParams("diffusion step out of range");
  const double ab = schedule.alpha_bar(n);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

FeatureMatrix forward_noise(const FeatureMatrix& x0, int n, const NoiseSchedule& schedule,
                            std::mt19937_64& rng) {
  return forward_noise(x0, n, schedule, standard_normal(x0.rows(), x0.cols(), rng));
}

const std::vector<std::string>& style_names() {
  static const std::vector<std::string> names = {"walk",  "run",   "crouch", "jump", "zombie",
                                                 "sneak", "march", "limp",   "skip", "backward"};
  return names;
}

int style_id(const std::string& name) {
  const auto& names = style_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidParams("unknown style '" + name + "'");
  return static_cast<int>(it - names.begin());
}

bool is_jump_style(int style) { return style == style_id("jump"); }

StyleCodebook::StyleCodebook() {
  std::mt19937_64 rng(0xc0deb00c);
  const FeatureMatrix g = standard_normal(kTextWidth, kTextWidth, rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  for (size_t s = 0; s < style_names().size(); ++s) codes_.push_back(q.row(s));
}

const Eigen::Matrix<double, 1, kTextWidth>& StyleCodebook::code(int style) const {
  if (style < 0 || style >= size()) throw InvalidParams("style id out of range");
  return codes_[style];
}

FeatureMatrix StyleCodebook::text_rows(const std::vector<int>& styles) const {
  FeatureMatrix t(styles.size(), kTextWidth);
  for (size_t i = 0; i < styles.size(); ++i) t.row(i) = code(styles[i]);
  return t;
}

const StyleCodebook& style_codebook() {
  static const StyleCodebook book;
  return book;
}

Normalizer Normalizer::fit(const std::vector<FeatureMatrix>& samples, double min_std) {
  Normalizer n;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(kFeatureWidth);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(kFeatureWidth);
  double rows = 0;
  for (const auto& s : samples) {
    if (s.cols() != kFeatureWidth) throw InvalidParams("normalizer samples must have 139 columns");
    sum += s.colwise().sum();
    rows += s.rows();
  }
  if (rows == 0) throw InvalidParams("normalizer needs at least one frame");
  n.mean = sum / rows;
  for (const auto& s : samples) sq += (s.rowwise() - n.mean).array().square().matrix().colwise().sum();
  n.std = (sq / rows).array().sqrt().max(min_std).matrix();
  return n;
}

FeatureMatrix Normalizer::normalize(const FeatureMatrix& raw) const {
  return ((raw.rowwise() - mean).array().rowwise() / std.array()).matrix();
}

FeatureMatrix Normalizer::denormalize(const FeatureMatrix& z) const {
  return ((z.array().rowwise() * std.array()).matrix()).rowwise() + mean;
}

void DiffusionCondition::validate() const {
  if (static_cast<int>(scene.size()) != kSegmentFrames) throw InvalidParams("condition needs 40 scene grids");
  if (text.rows() != kSegmentFrames || text.cols() != kTextWidth) {
    throw InvalidParams("condition text must be 40 x 64");
  }
  if (seed.rows() != kSeedFrames || seed.cols() != kFeatureWidth) {
    throw InvalidParams("condition seed must be 10 x 139");
  }
  if (!text.allFinite() || !seed.allFinite()) throw InvalidParams("non-finite condition values");
  for (const auto& g : scene) {
    for (double v : g) {
      if (!std::isfinite(v)) throw InvalidParams("non-finite scene value");
    }
  }
}

}  // namespace stride
