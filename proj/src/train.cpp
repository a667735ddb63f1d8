#include "stride/train.hpp"

#include "stride/guidance.hpp"

#include <cmath>

namespace stride {

namespace {

constexpr std::uint64_t kTrainStream = 101;

std::vector<std::array<double, kSceneGridSize>> scene_rows(const FloatRows& scene) {
  std::vector<std::array<double, kSceneGridSize>> rows(scene.rows());
  for (int i = 0; i < scene.rows(); ++i) {
    for (int k = 0; k < kSceneGridSize; ++k) rows[i][k] = scene(i, k);
  }
  return rows;
}

/// One noised training item: normalized target future and filled model rows.
struct Draw {
  FeatureMatrix target;
};

Draw fill_draw(ModelInput& input, int slot, const TrainingSample& s, const Normalizer& norm,
               const NoiseSchedule& schedule, std::mt19937_64& rng) {
  if (s.features.rows() != kSegmentFrames || s.scene.rows() != kSegmentFrames) {
    throw InvalidParams("training samples must have 40 frames");
  }
  const FeatureMatrix z = norm.normalize(s.feature_matrix());
  Draw d;
  d.target = z.bottomRows(kFutureFrames);
  const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(schedule.steps()));
  const FeatureMatrix noisy = forward_noise(d.target, n, schedule, rng);
  fill_model_input(input, slot, z.topRows(kSeedFrames), noisy, style_codebook().text_rows(s.styles),
                   scene_rows(s.scene), n);
  return d;
}

ModelInput sized_input(int batch) {
  ModelInput in;
  in.batch = batch;
  in.motion.resize(batch * kSegmentFrames, kMotionTokenWidth);
  in.scene.resize(batch * kSegmentFrames, kSceneGridSize);
  in.steps.assign(batch, 0);
  return in;
}

}  // namespace

Normalizer fit_normalizer(const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw InvalidParams("normalizer needs at least one sample");
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(kFeatureWidth);
  double rows = 0;
  for (const auto& s : samples) {
    sum += s.features.cast<double>().colwise().sum();
    rows += s.features.rows();
  }
  Normalizer n;
  n.mean = sum / rows;
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(kFeatureWidth);
  for (const auto& s : samples) {
    sq += (s.features.cast<double>().rowwise() - n.mean).array().square().matrix().colwise().sum();
  }
  n.std = (sq / rows).array().sqrt().max(0.01).matrix();
  return n;
}

double learning_rate(const TrainConfig& c, int step) {
  if (step < c.warmup) return c.lr * (step + 1) / c.warmup;
  const double span = std::max(1, c.steps - c.warmup);
  const double t = std::min(1.0, (step - c.warmup) / span);
  return c.lr_final + 0.5 * (c.lr - c.lr_final) * (1.0 + std::cos(kPi * t));
}

MotionTransformer train_denoiser(const std::vector<TrainingSample>& samples, const Normalizer& normalizer,
                                 const PipelineConfig& config,
                                 const std::function<void(const TrainStats&)>& on_log) {
  config.validate();
  if (samples.empty()) throw InvalidParams("training set is empty");
  const TrainConfig& tc = config.train;
  const NoiseSchedule schedule(config.diffusion.steps);
  const Skeleton& skel = default_skeleton();
  MotionTransformer model(config.model);
  nn::Adam::Options opt;
  opt.lr = static_cast<float>(tc.lr);
  opt.clip_norm = static_cast<float>(tc.clip);
  opt.weight_decay = static_cast<float>(tc.weight_decay);
  nn::Adam adam(model.parameters(), opt);
  std::mt19937_64 rng(derive_seed(config.seed, kTrainStream, 0));
  auto cache = model.make_cache();
  ModelInput input = sized_input(tc.batch);
  TrainStats running;
  int window = 0;

  for (int step = 0; step < tc.steps; ++step) {
    std::vector<Draw> draws;
    for (int b = 0; b < tc.batch; ++b) {
      const auto& s = samples[rng() % samples.size()];
      draws.push_back(fill_draw(input, b, s, normalizer, schedule, rng));
    }
    const nn::Mat pred = model.forward(input, cache.get());
    nn::Mat dpred(pred.rows(), pred.cols());
    for (int b = 0; b < tc.batch; ++b) {
      const FeatureMatrix p = pred.middleRows(b * kFutureFrames, kFutureFrames).cast<double>();
      const LossValue l = training_loss(p, draws[b].target, skel, config.diffusion.lambda, &normalizer);
      dpred.middleRows(b * kFutureFrames, kFutureFrames) = (l.gradient / tc.batch).cast<float>();
      running.loss += l.value / tc.batch;
      running.feature_term += l.feature_term / tc.batch;
      running.position_term += l.position_term / tc.batch;
    }
    model.backward(*cache, dpred);
    const double lr = learning_rate(tc, step);
    running.grad_norm += adam.step(static_cast<float>(lr));
    ++window;
    if (on_log && ((step + 1) % tc.log_every == 0 || step + 1 == tc.steps)) {
      TrainStats out;
      out.step = step + 1;
      out.loss = running.loss / window;
      out.feature_term = running.feature_term / window;
      out.position_term = running.position_term / window;
      out.grad_norm = running.grad_norm / window;
      out.lr = lr;
      on_log(out);
      running = {};
      window = 0;
    }
  }
  return model;
}

double evaluate_loss(const MotionTransformer& model, const std::vector<TrainingSample>& samples,
                     const Normalizer& normalizer, const PipelineConfig& config, int count,
                     std::uint64_t seed) {
  if (samples.empty() || count < 1) throw InvalidParams("evaluate_loss needs samples and count >= 1");
  const NoiseSchedule schedule(config.diffusion.steps);
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (int k = 0; k < count; ++k) {
    ModelInput input = sized_input(1);
    const Draw d = fill_draw(input, 0, samples[rng() % samples.size()], normalizer, schedule, rng);
    const FeatureMatrix p = model.forward(input).cast<double>();
    total += training_loss(p, d.target, default_skeleton(), config.diffusion.lambda, &normalizer).value;
  }
  return total / count;
}

}  // namespace stride
