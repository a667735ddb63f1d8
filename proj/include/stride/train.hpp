#pragma once

#include "stride/config.hpp"
#include "stride/dataset.hpp"
#include "stride/model.hpp"

#include <functional>

namespace stride {

/// Per-feature mean and std over every frame of every sample (std floored
/// at 0.01), accumulated in double.
Normalizer fit_normalizer(const std::vector<TrainingSample>& samples);

struct TrainStats {
  int step = 0;
  double loss = 0.0;
  double feature_term = 0.0;
  double position_term = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

/// Linear warmup to `lr`, then cosine decay to `lr_final` at `steps`.
double learning_rate(const TrainConfig& config, int step);

/// x0-prediction training: each step draws a batch of samples and one
/// diffusion step per sample, noises the normalized future, and minimizes
/// the feature + lambda * FK position loss with Adam. Batch items are
/// independent, so the loss is their mean. Deterministic in config.seed.
/// `on_log` sees running means every train.log_every steps.
MotionTransformer train_denoiser(const std::vector<TrainingSample>& samples, const Normalizer& normalizer,
                                 const PipelineConfig& config,
                                 const std::function<void(const TrainStats&)>& on_log = {});

/// Mean loss of the model on `count` fixed (sample, step, noise) draws.
double evaluate_loss(const MotionTransformer& model, const std::vector<TrainingSample>& samples,
                     const Normalizer& normalizer, const PipelineConfig& config, int count,
                     std::uint64_t seed);

}  // namespace stride
