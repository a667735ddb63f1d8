#pragma once

#include "stride/diffusion.hpp"
#include "stride/nn.hpp"

#include <filesystem>
#include <memory>

namespace stride {

struct ModelConfig {
  int width = 128;
  int heads = 4;
  int layers = 4;
  int ff = 256;
  std::uint64_t init_seed = 1;

  void validate() const;
};

/// Motion input width per frame: features, text code and a seed flag.
inline constexpr int kMotionTokenWidth = kFeatureWidth + kTextWidth + 1;
/// One timestep token, N scene tokens, N motion tokens.
inline constexpr int kTokenCount = 1 + 2 * kSegmentFrames;

/// A batch of denoiser inputs, rows stacked sample-major.
struct ModelInput {
  int batch = 0;
  nn::Mat motion;          // (batch * N) x kMotionTokenWidth
  nn::Mat scene;           // (batch * N) x 144
  std::vector<int> steps;  // one diffusion step per sample
};

/// Builds one sample's rows: seed frames (normalized, flag 1) then the noisy
/// future (flag 0), each followed by its text row.
void fill_model_input(ModelInput& input, int slot, const FeatureMatrix& seed_z,
                      const FeatureMatrix& future_z, const FeatureMatrix& text,
                      const std::vector<std::array<double, kSceneGridSize>>& scene, int step);

/// Transformer encoder over [timestep, scene x N, motion x N] tokens with
/// learned positional embeddings; predicts the clean future frames from the
/// future motion tokens.
class MotionTransformer {
 public:
  struct Cache;
  struct CacheDeleter {
    void operator()(Cache* c) const;
  };
  using CachePtr = std::unique_ptr<Cache, CacheDeleter>;

  explicit MotionTransformer(const ModelConfig& config = {});
  ~MotionTransformer();
  MotionTransformer(const MotionTransformer&);
  MotionTransformer& operator=(const MotionTransformer&);
  MotionTransformer(MotionTransformer&&) noexcept;
  MotionTransformer& operator=(MotionTransformer&&) noexcept;

  const ModelConfig& config() const { return config_; }

  /// (batch * (N - k)) x 139 prediction. With a cache, keeps what backward
  /// needs.
  nn::Mat forward(const ModelInput& input, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients for d(loss)/d(output) and returns
  /// d(loss)/d(input.motion).
  nn::Mat backward(const Cache& cache, const nn::Mat& doutput);

  nn::TensorList parameters();
  std::size_t parameter_count();

  CachePtr make_cache() const;

 private:
  ModelConfig config_;
  nn::Linear time1_, time2_, scene_in_, motion_in_, head_;
  nn::Tensor pos_;
  std::vector<nn::EncoderLayer> layers_;
  nn::LayerNorm final_ln_;
};

class TransformerDenoiser : public Denoiser {
 public:
  TransformerDenoiser(MotionTransformer model, Normalizer normalizer)
      : model_(std::move(model)), normalizer_(std::move(normalizer)) {}

  FeatureMatrix predict(const FeatureMatrix& noisy_future, int step,
                        const DiffusionCondition& condition) const override;
  FeatureMatrix pullback(const FeatureMatrix& noisy_future, int step, const DiffusionCondition& condition,
                         const FeatureMatrix& cotangent) const override;
  const Normalizer& normalizer() const override { return normalizer_; }

  MotionTransformer& model() { return model_; }
  const MotionTransformer& model() const { return model_; }

 private:
  MotionTransformer model_;
  Normalizer normalizer_;
};

struct Checkpoint {
  ModelConfig config;
  Normalizer normalizer;
  long train_steps = 0;
};

/// "SCK1", u64 manifest length, JSON manifest (config, normalizer, tensor
/// names and shapes), then the float32 tensors in manifest order.
void save_checkpoint(const std::filesystem::path& path, MotionTransformer& model,
                     const Checkpoint& meta);
/// Throws FormatError on a malformed file or shape mismatch.
TransformerDenoiser load_checkpoint(const std::filesystem::path& path, Checkpoint* meta = nullptr);

}  // namespace stride
