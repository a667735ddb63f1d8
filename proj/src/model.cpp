#include "stride/model.hpp"

#include "stride/io_util.hpp"

#include <json.hpp>

#include <cmath>

namespace stride {

using nn::Mat;

void ModelConfig::validate() const {
  if (width < 8 || heads < 1 || width % heads != 0) throw InvalidParams("model width must divide into heads");
  if (width % 2 != 0) throw InvalidParams("model width must be even");
  if (layers < 1 || ff < 1) throw InvalidParams("model needs at least one layer");
}

struct MotionTransformer::Cache {
  nn::Linear::Cache time1, time2, scene_in, motion_in, head;
  Mat time_hidden;
  std::vector<nn::EncoderLayer::Cache> layers;
  nn::LayerNorm::Cache final_ln;
  int batch = 0;
};

MotionTransformer::MotionTransformer(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.init_seed);
  const int w = config_.width;
  time1_ = nn::Linear("time1", w, w, rng);
  time2_ = nn::Linear("time2", w, w, rng);
  scene_in_ = nn::Linear("scene_in", kSceneGridSize, w, rng);
  motion_in_ = nn::Linear("motion_in", kMotionTokenWidth, w, rng);
  pos_.init("pos", kTokenCount, w);
  std::normal_distribution<float> n(0.0f, 0.02f);
  for (Eigen::Index k = 0; k < pos_.value.size(); ++k) pos_.value.data()[k] = n(rng);
  for (int l = 0; l < config_.layers; ++l) {
    layers_.emplace_back("layer" + std::to_string(l), w, config_.heads, config_.ff, rng);
  }
  final_ln_ = nn::LayerNorm("final_ln", w);
  head_ = nn::Linear("head", w, kFeatureWidth, rng);
}

MotionTransformer::~MotionTransformer() = default;
MotionTransformer::MotionTransformer(const MotionTransformer&) = default;
MotionTransformer& MotionTransformer::operator=(const MotionTransformer&) = default;
MotionTransformer::MotionTransformer(MotionTransformer&&) noexcept = default;
MotionTransformer& MotionTransformer::operator=(MotionTransformer&&) noexcept = default;

void MotionTransformer::CacheDeleter::operator()(Cache* c) const { delete c; }

MotionTransformer::CachePtr MotionTransformer::make_cache() const { return CachePtr(new Cache()); }

nn::TensorList MotionTransformer::parameters() {
  nn::TensorList out;
  time1_.collect(out);
  time2_.collect(out);
  scene_in_.collect(out);
  motion_in_.collect(out);
  out.push_back(&pos_);
  for (auto& l : layers_) l.collect(out);
  final_ln_.collect(out);
  head_.collect(out);
  return out;
}

std::size_t MotionTransformer::parameter_count() {
  std::size_t n = 0;
  for (const nn::Tensor* t : parameters()) n += t->value.size();
  return n;
}

namespace {

Mat timestep_embedding(const std::vector<int>& steps, int width) {
  const int half = width / 2;
  Mat e(steps.size(), width);
  for (size_t b = 0; b < steps.size(); ++b) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / half);
      e(b, i) = static_cast<float>(std::sin(steps[b] * freq));
      e(b, i + half) = static_cast<float>(std::cos(steps[b] * freq));
    }
  }
  return e;
}

}  // namespace

void fill_model_input(ModelInput& input, int slot, const FeatureMatrix& seed_z,
                      const FeatureMatrix& future_z, const FeatureMatrix& text,
                      const std::vector<std::array<double, kSceneGridSize>>& scene, int step) {
  const int base = slot * kSegmentFrames;
  for (int i = 0; i < kSegmentFrames; ++i) {
    const bool seed = i < kSeedFrames;
    auto row = input.motion.row(base + i);
    for (int c = 0; c < kFeatureWidth; ++c) {
      row(c) = static_cast<float>(seed ? seed_z(i, c) : future_z(i - kSeedFrames, c));
    }
    for (int c = 0; c < kTextWidth; ++c) row(kFeatureWidth + c) = static_cast<float>(text(i, c));
    row(kFeatureWidth + kTextWidth) = seed ? 1.0f : 0.0f;
    for (int c = 0; c < kSceneGridSize; ++c) input.scene(base + i, c) = static_cast<float>(scene[i][c]);
  }
  input.steps[slot] = step;
}

Mat MotionTransformer::forward(const ModelInput& input, Cache* cache) const {
  const int b = input.batch;
  const int w = config_.width;
  if (input.motion.rows() != b * kSegmentFrames || input.motion.cols() != kMotionTokenWidth ||
      input.scene.rows() != b * kSegmentFrames || input.scene.cols() != kSceneGridSize ||
      static_cast<int>(input.steps.size()) != b) {
    throw DenoiserShapeMismatch("model input has the wrong shape");
  }
  if (cache) {
    cache->batch = b;
    cache->layers.resize(layers_.size());
  }
  Mat tsin = timestep_embedding(input.steps, w);
  Mat th = time1_.forward(tsin, cache ? &cache->time1 : nullptr);
  Mat temb = time2_.forward(nn::silu(th), cache ? &cache->time2 : nullptr);
  const Mat scene = scene_in_.forward(input.scene, cache ? &cache->scene_in : nullptr);
  const Mat motion = motion_in_.forward(input.motion, cache ? &cache->motion_in : nullptr);
  if (cache) cache->time_hidden = std::move(th);

  Mat x(b * kTokenCount, w);
  for (int s = 0; s < b; ++s) {
    const int base = s * kTokenCount;
    x.row(base) = temb.row(s);
    x.block(base + 1, 0, kSegmentFrames, w) = scene.block(s * kSegmentFrames, 0, kSegmentFrames, w);
    x.block(base + 1 + kSegmentFrames, 0, kSegmentFrames, w) =
        motion.block(s * kSegmentFrames, 0, kSegmentFrames, w);
    x.block(base, 0, kTokenCount, w) += pos_.value;
  }
  for (size_t l = 0; l < layers_.size(); ++l) {
    x = layers_[l].forward(x, b, kTokenCount, cache ? &cache->layers[l] : nullptr);
  }
  const Mat y = final_ln_.forward(x, cache ? &cache->final_ln : nullptr);
  Mat future(b * kFutureFrames, w);
  for (int s = 0; s < b; ++s) {
    future.block(s * kFutureFrames, 0, kFutureFrames, w) =
        y.block(s * kTokenCount + 1 + kSegmentFrames + kSeedFrames, 0, kFutureFrames, w);
  }
  return head_.forward(future, cache ? &cache->head : nullptr);
}

Mat MotionTransformer::backward(const Cache& cache, const Mat& doutput) {
  const int b = cache.batch;
  const int w = config_.width;
  const Mat dfuture = head_.backward(cache.head, doutput);
  Mat dy = Mat::Zero(b * kTokenCount, w);
  for (int s = 0; s < b; ++s) {
    dy.block(s * kTokenCount + 1 + kSegmentFrames + kSeedFrames, 0, kFutureFrames, w) =
        dfuture.block(s * kFutureFrames, 0, kFutureFrames, w);
  }
  Mat dx = final_ln_.backward(cache.final_ln, dy);
  for (size_t l = layers_.size(); l-- > 0;) dx = layers_[l].backward(cache.layers[l], dx, b, kTokenCount);

  Mat dtemb(b, w);
  Mat dscene(b * kSegmentFrames, w);
  Mat dmotion(b * kSegmentFrames, w);
  for (int s = 0; s < b; ++s) {
    const int base = s * kTokenCount;
    pos_.grad += dx.block(base, 0, kTokenCount, w);
    dtemb.row(s) = dx.row(base);
    dscene.block(s * kSegmentFrames, 0, kSegmentFrames, w) = dx.block(base + 1, 0, kSegmentFrames, w);
    dmotion.block(s * kSegmentFrames, 0, kSegmentFrames, w) =
        dx.block(base + 1 + kSegmentFrames, 0, kSegmentFrames, w);
  }
  scene_in_.backward(cache.scene_in, dscene);
  Mat dinput = motion_in_.backward(cache.motion_in, dmotion);
  const Mat dact = time2_.backward(cache.time2, dtemb);
  time1_.backward(cache.time1, nn::silu_backward(cache.time_hidden, dact));
  return dinput;
}

namespace {

ModelInput single_input(const FeatureMatrix& noisy_future, int step, const DiffusionCondition& condition,
                        const Normalizer& normalizer) {
  if (noisy_future.rows() != kFutureFrames || noisy_future.cols() != kFeatureWidth) {
    throw DenoiserShapeMismatch("noisy future must be 30 x 139");
  }
  condition.validate();
  ModelInput input;
  input.batch = 1;
  input.motion.resize(kSegmentFrames, kMotionTokenWidth);
  input.scene.resize(kSegmentFrames, kSceneGridSize);
  input.steps.resize(1);
  fill_model_input(input, 0, normalizer.normalize(condition.seed), noisy_future, condition.text,
                   condition.scene, step);
  return input;
}

}  // namespace

FeatureMatrix TransformerDenoiser::predict(const FeatureMatrix& noisy_future, int step,
                                           const DiffusionCondition& condition) const {
  return model_.forward(single_input(noisy_future, step, condition, normalizer_)).cast<double>();
}

FeatureMatrix TransformerDenoiser::pullback(const FeatureMatrix& noisy_future, int step,
                                            const DiffusionCondition& condition,
                                            const FeatureMatrix& cotangent) const {
  if (cotangent.rows() != kFutureFrames || cotangent.cols() != kFeatureWidth) {
    throw DenoiserShapeMismatch("cotangent must be 30 x 139");
  }
  // Backward accumulates parameter gradients, so run it on a scratch copy.
  MotionTransformer scratch = model_;
  auto cache = scratch.make_cache();
  scratch.forward(single_input(noisy_future, step, condition, normalizer_), cache.get());
  const Mat dinput = scratch.backward(*cache, cotangent.cast<float>());
  return dinput.block(kSeedFrames, 0, kFutureFrames, kFeatureWidth).cast<double>();
}

namespace {
constexpr char kCheckpointMagic[4] = {'S', 'C', 'K', '1'};
}

void save_checkpoint(const std::filesystem::path& path, MotionTransformer& model, const Checkpoint& meta) {
  nlohmann::json j;
  j["format"] = "stride-checkpoint";
  j["version"] = 1;
  const ModelConfig& c = model.config();
  j["config"] = {{"width", c.width}, {"heads", c.heads}, {"layers", c.layers}, {"ff", c.ff},
                 {"init_seed", c.init_seed}};
  j["normalizer"] = {{"mean", std::vector<double>(meta.normalizer.mean.data(),
                                                  meta.normalizer.mean.data() + kFeatureWidth)},
                     {"std", std::vector<double>(meta.normalizer.std.data(),
                                                 meta.normalizer.std.data() + kFeatureWidth)}};
  j["train_steps"] = meta.train_steps;
  j["tensors"] = nlohmann::json::array();
  for (const nn::Tensor* t : model.parameters()) {
    j["tensors"].push_back({{"name", t->name}, {"rows", t->value.rows()}, {"cols", t->value.cols()}});
  }
  const std::string manifest = j.dump();
  ByteWriter w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put<std::uint64_t>(manifest.size());
  w.put_bytes(manifest.data(), manifest.size());
  for (const nn::Tensor* t : model.parameters()) {
    w.put_bytes(t->value.data(), sizeof(float) * t->value.size());
  }
  write_binary_file(path, w.bytes());
}

TransformerDenoiser load_checkpoint(const std::filesystem::path& path, Checkpoint* meta) {
  const std::vector<char> bytes = read_binary_file(path);
  ByteReader r(bytes);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kCheckpointMagic, 4)) throw FormatError("not a checkpoint file");
  const auto len = r.get<std::uint64_t>();
  std::string manifest(len, '\0');
  r.get_bytes(manifest.data(), len);
  Checkpoint info;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(manifest);
    if (j.at("format") != "stride-checkpoint" || j.at("version") != 1) {
      throw FormatError("unsupported checkpoint version");
    }
    const auto& c = j.at("config");
    info.config.width = c.at("width");
    info.config.heads = c.at("heads");
    info.config.layers = c.at("layers");
    info.config.ff = c.at("ff");
    info.config.init_seed = c.at("init_seed");
    const auto mean = j.at("normalizer").at("mean").get<std::vector<double>>();
    const auto sd = j.at("normalizer").at("std").get<std::vector<double>>();
    if (mean.size() != kFeatureWidth || sd.size() != kFeatureWidth) {
      throw FormatError("normalizer size mismatch");
    }
    for (int k = 0; k < kFeatureWidth; ++k) {
      info.normalizer.mean(k) = mean[k];
      info.normalizer.std(k) = sd[k];
    }
    info.train_steps = j.at("train_steps");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
  }
  MotionTransformer model(info.config);
  const auto params = model.parameters();
  const auto& tensors = j.at("tensors");
  if (tensors.size() != params.size()) throw FormatError("checkpoint tensor count mismatch");
  for (size_t k = 0; k < params.size(); ++k) {
    nn::Tensor& t = *params[k];
    if (tensors[k].at("name") != t.name || tensors[k].at("rows") != t.value.rows() ||
        tensors[k].at("cols") != t.value.cols()) {
      throw FormatError("checkpoint tensor '" + t.name + "' does not match the model");
    }
    r.get_bytes(t.value.data(), sizeof(float) * t.value.size());
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint tensors");
  if (meta) *meta = info;
  return TransformerDenoiser(std::move(model), info.normalizer);
}

}  // namespace stride
