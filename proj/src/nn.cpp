#include "stride/nn.hpp"

#include <cmath>

namespace stride::nn {

Linear::Linear(const std::string& name, int in, int out, std::mt19937_64& rng, float gain) {
  w_.init(name + ".w", in, out);
  b_.init(name + ".b", 1, out);
  // Xavier uniform.
  const float limit = gain * std::sqrt(6.0f / static_cast<float>(in + out));
  std::uniform_real_distribution<float> u(-limit, limit);
  for (Eigen::Index k = 0; k < w_.value.size(); ++k) w_.value.data()[k] = u(rng);
}

Mat Linear::forward(const Mat& x, Cache* cache) const {
  if (cache) cache->x = x;
  Mat y(x.rows(), w_.value.cols());
  y.noalias() = x * w_.value;
  y.rowwise() += b_.value.row(0);
  return y;
}

Mat Linear::backward(const Cache& cache, const Mat& dy) {
  w_.grad.noalias() += cache.x.transpose() * dy;
  b_.grad += dy.colwise().sum();
  Mat dx(dy.rows(), w_.value.rows());
  dx.noalias() = dy * w_.value.transpose();
  return dx;
}

LayerNorm::LayerNorm(const std::string& name, int width) {
  gamma_.init(name + ".gamma", 1, width);
  gamma_.value.setOnes();
  beta_.init(name + ".beta", 1, width);
}

Mat LayerNorm::forward(const Mat& x, Cache* cache) const {
  constexpr float kEps = 1e-5f;
  const Eigen::Index n = x.rows();
  const float w = static_cast<float>(x.cols());
  Mat xhat(n, x.cols());
  Eigen::VectorXf inv(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const float mean = x.row(r).sum() / w;
    const auto centered = x.row(r).array() - mean;
    const float var = centered.square().sum() / w;
    inv(r) = 1.0f / std::sqrt(var + kEps);
    xhat.row(r) = centered * inv(r);
  }
  Mat y = (xhat.array().rowwise() * gamma_.value.row(0).array()).matrix();
  y.rowwise() += beta_.value.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv);
  }
  return y;
}

Mat LayerNorm::backward(const Cache& cache, const Mat& dy) {
  gamma_.grad += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
  beta_.grad += dy.colwise().sum();
  const Mat dxhat = (dy.array().rowwise() * gamma_.value.row(0).array()).matrix();
  const float w = static_cast<float>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const float s1 = dxhat.row(r).sum();
    const float s2 = dxhat.row(r).dot(cache.xhat.row(r));
    dx.row(r) = (cache.inv_std(r) / w) *
                (w * dxhat.row(r).array() - s1 - cache.xhat.row(r).array() * s2).matrix();
  }
  return dx;
}

namespace {
constexpr float kGeluK = 0.7978845608028654f;  // sqrt(2 / pi)
constexpr float kGeluC = 0.044715f;
}  // namespace

Mat gelu(const Mat& x) {
  return x.unaryExpr([](float v) {
    return 0.5f * v * (1.0f + std::tanh(kGeluK * (v + kGeluC * v * v * v)));
  });
}

Mat gelu_backward(const Mat& x, const Mat& dy) {
  Mat d = x.unaryExpr([](float v) {
    const float t = std::tanh(kGeluK * (v + kGeluC * v * v * v));
    return 0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * kGeluK * (1.0f + 3.0f * kGeluC * v * v);
  });
  return (d.array() * dy.array()).matrix();
}

Mat silu(const Mat& x) {
  return x.unaryExpr([](float v) { return v / (1.0f + std::exp(-v)); });
}

Mat silu_backward(const Mat& x, const Mat& dy) {
  Mat d = x.unaryExpr([](float v) {
    const float s = 1.0f / (1.0f + std::exp(-v));
    return s * (1.0f + v * (1.0f - s));
  });
  return (d.array() * dy.array()).matrix();
}

SelfAttention::SelfAttention(const std::string& name, int width, int heads, std::mt19937_64& rng)
    : width_(width), heads_(heads), qkv_(name + ".qkv", width, 3 * width, rng),
      out_(name + ".out", width, width, rng) {
  if (width % heads != 0) throw std::invalid_argument("attention width must divide into heads");
}

Mat SelfAttention::forward(const Mat& x, int batch, int tokens, Cache* cache) const {
  const int d = width_ / heads_;
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  Mat qkv = qkv_.forward(x, cache ? &cache->qkv_in : nullptr);
  Mat concat(x.rows(), width_);
  if (cache) cache->probs.resize(static_cast<size_t>(batch) * heads_);
  Mat s(tokens, tokens);
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const auto q = qkv.block(b * tokens, h * d, tokens, d);
      const auto k = qkv.block(b * tokens, width_ + h * d, tokens, d);
      const auto v = qkv.block(b * tokens, 2 * width_ + h * d, tokens, d);
      s.noalias() = scale * (q * k.transpose());
      for (int r = 0; r < tokens; ++r) {
        const float m = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - m).exp();
        s.row(r) /= s.row(r).sum();
      }
      concat.block(b * tokens, h * d, tokens, d).noalias() = s * v;
      if (cache) cache->probs[b * heads_ + h] = s;
    }
  }
  if (cache) cache->qkv = std::move(qkv);
  return out_.forward(concat, cache ? &cache->out_in : nullptr);
}

Mat SelfAttention::backward(const Cache& cache, const Mat& dy, int batch, int tokens) {
  const int d = width_ / heads_;
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  const Mat dconcat = out_.backward(cache.out_in, dy);
  Mat dqkv(dy.rows(), 3 * width_);
  Mat dp(tokens, tokens);
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const Mat& p = cache.probs[b * heads_ + h];
      const auto q = cache.qkv.block(b * tokens, h * d, tokens, d);
      const auto k = cache.qkv.block(b * tokens, width_ + h * d, tokens, d);
      const auto v = cache.qkv.block(b * tokens, 2 * width_ + h * d, tokens, d);
      const auto dout = dconcat.block(b * tokens, h * d, tokens, d);
      dp.noalias() = dout * v.transpose();
      dqkv.block(b * tokens, 2 * width_ + h * d, tokens, d).noalias() = p.transpose() * dout;
      const Eigen::VectorXf rs = (dp.array() * p.array()).rowwise().sum();
      dp = (p.array() * (dp.array().colwise() - rs.array())).matrix();  // dS
      dqkv.block(b * tokens, h * d, tokens, d).noalias() = scale * (dp * k);
      dqkv.block(b * tokens, width_ + h * d, tokens, d).noalias() = scale * (dp.transpose() * q);
    }
  }
  return qkv_.backward(cache.qkv_in, dqkv);
}

EncoderLayer::EncoderLayer(const std::string& name, int width, int heads, int ff, std::mt19937_64& rng)
    : ln1_(name + ".ln1", width), ln2_(name + ".ln2", width), attn_(name + ".attn", width, heads, rng),
      ff1_(name + ".ff1", width, ff, rng), ff2_(name + ".ff2", ff, width, rng) {}

Mat EncoderLayer::forward(const Mat& x, int batch, int tokens, Cache* cache) const {
  Mat h = x + attn_.forward(ln1_.forward(x, cache ? &cache->ln1 : nullptr), batch, tokens,
                            cache ? &cache->attn : nullptr);
  Mat pre = ff1_.forward(ln2_.forward(h, cache ? &cache->ln2 : nullptr), cache ? &cache->ff1 : nullptr);
  Mat out = h + ff2_.forward(gelu(pre), cache ? &cache->ff2 : nullptr);
  if (cache) cache->ff_hidden = std::move(pre);
  return out;
}

Mat EncoderLayer::backward(const Cache& cache, const Mat& dy, int batch, int tokens) {
  const Mat dact = ff2_.backward(cache.ff2, dy);
  const Mat dpre = gelu_backward(cache.ff_hidden, dact);
  Mat dh = dy + ln2_.backward(cache.ln2, ff1_.backward(cache.ff1, dpre));
  return dh + ln1_.backward(cache.ln1, attn_.backward(cache.attn, dh, batch, tokens));
}

void EncoderLayer::collect(TensorList& out) {
  ln1_.collect(out);
  attn_.collect(out);
  ln2_.collect(out);
  ff1_.collect(out);
  ff2_.collect(out);
}

void zero_grad(const TensorList& params) {
  for (Tensor* t : params) t->grad.setZero();
}

Adam::Adam(TensorList params, Options options) : params_(std::move(params)), opt_(options) {
  for (Tensor* t : params_) {
    m_.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
    v_.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
  }
}

float Adam::step(float lr) {
  double sq = 0.0;
  for (Tensor* t : params_) sq += static_cast<double>(t->grad.squaredNorm());
  const float norm = static_cast<float>(std::sqrt(sq));
  const float clip = (opt_.clip_norm > 0.0f && norm > opt_.clip_norm) ? opt_.clip_norm / norm : 1.0f;
  ++t_;
  const float c1 = 1.0f - std::pow(opt_.beta1, static_cast<float>(t_));
  const float c2 = 1.0f - std::pow(opt_.beta2, static_cast<float>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Tensor& t = *params_[k];
    const Mat g = clip * t.grad;
    m_[k] = opt_.beta1 * m_[k] + (1.0f - opt_.beta1) * g;
    v_[k] = opt_.beta2 * v_[k] + (1.0f - opt_.beta2) * g.cwiseProduct(g);
    t.value.array() -= lr * ((m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + opt_.eps) +
                             opt_.weight_decay * t.value.array());
    t.grad.setZero();
  }
  return norm;
}

}  // namespace stride::nn
