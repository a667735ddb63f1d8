#pragma once

#include <Eigen/Core>

#include <random>
#include <string>
#include <vector>

namespace stride::nn {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named parameter and its accumulated gradient.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;

  void init(std::string n, int rows, int cols) {
    name = std::move(n);
    value = Mat::Zero(rows, cols);
    grad = Mat::Zero(rows, cols);
  }
};

using TensorList = std::vector<Tensor*>;

/// y = x W + b, rows are tokens.
class Linear {
 public:
  struct Cache {
    Mat x;
  };

  Linear() = default;
  Linear(const std::string& name, int in, int out, std::mt19937_64& rng, float gain = 1.0f);

  Mat forward(const Mat& x, Cache* cache) const;
  Mat backward(const Cache& cache, const Mat& dy);
  void collect(TensorList& out) { out.push_back(&w_); out.push_back(&b_); }

 private:
  Tensor w_;
  Tensor b_;
};

class LayerNorm {
 public:
  struct Cache {
    Mat xhat;
    Eigen::VectorXf inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int width);

  Mat forward(const Mat& x, Cache* cache) const;
  Mat backward(const Cache& cache, const Mat& dy);
  void collect(TensorList& out) { out.push_back(&gamma_); out.push_back(&beta_); }

 private:
  Tensor gamma_;
  Tensor beta_;
};

Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& x, const Mat& dy);
Mat silu(const Mat& x);
Mat silu_backward(const Mat& x, const Mat& dy);

/// Multi-head self-attention over `batch` independent sequences of
/// `tokens` rows each, stacked in x.
class SelfAttention {
 public:
  struct Cache {
    Linear::Cache qkv_in;
    Linear::Cache out_in;
    Mat qkv;
    std::vector<Mat> probs;  // batch * heads, tokens x tokens
  };

  SelfAttention() = default;
  SelfAttention(const std::string& name, int width, int heads, std::mt19937_64& rng);

  Mat forward(const Mat& x, int batch, int tokens, Cache* cache) const;
  Mat backward(const Cache& cache, const Mat& dy, int batch, int tokens);
  void collect(TensorList& out) { qkv_.collect(out); out_.collect(out); }

 private:
  int width_ = 0;
  int heads_ = 1;
  Linear qkv_;
  Linear out_;
};

/// Pre-norm encoder block: x + attn(ln(x)), then x + ff(ln(x)).
class EncoderLayer {
 public:
  struct Cache {
    LayerNorm::Cache ln1, ln2;
    SelfAttention::Cache attn;
    Linear::Cache ff1, ff2;
    Mat ff_hidden;  // pre-activation
  };

  EncoderLayer() = default;
  EncoderLayer(const std::string& name, int width, int heads, int ff, std::mt19937_64& rng);

  Mat forward(const Mat& x, int batch, int tokens, Cache* cache) const;
  Mat backward(const Cache& cache, const Mat& dy, int batch, int tokens);
  void collect(TensorList& out);

 private:
  LayerNorm ln1_, ln2_;
  SelfAttention attn_;
  Linear ff1_, ff2_;
};

/// Adam with decoupled weight decay and global-norm gradient clipping.
class Adam {
 public:
  struct Options {
    float lr = 5e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float weight_decay = 0.0f;
    float clip_norm = 1.0f;
  };

  Adam(TensorList params, Options options);
  /// Applies one update with learning rate `lr` and zeroes the gradients.
  /// Returns the pre-clip gradient norm.
  float step(float lr);
  long steps_taken() const { return t_; }

 private:
  TensorList params_;
  Options opt_;
  std::vector<Mat> m_, v_;
  long t_ = 0;
};

void zero_grad(const TensorList& params);

}  // namespace stride::nn
