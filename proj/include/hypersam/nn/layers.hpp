#pragma once

#include <random>
#include <string>
#include <vector>

#include "hypersam/nn/tensor.hpp"

namespace hypersam::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

// Orthogonal matrix (semi-orthogonal when non-square) scaled by gain.
Matrix orthogonal(Eigen::Index rows, Eigen::Index cols, double gain, std::mt19937_64& rng);

class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, std::mt19937_64& rng, double gain = 1.0);
  // W = I, b = 0.
  static Linear identity(int n);
  static Linear zeros(int in, int out);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
  int in_features() const { return static_cast<int>(weight_.rows()); }
  int out_features() const { return static_cast<int>(weight_.cols()); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weight_;  // in x out
  Tensor bias_;    // 1 x out
};

// Dense layers with tanh between them and a linear output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& sizes, std::mt19937_64& rng, double hidden_gain = 1.0,
      double output_gain = 1.0);
  explicit Mlp(std::vector<Linear> layers) : layers_(std::move(layers)) {}

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
  std::vector<Linear>& layers() { return layers_; }
  std::size_t parameter_count() const;

 private:
  std::vector<Linear> layers_;
};

// x + W2 tanh(W1 x + b1) + b2 with W2, b2 zero: the identity map at initialization.
class ResidualMlp {
 public:
  ResidualMlp() = default;
  ResidualMlp(int dim, int hidden, std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
  Linear& inner() { return inner_; }
  Linear& outer() { return outer_; }
  std::size_t parameter_count() const;

 private:
  Linear inner_;
  Linear outer_;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(int d_model, int heads, std::mt19937_64& rng);

  // Per head softmax(Q K^T / sqrt(d_model)) V, heads concatenated and projected.
  // mask, when given, is added to the scores (use a large negative value to block).
  Tensor forward(const Tensor& queries, const Tensor& keys, const Tensor& values,
                 const Matrix* mask = nullptr) const;
  // Attention weights of one head, for inspection.
  Tensor weights(const Tensor& queries, const Tensor& keys, int head,
                 const Matrix* mask = nullptr) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor& wq() { return wq_; }
  Tensor& wk() { return wk_; }
  Tensor& wv() { return wv_; }
  Linear& output() { return out_; }
  int heads() const { return heads_; }

 private:
  int d_model_ = 0;
  int heads_ = 1;
  Tensor wq_, wk_, wv_;
  Linear out_;
};

class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(int d_model, int heads, int hidden, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, const Matrix* mask = nullptr) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  MultiHeadAttention attention_;
  Linear ff1_, ff2_;
};

// Attention over the entity tokens of one frame, with a learned kind embedding.
class SpatialEncoder {
 public:
  SpatialEncoder() = default;
  SpatialEncoder(int features, int kinds, int d_model, int heads, int hidden, int layers,
                 std::mt19937_64& rng);

  // tokens: N x features; kinds: N entries in [0, kinds).
  Tensor forward(const Matrix& tokens, const std::vector<int>& kinds) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear embed_;
  Tensor kind_embedding_;
  std::vector<TransformerLayer> layers_;
};

// Attention over each entity's own frame history, with learned time-slot embeddings.
class TemporalEncoder {
 public:
  TemporalEncoder() = default;
  TemporalEncoder(int features, int window, int d_model, int heads, int hidden, int layers,
                  std::mt19937_64& rng);

  // sequences: (N * T) x features, entity-major, oldest frame first, T <= window.
  // Returns the final-frame output for each entity (N x d_model).
  Tensor forward(const Matrix& sequences, int entities, int frames) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  int window_ = 1;
  Linear embed_;
  Tensor time_embedding_;
  std::vector<TransformerLayer> layers_;
};

// Cross-modal attention in both directions with shared weights, then a fusion layer.
class CrossModalFusion {
 public:
  CrossModalFusion() = default;
  CrossModalFusion(int d_model, int heads, std::mt19937_64& rng);

  struct Parts {
    Tensor spatial_attended;   // Multi(Q_S, K_T, V_T)
    Tensor temporal_attended;  // Multi(Q_T, K_S, V_S)
  };
  Parts cross_attend(const Tensor& xs, const Tensor& xt) const;
  Tensor forward(const Tensor& xs, const Tensor& xt) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  MultiHeadAttention cross_;
  Linear fuse_;
};

}  // namespace hypersam::nn
