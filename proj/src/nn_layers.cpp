#include "hypersam/nn/layers.hpp"

#include <cmath>

#include "hypersam/errors.hpp"

namespace hypersam::nn {

Matrix orthogonal(Eigen::Index rows, Eigen::Index cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index big = std::max(rows, cols);
  const Eigen::Index small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign fix so the distribution is uniform (Haar).
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Matrix out = rows >= cols ? Matrix(q) : Matrix(q.transpose());
  return out * gain;
}

Linear::Linear(int in, int out, std::mt19937_64& rng, double gain)
    : weight_(Tensor::parameter(orthogonal(in, out, gain, rng))),
      bias_(Tensor::parameter(Matrix::Zero(1, out))) {}

Linear Linear::identity(int n) {
  Linear l;
  l.weight_ = Tensor::parameter(Matrix::Identity(n, n));
  l.bias_ = Tensor::parameter(Matrix::Zero(1, n));
  return l;
}

Linear Linear::zeros(int in, int out) {
  Linear l;
  l.weight_ = Tensor::parameter(Matrix::Zero(in, out));
  l.bias_ = Tensor::parameter(Matrix::Zero(1, out));
  return l;
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.cols() != weight_.rows()) {
    throw ShapeError("Linear: expected " + std::to_string(weight_.rows()) + " input features, got " +
                     std::to_string(x.cols()));
  }
  return add_row(matmul(x, weight_), bias_);
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Mlp::Mlp(const std::vector<int>& sizes, std::mt19937_64& rng, double hidden_gain,
         double output_gain) {
  if (sizes.size() < 2) throw ShapeError("Mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    layers_.emplace_back(sizes[i], sizes[i + 1], rng, last ? output_gain : hidden_gain);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = tanh(h);
  }
  return h;
}

void Mlp::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(prefix + "." + std::to_string(i), out);
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += static_cast<std::size_t>(l.in_features() + 1) * static_cast<std::size_t>(l.out_features());
  }
  return n;
}

ResidualMlp::ResidualMlp(int dim, int hidden, std::mt19937_64& rng)
    : inner_(dim, hidden, rng), outer_(Linear::zeros(hidden, dim)) {}

Tensor ResidualMlp::forward(const Tensor& x) const {
  return add(x, outer_.forward(tanh(inner_.forward(x))));
}

void ResidualMlp::collect(const std::string& prefix, ParamList& out) const {
  inner_.collect(prefix + ".inner", out);
  outer_.collect(prefix + ".outer", out);
}

std::size_t ResidualMlp::parameter_count() const {
  return static_cast<std::size_t>(inner_.in_features() + 1) * inner_.out_features() +
         static_cast<std::size_t>(outer_.in_features() + 1) * outer_.out_features();
}

MultiHeadAttention::MultiHeadAttention(int d_model, int heads, std::mt19937_64& rng)
    : d_model_(d_model),
      heads_(heads),
      wq_(Tensor::parameter(orthogonal(d_model, d_model, 1.0, rng))),
      wk_(Tensor::parameter(orthogonal(d_model, d_model, 1.0, rng))),
      wv_(Tensor::parameter(orthogonal(d_model, d_model, 1.0, rng))),
      out_(d_model, d_model, rng) {
  if (heads <= 0 || d_model % heads != 0) throw ShapeError("d_model must be divisible by heads");
}

Tensor MultiHeadAttention::weights(const Tensor& queries, const Tensor& keys, int head,
                                   const Matrix* mask) const {
  const int dk = d_model_ / heads_;
  const Tensor q = slice_cols(matmul(queries, wq_), head * dk, dk);
  const Tensor k = slice_cols(matmul(keys, wk_), head * dk, dk);
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_model_)));
  if (mask) scores = add(scores, Tensor::constant(*mask));
  return softmax_rows(scores);
}

Tensor MultiHeadAttention::forward(const Tensor& queries, const Tensor& keys, const Tensor& values,
                                   const Matrix* mask) const {
  if (queries.cols() != d_model_ || keys.cols() != d_model_ || values.cols() != d_model_) {
    throw ShapeError("attention: inputs must have d_model columns");
  }
  if (keys.rows() != values.rows()) throw ShapeError("attention: keys and values differ in length");
  if (mask && (mask->rows() != queries.rows() || mask->cols() != keys.rows())) {
    throw ShapeError("attention: mask shape mismatch");
  }
  const int dk = d_model_ / heads_;
  const Tensor q_all = matmul(queries, wq_);
  const Tensor k_all = matmul(keys, wk_);
  const Tensor v_all = matmul(values, wv_);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d_model_));
  std::vector<Tensor> heads;
  heads.reserve(static_cast<std::size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    const Tensor q = heads_ == 1 ? q_all : slice_cols(q_all, h * dk, dk);
    const Tensor k = heads_ == 1 ? k_all : slice_cols(k_all, h * dk, dk);
    const Tensor v = heads_ == 1 ? v_all : slice_cols(v_all, h * dk, dk);
    Tensor scores = scale(matmul(q, transpose(k)), inv_scale);
    if (mask) scores = add(scores, Tensor::constant(*mask));
    heads.push_back(matmul(softmax_rows(scores), v));
  }
  const Tensor joined = heads_ == 1 ? heads.front() : concat_cols(heads);
  return out_.forward(joined);
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".wq", wq_});
  out.push_back({prefix + ".wk", wk_});
  out.push_back({prefix + ".wv", wv_});
  out_.collect(prefix + ".out", out);
}

TransformerLayer::TransformerLayer(int d_model, int heads, int hidden, std::mt19937_64& rng)
    : attention_(d_model, heads, rng), ff1_(d_model, hidden, rng), ff2_(hidden, d_model, rng) {}

Tensor TransformerLayer::forward(const Tensor& x, const Matrix* mask) const {
  const Tensor h = add(x, attention_.forward(x, x, x, mask));
  return add(h, ff2_.forward(tanh(ff1_.forward(h))));
}

void TransformerLayer::collect(const std::string& prefix, ParamList& out) const {
  attention_.collect(prefix + ".attn", out);
  ff1_.collect(prefix + ".ff1", out);
  ff2_.collect(prefix + ".ff2", out);
}

namespace {

Matrix small_normal(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

SpatialEncoder::SpatialEncoder(int features, int kinds, int d_model, int heads, int hidden,
                               int layers, std::mt19937_64& rng)
    : embed_(features, d_model, rng),
      kind_embedding_(Tensor::parameter(small_normal(kinds, d_model, 0.1, rng))) {
  for (int i = 0; i < layers; ++i) layers_.emplace_back(d_model, heads, hidden, rng);
}

Tensor SpatialEncoder::forward(const Matrix& tokens, const std::vector<int>& kinds) const {
  if (tokens.rows() < 1) throw ShapeError("spatial encoder needs at least one entity");
  if (static_cast<Eigen::Index>(kinds.size()) != tokens.rows()) {
    throw ShapeError("spatial encoder: one kind per token required");
  }
  Tensor x = add(embed_.forward(Tensor::constant(tokens)), select_rows(kind_embedding_, kinds));
  for (const auto& layer : layers_) x = layer.forward(x);
  return x;
}

void SpatialEncoder::collect(const std::string& prefix, ParamList& out) const {
  embed_.collect(prefix + ".embed", out);
  out.push_back({prefix + ".kind_embedding", kind_embedding_});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(prefix + ".layer" + std::to_string(i), out);
  }
}

TemporalEncoder::TemporalEncoder(int features, int window, int d_model, int heads, int hidden,
                                 int layers, std::mt19937_64& rng)
    : window_(window),
      embed_(features, d_model, rng),
      time_embedding_(Tensor::parameter(small_normal(window, d_model, 0.1, rng))) {
  for (int i = 0; i < layers; ++i) layers_.emplace_back(d_model, heads, hidden, rng);
}

Tensor TemporalEncoder::forward(const Matrix& sequences, int entities, int frames) const {
  if (entities < 1 || frames < 1) throw ShapeError("temporal encoder needs >= 1 entity and frame");
  if (frames > window_) throw ShapeError("temporal encoder: history longer than window");
  if (sequences.rows() != static_cast<Eigen::Index>(entities) * frames) {
    throw ShapeError("temporal encoder: rows must equal entities * frames");
  }
  // Slots are aligned to the newest frame so a short history uses the last slots.
  std::vector<int> slots;
  slots.reserve(sequences.rows());
  for (int e = 0; e < entities; ++e) {
    for (int f = 0; f < frames; ++f) slots.push_back(window_ - frames + f);
  }
  Tensor x = add(embed_.forward(Tensor::constant(sequences)), select_rows(time_embedding_, slots));

  Matrix mask;
  const Matrix* mask_ptr = nullptr;
  if (entities > 1) {
    constexpr double kBlocked = -1e30;
    mask = Matrix::Constant(sequences.rows(), sequences.rows(), kBlocked);
    for (int e = 0; e < entities; ++e) mask.block(e * frames, e * frames, frames, frames).setZero();
    mask_ptr = &mask;
  }
  for (const auto& layer : layers_) x = layer.forward(x, mask_ptr);

  std::vector<int> last;
  last.reserve(entities);
  for (int e = 0; e < entities; ++e) last.push_back(e * frames + frames - 1);
  return select_rows(x, last);
}

void TemporalEncoder::collect(const std::string& prefix, ParamList& out) const {
  embed_.collect(prefix + ".embed", out);
  out.push_back({prefix + ".time_embedding", time_embedding_});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(prefix + ".layer" + std::to_string(i), out);
  }
}

CrossModalFusion::CrossModalFusion(int d_model, int heads, std::mt19937_64& rng)
    : cross_(d_model, heads, rng), fuse_(2 * d_model, d_model, rng) {}

CrossModalFusion::Parts CrossModalFusion::cross_attend(const Tensor& xs, const Tensor& xt) const {
  return {cross_.forward(xs, xt, xt), cross_.forward(xt, xs, xs)};
}

Tensor CrossModalFusion::forward(const Tensor& xs, const Tensor& xt) const {
  if (xs.rows() != xt.rows()) throw ShapeError("fusion: spatial and temporal rows differ");
  const Parts parts = cross_attend(xs, xt);
  const std::vector<Tensor> both{add(xs, parts.spatial_attended), add(xt, parts.temporal_attended)};
  return tanh(fuse_.forward(concat_cols(both)));
}

void CrossModalFusion::collect(const std::string& prefix, ParamList& out) const {
  cross_.collect(prefix + ".cross", out);
  fuse_.collect(prefix + ".fuse", out);
}

}  // namespace hypersam::nn
