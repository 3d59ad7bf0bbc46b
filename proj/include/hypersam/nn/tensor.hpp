#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hypersam::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;
  std::uint64_t mark = 0;
  std::uint8_t state = 0;

  void accumulate(const Matrix& g);
};

// Handle to a node of the reverse-mode tape. Copies share the node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor scalar(double v);

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_ && node_->grad.size() > 0; }
  void zero_grad() { node_->grad.resize(0, 0); }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const;

  // Reverse sweep from a 1x1 root; accumulates into every reachable grad.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

  static Tensor make(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a (m x n) plus a 1 x n row broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// a times / divided by a 1x1 tensor.
Tensor mul_scalar(const Tensor& a, const Tensor& s);
Tensor div_scalar(const Tensor& a, const Tensor& s);
// diag(d) * a for a constant column vector d.
Tensor scale_rows(const Tensor& a, const Eigen::VectorXd& d);

Tensor tanh(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
// |a|^p elementwise.
Tensor abs_pow(const Tensor& a, double p);
// Gradient passes only where lo < a < hi.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor detach(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Column sums as a 1 x n row.
Tensor sum_rows(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor select_rows(const Tensor& a, std::span<const int> rows);
Tensor broadcast_rows(const Tensor& row, Eigen::Index count);
Tensor element(const Tensor& a, Eigen::Index r, Eigen::Index c);

}  // namespace hypersam::nn
