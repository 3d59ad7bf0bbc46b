#include "hypersam/nn/tensor.hpp"

#include <atomic>
#include <cmath>

#include "hypersam/errors.hpp"

namespace hypersam::nn {

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_epoch{1};

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

double Tensor::item() const {
  require(rows() == 1 && cols() == 1, "item() needs a 1x1 tensor");
  return value()(0, 0);
}

Tensor Tensor::make(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->parents.reserve(inputs.size());
      for (const auto& in : inputs) n->parents.push_back(in.node_);
      n->backward = std::move(backward);
    }
  }
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  require(rows() == 1 && cols() == 1, "backward() needs a 1x1 root");
  if (!requires_grad()) return;

  // Iterative post-order DFS; state 1 = on stack, 2 = finished.
  const std::uint64_t epoch = g_epoch.fetch_add(1);
  std::vector<Node*> order;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  node_->mark = epoch;
  node_->state = 1;
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (!p->requires_grad) continue;
      if (p->mark == epoch) {
        if (p->state == 1) throw GraphCycle("computation graph contains a cycle");
        continue;
      }
      p->mark = epoch;
      p->state = 1;
      stack.emplace_back(p, 0);
    } else {
      n->state = 2;
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() > 0) n->backward(*n);
  }
  // Free intermediate grads; leaves keep theirs.
  for (Node* n : order) {
    if (!n->parents.empty()) n->grad.resize(0, 0);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  return Tensor::make(a.value() * b.value(), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) x.accumulate(n.grad * y.value.transpose());
    if (y.requires_grad) y.accumulate(x.value.transpose() * n.grad);
  });
}

Tensor transpose(const Tensor& a) {
  return Tensor::make(a.value().transpose(), {a}, [](Node& n) {
    parent(n, 0).accumulate(n.grad.transpose());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  return Tensor::make(a.value() + b.value(), {a, b}, [](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).accumulate(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).accumulate(n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  return Tensor::make(a.value() - b.value(), {a, b}, [](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).accumulate(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).accumulate(-n.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  return Tensor::make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(y.value));
    if (y.requires_grad) y.accumulate(n.grad.cwiseProduct(x.value));
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias must be 1 x cols");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return Tensor::make(std::move(out), {a, row}, [](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).accumulate(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).accumulate(n.grad.colwise().sum());
  });
}

Tensor scale(const Tensor& a, double s) {
  return Tensor::make(a.value() * s, {a}, [s](Node& n) { parent(n, 0).accumulate(n.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  return Tensor::make(a.value().array() + s, {a}, [](Node& n) { parent(n, 0).accumulate(n.grad); });
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
  require(s.rows() == 1 && s.cols() == 1, "mul_scalar: scalar must be 1x1");
  return Tensor::make(a.value() * s.item(), {a, s}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& k = parent(n, 1);
    if (x.requires_grad) x.accumulate(n.grad * k.value(0, 0));
    if (k.requires_grad) {
      Matrix g(1, 1);
      g(0, 0) = n.grad.cwiseProduct(x.value).sum();
      k.accumulate(g);
    }
  });
}

Tensor div_scalar(const Tensor& a, const Tensor& s) {
  require(s.rows() == 1 && s.cols() == 1, "div_scalar: scalar must be 1x1");
  const double d = s.item();
  return Tensor::make(a.value() / d, {a, s}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& k = parent(n, 1);
    const double d = k.value(0, 0);
    if (x.requires_grad) x.accumulate(n.grad / d);
    if (k.requires_grad) {
      Matrix g(1, 1);
      g(0, 0) = -n.grad.cwiseProduct(x.value).sum() / (d * d);
      k.accumulate(g);
    }
  });
}

Tensor scale_rows(const Tensor& a, const Eigen::VectorXd& d) {
  require(d.size() == a.rows(), "scale_rows: length must match rows");
  return Tensor::make(d.asDiagonal() * a.value(), {a}, [d](Node& n) {
    parent(n, 0).accumulate(d.asDiagonal() * n.grad);
  });
}

Tensor tanh(const Tensor& a) {
  return Tensor::make(a.value().array().tanh().matrix(), {a}, [](Node& n) {
    parent(n, 0).accumulate((n.grad.array() * (1.0 - n.value.array().square())).matrix());
  });
}

Tensor softplus(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
  });
  return Tensor::make(std::move(out), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    const Matrix sig = x.value.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    x.accumulate(n.grad.cwiseProduct(sig));
  });
}

Tensor exp(const Tensor& a) {
  return Tensor::make(a.value().array().exp().matrix(), {a}, [](Node& n) {
    parent(n, 0).accumulate(n.grad.cwiseProduct(n.value));
  });
}

Tensor log(const Tensor& a) {
  return Tensor::make(a.value().array().log().matrix(), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    x.accumulate(n.grad.cwiseQuotient(x.value));
  });
}

Tensor sqrt(const Tensor& a) {
  return Tensor::make(a.value().array().sqrt().matrix(), {a}, [](Node& n) {
    parent(n, 0).accumulate((n.grad.array() * 0.5 / n.value.array()).matrix());
  });
}

Tensor square(const Tensor& a) {
  return Tensor::make(a.value().array().square().matrix(), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    x.accumulate(2.0 * n.grad.cwiseProduct(x.value));
  });
}

Tensor abs_pow(const Tensor& a, double p) {
  Matrix out = a.value().array().abs().pow(p).matrix();
  return Tensor::make(std::move(out), {a}, [p](Node& n) {
    Node& x = parent(n, 0);
    // d|x|^p/dx = p |x|^(p-1) sign(x)
    const Matrix g = x.value.unaryExpr([p](double v) {
      if (v == 0.0) return 0.0;
      return p * std::pow(std::fabs(v), p - 1.0) * (v > 0.0 ? 1.0 : -1.0);
    });
    x.accumulate(n.grad.cwiseProduct(g));
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return Tensor::make(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [lo, hi](Node& n) {
    Node& x = parent(n, 0);
    const Matrix mask = x.value.unaryExpr([lo, hi](double v) { return v > lo && v < hi ? 1.0 : 0.0; });
    x.accumulate(n.grad.cwiseProduct(mask));
  });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require_same(a, b, "minimum");
  return Tensor::make(a.value().cwiseMin(b.value()), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    const Matrix pick_x = (x.value.array() <= y.value.array()).cast<double>().matrix();
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(pick_x));
    if (y.requires_grad) y.accumulate(n.grad.cwiseProduct((1.0 - pick_x.array()).matrix()));
  });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  require_same(a, b, "maximum");
  return Tensor::make(a.value().cwiseMax(b.value()), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    const Matrix pick_x = (x.value.array() >= y.value.array()).cast<double>().matrix();
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(pick_x));
    if (y.requires_grad) y.accumulate(n.grad.cwiseProduct((1.0 - pick_x.array()).matrix()));
  });
}

Tensor detach(const Tensor& a) { return Tensor::constant(a.value()); }

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return Tensor::make(std::move(out), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    x.accumulate(Matrix::Constant(x.value.rows(), x.value.cols(), n.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  require(a.value().size() > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Tensor sum_rows(const Tensor& a) {
  return Tensor::make(a.value().colwise().sum(), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    x.accumulate(n.grad.replicate(x.value.rows(), 1));
  });
}

Tensor softmax_rows(const Tensor& a) {
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return Tensor::make(std::move(out), {a}, [](Node& n) {
    const Matrix& s = n.value;
    Matrix g(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double inner = n.grad.row(r).dot(s.row(r));
      g.row(r) = s.row(r).array() * (n.grad.row(r).array() - inner);
    }
    parent(n, 0).accumulate(g);
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    const double lse = m + std::log((out.row(r).array() - m).exp().sum());
    out.row(r).array() -= lse;
  }
  return Tensor::make(std::move(out), {a}, [](Node& n) {
    Matrix g(n.value.rows(), n.value.cols());
    for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
      const double total = n.grad.row(r).sum();
      g.row(r) = n.grad.row(r).array() - n.value.row(r).array().exp() * total;
    }
    parent(n, 0).accumulate(g);
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    offsets.push_back(at);
    at += p.cols();
  }
  return Tensor::make(std::move(out), {parts.begin(), parts.end()}, [offsets](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = *n.parents[i];
      if (p.requires_grad) p.accumulate(n.grad.middleCols(offsets[i], p.value.cols()));
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    offsets.push_back(at);
    at += p.rows();
  }
  return Tensor::make(std::move(out), {parts.begin(), parts.end()}, [offsets](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = *n.parents[i];
      if (p.requires_grad) p.accumulate(n.grad.middleRows(offsets[i], p.value.rows()));
    }
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  return Tensor::make(a.value().middleRows(start, count), {a}, [start, count](Node& n) {
    Node& x = parent(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleRows(start, count) = n.grad;
    x.accumulate(g);
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  return Tensor::make(a.value().middleCols(start, count), {a}, [start, count](Node& n) {
    Node& x = parent(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleCols(start, count) = n.grad;
    x.accumulate(g);
  });
}

Tensor select_rows(const Tensor& a, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < a.rows(), "select_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return Tensor::make(std::move(out), {a}, [idx](Node& n) {
    Node& x = parent(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    x.accumulate(g);
  });
}

Tensor broadcast_rows(const Tensor& row, Eigen::Index count) {
  require(row.rows() == 1, "broadcast_rows: input must be a row");
  return Tensor::make(row.value().replicate(count, 1), {row}, [](Node& n) {
    parent(n, 0).accumulate(n.grad.colwise().sum());
  });
}

Tensor element(const Tensor& a, Eigen::Index r, Eigen::Index c) {
  require(r >= 0 && r < a.rows() && c >= 0 && c < a.cols(), "element: out of range");
  Matrix out(1, 1);
  out(0, 0) = a.value()(r, c);
  return Tensor::make(std::move(out), {a}, [r, c](Node& n) {
    Node& x = parent(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g(r, c) = n.grad(0, 0);
    x.accumulate(g);
  });
}

}  // namespace hypersam::nn
