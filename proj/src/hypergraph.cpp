#include "hypersam/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hypersam/errors.hpp"

namespace hypersam::hg {

using nlohmann::json;

std::string to_string(VertexKind kind) {
  switch (kind) {
    case VertexKind::Robot: return "robot";
    case VertexKind::Human: return "human";
    case VertexKind::Poi: return "poi";
  }
  return "robot";
}

VertexKind vertex_kind_from_string(const std::string& s) {
  if (s == "robot") return VertexKind::Robot;
  if (s == "human") return VertexKind::Human;
  if (s == "poi") return VertexKind::Poi;
  throw ConfigError("unknown vertex kind '" + s + "'");
}

Hypergraph Hypergraph::from_edges(int vertices, std::vector<std::vector<int>> edges,
                                  std::vector<double> weights, std::vector<VertexKind> kinds) {
  if (vertices < 1) throw ShapeError("hypergraph needs at least one vertex");
  if (edges.size() != weights.size()) throw ShapeError("one weight per hyperedge required");
  if (kinds.empty()) kinds.assign(vertices, VertexKind::Robot);
  if (static_cast<int>(kinds.size()) != vertices) throw ShapeError("one kind per vertex required");

  Hypergraph hg;
  const auto m = static_cast<Eigen::Index>(edges.size());
  hg.incidence_ = Matrix::Zero(vertices, m);
  hg.weights_.resize(m);
  for (Eigen::Index e = 0; e < m; ++e) {
    auto& members = edges[e];
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.empty()) throw ShapeError("empty hyperedge");
    if (!(weights[e] > 0.0)) throw ShapeError("hyperedge weights must be positive");
    for (int v : members) {
      if (v < 0 || v >= vertices) throw ShapeError("hyperedge references unknown vertex");
      hg.incidence_(v, e) = 1.0;
    }
    hg.weights_(e) = weights[e];
  }
  hg.vertex_degrees_ = hg.incidence_ * hg.weights_;
  hg.edge_degrees_ = hg.incidence_.colwise().sum().transpose();
  for (int v = 0; v < vertices; ++v) {
    if (hg.vertex_degrees_(v) <= 0.0) throw ShapeError("vertex " + std::to_string(v) + " is in no hyperedge");
  }
  hg.edges_ = std::move(edges);
  hg.kinds_ = std::move(kinds);
  return hg;
}

json Hypergraph::to_json() const {
  json kinds = json::array();
  for (auto k : kinds_) kinds.push_back(to_string(k));
  std::vector<double> w(weights_.data(), weights_.data() + weights_.size());
  return {{"vertices", vertex_count()}, {"kinds", kinds}, {"edges", edges_}, {"weights", w}};
}

Hypergraph Hypergraph::from_json(const json& j) {
  std::vector<VertexKind> kinds;
  for (const auto& k : j.value("kinds", json::array())) kinds.push_back(vertex_kind_from_string(k.get<std::string>()));
  return from_edges(j.at("vertices").get<int>(), j.at("edges").get<std::vector<std::vector<int>>>(),
                    j.at("weights").get<std::vector<double>>(), std::move(kinds));
}

Hypergraph build_hypergraph(std::span<const Vec2> positions, std::span<const VertexKind> kinds, int k,
                            double sigma_s) {
  const int n = static_cast<int>(positions.size());
  if (n < 2) throw ShapeError("hypergraph construction needs at least two points");
  if (k < 1) throw ConfigError("neighbour count k must be >= 1");
  if (kinds.size() != positions.size()) throw ShapeError("one kind per point required");

  std::vector<Vec2> pts(positions.begin(), positions.end());
  for (int i = 1; i < n; ++i) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int j = 0; j < i; ++j) {
        if (pts[i] == pts[j]) {
          pts[i].x += 1e-6;
          moved = true;
        }
      }
    }
  }

  const int kk = std::min(k, n - 1);
  std::vector<std::vector<int>> edges;
  std::map<std::vector<int>, int> seen;
  std::vector<int> order;
  for (int v = 0; v < n; ++v) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + v);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double da = distance(pts[v], pts[a]);
      const double db = distance(pts[v], pts[b]);
      return da != db ? da < db : a < b;
    });
    std::vector<int> members(order.begin(), order.begin() + kk);
    members.push_back(v);
    std::sort(members.begin(), members.end());
    if (seen.emplace(members, static_cast<int>(edges.size())).second) edges.push_back(members);
  }

  std::vector<double> weights;
  const double two_s2 = 2.0 * sigma_s * sigma_s;
  for (const auto& e : edges) {
    double total = 0.0;
    int pairs = 0;
    for (std::size_t a = 0; a < e.size(); ++a) {
      for (std::size_t b = a + 1; b < e.size(); ++b) {
        total += std::exp(-(pts[e[a]] - pts[e[b]]).norm_sq() / two_s2);
        ++pairs;
      }
    }
    weights.push_back(total / pairs);
  }
  return Hypergraph::from_edges(n, std::move(edges), std::move(weights),
                                std::vector<VertexKind>(kinds.begin(), kinds.end()));
}

DiffusionOps DiffusionOps::pure(double p) {
  if (!(p > 0.0)) throw ConfigError("diffusion power p must be positive");
  DiffusionOps ops;
  ops.mode_ = DiffusionMode::Pure;
  ops.p_ = p;
  return ops;
}

DiffusionOps DiffusionOps::learned(int dim, int hidden, double p, std::mt19937_64& rng) {
  DiffusionOps ops = pure(p);
  ops.mode_ = DiffusionMode::Learned;
  ops.mlp_sigma_ = nn::ResidualMlp(dim, hidden, rng);
  ops.mlp_eta_ = nn::ResidualMlp(dim, hidden, rng);
  return ops;
}

Tensor DiffusionOps::rho(const Tensor& x) const { return nn::abs_pow(x, p_); }

Tensor DiffusionOps::sigma(const Tensor& x, const Hypergraph& hg) const {
  const Eigen::VectorXd inv = hg.edge_degrees().cwiseInverse();
  Tensor y = nn::abs_pow(nn::scale_rows(x, inv), 1.0 / p_);
  return mode_ == DiffusionMode::Learned ? mlp_sigma_.forward(y) : y;
}

Tensor DiffusionOps::eta(const Tensor& x, const Hypergraph& hg) const {
  const Eigen::VectorXd inv_sqrt = hg.vertex_degrees().cwiseSqrt().cwiseInverse();
  Tensor y = nn::scale_rows(x, inv_sqrt);
  return mode_ == DiffusionMode::Learned ? mlp_eta_.forward(y) : y;
}

void DiffusionOps::collect(const std::string& prefix, nn::ParamList& out) const {
  if (mode_ != DiffusionMode::Learned) return;
  mlp_sigma_.collect(prefix + ".sigma", out);
  mlp_eta_.collect(prefix + ".eta", out);
}

std::size_t DiffusionOps::parameter_count() const {
  if (mode_ != DiffusionMode::Learned) return 0;
  return mlp_sigma_.parameter_count() + mlp_eta_.parameter_count();
}

namespace {

void check_rows(const Tensor& g, const Hypergraph& hg) {
  if (g.rows() != hg.vertex_count()) {
    throw ShapeError("feature rows (" + std::to_string(g.rows()) + ") do not match vertex count (" +
                     std::to_string(hg.vertex_count()) + ")");
  }
}

}  // namespace

Tensor edge_means(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops) {
  check_rows(g, hg);
  const Eigen::VectorXd inv_sqrt = hg.vertex_degrees().cwiseSqrt().cwiseInverse();
  Tensor ht = Tensor::constant(hg.incidence().transpose());
  return ops.sigma(nn::matmul(ht, ops.rho(nn::scale_rows(g, inv_sqrt))), hg);
}

Tensor phi(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops) {
  Tensor mu = edge_means(g, hg, ops);
  Tensor s = nn::sum(nn::scale_rows(nn::square(mu), hg.weights()));
  const double v = s.item();
  if (!std::isfinite(v)) throw NumericalError("phi is not finite");
  if (v == 0.0) throw ZeroFeatures("phi vanished: all hyperedge aggregates are zero");
  if (ops.mode() == DiffusionMode::Learned && 2.0 * std::sqrt(v) < 1e-6) return Tensor::scalar(1e-6);
  return nn::scale(nn::sqrt(s), 2.0);
}

Tensor regularizer_hg(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops) {
  Tensor mu = edge_means(g, hg, ops);
  const Eigen::VectorXd inv_sqrt = hg.vertex_degrees().cwiseSqrt().cwiseInverse();
  Tensor gn = nn::scale_rows(g, inv_sqrt);
  std::vector<int> vertex_rows, edge_rows;
  std::vector<double> w;
  for (int e = 0; e < hg.edge_count(); ++e) {
    for (int v : hg.edges()[e]) {
      vertex_rows.push_back(v);
      edge_rows.push_back(e);
      w.push_back(hg.weights()(e));
    }
  }
  Tensor diff = nn::sub(nn::select_rows(gn, vertex_rows), nn::select_rows(mu, edge_rows));
  return nn::sum(nn::scale_rows(nn::square(diff), Eigen::Map<Eigen::VectorXd>(w.data(), w.size())));
}

double diffusion_objective(const Tensor& g, const Tensor& e, const Hypergraph& hg, double alpha,
                           const DiffusionOps& ops) {
  if (!(alpha < 1.0)) throw ConfigError("diffusion objective needs alpha < 1");
  nn::NoGradGuard guard;
  Tensor target = nn::div_scalar(e, phi(e, hg, ops));
  double value = (g.value() - target.value()).squaredNorm();
  if (alpha > 0.0) value += alpha / (1.0 - alpha) * regularizer_hg(g, hg, ops).item();
  return value;
}

Tensor nonlinear_map(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops) {
  Tensor mu = edge_means(g, hg, ops);
  Matrix hw = hg.incidence() * hg.weights().asDiagonal();
  Tensor out = ops.eta(nn::matmul(Tensor::constant(std::move(hw)), mu), hg);
  if (!out.value().allFinite()) throw NumericalError("nonlinear diffusion map produced non-finite values");
  return out;
}

Tensor diffusion_step(const Tensor& g, const Tensor& e, const Hypergraph& hg, double alpha,
                      const DiffusionOps& ops) {
  Tensor mix = alpha == 0.0 ? e : nn::add(nn::scale(nonlinear_map(g, hg, ops), alpha), nn::scale(e, 1.0 - alpha));
  return nn::div_scalar(mix, phi(mix, hg, ops));
}

DiffusionResult diffuse(const Tensor& x, const Hypergraph& hg, const DiffusionConfig& config,
                        const DiffusionOps& ops) {
  if (!x.value().allFinite()) throw NumericalError("diffusion input is not finite");
  DiffusionResult result;
  Tensor e = nn::div_scalar(x, phi(x, hg, ops));
  Tensor g = nn::div_scalar(e, phi(e, hg, ops));
  const bool learned = ops.mode() == DiffusionMode::Learned;
  const int limit = learned ? config.k_unroll : config.max_iterations;
  for (int k = 0; k < limit; ++k) {
    Tensor next = diffusion_step(g, e, hg, config.alpha, ops);
    const double denom = next.value().norm();
    const double rel = denom > 0.0 ? (next.value() - g.value()).norm() / denom : 0.0;
    result.trace.push_back(rel);
    result.iterations = k + 1;
    g = next;
    result.converged = rel <= config.epsilon;
    if (result.converged && !learned) break;
  }
  result.g_star = g;
  return result;
}

}  // namespace hypersam::hg
