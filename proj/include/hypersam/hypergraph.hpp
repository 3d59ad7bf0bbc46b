#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypersam/config.hpp"
#include "hypersam/geometry.hpp"
#include "hypersam/nn/layers.hpp"

namespace hypersam::hg {

using nn::Matrix;
using nn::Tensor;

enum class VertexKind { Robot, Human, Poi };

std::string to_string(VertexKind kind);
VertexKind vertex_kind_from_string(const std::string& s);

class Hypergraph {
 public:
  Hypergraph() = default;

  // edges: vertex-index lists; weights: one positive weight per edge.
  static Hypergraph from_edges(int vertices, std::vector<std::vector<int>> edges,
                               std::vector<double> weights, std::vector<VertexKind> kinds = {});

  int vertex_count() const { return static_cast<int>(incidence_.rows()); }
  int edge_count() const { return static_cast<int>(incidence_.cols()); }
  // N x M, entries 0/1.
  const Matrix& incidence() const { return incidence_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  // delta_v = sum_e w_e H(v, e).
  const Eigen::VectorXd& vertex_degrees() const { return vertex_degrees_; }
  // sum_v H(v, e).
  const Eigen::VectorXd& edge_degrees() const { return edge_degrees_; }
  const std::vector<std::vector<int>>& edges() const { return edges_; }
  const std::vector<VertexKind>& kinds() const { return kinds_; }

  nlohmann::json to_json() const;
  static Hypergraph from_json(const nlohmann::json& j);

 private:
  Matrix incidence_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd vertex_degrees_;
  Eigen::VectorXd edge_degrees_;
  std::vector<std::vector<int>> edges_;
  std::vector<VertexKind> kinds_;
};

// One hyperedge per vertex: the vertex and its k nearest neighbours (ties by
// index). Identical vertex sets are merged, keeping first-appearance order.
// Weight = mean over member pairs of exp(-d^2 / (2 sigma_s^2)). Coincident
// points are separated by 1e-6 m before measuring.
Hypergraph build_hypergraph(std::span<const Vec2> positions, std::span<const VertexKind> kinds,
                            int k, double sigma_s);

// The rho / sigma / eta operators of the diffusion map. In Pure mode the MLPs
// are identities; in Learned mode they are residual MLPs starting at identity.
class DiffusionOps {
 public:
  DiffusionOps() = default;
  static DiffusionOps pure(double p);
  static DiffusionOps learned(int dim, int hidden, double p, std::mt19937_64& rng);

  DiffusionMode mode() const { return mode_; }
  double p() const { return p_; }

  // |x|^p
  Tensor rho(const Tensor& x) const;
  // MLP_sigma((D_E^-1 x)^(1/p)), x is M x d.
  Tensor sigma(const Tensor& x, const Hypergraph& hg) const;
  // MLP_eta(D_V^-1/2 x), x is N x d.
  Tensor eta(const Tensor& x, const Hypergraph& hg) const;

  void collect(const std::string& prefix, nn::ParamList& out) const;
  std::size_t parameter_count() const;
  nn::ResidualMlp& mlp_sigma() { return mlp_sigma_; }
  nn::ResidualMlp& mlp_eta() { return mlp_eta_; }

 private:
  DiffusionMode mode_ = DiffusionMode::Pure;
  double p_ = 2.0;
  nn::ResidualMlp mlp_sigma_;
  nn::ResidualMlp mlp_eta_;
};

// mu = sigma(H^T rho(D_V^-1/2 G)), one row per hyperedge.
Tensor edge_means(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops);

// 2 sqrt(sum_e w_e |mu_e|^2). Throws ZeroFeatures when it is exactly zero. In
// Learned mode values below 1e-6 are replaced by a detached 1e-6.
Tensor phi(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops);

// sum_e sum_{i in e} w_e |G_i / sqrt(delta_i) - mu_e|^2
Tensor regularizer_hg(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops);

// |G - E/phi(E)|^2 + alpha/(1-alpha) Omega(G)
double diffusion_objective(const Tensor& g, const Tensor& e, const Hypergraph& hg, double alpha,
                           const DiffusionOps& ops);

// eta(H W mu)
Tensor nonlinear_map(const Tensor& g, const Hypergraph& hg, const DiffusionOps& ops);

// (alpha N(G) + (1-alpha) E) / phi(alpha N(G) + (1-alpha) E)
Tensor diffusion_step(const Tensor& g, const Tensor& e, const Hypergraph& hg, double alpha,
                      const DiffusionOps& ops);

struct DiffusionResult {
  Tensor g_star;
  int iterations = 0;
  // |G_{k+1} - G_k| / |G_{k+1}| for each iteration.
  std::vector<double> trace;
  bool converged = false;
};

// E = X/phi(X), G1 = E/phi(E), then diffusion steps. Pure mode stops once the
// relative change is <= epsilon or after max_iterations (converged = false).
// Learned mode runs exactly k_unroll steps.
DiffusionResult diffuse(const Tensor& x, const Hypergraph& hg, const DiffusionConfig& config,
                        const DiffusionOps& ops);

}  // namespace hypersam::hg
