#include <doctest.h>

#include <cmath>
#include <random>

#include "hypersam/errors.hpp"
#include "hypersam/hypergraph.hpp"

using namespace hypersam;
using nn::Matrix;
using nn::Tensor;

namespace {

struct Instance {
  hg::Hypergraph graph;
  Tensor x;
};

// Nonnegative features by default, the regime the fixed-point theory covers.
Instance random_instance(std::mt19937_64& rng, int n, int d, bool signed_features = false) {
  std::uniform_real_distribution<double> coord(-8.0, 8.0);
  std::normal_distribution<double> normal;
  std::vector<Vec2> pos(n);
  for (auto& p : pos) p = {coord(rng), coord(rng)};
  std::vector<hg::VertexKind> kinds(n, hg::VertexKind::Human);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = normal(rng);
    x.data()[i] = signed_features ? z : std::log1p(std::exp(z));
  }
  return {hg::build_hypergraph(pos, kinds, 3, 5.0), Tensor::constant(x)};
}

DiffusionConfig pure_config(double alpha, double p) {
  DiffusionConfig c;
  c.alpha = alpha;
  c.p = p;
  c.epsilon = 1e-6;
  c.max_iterations = 500;
  c.mode = DiffusionMode::Pure;
  return c;
}

}  // namespace

TEST_CASE("alpha zero converges in one iteration") {
  std::mt19937_64 rng(1);
  for (double p : {1.0, 2.0}) {
    const auto inst = random_instance(rng, 8, 4);
    const auto result = hg::diffuse(inst.x, inst.graph, pure_config(0.0, p), hg::DiffusionOps::pure(p));
    CHECK(result.converged);
    CHECK(result.iterations == 1);
  }
}

TEST_CASE("pure steps stay on the unit phi shell") {
  std::mt19937_64 rng(2);
  for (double p : {1.0, 2.0}) {
    const auto ops = hg::DiffusionOps::pure(p);
    const auto inst = random_instance(rng, 12, 3);
    Tensor e = nn::div_scalar(inst.x, hg::phi(inst.x, inst.graph, ops));
    Tensor g = nn::div_scalar(e, hg::phi(e, inst.graph, ops));
    CHECK(hg::phi(g, inst.graph, ops).item() == doctest::Approx(1.0).epsilon(1e-9));
    for (int k = 0; k < 50; ++k) {
      g = hg::diffusion_step(g, e, inst.graph, 0.9, ops);
      CHECK(std::abs(hg::phi(g, inst.graph, ops).item() - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("pure diffusion converges") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(4, 20);
  for (double p : {1.0, 2.0}) {
    for (double alpha : {0.5, 0.9}) {
      for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng, size(rng), 4);
        const auto result = hg::diffuse(inst.x, inst.graph, pure_config(alpha, p), hg::DiffusionOps::pure(p));
        CAPTURE(p);
        CAPTURE(alpha);
        CHECK(result.converged);
        CHECK(result.iterations <= 500);
        REQUIRE(!result.trace.empty());
        CHECK(result.trace.back() <= 1e-6);
      }
    }
  }
}

TEST_CASE("signed features converge under a larger budget") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(4, 20);
  for (double p : {1.0, 2.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = random_instance(rng, size(rng), 4, true);
      DiffusionConfig c = pure_config(0.9, p);
      c.max_iterations = 5000;
      const auto result = hg::diffuse(inst.x, inst.graph, c, hg::DiffusionOps::pure(p));
      CHECK(result.converged);
    }
  }
}

TEST_CASE("zero features are rejected") {
  const auto g = hg::Hypergraph::from_edges(3, {{0, 1}, {1, 2}}, {1.0, 1.0});
  const Tensor zero = Tensor::constant(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(hg::phi(zero, g, hg::DiffusionOps::pure(2.0)), ZeroFeatures);
}

TEST_CASE("learned mode runs exactly k_unroll steps") {
  std::mt19937_64 rng(4);
  const auto inst = random_instance(rng, 6, 4);
  DiffusionConfig c;
  c.mode = DiffusionMode::Learned;
  c.k_unroll = 3;
  const auto ops = hg::DiffusionOps::learned(4, 8, 2.0, rng);
  const auto result = hg::diffuse(inst.x, inst.graph, c, ops);
  CHECK(result.iterations == 3);
  CHECK(result.g_star.rows() == 6);
}

TEST_CASE("learned operators start as the pure ones") {
  std::mt19937_64 rng(6);
  const auto inst = random_instance(rng, 7, 4);
  const auto learned = hg::DiffusionOps::learned(4, 8, 2.0, rng);
  const auto pure = hg::DiffusionOps::pure(2.0);
  const Tensor a = hg::nonlinear_map(inst.x, inst.graph, learned);
  const Tensor b = hg::nonlinear_map(inst.x, inst.graph, pure);
  CHECK((a.value() - b.value()).norm() <= 1e-12);
}

TEST_CASE("objective decreases toward the fixed point") {
  std::mt19937_64 rng(8);
  const auto ops = hg::DiffusionOps::pure(2.0);
  const auto inst = random_instance(rng, 10, 3);
  const auto result = hg::diffuse(inst.x, inst.graph, pure_config(0.5, 2.0), ops);
  const Tensor e = nn::div_scalar(inst.x, hg::phi(inst.x, inst.graph, ops));
  const double at_star = hg::diffusion_objective(result.g_star, e, inst.graph, 0.5, ops);
  const double at_start = hg::diffusion_objective(nn::div_scalar(e, hg::phi(e, inst.graph, ops)), e, inst.graph, 0.5, ops);
  CHECK(at_star <= at_start + 1e-9);
}
