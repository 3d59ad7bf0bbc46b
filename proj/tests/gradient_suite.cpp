#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hypersam/env.hpp"
#include "hypersam/hypergraph.hpp"
#include "hypersam/marl/features.hpp"
#include "hypersam/marl/policy.hpp"
#include "hypersam/nn/gradcheck.hpp"
#include "hypersam/nn/layers.hpp"

using namespace hypersam;
using nn::Matrix;
using nn::Tensor;

namespace {

using testsupport::GradientFamily;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> normal(0.0, s);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

std::vector<Tensor> tensors(const nn::ParamList& params) {
  std::vector<Tensor> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

void check(GradientFamily& fam, const std::function<Tensor()>& f, const std::vector<Tensor>& inputs) {
  const auto result = nn::gradient_check(f, inputs);
  ++fam.checks;
  const double err = std::isfinite(result.max_relative_error) ? result.max_relative_error : HUGE_VAL;
  fam.max_relative_error = std::max(fam.max_relative_error, err);
}

struct Shape {
  int rows, cols, extra;
};
const Shape kShapes[] = {{1, 4, 2}, {3, 4, 5}, {5, 8, 3}, {2, 6, 7}, {7, 4, 1}, {4, 12, 4}};

void elementwise_ops(GradientFamily& fam) {
  std::mt19937_64 rng(1);
  for (const auto& s : kShapes) {
    ++fam.shapes;
    Tensor a = Tensor::parameter(random_matrix(s.rows, s.cols, rng));
    Tensor b = Tensor::parameter(random_matrix(s.rows, s.cols, rng));
    Tensor pos = Tensor::parameter(random_matrix(s.rows, s.cols, rng).array().abs().matrix() +
                                   Matrix::Constant(s.rows, s.cols, 0.5));
    Tensor row = Tensor::parameter(random_matrix(1, s.cols, rng));
    Tensor w = Tensor::parameter(random_matrix(s.cols, s.extra, rng));
    const Matrix proj = random_matrix(s.rows, s.extra, rng);
    check(fam, [&] { return nn::sum(nn::mul(nn::matmul(nn::add_row(nn::tanh(a), row), w), Tensor::constant(proj))); },
          {a, row, w});
    check(fam, [&] { return nn::sum(nn::mul(nn::softplus(a), nn::exp(nn::scale(b, 0.3)))); }, {a, b});
    check(fam, [&] { return nn::sum(nn::add(nn::log(pos), nn::sqrt(pos))); }, {pos});
    check(fam, [&] { return nn::sum(nn::abs_pow(pos, 1.5)); }, {pos});
    check(fam, [&] { return nn::mean(nn::square(nn::sub(a, b))); }, {a, b});
    check(fam, [&] { return nn::sum(nn::mul(nn::softmax_rows(a), b)); }, {a, b});
    check(fam, [&] { return nn::sum(nn::mul(nn::log_softmax_rows(a), b)); }, {a, b});
    check(fam, [&] { return nn::sum(nn::div_scalar(a, nn::sqrt(nn::sum(nn::square(b))))); }, {a, b});
    check(fam, [&] { return nn::sum(nn::mul(nn::transpose(a), nn::transpose(b))); }, {a, b});
    check(fam, [&] {
      const Tensor parts[] = {a, b};
      return nn::sum(nn::tanh(nn::concat_cols(parts)));
    }, {a, b});
    check(fam, [&] { return nn::sum(nn::tanh(nn::mul(nn::sum_rows(a), row))); }, {a, row});
  }
}

void mlps(GradientFamily& fam) {
  std::mt19937_64 rng(2);
  for (const auto& s : kShapes) {
    ++fam.shapes;
    const Tensor x = Tensor::parameter(random_matrix(s.rows, s.cols, rng));
    nn::Mlp mlp({s.cols, 2 * s.extra + 1, s.extra}, rng);
    nn::ParamList params;
    mlp.collect("mlp", params);
    auto inputs = tensors(params);
    inputs.push_back(x);
    std::mt19937_64 proj_rng(s.rows);
    const Tensor w = Tensor::constant(random_matrix(s.rows, s.extra, proj_rng));
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(mlp.forward(x)), w)); }, inputs);

    nn::ResidualMlp res(s.cols, s.extra + 2, rng);
    res.outer().weight().mutable_value() = random_matrix(s.extra + 2, s.cols, rng, 0.3);
    nn::ParamList rparams;
    res.collect("res", rparams);
    auto rinputs = tensors(rparams);
    rinputs.push_back(x);
    const Tensor rw = Tensor::constant(random_matrix(s.rows, s.cols, rng));
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(res.forward(x)), rw)); }, rinputs);
  }
}

void attention(GradientFamily& fam) {
  std::mt19937_64 rng(3);
  for (const auto& s : kShapes) {
    ++fam.shapes;
    const int d = 4 * (1 + s.extra % 2);
    nn::MultiHeadAttention att(d, 2, rng);
    const Tensor q = Tensor::parameter(random_matrix(s.rows, d, rng));
    const Tensor kv = Tensor::parameter(random_matrix(s.extra + 1, d, rng));
    nn::ParamList params;
    att.collect("att", params);
    auto inputs = tensors(params);
    inputs.push_back(q);
    inputs.push_back(kv);
    const Tensor w = Tensor::constant(random_matrix(s.rows, d, rng));
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(att.forward(q, kv, kv)), w)); }, inputs);

    Matrix mask = Matrix::Zero(s.rows, s.extra + 1);
    if (s.extra > 0) mask(0, 0) = -1e9;
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(att.forward(q, kv, kv, &mask)), w)); }, inputs);
  }
}

void encoders(GradientFamily& fam) {
  std::mt19937_64 rng(4);
  for (const auto& s : kShapes) {
    ++fam.shapes;
    const int n = s.rows + 1;
    const int frames = 1 + s.extra % 4;
    nn::SpatialEncoder spatial(6, 3, 8, 2, 8, 1, rng);
    const Matrix tokens = random_matrix(n, 6, rng);
    std::vector<int> kinds(n);
    for (int i = 0; i < n; ++i) kinds[i] = i % 3;
    nn::ParamList sp;
    spatial.collect("s", sp);
    std::mt19937_64 proj(7);
    const Tensor ws = Tensor::constant(random_matrix(n, 8, proj));
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(spatial.forward(tokens, kinds)), ws)); }, tensors(sp));

    nn::TemporalEncoder temporal(6, 4, 8, 2, 8, 1, rng);
    const Matrix seq = random_matrix(n * frames, 6, rng);
    nn::ParamList tp;
    temporal.collect("t", tp);
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(temporal.forward(seq, n, frames)), ws)); }, tensors(tp));
  }
}

void fusion(GradientFamily& fam) {
  std::mt19937_64 rng(5);
  for (const auto& s : kShapes) {
    ++fam.shapes;
    nn::CrossModalFusion fusion(8, 2, rng);
    const Tensor xs = Tensor::parameter(random_matrix(s.rows, 8, rng));
    const Tensor xt = Tensor::parameter(random_matrix(s.rows, 8, rng));
    nn::ParamList params;
    fusion.collect("f", params);
    auto inputs = tensors(params);
    inputs.push_back(xs);
    inputs.push_back(xt);
    const Tensor w = Tensor::constant(random_matrix(s.rows, 8, rng));
    check(fam, [&] { return nn::sum(nn::mul(nn::tanh(fusion.forward(xs, xt)), w)); }, inputs);
  }
}

void diffusion(GradientFamily& fam) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> coord(-6.0, 6.0);
  for (const auto& s : kShapes) {
    ++fam.shapes;
    const int n = s.rows + 3;
    std::vector<Vec2> pos(n);
    for (auto& p : pos) p = {coord(rng), coord(rng)};
    std::vector<hg::VertexKind> kinds(n, hg::VertexKind::Robot);
    const auto graph = hg::build_hypergraph(pos, kinds, 2, 5.0);
    for (double p : {1.5, 2.0}) {
      auto ops = hg::DiffusionOps::learned(4, 6, p, rng);
      ops.mlp_sigma().outer().weight().mutable_value() = random_matrix(6, 4, rng, 0.2);
      ops.mlp_eta().outer().weight().mutable_value() = random_matrix(6, 4, rng, 0.2);
      DiffusionConfig c;
      c.mode = DiffusionMode::Learned;
      c.k_unroll = 1 + s.extra % 4;
      c.alpha = 0.7;
      const Tensor x = Tensor::parameter(random_matrix(n, 4, rng).array().abs().matrix() +
                                         Matrix::Constant(n, 4, 0.2));
      nn::ParamList params;
      ops.collect("d", params);
      auto inputs = tensors(params);
      inputs.push_back(x);
      const Tensor w = Tensor::constant(random_matrix(n, 4, rng));
      check(fam, [&] { return nn::sum(nn::mul(hg::diffuse(x, graph, c, ops).g_star, w)); }, inputs);
    }
  }
}

void policy_heads(GradientFamily& fam) {
  struct Size {
    int robots, humans, pois;
  };
  const Size sizes[] = {{2, 1, 3}, {2, 2, 4}, {3, 2, 5}, {1, 3, 2}, {3, 1, 6}};
  for (const auto& sz : sizes) {
    ++fam.shapes;
    for (const auto arch : {marl::Architecture::Hyper, marl::Architecture::MlpAblation}) {
      ScenarioConfig config;
      config.n_robots = sz.robots;
      config.n_humans = sz.humans;
      config.n_pois = sz.pois;
      config.model = {8, 2, 1, 8};
      config.diffusion.k_unroll = 2;
      config.history_window = 2;
      const marl::Policy policy(config, arch, 11 + sz.pois);
      env::WorldState world = env::init_scenario(config, 3 + sz.robots);
      std::vector<env::LocalAction> moves(world.robots.size(), env::LocalAction{Vec2{0.6, -0.3}});
      for (int k = 0; k < 3 && !world.terminal; ++k) env::step_in_place(world, moves);
      const env::Observation obs = env::observe(world, 0);
      const marl::SceneInput in = marl::scene_input(obs, config.diffusion);
      const Matrix local = marl::local_features(obs);
      std::vector<int> candidates(sz.pois);
      for (int i = 0; i < sz.pois; ++i) candidates[i] = i;
      std::mt19937_64 proj(sz.pois);
      const Tensor wm = Tensor::constant(random_matrix(1, sz.pois, proj));
      const Tensor wl = Tensor::constant(random_matrix(1, 2, proj));
      const auto inputs = tensors(policy.actor_parameters());
      check(fam, [&] { return nn::sum(nn::mul(policy.macro_logits(policy.encode(in), in, candidates), wm)); }, inputs);
      check(fam, [&] { return nn::sum(nn::mul(policy.local_mean(policy.encode(in), local), wl)); }, inputs);
    }
  }
}

}  // namespace

namespace testsupport {

std::vector<GradientFamily> run_gradient_suite() {
  std::vector<GradientFamily> out;
  out.push_back({"elementwise and reduction ops"});
  elementwise_ops(out.back());
  out.push_back({"linear layers and MLPs"});
  mlps(out.back());
  out.push_back({"multi-head attention"});
  attention(out.back());
  out.push_back({"spatial and temporal encoders"});
  encoders(out.back());
  out.push_back({"cross-modal fusion"});
  fusion(out.back());
  out.push_back({"unrolled diffusion"});
  diffusion(out.back());
  out.push_back({"macro and local policy heads"});
  policy_heads(out.back());
  return out;
}

}  // namespace testsupport
