#include "hypersam/marl/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hypersam/errors.hpp"
#include "hypersam/marl/ppo.hpp"

namespace hypersam::marl {

namespace {

void append_row(Matrix& m, const Eigen::RowVectorXd& row) {
  if (m.rows() == 0) m.resize(0, row.size());
  m.conservativeResize(m.rows() + 1, Eigen::NoChange);
  m.row(m.rows() - 1) = row;
}

}  // namespace

EpisodeLog collect_episode(const Policy& policy, std::uint64_t seed, std::mt19937_64& action_rng,
                           RolloutBuffer& buffer) {
  nn::NoGradGuard guard;
  env::WorldState world = env::init_scenario(policy.config(), seed);
  const int n = static_cast<int>(world.robots.size());
  const int episode = static_cast<int>(buffer.episodes.size());
  std::vector<std::size_t> open(n, 0);
  std::vector<Encoding> enc(n);
  std::vector<env::LocalAction> actions(n);
  double total = 0.0;

  while (!world.terminal) {
    if (env::advance_macro_clock(world, world.plans)) {
      JointDecision jd = decide_macro_actions(policy, world, &action_rng);
      std::vector<env::MacroAction> macro;
      for (int i = 0; i < n; ++i) {
        Segment s;
        s.episode = episode;
        s.robot = i;
        s.input = std::move(jd.inputs[i]);
        s.candidates = jd.choices[i].candidates;
        s.head = jd.choices[i].head;
        s.logp = jd.choices[i].logp;
        s.joint = joint_state(world, i);
        s.value = policy.macro_value(Matrix(s.joint)).item();
        open[i] = buffer.segments.size();
        buffer.segments.push_back(std::move(s));
        enc[i] = jd.encodings[i];
        macro.push_back(jd.choices[i].action);
      }
      env::apply_macro_actions(world, macro);
    }

    for (int i = 0; i < n; ++i) {
      Segment& s = buffer.segments[open[i]];
      const Eigen::RowVectorXd lf = local_features(env::observe(world, i));
      const LocalChoice c = select_local_action(policy, enc[i], lf, &action_rng);
      const Eigen::RowVectorXd joint = joint_state(world, i);
      append_row(s.local_features, lf);
      append_row(s.local_joint, joint);
      s.samples.push_back(c.sample);
      s.local_logp.push_back(c.logp);
      s.local_values.push_back(policy.local_value(Matrix(joint)).item());
      actions[i].velocity_command = c.velocity_command;
    }
    const env::WorldState before = world;
    const auto events = env::step_in_place(world, actions);
    for (int i = 0; i < n; ++i) {
      const double r = env::compute_reward(before, world, i, events);
      buffer.segments[open[i]].rewards.push_back(r);
      total += r;
    }
  }
  for (int i = 0; i < n; ++i) buffer.segments[open[i]].episode_end = true;

  buffer.steps += world.step_index;
  EpisodeLog log;
  log.end_step = buffer.steps;
  log.steps = world.step_index;
  log.reward = total / n;
  log.explored = env::explored_count(world);
  log.n_pois = static_cast<int>(world.pois.size());
  for (const auto& e : world.events) {
    if (e.kind == env::EventKind::AllPoisExplored) log.success = true;
    if (e.kind == env::EventKind::RobotRobotCollision || e.kind == env::EventKind::RobotHumanCollision) log.collision = true;
    if (e.kind == env::EventKind::Timeout) log.timeout = true;
  }
  buffer.episodes.push_back(log);
  return log;
}

RolloutBuffer collect_rollout(const Policy& policy, std::int64_t min_steps, std::mt19937_64& seed_rng,
                              std::mt19937_64& action_rng) {
  RolloutBuffer buffer;
  while (buffer.steps < min_steps) collect_episode(policy, seed_rng(), action_rng, buffer);
  return buffer;
}

void compute_advantages(RolloutBuffer& buffer, const TrainConfig& train) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> chains;
  for (std::size_t k = 0; k < buffer.segments.size(); ++k) {
    chains[{buffer.segments[k].episode, buffer.segments[k].robot}].push_back(k);
  }
  for (const auto& [key, idx] : chains) {
    std::vector<double> macro_r, macro_v, local_r, local_v;
    std::vector<int> durations;
    for (std::size_t k : idx) {
      const Segment& s = buffer.segments[k];
      std::vector<double> scaled(s.rewards);
      for (double& r : scaled) r *= train.reward_scale;
      macro_r.push_back(macro_reward(scaled, train.gamma));
      macro_v.push_back(s.value);
      durations.push_back(s.length());
      local_r.insert(local_r.end(), scaled.begin(), scaled.end());
      local_v.insert(local_v.end(), s.local_values.begin(), s.local_values.end());
    }
    // Episodes always run to a terminal step, so nothing is bootstrapped.
    macro_v.push_back(0.0);
    local_v.push_back(0.0);
    const auto macro_adv = smdp_gae(macro_r, macro_v, durations, train.gamma, train.gae_lambda);
    const auto local_adv = gae(local_r, local_v, train.gamma, train.gae_lambda);
    std::size_t offset = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      Segment& s = buffer.segments[idx[j]];
      s.macro_advantage = macro_adv[j];
      s.macro_return = macro_adv[j] + s.value;
      s.local_advantages.assign(local_adv.begin() + offset, local_adv.begin() + offset + s.length());
      s.local_returns.resize(s.length());
      for (int t = 0; t < s.length(); ++t) s.local_returns[t] = s.local_advantages[t] + s.local_values[t];
      offset += s.length();
    }
  }
}

namespace {

Tensor gaussian_logp_rows(const Tensor& mean, const Tensor& log_std, const Matrix& samples) {
  const Eigen::Index n = samples.rows();
  const Tensor inv_std = nn::broadcast_rows(nn::exp(nn::scale(log_std, -1.0)), n);
  const Tensor z = nn::mul(nn::sub(Tensor::constant(samples), mean), inv_std);
  const Tensor terms = nn::sub(nn::scale(nn::square(z), -0.5), nn::broadcast_rows(log_std, n));
  return nn::add_scalar(nn::matmul(terms, Tensor::constant(Matrix::Ones(2, 1))), -std::log(2.0 * M_PI));
}

struct Snapshot {
  std::vector<Matrix> values;
  std::vector<Matrix> m, v;
  std::int64_t t = 0;
};

Snapshot take_snapshot(const nn::ParamList& params, nn::Adam& opt) {
  Snapshot s;
  for (const auto& p : params) s.values.push_back(p.tensor.value());
  s.m = opt.first_moments();
  s.v = opt.second_moments();
  s.t = opt.steps();
  return s;
}

void restore(const nn::ParamList& params, nn::Adam& opt, const Snapshot& s) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    t.mutable_value() = s.values[i];
    t.zero_grad();
  }
  opt.first_moments() = s.m;
  opt.second_moments() = s.v;
  opt.set_steps(s.t);
}

}  // namespace

UpdateStats ppo_update(Policy& policy, nn::Adam& optimizer, RolloutBuffer& buffer, const TrainConfig& train,
                       std::mt19937_64& rng) {
  UpdateStats stats;
  if (buffer.segments.empty()) return stats;
  const nn::ParamList params = policy.parameters();
  const nn::ParamList actor = policy.actor_parameters();
  const nn::ParamList critic = policy.critic_parameters();
  const Snapshot snapshot = take_snapshot(params, optimizer);

  // Normalised advantages, indexed like the segments.
  std::vector<double> macro_adv, local_adv;
  for (const auto& s : buffer.segments) {
    if (s.has_macro()) macro_adv.push_back(s.macro_advantage);
    local_adv.insert(local_adv.end(), s.local_advantages.begin(), s.local_advantages.end());
  }
  normalize(macro_adv);
  normalize(local_adv);
  std::vector<int> macro_index(buffer.segments.size(), -1);
  std::vector<std::size_t> local_offset(buffer.segments.size(), 0);
  {
    int m = 0;
    std::size_t l = 0;
    for (std::size_t k = 0; k < buffer.segments.size(); ++k) {
      if (buffer.segments[k].has_macro()) macro_index[k] = m++;
      local_offset[k] = l;
      l += buffer.segments[k].length();
    }
  }

  std::vector<std::size_t> order(buffer.segments.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t chunks = std::clamp<std::size_t>(train.num_minibatches, 1, order.size());

  try {
    for (int epoch = 0; epoch < train.ppo_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * order.size() / chunks;
        const std::size_t end = (c + 1) * order.size() / chunks;
        optimizer.zero_grad();

        std::vector<Tensor> macro_lp, macro_ent, local_lp;
        std::vector<double> m_old, m_adv, m_vold, m_ret, l_old, l_adv, l_vold, l_ret;
        std::vector<Eigen::RowVectorXd> m_joint;
        std::vector<const Matrix*> l_joint;
        for (std::size_t o = begin; o < end; ++o) {
          const std::size_t k = order[o];
          const Segment& s = buffer.segments[k];
          const Encoding enc = policy.encode(s.input);
          if (s.has_macro()) {
            const Tensor logits = policy.macro_logits(enc, s.input, s.candidates);
            const Tensor lsm = nn::log_softmax_rows(logits);
            macro_lp.push_back(nn::element(lsm, 0, s.head));
            macro_ent.push_back(nn::scale(nn::sum(nn::mul(nn::softmax_rows(logits), lsm)), -1.0));
            m_old.push_back(s.logp);
            m_adv.push_back(macro_adv[macro_index[k]]);
          }
          m_joint.push_back(s.joint);
          m_vold.push_back(s.value);
          m_ret.push_back(s.macro_return);

          Matrix samples(s.length(), 2);
          for (int t = 0; t < s.length(); ++t) samples.row(t) << s.samples[t].x, s.samples[t].y;
          local_lp.push_back(gaussian_logp_rows(policy.local_mean(enc, s.local_features), policy.local_log_std(), samples));
          l_old.insert(l_old.end(), s.local_logp.begin(), s.local_logp.end());
          l_adv.insert(l_adv.end(), local_adv.begin() + local_offset[k], local_adv.begin() + local_offset[k] + s.length());
          l_joint.push_back(&s.local_joint);
          l_vold.insert(l_vold.end(), s.local_values.begin(), s.local_values.end());
          l_ret.insert(l_ret.end(), s.local_returns.begin(), s.local_returns.end());
        }

        const Tensor local_logp = nn::concat_rows(local_lp);
        const Tensor local_entropy =
            nn::add_scalar(nn::sum(policy.local_log_std()), 1.0 + std::log(2.0 * M_PI));
        Tensor loss = actor_loss(local_logp, l_old, l_adv, local_entropy, train.clip, train.entropy_coef);
        stats.local_policy_loss += loss.item();
        stats.local_entropy += local_entropy.item();
        double kl = 0.0, clipped = 0.0;
        for (std::size_t i = 0; i < l_old.size(); ++i) {
          const double d = l_old[i] - local_logp.value()(i, 0);
          kl += d;
          clipped += std::fabs(std::exp(-d) - 1.0) > train.clip ? 1.0 : 0.0;
        }
        std::size_t samples = l_old.size();
        if (!macro_lp.empty()) {
          const Tensor lp = nn::concat_rows(macro_lp);
          const Tensor ent = nn::mean(nn::concat_rows(macro_ent));
          const Tensor ml = actor_loss(lp, m_old, m_adv, ent, train.clip, train.entropy_coef);
          stats.macro_policy_loss += ml.item();
          stats.macro_entropy += ent.item();
          for (std::size_t i = 0; i < m_old.size(); ++i) {
            const double d = m_old[i] - lp.value()(i, 0);
            kl += d;
            clipped += std::fabs(std::exp(-d) - 1.0) > train.clip ? 1.0 : 0.0;
          }
          samples += m_old.size();
          loss = nn::add(loss, ml);
        }
        stats.approx_kl += kl / samples;
        stats.clip_fraction += clipped / samples;

        Matrix mj(static_cast<Eigen::Index>(m_joint.size()), m_joint.front().size());
        for (std::size_t i = 0; i < m_joint.size(); ++i) mj.row(i) = m_joint[i];
        Eigen::Index rows = 0;
        for (const Matrix* m : l_joint) rows += m->rows();
        Matrix lj(rows, mj.cols());
        rows = 0;
        for (const Matrix* m : l_joint) {
          lj.middleRows(rows, m->rows()) = *m;
          rows += m->rows();
        }
        const Tensor mv = critic_loss(policy.macro_value(mj), m_vold, m_ret, train.value_clip);
        const Tensor lv = critic_loss(policy.local_value(lj), l_vold, l_ret, train.value_clip);
        stats.macro_value_loss += mv.item();
        stats.local_value_loss += lv.item();
        loss = nn::add(loss, nn::add(mv, lv));
        if (!std::isfinite(loss.item())) throw NumericalError("non-finite PPO loss");

        loss.backward();
        if (!nn::grads_finite(params)) throw NumericalError("non-finite gradients");
        stats.actor_grad_norm += nn::clip_grad_norm(actor, train.max_grad_norm);
        stats.critic_grad_norm += nn::clip_grad_norm(critic, train.max_grad_norm);
        optimizer.step();
        if (!nn::values_finite(params)) throw NumericalError("non-finite parameters after update");
        ++stats.minibatches;
      }
    }
  } catch (const NumericalError&) {
    restore(params, optimizer, snapshot);
    throw;
  }
  optimizer.zero_grad();

  const double m = std::max(1, stats.minibatches);
  for (double* v : {&stats.macro_policy_loss, &stats.local_policy_loss, &stats.macro_value_loss,
                    &stats.local_value_loss, &stats.macro_entropy, &stats.local_entropy, &stats.approx_kl,
                    &stats.clip_fraction, &stats.actor_grad_norm, &stats.critic_grad_norm}) {
    *v /= m;
  }
  return stats;
}

}  // namespace hypersam::marl
