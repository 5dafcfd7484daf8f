#pragma once

#include <algorithm>
#include <deque>
#include <memory>
#include <unordered_map>
#include <vector>

#include "deepmac/catalog.hpp"
#include "deepmac/logic.hpp"
#include "deepmac/mlp.hpp"
#include "deepmac/sim.hpp"

namespace deepmac {

struct AgentConfig {
  double gamma = 0.8;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_steps = 0;  // 0: anneal over the first half of the run
  int replay_capacity = 10000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double grad_clip_norm = 1.0;
  int target_sync_period = 100;
  std::vector<int> hidden = {64, 64, 64};
  int episode_len = 64;
  int total_steps = 1024;
  double eval_duration_s = 5.0;
  int final_eval_seeds = 3;
  bool tabular = false;
};

struct Transition {
  StateVector state;
  int action = 0;
  double reward = 0.0;
  StateVector next_state;
  std::vector<int> next_legal;  // mask for the bootstrap target
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
      next_ = (next_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return items_.size(); }
  const Transition& at(std::size_t i) const { return items_[i]; }

  std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i)
      out.push_back(items_[rng.uniform_int(0, items_.size() - 1)]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// What the agent trains against: an action mask and a seeded, normalized
// reward evaluation. Rewards must land in [0, 1].
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::vector<int> legal(const Genome& g) const = 0;
  virtual double evaluate(const Genome& g, std::uint64_t seed) = 0;
};

// Reward = simulated throughput over a fixed horizon, normalized by the
// highest selectable rate.
class SimEnvironment : public Environment {
 public:
  SimEnvironment(Scenario scenario, SimParams params, double eval_duration_s)
      : scenario_(scenario), params_(params), eval_s_(eval_duration_s),
        normalizer_(reward_normalizer(params)) {}

  std::vector<int> legal(const Genome& g) const override { return legal_actions(g); }

  double evaluate(const Genome& g, std::uint64_t seed) override {
    const SimResult res = run(wire(g), scenario_, params_, seed, eval_s_);
    return res.throughput_bps / normalizer_;
  }

  const Scenario& scenario() const { return scenario_; }
  const SimParams& params() const { return params_; }

 private:
  Scenario scenario_;
  SimParams params_;
  double eval_s_;
  double normalizer_;
};

// Restricts another environment to actions on a subset of blocks; used by
// the toy setups and block-ablation studies.
class RestrictedEnv : public Environment {
 public:
  RestrictedEnv(Environment& inner, std::vector<BlockId> mutable_blocks)
      : inner_(inner), blocks_(std::move(mutable_blocks)) {}

  std::vector<int> legal(const Genome& g) const override {
    std::vector<int> out;
    for (int a : inner_.legal(g)) {
      const BlockId b = action_at(a).block;
      if (std::find(blocks_.begin(), blocks_.end(), b) != blocks_.end()) out.push_back(a);
    }
    return out;
  }

  double evaluate(const Genome& g, std::uint64_t seed) override { return inner_.evaluate(g, seed); }

  // Every valid genome reachable by mutating only the unrestricted blocks
  // from the all-zeros start.
  std::vector<Genome> reachable() const {
    std::vector<Genome> out;
    for (const Genome& g : enumerate_genomes()) {
      bool ok = true;
      for (std::size_t i = 0; i < kNumBlocks; ++i) {
        const BlockId b = static_cast<BlockId>(i);
        if (g.values[i] != 0 && std::find(blocks_.begin(), blocks_.end(), b) == blocks_.end())
          ok = false;
      }
      if (ok && validate(g).valid) out.push_back(g);
    }
    return out;
  }

 private:
  Environment& inner_;
  std::vector<BlockId> blocks_;
};

// Deterministic reward table over genomes; seed is ignored.
class TableEnv : public Environment {
 public:
  TableEnv(std::vector<BlockId> mutable_blocks, std::function<double(const Genome&)> reward)
      : blocks_(std::move(mutable_blocks)), reward_(std::move(reward)) {}

  std::vector<int> legal(const Genome& g) const override {
    std::vector<int> out;
    for (int a : legal_actions(g)) {
      const BlockId b = action_at(a).block;
      if (std::find(blocks_.begin(), blocks_.end(), b) != blocks_.end()) out.push_back(a);
    }
    return out;
  }

  double evaluate(const Genome& g, std::uint64_t) override { return reward_(g); }

  std::vector<Genome> reachable() const {
    RestrictedEnv helper(const_cast<TableEnv&>(*this), blocks_);
    return helper.reachable();
  }

 private:
  std::vector<BlockId> blocks_;
  std::function<double(const Genome&)> reward_;
};

// Epsilon for a step: linear anneal, then flat.
inline double epsilon_at(const AgentConfig& cfg, int step) {
  const int decay = cfg.epsilon_decay_steps > 0 ? cfg.epsilon_decay_steps : cfg.total_steps / 2;
  if (decay <= 0 || step >= decay) return cfg.epsilon_end;
  const double frac = static_cast<double>(step) / decay;
  return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

// Greedy argmax over the legal actions, lowest index on ties.
inline int greedy_action(const std::vector<double>& q, const std::vector<int>& legal) {
  if (legal.empty()) throw std::invalid_argument("empty legal action set");
  int best = legal.front();
  for (int a : legal) {
    const double qa = q[static_cast<std::size_t>(a)];
    const double qb = q[static_cast<std::size_t>(best)];
    if (qa > qb || (qa == qb && a < best)) best = a;
  }
  return best;
}

inline int select_action(const Mlp& net, const StateVector& state, double epsilon,
                         const std::vector<int>& legal, Rng& rng) {
  if (legal.empty()) throw std::invalid_argument("empty legal action set");
  if (rng.uniform() < epsilon)
    return legal[rng.uniform_int(0, legal.size() - 1)];
  const auto flat = state.flat();
  return greedy_action(net.forward(flat), legal);
}

// One temporal-difference step on a batch: targets are
// r + gamma * max over the next state's legal actions of the target net.
inline double train_step(Mlp& net, const Mlp& target_net, const std::vector<Transition>& batch,
                         const AgentConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  std::vector<Mlp::Sample> samples;
  samples.reserve(batch.size());
  for (const Transition& tr : batch) {
    double bootstrap = 0.0;
    if (cfg.gamma != 0.0 && !tr.next_legal.empty()) {
      const auto flat = tr.next_state.flat();
      const std::vector<double> q = target_net.forward(flat);
      bootstrap = q[static_cast<std::size_t>(greedy_action(q, tr.next_legal))];
    }
    Mlp::Sample s;
    const auto flat = tr.state.flat();
    s.input.assign(flat.begin(), flat.end());
    s.output_index = tr.action;
    s.target = tr.reward + cfg.gamma * bootstrap;
    samples.push_back(std::move(s));
  }
  Mlp::Grads grads;
  const double loss = net.loss_and_grad(samples, grads);
  net.sgd_step(grads, cfg.learning_rate, cfg.grad_clip_norm);
  return loss;
}

struct StepRecord {
  int step = 0;
  Genome genome;
  int action = 0;
  double reward = 0.0;
  double loss = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  Mlp net;
  Genome selected;
  double selected_reward = 0.0;
  std::vector<StepRecord> trace;
};

namespace detail {

class QTable {
 public:
  std::vector<double>& row(const Genome& g) {
    auto [it, fresh] = rows_.try_emplace(g.key());
    if (fresh) it->second.assign(kActionCount, 0.0);
    return it->second;
  }
  std::vector<double> peek(const Genome& g) const {
    auto it = rows_.find(g.key());
    return it == rows_.end() ? std::vector<double>(kActionCount, 0.0) : it->second;
  }

 private:
  std::unordered_map<std::uint32_t, std::vector<double>> rows_;
};

inline void push_history(std::deque<double>& h, double r) {
  h.push_back(r);
  while (h.size() > kHistoryLen) h.pop_front();
}

inline std::vector<double> history_span(const std::deque<double>& h) {
  return {h.begin(), h.end()};
}

}  // namespace detail

// Runs the training loop against an environment and returns the trained
// network plus the selected genome: the best genome, by reward averaged
// over final_eval_seeds, among those visited by a greedy rollout from the
// all-zeros start.
inline TrainResult train(Environment& env, const AgentConfig& cfg, std::uint64_t seed) {
  if (cfg.total_steps <= 0 || cfg.episode_len <= 0)
    throw std::invalid_argument("step counts must be positive");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("gamma outside [0, 1)");

  Rng agent_rng(derive_seed(seed, 0xA4E27ULL));
  Rng init_rng(derive_seed(seed, 0x111717ULL));

  std::vector<int> dims;
  dims.push_back(static_cast<int>(kStateWidth));
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(static_cast<int>(kActionCount));

  TrainResult result;
  result.net = Mlp(dims, init_rng);
  Mlp target = result.net;
  detail::QTable table;
  ReplayBuffer buffer(static_cast<std::size_t>(cfg.replay_capacity));

  Genome genome{};
  std::deque<double> history;

  for (int step = 0; step < cfg.total_steps; ++step) {
    if (step % cfg.episode_len == 0) {
      genome = Genome{};
      history.clear();
    }
    const double eps = epsilon_at(cfg, step);
    const std::vector<double> hist = detail::history_span(history);
    const StateVector s = encode(genome, hist);
    const std::vector<int> legal = env.legal(genome);

    int action;
    if (cfg.tabular) {
      if (agent_rng.uniform() < eps)
        action = legal[agent_rng.uniform_int(0, legal.size() - 1)];
      else
        action = greedy_action(table.peek(genome), legal);
    } else {
      action = select_action(result.net, s, eps, legal, agent_rng);
    }

    const Genome next = apply_action(genome, action);
    const double reward = env.evaluate(next, derive_seed(seed, 0xE7A1ULL + static_cast<std::uint64_t>(step)));
    if (!(reward >= 0.0 && reward <= 1.0))
      throw std::runtime_error("environment reward " + std::to_string(reward) + " outside [0, 1]");

    detail::push_history(history, reward);
    const StateVector s2 = encode(next, detail::history_span(history));
    const std::vector<int> legal2 = env.legal(next);

    double loss = 0.0;
    if (cfg.tabular) {
      // alpha = 1: the TD target replaces the entry outright
      double bootstrap = 0.0;
      if (!legal2.empty()) {
        const std::vector<double> qn = table.peek(next);
        bootstrap = qn[static_cast<std::size_t>(greedy_action(qn, legal2))];
      }
      const double tgt = reward + cfg.gamma * bootstrap;
      double& cell = table.row(genome)[static_cast<std::size_t>(action)];
      loss = (tgt - cell) * (tgt - cell);
      cell = tgt;
    } else {
      buffer.push(Transition{s, action, reward, s2, legal2});
      if (buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), agent_rng);
        loss = train_step(result.net, target, batch, cfg);
      }
      if ((step + 1) % cfg.target_sync_period == 0) target = result.net;
    }

    result.trace.push_back(StepRecord{step, next, action, reward, loss, eps});
    genome = next;
  }

  // Greedy rollout from the all-zeros start; keep the best measured visit.
  Genome cur{};
  std::deque<double> rhist;
  std::unordered_map<std::uint32_t, double> measured;
  auto measure = [&](const Genome& g) {
    auto it = measured.find(g.key());
    if (it != measured.end()) return it->second;
    double sum = 0.0;
    for (int j = 0; j < cfg.final_eval_seeds; ++j)
      sum += env.evaluate(g, derive_seed(seed, 0xF00DULL + 16ULL * g.key() + static_cast<std::uint64_t>(j)));
    const double mean = sum / cfg.final_eval_seeds;
    measured.emplace(g.key(), mean);
    return mean;
  };

  result.selected = cur;
  result.selected_reward = measure(cur);
  for (int step = 0; step < cfg.episode_len; ++step) {
    const StateVector s = encode(cur, detail::history_span(rhist));
    const std::vector<int> legal = env.legal(cur);
    int action;
    if (cfg.tabular)
      action = greedy_action(table.peek(cur), legal);
    else
      action = greedy_action(result.net.forward(s.flat()), legal);
    cur = apply_action(cur, action);
    const double r = measure(cur);
    detail::push_history(rhist, r);
    if (r > result.selected_reward) {
      result.selected_reward = r;
      result.selected = cur;
    }
  }
  return result;
}

}  // namespace deepmac
