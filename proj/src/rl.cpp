#include "tnas/rl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tnas {

std::vector<Violation> check_config(const PpoConfig& cfg) {
  std::vector<Violation> out;
  auto need = [&](bool cond, const char* msg) {
    if (!cond) out.push_back({Violation::Kind::Config, -1, msg});
  };
  need(cfg.clip_epsilon > 0 && cfg.clip_epsilon < 1, "clip_epsilon must lie in (0, 1)");
  need(cfg.baseline_decay > 0 && cfg.baseline_decay < 1, "baseline_decay must lie in (0, 1)");
  need(cfg.update_epochs >= 1, "update_epochs must be >= 1");
  need(cfg.batch_size >= 1, "batch_size must be >= 1");
  need(cfg.learning_rate > 0, "learning_rate must be > 0");
  return out;
}

void compute_advantages(std::span<Trajectory> batch, Baseline& baseline, double decay) {
  if (batch.empty()) throw std::invalid_argument("compute_advantages: empty batch");
  double mean = 0;
  for (const auto& t : batch) mean += t.reward;
  mean /= static_cast<double>(batch.size());
  if (!baseline.initialized) {
    baseline.ema = mean;
    baseline.initialized = true;
    for (auto& t : batch) t.advantage = t.reward - mean;
  } else {
    for (auto& t : batch) t.advantage = t.reward - baseline.ema;
  }
  baseline.ema = decay * baseline.ema + (1.0 - decay) * mean;
}

PpoObjective ppo_objective(const Controller<double>& controller, const Schedule& schedule,
                           std::span<const Trajectory> batch, const PpoConfig& cfg) {
  PpoObjective obj;
  obj.grad = Eigen::VectorXd::Zero(controller.num_parameters());
  std::size_t total = 0;
  for (const auto& t : batch) total += t.decisions.size();
  if (total == 0) return obj;
  const double inv = 1.0 / static_cast<double>(total);
  const double lo = 1.0 - cfg.clip_epsilon;
  const double hi = 1.0 + cfg.clip_epsilon;

  std::size_t clipped = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Trajectory& traj = batch[b];
    const auto choices = traj.choices();
    const auto tape = controller.evaluate(schedule, choices);
    std::vector<double> d_log_prob(tape.size());
    std::vector<double> d_entropy(tape.size(), -cfg.entropy_coef * inv);
    const double a = traj.advantage;
    double contribution = 0;
    for (std::size_t k = 0; k < tape.size(); ++k) {
      const double ratio = std::exp(tape[k].log_prob - traj.decisions[k].log_prob);
      const double unclipped = ratio * a;
      const double clipped_term = std::clamp(ratio, lo, hi) * a;
      // gradient flows through the unclipped branch only when it is the minimum
      const bool active = unclipped <= clipped_term;
      if (ratio < lo || ratio > hi) ++clipped;
      const double surrogate = std::min(unclipped, clipped_term);
      contribution += -surrogate * inv - cfg.entropy_coef * tape[k].entropy * inv;
      obj.policy_loss += -surrogate * inv;
      obj.entropy += tape[k].entropy * inv;
      obj.mean_ratio += ratio * inv;
      d_log_prob[k] = active ? -unclipped * inv : 0.0;
    }
    if (!std::isfinite(contribution))
      throw Error("non-finite PPO loss from trajectory " + std::to_string(b));
    obj.loss += contribution;
    obj.grad += controller.backward(tape, d_log_prob, d_entropy);
  }
  obj.clip_fraction = static_cast<double>(clipped) * inv;
  return obj;
}

UpdateStats ppo_update(Controller<double>& controller, const Schedule& schedule,
                       Adam<double>& optimizer, std::span<const Trajectory> batch,
                       const PpoConfig& cfg) {
  UpdateStats stats;
  if (batch.empty()) return stats;
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    PpoObjective obj = ppo_objective(controller, schedule, batch, cfg);
    stats.grad_norm = clip_global_norm(obj.grad, cfg.max_grad_norm);
    const double delta = optimizer.step(controller.parameters(), obj.grad);
    stats.max_param_delta = std::max(stats.max_param_delta, delta);
    if (epoch == 0) stats.first_ratio = obj.mean_ratio;
    stats.loss += obj.loss;
    stats.mean_ratio += obj.mean_ratio;
    stats.entropy += obj.entropy;
    stats.clip_fraction += obj.clip_fraction;
  }
  stats.loss /= cfg.update_epochs;
  stats.mean_ratio /= cfg.update_epochs;
  stats.entropy /= cfg.update_epochs;
  stats.clip_fraction /= cfg.update_epochs;
  return stats;
}

TrainState::TrainState(Policy p, const PpoConfig& cfg, std::uint64_t sample_seed)
    : policy(std::move(p)),
      optimizer(cfg.adam(), policy.controller().num_parameters()),
      rng(sample_seed) {}

SearchRecord make_record(const EvalRequest& request, const EvalOutcome& outcome, int batch_size,
                         const char* source) {
  SearchRecord r;
  r.index = request.id;
  r.epoch = request.id / std::max(1, batch_size);
  r.genotype = request.genotype;
  r.metrics = outcome.metrics;
  r.error = outcome.error;
  r.reward = outcome.reward();
  if (r.reward == 0.0 && r.error.empty() && outcome.metrics) r.error = "metrics outside (0, 1]";
  r.summary = request.summary;
  r.source = source;
  return r;
}

std::vector<SearchRecord> train_controller(TrainState& state, Evaluator& evaluator,
                                           const TrainOptions& options) {
  if (auto v = check_config(options.ppo); !v.empty()) throw ValidationError(v);
  std::vector<SearchRecord> history;
  const auto& space = state.policy.space();
  while (state.next_index < options.budget) {
    const auto n = std::min<std::int64_t>(options.ppo.batch_size, options.budget - state.next_index);
    std::vector<Trajectory> batch;
    std::vector<EvalRequest> requests;
    for (std::int64_t i = 0; i < n; ++i) {
      batch.push_back(state.policy.sample(state.rng));
      requests.push_back(make_request(state.next_index + i, batch.back().genotype, space));
    }
    const auto outcomes = evaluator.evaluate(requests);

    std::vector<SearchRecord> records;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      records.push_back(make_record(requests[i], outcomes[i], options.ppo.batch_size, "controller"));
      batch[i].reward = records.back().reward;
    }
    compute_advantages(batch, state.baseline, options.ppo.baseline_decay);
    const UpdateStats stats = ppo_update(state.policy.controller(), state.policy.schedule(),
                                         state.optimizer, batch, options.ppo);
    state.next_index += n;
    if (options.on_batch) options.on_batch(records, stats);
    history.insert(history.end(), records.begin(), records.end());
  }
  return history;
}

}  // namespace tnas
