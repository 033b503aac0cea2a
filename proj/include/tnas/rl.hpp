#ifndef TNAS_RL_HPP_
#define TNAS_RL_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "tnas/eval.hpp"
#include "tnas/optimizer.hpp"
#include "tnas/policy.hpp"
#include "tnas/record.hpp"

namespace tnas {

struct PpoConfig {
  double learning_rate = 1e-4;
  double clip_epsilon = 0.2;
  int update_epochs = 4;
  int batch_size = 16;
  double entropy_coef = 0.01;
  double baseline_decay = 0.95;
  double max_grad_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon}; }
  bool operator==(const PpoConfig&) const = default;
};

std::vector<Violation> check_config(const PpoConfig& cfg);

// Exponential moving average of batch-mean rewards.
struct Baseline {
  double ema = 0;
  bool initialized = false;
};

// advantage = reward - ema for every trajectory (the first batch seeds the ema
// with its own mean first), then ema <- decay * ema + (1 - decay) * mean.
// Throws std::invalid_argument on an empty batch.
void compute_advantages(std::span<Trajectory> batch, Baseline& baseline, double decay);

struct PpoObjective {
  double loss = 0;
  double policy_loss = 0;
  double entropy = 0;
  double mean_ratio = 0;
  double clip_fraction = 0;
  Eigen::VectorXd grad;
};

// Clipped surrogate over every decision of the batch:
//   loss = -mean(min(r A, clip(r, 1-eps, 1+eps) A)) - c * mean(entropy),
//   r = exp(new_log_prob - stored_log_prob).
// Throws Error naming the trajectory whose contribution is non-finite.
PpoObjective ppo_objective(const Controller<double>& controller, const Schedule& schedule,
                           std::span<const Trajectory> batch, const PpoConfig& cfg);

struct UpdateStats {
  double loss = 0;          // mean over epochs
  double mean_ratio = 0;    // mean over epochs
  double first_ratio = 0;   // epoch 0, equals 1 up to rounding
  double entropy = 0;
  double clip_fraction = 0;
  double grad_norm = 0;     // before clipping, last epoch
  double max_param_delta = 0;
};

UpdateStats ppo_update(Controller<double>& controller, const Schedule& schedule,
                       Adam<double>& optimizer, std::span<const Trajectory> batch,
                       const PpoConfig& cfg);

struct TrainState {
  Policy policy;
  Adam<double> optimizer;
  Baseline baseline;
  std::mt19937_64 rng;
  std::int64_t next_index = 0;

  TrainState(Policy p, const PpoConfig& cfg, std::uint64_t sample_seed);
};

struct TrainOptions {
  PpoConfig ppo;
  std::int64_t budget = 2000;  // total architectures, counting those already done
  // Called after each batch has been evaluated and used for an update.
  std::function<void(std::span<const SearchRecord>, const UpdateStats&)> on_batch;
};

// Sample -> evaluate -> advantages -> PPO update, until the budget is spent.
// Failed evaluations score 0; evaluator exceptions propagate.
std::vector<SearchRecord> train_controller(TrainState& state, Evaluator& evaluator,
                                           const TrainOptions& options);

SearchRecord make_record(const EvalRequest& request, const EvalOutcome& outcome,
                         int batch_size, const char* source);

}  // namespace tnas

#endif  // TNAS_RL_HPP_
