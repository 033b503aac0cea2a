#ifndef TNAS_EVAL_HPP_
#define TNAS_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tnas/cost.hpp"
#include "tnas/genotype.hpp"
#include "tnas/graph.hpp"

namespace tnas {

// Segmentation scores of one candidate, each in (0, 1].
struct MetricTriple {
  double miou = 0;
  double mean_acc = 0;
  double fw_iou = 0;
  bool operator==(const MetricTriple&) const = default;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Geometric mean of the three metrics. Throws DomainError outside (0, 1].
double reward(const MetricTriple& m);

nlohmann::json to_json(const MetricTriple& m);
MetricTriple metrics_from_json(const nlohmann::json& j);

struct SurrogateConfig {
  double target_params = 300000;    // P*
  double connectivity_scale = 0.5;  // weight of pool usage in the second metric
  int target_strided_blocks = 2;    // D*
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
  bool operator==(const SurrogateConfig&) const = default;
};

std::vector<Violation> check_config(const SurrogateConfig& cfg, const SpaceConfig& space);

// Second evaluation setup standing in for longer training: its own noise
// seed and half the noise.
SurrogateConfig long_training_variant(const SurrogateConfig& cfg);

// Deterministic shaped score:
//   m1 = exp(-|log2(params_generated / P*)| / 4)
//   m2 = (1 - scale) + scale * u / (2 + N), u = pool entries used at least once
//   m3 = 1 - 0.15 * |D - D*|, D = strided blocks
// each clamped to [0.05, 1], then scaled by (1 + eps), eps ~ U(-sigma, sigma),
// and clamped to (0, 1].
MetricTriple surrogate_evaluate(const GraphIR& graph, const CostReport& cost,
                                const SpaceConfig& space, const SurrogateConfig& cfg,
                                std::mt19937_64& rng);

struct EvalRequest {
  std::int64_t id = 0;
  Genotype genotype;
  GraphIR graph;
  CostReport cost;
  GraphSummary summary;
};

EvalRequest make_request(std::int64_t id, const Genotype& genotype, const SpaceConfig& space);

// Either metrics or an error message. Failed candidates score reward 0.
struct EvalOutcome {
  std::optional<MetricTriple> metrics;
  std::string error;

  bool ok() const { return metrics.has_value(); }
  double reward() const;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // One outcome per request, in request order.
  virtual std::vector<EvalOutcome> evaluate(std::span<const EvalRequest> requests) = 0;
};

class SurrogateEvaluator : public Evaluator {
 public:
  SurrogateEvaluator(SpaceConfig space, SurrogateConfig cfg, int workers = 1);

  // Noise stream is derived from (seed, request id).
  MetricTriple evaluate_one(const EvalRequest& request) const;
  std::vector<EvalOutcome> evaluate(std::span<const EvalRequest> requests) override;

  const SurrogateConfig& config() const { return cfg_; }

 private:
  SpaceConfig space_;
  SurrogateConfig cfg_;
  int workers_;
};

}  // namespace tnas

#endif  // TNAS_EVAL_HPP_
