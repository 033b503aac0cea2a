#include "tnas/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "tnas/random.hpp"

namespace tnas {

namespace {

constexpr double kMetricFloor = 0.05;
constexpr double kTinyMetric = 1e-6;

double clamp_metric(double v) { return std::clamp(v, kMetricFloor, 1.0); }

bool in_unit_interval(double v) { return std::isfinite(v) && v > 0.0 && v <= 1.0; }

}  // namespace

double reward(const MetricTriple& m) {
  if (!in_unit_interval(m.miou) || !in_unit_interval(m.mean_acc) || !in_unit_interval(m.fw_iou))
    throw DomainError("metrics must lie in (0, 1]");
  return std::cbrt(m.miou * m.mean_acc * m.fw_iou);
}

nlohmann::json to_json(const MetricTriple& m) {
  return {{"miou", m.miou}, {"mean_acc", m.mean_acc}, {"fw_iou", m.fw_iou}};
}

MetricTriple metrics_from_json(const nlohmann::json& j) {
  return {j.at("miou").get<double>(), j.at("mean_acc").get<double>(),
          j.at("fw_iou").get<double>()};
}

std::vector<Violation> check_config(const SurrogateConfig& cfg, const SpaceConfig& space) {
  std::vector<Violation> out;
  auto need = [&](bool cond, const char* msg) {
    if (!cond) out.push_back({Violation::Kind::Config, -1, msg});
  };
  need(cfg.noise_sigma >= 0, "noise_sigma must be >= 0");
  need(cfg.target_params > 0, "target_params must be > 0");
  need(cfg.connectivity_scale >= 0 && cfg.connectivity_scale <= 1,
       "connectivity_scale must lie in [0, 1]");
  need(cfg.target_strided_blocks >= 0 && cfg.target_strided_blocks <= space.stride_blocks(),
       "target_strided_blocks must lie in [0, num_blocks / 2]");
  return out;
}

SurrogateConfig long_training_variant(const SurrogateConfig& cfg) {
  SurrogateConfig out = cfg;
  out.seed = derive_seed(cfg.seed, 0x10a9);
  out.noise_sigma = cfg.noise_sigma / 2;
  return out;
}

MetricTriple surrogate_evaluate(const GraphIR& graph, const CostReport& cost,
                                const SpaceConfig& space, const SurrogateConfig& cfg,
                                std::mt19937_64& rng) {
  const double ratio =
      std::max<double>(static_cast<double>(cost.params_generated), 1.0) / cfg.target_params;
  const double m1 = clamp_metric(std::exp(-std::abs(std::log2(ratio)) / 4.0));

  int used = 0;
  for (int u : graph.usage)
    if (u >= 1) ++used;
  const double m2 = clamp_metric((1.0 - cfg.connectivity_scale) +
                                 cfg.connectivity_scale * used / (2.0 + space.num_blocks));

  const int gap = std::abs(graph.strided_blocks - cfg.target_strided_blocks);
  const double m3 = clamp_metric(1.0 - 0.15 * gap);

  MetricTriple m{m1, m2, m3};
  if (cfg.noise_sigma > 0) {
    std::uniform_real_distribution<double> eps(-cfg.noise_sigma, cfg.noise_sigma);
    for (double* v : {&m.miou, &m.mean_acc, &m.fw_iou})
      *v = std::clamp(*v * (1.0 + eps(rng)), kTinyMetric, 1.0);
  }
  return m;
}

EvalRequest make_request(std::int64_t id, const Genotype& genotype, const SpaceConfig& space) {
  EvalRequest r;
  r.id = id;
  r.genotype = genotype;
  r.graph = compile(genotype, space);
  r.cost = count_params(r.graph, space);
  r.summary = summarize(r.graph, space);
  return r;
}

double EvalOutcome::reward() const {
  if (!metrics) return 0.0;
  try {
    return tnas::reward(*metrics);
  } catch (const DomainError&) {
    return 0.0;
  }
}

SurrogateEvaluator::SurrogateEvaluator(SpaceConfig space, SurrogateConfig cfg, int workers)
    : space_(space), cfg_(cfg), workers_(std::max(1, workers)) {
  if (auto v = check_config(cfg_, space_); !v.empty()) throw ValidationError(v);
}

MetricTriple SurrogateEvaluator::evaluate_one(const EvalRequest& request) const {
  std::mt19937_64 rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(request.id)));
  return surrogate_evaluate(request.graph, request.cost, space_, cfg_, rng);
}

std::vector<EvalOutcome> SurrogateEvaluator::evaluate(std::span<const EvalRequest> requests) {
  std::vector<EvalOutcome> out(requests.size());
  if (workers_ == 1 || requests.size() < 2) {
    for (std::size_t i = 0; i < requests.size(); ++i) out[i].metrics = evaluate_one(requests[i]);
    return out;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(workers_), requests.size());
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w)
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < requests.size(); i += workers)
        out[i].metrics = evaluate_one(requests[i]);
    }));
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace tnas
