#ifndef TNAS_COST_HPP_
#define TNAS_COST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tnas/graph.hpp"

namespace tnas {

// Reference resolution for FLOP reporting (height x width).
inline constexpr int kReferenceHeight = 1024;
inline constexpr int kReferenceWidth = 2048;

// Learnable parameters of one node, split by role. Only `conv` takes part in
// multiply-accumulate work.
struct ParamTerms {
  std::int64_t conv = 0;
  std::int64_t norm = 0;  // two affine terms per normalized channel
  std::int64_t bias = 0;
  std::int64_t total() const { return conv + norm + bias; }
};

ParamTerms node_param_terms(NodeKind kind, OpKind op, std::int64_t c_in, std::int64_t c_out);

struct NodeCost {
  int node = 0;
  std::string label;
  TensorSpec out;
  std::int64_t params = 0;
  std::int64_t flops = 0;
};

struct CostReport {
  std::int64_t params_total = 0;
  std::int64_t params_generated = 0;
  std::int64_t flops = 0;
  int input_height = kReferenceHeight;
  int input_width = kReferenceWidth;
  std::vector<NodeCost> per_node;
  int output_down_exp = 0;
  int downsample_factor = 1;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

CostReport count_params(const GraphIR& graph, const SpaceConfig& cfg,
                        int input_height = kReferenceHeight, int input_width = kReferenceWidth);

// Multiply-accumulate count x2 of every convolution at its output resolution.
// Throws ResolutionError unless both sides are divisible by 2^max_down_exp.
std::int64_t count_flops(const GraphIR& graph, const SpaceConfig& cfg, int input_height,
                         int input_width);

// Compact record shared with evaluators and stored in search logs.
struct GraphSummary {
  std::int64_t params = 0;
  std::int64_t flops = 0;
  int max_down_exp = 0;
  int output_down_exp = 0;
  int num_nodes = 0;
  int downsample_factor = 1;
  bool operator==(const GraphSummary&) const = default;
};

GraphSummary summarize(const GraphIR& graph, const SpaceConfig& cfg);
nlohmann::json to_json(const GraphSummary& s);
GraphSummary summary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostReport& r);

}  // namespace tnas

#endif  // TNAS_COST_HPP_
