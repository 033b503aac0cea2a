#include "tnas/cost.hpp"

namespace tnas {

namespace {

std::int64_t sep_kernel_area(OpKind op) {
  switch (op) {
    case OpKind::SepConv3x3: return 9;
    case OpKind::SepConv5x5:
    case OpKind::SepConv5x5Dil6: return 25;  // dilation is parameter-free
    default: return 0;
  }
}

}  // namespace

ParamTerms node_param_terms(NodeKind kind, OpKind op, std::int64_t c_in, std::int64_t c_out) {
  ParamTerms t;
  switch (kind) {
    case NodeKind::Transform1x1:
    case NodeKind::Project1x1:
    case NodeKind::ConcatReduce1x1:
    case NodeKind::Reduce1x1:
      t.conv = c_in * c_out;
      t.norm = 2 * c_out;
      break;
    case NodeKind::Op:
      switch (op) {
        case OpKind::SepConv3x3:
        case OpKind::SepConv5x5:
        case OpKind::SepConv5x5Dil6:
          // depthwise k x k + norm, then pointwise + norm
          t.conv = sep_kernel_area(op) * c_in + c_in * c_out;
          t.norm = 2 * c_in + 2 * c_out;
          break;
        case OpKind::GapConv1x1:
          t.conv = c_in * c_out;
          t.norm = 2 * c_out;
          break;
        case OpKind::MaxPool3x3:
        case OpKind::Skip:
          break;
      }
      break;
    case NodeKind::Classifier3x3:
      t.conv = 9 * c_in * c_out;
      t.bias = c_out;
      break;
    case NodeKind::StemSeed:
    case NodeKind::Aggregate:
    case NodeKind::AlignUp:
    case NodeKind::AlignDown:
    case NodeKind::ConcatHead:
      break;
  }
  return t;
}

std::int64_t count_flops(const GraphIR& g, const SpaceConfig& cfg, int h, int w) {
  (void)cfg;
  const int d = g.max_down_exp();
  const int div = 1 << d;
  if (h <= 0 || w <= 0 || h % div != 0 || w % div != 0)
    throw ResolutionError("input " + std::to_string(h) + "x" + std::to_string(w) +
                          " is not divisible by 2^" + std::to_string(d));
  std::int64_t total = 0;
  for (const auto& n : g.nodes) {
    const auto terms = node_param_terms(n.kind, n.op, input_channels(g, n), n.out.channels);
    const std::int64_t pixels =
        static_cast<std::int64_t>(h >> n.out.down_exp) * static_cast<std::int64_t>(w >> n.out.down_exp);
    total += 2 * terms.conv * pixels;
  }
  return total;
}

CostReport count_params(const GraphIR& g, const SpaceConfig& cfg, int h, int w) {
  CostReport r;
  r.input_height = h;
  r.input_width = w;
  const int div = 1 << g.max_down_exp();
  const bool flops_ok = h > 0 && w > 0 && h % div == 0 && w % div == 0;
  for (const auto& n : g.nodes) {
    NodeCost c;
    c.node = n.id;
    c.label = kind_name(n);
    c.out = n.out;
    c.params = n.param_count;
    if (flops_ok) {
      const auto terms = node_param_terms(n.kind, n.op, input_channels(g, n), n.out.channels);
      c.flops = 2 * terms.conv * static_cast<std::int64_t>(h >> n.out.down_exp) *
                static_cast<std::int64_t>(w >> n.out.down_exp);
    }
    r.params_generated += c.params;
    r.flops += c.flops;
    r.per_node.push_back(std::move(c));
  }
  if (!flops_ok) r.flops = count_flops(g, cfg, h, w);  // throws
  r.params_total = r.params_generated + cfg.stem_param_count;
  r.output_down_exp = g.output_down_exp();
  r.downsample_factor = downsample_factor(g);
  return r;
}

GraphSummary summarize(const GraphIR& g, const SpaceConfig& cfg) {
  const CostReport r = count_params(g, cfg);
  GraphSummary s;
  s.params = r.params_total;
  s.flops = r.flops;
  s.max_down_exp = g.max_down_exp();
  s.output_down_exp = r.output_down_exp;
  s.num_nodes = static_cast<int>(g.nodes.size());
  s.downsample_factor = r.downsample_factor;
  return s;
}

nlohmann::json to_json(const GraphSummary& s) {
  return {{"params", s.params},
          {"flops", s.flops},
          {"max_down_exp", s.max_down_exp},
          {"output_down_exp", s.output_down_exp},
          {"num_nodes", s.num_nodes},
          {"downsample_factor", s.downsample_factor}};
}

GraphSummary summary_from_json(const nlohmann::json& j) {
  GraphSummary s;
  s.params = j.at("params").get<std::int64_t>();
  s.flops = j.at("flops").get<std::int64_t>();
  s.max_down_exp = j.at("max_down_exp").get<int>();
  s.output_down_exp = j.at("output_down_exp").get<int>();
  s.num_nodes = j.at("num_nodes").get<int>();
  s.downsample_factor = j.at("downsample_factor").get<int>();
  return s;
}

nlohmann::json to_json(const CostReport& r) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& c : r.per_node)
    nodes.push_back({{"node", c.node},
                     {"kind", c.label},
                     {"channels", c.out.channels},
                     {"down_exp", c.out.down_exp},
                     {"params", c.params},
                     {"flops", c.flops}});
  return {{"params_total", r.params_total},
          {"params_generated", r.params_generated},
          {"flops", r.flops},
          {"input_hw", {r.input_height, r.input_width}},
          {"output_resolution", "1/" + std::to_string(1 << r.output_down_exp)},
          {"output_down_exp", r.output_down_exp},
          {"downsample_factor", r.downsample_factor},
          {"per_node", std::move(nodes)}};
}

}  // namespace tnas
