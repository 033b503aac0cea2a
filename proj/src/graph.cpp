#include "tnas/graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tnas/cost.hpp"

namespace tnas {

namespace {

constexpr int kStemQuarterChannels = 24;
constexpr int kStemEighthChannels = 32;

class Builder {
 public:
  explicit Builder(GraphIR& g) : g_(g) {}

  int add(NodeKind kind, std::vector<int> inputs, TensorSpec out, int block = -1,
          int instance = -1) {
    Node n;
    n.id = static_cast<int>(g_.nodes.size());
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.out = out;
    n.block = block;
    n.instance = instance;
    return push(std::move(n));
  }

  int add_op(OpKind op, int input, int channels, int stride, int block, int instance) {
    const TensorSpec in = spec(input);
    if ((op == OpKind::Skip || op == OpKind::MaxPool3x3) && in.channels != channels)
      input = add(NodeKind::Project1x1, {input}, {channels, in.down_exp}, block, instance);
    Node n;
    n.id = static_cast<int>(g_.nodes.size());
    n.kind = NodeKind::Op;
    n.op = op;
    n.inputs = {input};
    n.out = {channels, in.down_exp + (stride == 2 ? 1 : 0)};
    n.stride = stride;
    n.block = block;
    n.instance = instance;
    return push(std::move(n));
  }

  int align(int id, int down_exp, int block, int instance) {
    const TensorSpec in = spec(id);
    if (in.down_exp == down_exp) return id;
    const NodeKind kind = down_exp < in.down_exp ? NodeKind::AlignUp : NodeKind::AlignDown;
    return add(kind, {id}, {in.channels, down_exp}, block, instance);
  }

  TensorSpec spec(int id) const { return g_.node(id).out; }

 private:
  int push(Node n) {
    n.param_count = node_param_terms(n.kind, n.op, input_channels(g_, n), n.out.channels).total();
    g_.nodes.push_back(std::move(n));
    return g_.nodes.back().id;
  }

  GraphIR& g_;
};

void check_invariants(const GraphIR& g, const SpaceConfig& cfg) {
  for (const auto& n : g.nodes) {
    if (n.kind != NodeKind::StemSeed && n.inputs.empty())
      throw InternalError("node " + std::to_string(n.id) + " has no inputs");
    for (int in : n.inputs)
      if (in < 0 || in >= n.id)
        throw InternalError("node " + std::to_string(n.id) + " breaks topological order");
    if (n.out.channels <= 0) throw InternalError("node " + std::to_string(n.id) + " has no channels");
    if (n.kind == NodeKind::Aggregate) {
      if (n.inputs.size() != 2 || g.node(n.inputs[0]).out != g.node(n.inputs[1]).out)
        throw InternalError("aggregate " + std::to_string(n.id) + " has mismatched operands");
    }
    if (n.stride == 2 && (n.kind != NodeKind::Op || n.instance != 0))
      throw InternalError("stride 2 outside a first instantiation at node " +
                          std::to_string(n.id));
  }
  if (static_cast<int>(g.pool.size()) != 2 + cfg.num_blocks)
    throw InternalError("pool size mismatch");
  if (g.usage.back() != 0) throw InternalError("last block output was consumed");
}

}  // namespace

int GraphIR::max_down_exp() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.out.down_exp);
  return d;
}

std::string kind_name(const Node& n) {
  switch (n.kind) {
    case NodeKind::StemSeed: return "StemSeed";
    case NodeKind::Transform1x1: return "Transform1x1";
    case NodeKind::Project1x1: return "Project1x1";
    case NodeKind::Op: return "Op(" + std::string(to_string(n.op)) + ")";
    case NodeKind::Aggregate: return "Aggregate(" + std::string(to_string(n.agg)) + ")";
    case NodeKind::ConcatReduce1x1: return "ConcatReduce1x1";
    case NodeKind::AlignUp: return "AlignUp";
    case NodeKind::AlignDown: return "AlignDown";
    case NodeKind::ConcatHead: return "ConcatHead";
    case NodeKind::Reduce1x1: return "Reduce1x1";
    case NodeKind::Classifier3x3: return "Classifier3x3";
  }
  return "?";
}

int input_channels(const GraphIR& g, const Node& n) {
  if (n.inputs.empty()) return 0;
  if (n.kind == NodeKind::ConcatHead || n.kind == NodeKind::Aggregate) {
    int c = 0;
    for (int in : n.inputs) c += g.node(in).out.channels;
    return c;
  }
  return g.node(n.inputs.front()).out.channels;
}

GraphIR compile(const Genotype& genotype, const SpaceConfig& cfg) {
  if (auto vr = validate(genotype, cfg); !vr.ok()) throw ValidationError(vr.violations);

  GraphIR g;
  Builder b(g);

  const int base = cfg.base_channels;
  const int s4 = b.add(NodeKind::StemSeed, {}, {kStemQuarterChannels, 2});
  const int t4 = b.add(NodeKind::Transform1x1, {s4}, {base, 2});
  const int s8 = b.add(NodeKind::StemSeed, {}, {kStemEighthChannels, 3});
  const int t8 = b.add(NodeKind::Transform1x1, {s8}, {base, 3});
  g.pool = {t4, t8};
  g.usage = {0, 0};

  for (int j = 0; j < cfg.num_blocks; ++j) {
    const BlockDecision& blk = genotype.blocks[j];
    const Template& tpl = genotype.templates[blk.template_id];
    const bool first_half = j < cfg.stride_blocks();
    ++g.usage[blk.loc1];
    ++g.usage[blk.loc2];
    if (blk.stride == 2) ++g.strided_blocks;

    const int second = g.pool[blk.loc2];
    int first = g.pool[blk.loc1];
    // one width for every instantiation of the block
    int channels = std::max(b.spec(first).channels, b.spec(second).channels);
    if (blk.stride == 2) channels *= cfg.channel_multiplier;
    for (int r = 0; r < blk.repeats; ++r) {
      const int stride = r == 0 ? blk.stride : 1;

      const int o1 = b.add_op(tpl.op1, first, channels, stride, j, r);
      const int o2 = b.add_op(tpl.op2, second, channels, stride, j, r);
      const int d1 = b.spec(o1).down_exp;
      const int d2 = b.spec(o2).down_exp;
      const int target = first_half ? std::max(d1, d2) : std::min(d1, d2);
      const int a1 = b.align(o1, target, j, r);
      const int a2 = b.align(o2, target, j, r);

      const int agg_channels = tpl.agg == AggKind::Concat ? 2 * channels : channels;
      int out = b.add(NodeKind::Aggregate, {a1, a2}, {agg_channels, target}, j, r);
      g.nodes[out].agg = tpl.agg;
      if (tpl.agg == AggKind::Concat && cfg.concat_reduce)
        out = b.add(NodeKind::ConcatReduce1x1, {out}, {channels, target}, j, r);
      first = out;
    }
    g.pool.push_back(first);
    g.usage.push_back(0);
  }

  int head_exp = -1;
  for (int i = 0; i < static_cast<int>(g.pool.size()); ++i) {
    if (g.usage[i] != 0) continue;
    g.head_inputs.push_back(i);
    const int d = b.spec(g.pool[i]).down_exp;
    head_exp = head_exp < 0 ? d : std::min(head_exp, d);
  }
  std::vector<int> aligned;
  int head_channels = 0;
  for (int i : g.head_inputs) {
    aligned.push_back(b.align(g.pool[i], head_exp, -1, -1));
    head_channels += b.spec(g.pool[i]).channels;
  }
  const int cat = b.add(NodeKind::ConcatHead, aligned, {head_channels, head_exp});
  const int red = b.add(NodeKind::Reduce1x1, {cat}, {base, head_exp});
  g.output = b.add(NodeKind::Classifier3x3, {red}, {cfg.num_classes, head_exp});

  check_invariants(g, cfg);
  return g;
}

int downsample_factor(const GraphIR& g) { return 1 << g.strided_blocks; }

std::string export_dot(const GraphIR& g) {
  std::ostringstream os;
  os << "digraph tnas {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n";

  auto label = [&](const Node& n) {
    std::ostringstream l;
    l << "n" << n.id << " [label=\"" << kind_name(n) << "\\n" << n.out.channels << "ch @ 1/"
      << (1 << n.out.down_exp);
    if (n.stride == 2) l << " s2";
    l << "\"];";
    return l.str();
  };

  // block -> instance -> node ids
  std::map<int, std::map<int, std::vector<int>>> clusters;
  for (const auto& n : g.nodes) {
    if (n.block < 0) {
      os << "  " << label(n) << "\n";
    } else {
      clusters[n.block][n.instance].push_back(n.id);
    }
  }
  for (const auto& [block, instances] : clusters) {
    os << "  subgraph cluster_block" << block << " {\n    label=\"block " << block << "\";\n";
    for (const auto& [instance, ids] : instances) {
      os << "    subgraph cluster_block" << block << "_rep" << instance << " {\n"
         << "      label=\"repeat " << instance << "\";\n";
      for (int id : ids) os << "      " << label(g.node(id)) << "\n";
      os << "    }\n";
    }
    os << "  }\n";
  }
  for (const auto& n : g.nodes)
    for (int in : n.inputs) os << "  n" << in << " -> n" << n.id << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace tnas
