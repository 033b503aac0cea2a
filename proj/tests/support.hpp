#ifndef TNAS_TESTS_SUPPORT_HPP_
#define TNAS_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tnas/cost.hpp"
#include "tnas/genotype.hpp"
#include "tnas/graph.hpp"

namespace tnas::testing {

// Uniform draw over the legal genotype domain, independent of the controller.
inline Genotype random_genotype(std::mt19937_64& rng, const SpaceConfig& cfg = {}) {
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  Genotype g;
  for (int t = 0; t < cfg.num_templates; ++t) {
    g.templates.push_back({static_cast<OpKind>(pick(kNumOps)), static_cast<OpKind>(pick(kNumOps)),
                           static_cast<AggKind>(pick(kNumAggs))});
  }
  for (int j = 0; j < cfg.num_blocks; ++j) {
    BlockDecision b;
    b.loc1 = pick(cfg.pool_size_at(j));
    b.loc2 = pick(cfg.pool_size_at(j));
    b.template_id = pick(cfg.num_templates);
    b.repeats = 1 + pick(cfg.k_max);
    b.stride = j < cfg.stride_blocks() ? 1 + pick(2) : 1;
    g.blocks.push_back(b);
  }
  return g;
}

// Parameter count re-derived from node kinds and the channels of neighbouring
// nodes only. Does not read Node::param_count or call the cost module.
inline std::int64_t oracle_params(const GraphIR& graph) {
  std::int64_t total = 0;
  for (const Node& n : graph.nodes) {
    std::int64_t cin = 0;
    if (n.kind == NodeKind::ConcatHead || n.kind == NodeKind::Aggregate) {
      for (int i : n.inputs) cin += graph.node(i).out.channels;
    } else if (!n.inputs.empty()) {
      cin = graph.node(n.inputs.front()).out.channels;
    }
    const std::int64_t cout = n.out.channels;
    std::int64_t term = 0;
    switch (n.kind) {
      case NodeKind::Transform1x1:
      case NodeKind::Project1x1:
      case NodeKind::ConcatReduce1x1:
      case NodeKind::Reduce1x1:
        term = cin * cout;
        term += 2 * cout;
        break;
      case NodeKind::Classifier3x3:
        term = 3 * 3 * cin * cout + cout;
        break;
      case NodeKind::Op: {
        int k = 0;
        if (n.op == OpKind::SepConv3x3) k = 3;
        if (n.op == OpKind::SepConv5x5 || n.op == OpKind::SepConv5x5Dil6) k = 5;
        if (k > 0) {
          term = k * k * cin;
          term += 2 * cin;
          term += cin * cout;
          term += 2 * cout;
        } else if (n.op == OpKind::GapConv1x1) {
          term = cin * cout + 2 * cout;
        }
        break;
      }
      default:
        break;
    }
    total += term;
  }
  return total;
}

// Structural rules a compiled graph must satisfy, re-derived from the genotype.
// Returns one message per broken rule.
inline std::vector<std::string> graph_violations(const GraphIR& g, const Genotype& genotype,
                                                 const SpaceConfig& cfg) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& what) { out.push_back(what); };
  const int n_blocks = cfg.num_blocks;

  for (const Node& n : g.nodes) {
    if (n.kind != NodeKind::StemSeed && n.inputs.empty())
      fail("node " + std::to_string(n.id) + " has no inputs");
    for (int i : n.inputs)
      if (i >= n.id) fail("node " + std::to_string(n.id) + " breaks topological order");
    if (n.out.channels <= 0) fail("node " + std::to_string(n.id) + " has no channels");
  }

  if (static_cast<int>(g.pool.size()) != 2 + n_blocks) fail("pool size");
  if (g.node(g.pool[0]).out.down_exp != 2 || g.node(g.pool[1]).out.down_exp != 3)
    fail("stem resolutions");

  std::vector<int> usage(static_cast<std::size_t>(2 + n_blocks), 0);
  for (const auto& b : genotype.blocks) {
    ++usage[static_cast<std::size_t>(b.loc1)];
    ++usage[static_cast<std::size_t>(b.loc2)];
  }
  if (usage.back() != 0) fail("last block output was used");
  std::vector<int> unused;
  for (std::size_t i = 0; i < usage.size(); ++i)
    if (usage[i] == 0) unused.push_back(static_cast<int>(i));
  std::vector<int> head = g.head_inputs;
  std::sort(head.begin(), head.end());
  if (head != unused) fail("head inputs differ from zero-usage pool entries");

  for (int j = 0; j < n_blocks; ++j) {
    const auto& b = genotype.blocks[static_cast<std::size_t>(j)];
    const TensorSpec in1 = g.node(g.pool[static_cast<std::size_t>(b.loc1)]).out;
    const TensorSpec in2 = g.node(g.pool[static_cast<std::size_t>(b.loc2)]).out;
    const int mult = b.stride == 2 ? cfg.channel_multiplier : 1;
    const int c = mult * std::max(in1.channels, in2.channels);
    const std::string at = " in block " + std::to_string(j);

    int ops = 0, aggs = 0;
    std::set<int> instances;
    for (const Node& n : g.nodes) {
      if (n.block != j) continue;
      if (n.kind == NodeKind::Op) {
        ++ops;
        instances.insert(n.instance);
        if (n.out.channels != c) fail("channel rule" + at);
        const int want_stride = (b.stride == 2 && n.instance == 0) ? 2 : 1;
        if (n.stride != want_stride) fail("stride placement" + at);
      } else if (n.stride != 1) {
        fail("stride on a non-op node" + at);
      }
      if (n.kind != NodeKind::Aggregate) continue;
      ++aggs;
      if (n.inputs.size() != 2) {
        fail("aggregate arity" + at);
        continue;
      }
      const TensorSpec a = g.node(n.inputs[0]).out;
      const TensorSpec bb = g.node(n.inputs[1]).out;
      if (!(a == bb)) fail("aggregate operands differ" + at);
      auto source_exp = [&](int id) {
        const Node& s = g.node(id);
        if (s.kind == NodeKind::AlignUp || s.kind == NodeKind::AlignDown)
          return g.node(s.inputs[0]).out.down_exp;
        return s.out.down_exp;
      };
      const int e1 = source_exp(n.inputs[0]);
      const int e2 = source_exp(n.inputs[1]);
      const int want = j < cfg.stride_blocks() ? std::max(e1, e2) : std::min(e1, e2);
      if (n.out.down_exp != want) fail("alignment rule" + at);
    }
    if (aggs != b.repeats) fail("aggregate count" + at);
    if (ops != 2 * b.repeats) fail("op count" + at);
    if (static_cast<int>(instances.size()) != b.repeats) fail("parameter sets" + at);
  }

  const Node& cls = g.node(g.output);
  if (cls.kind != NodeKind::Classifier3x3 || cls.out.channels != cfg.num_classes)
    fail("classifier");
  int head_exp = 1 << 20;
  for (int i : unused)
    head_exp = std::min(head_exp, g.node(g.pool[static_cast<std::size_t>(i)]).out.down_exp);
  if (cls.out.down_exp != head_exp) fail("head resolution");
  return out;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tnas_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace tnas::testing

#endif  // TNAS_TESTS_SUPPORT_HPP_
