#ifndef TNAS_GRAPH_HPP_
#define TNAS_GRAPH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tnas/genotype.hpp"

namespace tnas {

// Spatial size is input_size / 2^down_exp.
struct TensorSpec {
  int channels = 0;
  int down_exp = 0;
  bool operator==(const TensorSpec&) const = default;
};

enum class NodeKind {
  StemSeed,
  Transform1x1,     // stem output -> base_channels
  Project1x1,       // channel fix-up in front of Skip / MaxPool
  Op,
  Aggregate,
  ConcatReduce1x1,  // 2C -> C after a concatenating aggregate
  AlignUp,
  AlignDown,
  ConcatHead,
  Reduce1x1,
  Classifier3x3,
};

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::StemSeed;
  OpKind op = OpKind::Skip;    // meaningful for kind == Op
  AggKind agg = AggKind::Sum;  // meaningful for kind == Aggregate
  std::vector<int> inputs;
  TensorSpec out;
  int stride = 1;
  std::int64_t param_count = 0;
  int block = -1;     // owning block, -1 for stem and head
  int instance = -1;  // template instantiation within the block (0..k-1)
};

struct GraphIR {
  std::vector<Node> nodes;   // topological order, nodes[i].id == i
  std::vector<int> pool;     // node ids, 2 + N entries
  std::vector<int> usage;    // times each pool entry was selected
  std::vector<int> head_inputs;  // pool indices consumed by the head
  int output = -1;
  int strided_blocks = 0;

  const Node& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
  int max_down_exp() const;
  int output_down_exp() const { return node(output).out.down_exp; }
};

std::string kind_name(const Node& node);

// Channels entering a single-input node (0 for StemSeed).
int input_channels(const GraphIR& graph, const Node& node);

// Throws ValidationError for an invalid genotype and InternalError if the
// built graph breaks one of its structural invariants.
GraphIR compile(const Genotype& genotype, const SpaceConfig& cfg);

// 2^(number of stride-2 blocks).
int downsample_factor(const GraphIR& graph);

std::string export_dot(const GraphIR& graph);

}  // namespace tnas

#endif  // TNAS_GRAPH_HPP_
