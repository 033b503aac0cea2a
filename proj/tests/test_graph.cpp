#include <doctest.h>

#include <map>
#include <random>

#include "support.hpp"
#include "tnas/graph.hpp"

using namespace tnas;

namespace {

SpaceConfig single_block_space() {
  SpaceConfig cfg;
  cfg.num_blocks = 1;
  cfg.num_templates = 1;
  return cfg;
}

Genotype single_block() {
  Genotype g;
  g.templates = {{OpKind::SepConv3x3, OpKind::Skip, AggKind::Sum}};
  g.blocks = {{0, 0, 0, 1, 1}};
  return g;
}

// Blocks 0..2 downsample in a chain starting from the 1/8 stem output.
Genotype chained_strides() {
  Genotype g;
  g.templates = {{OpKind::SepConv3x3, OpKind::SepConv5x5, AggKind::Sum},
                 {OpKind::Skip, OpKind::Skip, AggKind::Concat},
                 {OpKind::GapConv1x1, OpKind::MaxPool3x3, AggKind::Sum}};
  g.blocks = {{1, 1, 0, 1, 2}, {2, 2, 1, 2, 2}, {3, 3, 2, 1, 2}, {0, 4, 0, 1, 1},
              {0, 1, 1, 3, 1}, {5, 6, 2, 1, 1}, {7, 0, 0, 4, 1}};
  return g;
}

std::map<NodeKind, int> kind_histogram(const GraphIR& g) {
  std::map<NodeKind, int> h;
  for (const auto& n : g.nodes) ++h[n.kind];
  return h;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++n;
  return n;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("single-block genotype built by hand") {
  const SpaceConfig cfg = single_block_space();
  const GraphIR g = compile(single_block(), cfg);
  CHECK(g.nodes.size() == 11);

  auto h = kind_histogram(g);
  CHECK(h[NodeKind::StemSeed] == 2);
  CHECK(h[NodeKind::Transform1x1] == 2);
  CHECK(h[NodeKind::Op] == 2);
  CHECK(h[NodeKind::Aggregate] == 1);
  CHECK(h[NodeKind::AlignUp] == 1);
  CHECK(h[NodeKind::ConcatHead] == 1);
  CHECK(h[NodeKind::Reduce1x1] == 1);
  CHECK(h[NodeKind::Classifier3x3] == 1);
  CHECK(h[NodeKind::Project1x1] == 0);

  std::vector<TensorSpec> seeds;
  for (const auto& n : g.nodes)
    if (n.kind == NodeKind::StemSeed) seeds.push_back(n.out);
  CHECK(seeds == std::vector<TensorSpec>{{24, 2}, {32, 3}});
  CHECK(g.usage == std::vector<int>{2, 0, 0});
  CHECK(g.head_inputs == std::vector<int>{1, 2});
  CHECK(g.output_down_exp() == 2);
  CHECK(g.node(g.output).out.channels == 19);
  CHECK(downsample_factor(g) == 1);
  CHECK(testing::graph_violations(g, single_block(), cfg).empty());
}

TEST_CASE("all-skip sum genotype keeps width and resolution") {
  const SpaceConfig cfg;
  Genotype g;
  g.templates.assign(3, {OpKind::Skip, OpKind::Skip, AggKind::Sum});
  g.blocks = {{0, 1, 0, 1, 1}, {2, 0, 1, 2, 1}, {1, 1, 2, 1, 1}, {3, 4, 0, 3, 1},
              {0, 0, 1, 1, 1}, {6, 2, 2, 1, 1}, {5, 7, 0, 4, 1}};
  const GraphIR ir = compile(g, cfg);
  REQUIRE(testing::graph_violations(ir, g, cfg).empty());

  // first half aligns down to the coarser input, second half up to the finer one
  const std::vector<int> expected_exp = {2, 3, 3, 3, 3, 3, 2, 2, 2};
  for (std::size_t i = 0; i < ir.pool.size(); ++i) {
    CHECK(ir.node(ir.pool[i]).out.channels == 48);
    CHECK(ir.node(ir.pool[i]).out.down_exp == expected_exp[i]);
  }
  CHECK(ir.output_down_exp() == 2);
  for (const auto& n : ir.nodes) CHECK(n.kind != NodeKind::Project1x1);
}

TEST_CASE("three chained strided blocks reach 1/64") {
  const SpaceConfig cfg;
  const Genotype g = chained_strides();
  const GraphIR ir = compile(g, cfg);
  CHECK(ir.max_down_exp() == 6);
  CHECK(ir.strided_blocks == 3);
  CHECK(downsample_factor(ir) == 8);
  CHECK(ir.node(ir.pool[4]).out == TensorSpec{384, 6});
  CHECK(testing::graph_violations(ir, g, cfg).empty());
}

TEST_CASE("downsample factor counts strided blocks") {
  const SpaceConfig cfg;
  Genotype g = chained_strides();
  for (auto& b : g.blocks) b.stride = 1;
  CHECK(downsample_factor(compile(g, cfg)) == 1);
  g.blocks[0].stride = 2;
  g.blocks[2].stride = 2;
  CHECK(downsample_factor(compile(g, cfg)) == 4);
}

TEST_CASE("channel fix-up in front of skip and max pooling") {
  SpaceConfig cfg = single_block_space();
  Genotype g;
  g.templates = {{OpKind::Skip, OpKind::MaxPool3x3, AggKind::Sum}};
  g.blocks = {{0, 1, 0, 1, 1}};
  // both inputs already carry 48 channels
  CHECK(kind_histogram(compile(g, cfg))[NodeKind::Project1x1] == 0);

  cfg.num_blocks = 2;
  g.blocks = {{0, 1, 0, 1, 2}, {2, 0, 0, 1, 1}};
  const GraphIR ir = compile(g, cfg);
  // block 0 widens both inputs to 96; block 1 mixes 96 and 48 channels, so
  // only its max-pool operand needs projecting
  std::map<int, int> projections;
  for (const auto& n : ir.nodes) {
    if (n.kind != NodeKind::Project1x1) continue;
    ++projections[n.block];
    CHECK(n.out.channels == 96);
    CHECK(ir.node(n.inputs[0]).out.channels == 48);
  }
  CHECK(projections[0] == 2);
  CHECK(projections[1] == 1);
  CHECK(testing::graph_violations(ir, g, cfg).empty());
}

TEST_CASE("concatenation doubles then reduces") {
  SpaceConfig cfg = single_block_space();
  Genotype g;
  g.templates = {{OpKind::SepConv3x3, OpKind::SepConv3x3, AggKind::Concat}};
  g.blocks = {{0, 1, 0, 2, 1}};
  const GraphIR ir = compile(g, cfg);
  int reduces = 0;
  for (const auto& n : ir.nodes) {
    if (n.kind == NodeKind::Aggregate) CHECK(n.out.channels == 96);
    if (n.kind == NodeKind::ConcatReduce1x1) {
      ++reduces;
      CHECK(n.out.channels == 48);
    }
  }
  CHECK(reduces == 2);
  CHECK(ir.node(ir.pool[2]).out.channels == 48);

  cfg.concat_reduce = false;
  const GraphIR wide = compile(g, cfg);
  CHECK(kind_histogram(wide)[NodeKind::ConcatReduce1x1] == 0);
  CHECK(wide.node(wide.pool[2]).out.channels == 96);
}

TEST_CASE("repeats chain the previous output with the second input") {
  SpaceConfig cfg = single_block_space();
  Genotype g;
  g.templates = {{OpKind::SepConv3x3, OpKind::SepConv5x5, AggKind::Sum}};
  g.blocks = {{0, 1, 0, 3, 1}};
  const GraphIR ir = compile(g, cfg);
  std::vector<const Node*> aggs;
  for (const auto& n : ir.nodes)
    if (n.kind == NodeKind::Aggregate) aggs.push_back(&n);
  REQUIRE(aggs.size() == 3);

  for (std::size_t r = 1; r < aggs.size(); ++r) {
    // the first op of repeat r reads the previous aggregate
    const Node* first_op = nullptr;
    for (const auto& n : ir.nodes)
      if (n.kind == NodeKind::Op && n.instance == static_cast<int>(r) &&
          n.op == OpKind::SepConv3x3)
        first_op = &n;
    REQUIRE(first_op != nullptr);
    CHECK(first_op->inputs[0] == aggs[r - 1]->id);
  }

  const std::string dot = export_dot(ir);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(count_of(dot, "subgraph cluster_block0_rep") == 3);
}

TEST_CASE("dot export labels every node") {
  const GraphIR ir = compile(single_block(), single_block_space());
  const std::string dot = export_dot(ir);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(count_of(dot, "[label=") == 11);
  CHECK(dot.find("Op(sep3x3)") != std::string::npos);
  CHECK(dot.find("@ 1/8") != std::string::npos);
}

TEST_CASE("invalid genotypes are rejected") {
  Genotype g = single_block();
  g.blocks[0].loc2 = 2;
  CHECK_THROWS_AS(compile(g, single_block_space()), ValidationError);
}

TEST_CASE("invariants over random genotypes") {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    SpaceConfig cfg;
    if (i % 4 == 1) cfg.num_blocks = 1 + static_cast<int>(rng() % 10);
    if (i % 4 == 2) cfg.concat_reduce = false;
    if (i % 4 == 3) cfg.channel_multiplier = 3;
    const Genotype g = testing::random_genotype(rng, cfg);
    const GraphIR ir = compile(g, cfg);
    const auto violations = testing::graph_violations(ir, g, cfg);
    INFO(serialize(g));
    REQUIRE(violations.empty());

    // pure function of its inputs
    const GraphIR again = compile(g, cfg);
    REQUIRE(again.nodes.size() == ir.nodes.size());
    for (std::size_t n = 0; n < ir.nodes.size(); ++n) {
      CHECK(again.nodes[n].kind == ir.nodes[n].kind);
      CHECK(again.nodes[n].inputs == ir.nodes[n].inputs);
      CHECK(again.nodes[n].out == ir.nodes[n].out);
    }
    ++checked;
  }
  CHECK(checked == 1000);
}

}  // TEST_SUITE
