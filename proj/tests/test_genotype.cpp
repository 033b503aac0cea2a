#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "support.hpp"
#include "tnas/genotype.hpp"

using namespace tnas;

namespace {

Genotype single_block() {
  Genotype g;
  g.templates = {{OpKind::SepConv3x3, OpKind::Skip, AggKind::Sum}};
  g.blocks = {{0, 0, 0, 1, 1}};
  return g;
}

bool has_kind(const ValidationResult& r, Violation::Kind kind, int block) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.kind == kind && v.block == block; });
}

}  // namespace

TEST_SUITE("genotype") {

TEST_CASE("op and aggregation names") {
  for (int i = 0; i < kNumOps; ++i) {
    const auto op = static_cast<OpKind>(i);
    CHECK(parse_op(to_string(op)) == op);
  }
  CHECK(to_string(OpKind::SepConv5x5Dil6) == "sep5x5d6");
  CHECK(parse_agg("concat") == AggKind::Concat);
  CHECK_FALSE(parse_op("conv7x7").has_value());
  CHECK_FALSE(parse_agg("max").has_value());
}

TEST_CASE("template universe sizes match brute-force enumeration") {
  CHECK(template_universe(6, 2).size() == 42);
  CHECK(template_universe(1, 1).size() == 1);
  CHECK(template_universe(3, 2).size() == 12);

  for (int ops = 1; ops <= 6; ++ops) {
    for (int aggs = 1; aggs <= 2; ++aggs) {
      std::set<std::tuple<int, int, int>> seen;
      for (int a = 0; a < ops; ++a)
        for (int b = 0; b < ops; ++b)
          for (int g = 0; g < aggs; ++g) seen.insert({std::min(a, b), std::max(a, b), g});
      CHECK(template_universe(ops, aggs).size() == seen.size());
    }
  }
  CHECK_THROWS_AS(template_universe(0, 2), std::invalid_argument);
}

TEST_CASE("canonical form is idempotent and indexes the universe") {
  const auto universe = template_universe();
  for (std::size_t i = 0; i < universe.size(); ++i) {
    CHECK(universe[i].canonical() == universe[i]);
    CHECK(canonical_index(universe[i]) == static_cast<int>(i));
  }
  const Template t{OpKind::Skip, OpKind::SepConv3x3, AggKind::Concat};
  CHECK(t.canonical() == Template{OpKind::SepConv3x3, OpKind::Skip, AggKind::Concat});
  CHECK(t.canonical().canonical() == t.canonical());
  CHECK(canonical_index(t) == canonical_index(t.canonical()));
}

TEST_CASE("decision counts") {
  SpaceConfig cfg;
  CHECK(decision_count(cfg, Encoding::Baseline) == 35);
  CHECK(decision_count(cfg, Encoding::Template) == 30);
  CHECK(decision_count(cfg, Encoding::TemplateWithKs) == 40);

  for (int n = 1; n <= 12; ++n) {
    for (int m = 1; m <= 12; ++m) {
      cfg.num_blocks = n;
      cfg.num_templates = m;
      const bool fewer = decision_count(cfg, Encoding::Template) <
                         decision_count(cfg, Encoding::Baseline);
      CHECK(fewer == (3 * m < 2 * n));
    }
  }
}

TEST_CASE("validation reports located violations") {
  const SpaceConfig cfg;
  std::mt19937_64 rng(11);
  Genotype g = testing::random_genotype(rng, cfg);
  REQUIRE(validate(g, cfg).ok());

  SUBCASE("loc1 outside the pool at block 0") {
    g.blocks[0].loc1 = 2;
    const auto r = validate(g, cfg);
    REQUIRE(has_kind(r, Violation::Kind::Loc1OutOfPool, 0));
    CHECK(r.violations.front().message.find("loc1 >= pool size 2 at block 0") !=
          std::string::npos);
  }
  SUBCASE("stride in the second half") {
    g.blocks[5].stride = 2;
    const auto r = validate(g, cfg);
    REQUIRE(has_kind(r, Violation::Kind::StrideInSecondHalf, 5));
    CHECK(r.violations.front().message.find("stride must be 1 for block >= 3") !=
          std::string::npos);
  }
  SUBCASE("other fields") {
    g.blocks[1].loc2 = -1;
    g.blocks[2].template_id = 3;
    g.blocks[3].repeats = 5;
    g.blocks[0].stride = 3;
    const auto r = validate(g, cfg);
    CHECK(r.violations.size() == 4);
    CHECK(has_kind(r, Violation::Kind::Loc2OutOfPool, 1));
    CHECK(has_kind(r, Violation::Kind::TemplateOutOfRange, 2));
    CHECK(has_kind(r, Violation::Kind::RepeatsOutOfRange, 3));
    CHECK(has_kind(r, Violation::Kind::StrideInvalid, 0));
  }
  SUBCASE("shape") {
    g.blocks.pop_back();
    CHECK(has_kind(validate(g, cfg), Violation::Kind::Shape, -1));
  }
  SUBCASE("self pair allowed") {
    g.blocks[4].loc1 = g.blocks[4].loc2 = 3;
    CHECK(validate(g, cfg).ok());
  }
}

TEST_CASE("invalid space configuration") {
  SpaceConfig cfg;
  cfg.num_blocks = 0;
  CHECK_FALSE(check_config(cfg).empty());
  cfg = {};
  cfg.channel_multiplier = 0;
  CHECK_FALSE(check_config(cfg).empty());
  CHECK(check_config(SpaceConfig{}).empty());
}

TEST_CASE("serialization roundtrip over random genotypes") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    SpaceConfig cfg;
    cfg.num_blocks = 1 + static_cast<int>(rng() % 9);
    cfg.num_templates = 1 + static_cast<int>(rng() % 4);
    const Genotype g = testing::random_genotype(rng, cfg);
    REQUIRE(validate(g, cfg).ok());
    const Genotype back = deserialize(serialize(g), cfg);
    REQUIRE(back == g);
  }
}

TEST_CASE("documented file format") {
  const char* text = R"({
    "templates": [{"op1": "sep3x3", "op2": "skip", "agg": "concat"}],
    "blocks": [{"loc1": 0, "loc2": 1, "template": 0, "repeats": 3, "stride": 2}]
  })";
  const Genotype g = deserialize(text);
  REQUIRE(g.templates.size() == 1);
  CHECK(g.templates[0] == Template{OpKind::SepConv3x3, OpKind::Skip, AggKind::Concat});
  CHECK(g.blocks[0] == BlockDecision{0, 1, 0, 3, 2});
  CHECK(to_json(single_block())["templates"][0]["op1"] == "sep3x3");
}

TEST_CASE("parse errors carry a locus") {
  SUBCASE("unknown op") {
    const char* text = R"({"templates": [{"op1": "conv7", "op2": "skip", "agg": "sum"}],
                          "blocks": []})";
    try {
      deserialize(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.locus().find("templates[0].op1") != std::string::npos);
    }
  }
  SUBCASE("malformed text reports a line") {
    try {
      deserialize("{\n\"templates\": [\n,]}");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.locus().find("line 3") != std::string::npos);
    }
  }
  SUBCASE("missing field") {
    CHECK_THROWS_AS(deserialize(R"({"templates": []})"), ParseError);
  }
  SUBCASE("empty block list against N = 7") {
    const char* text = R"({"templates": [{"op1": "skip", "op2": "skip", "agg": "sum"},
                                         {"op1": "skip", "op2": "skip", "agg": "sum"},
                                         {"op1": "skip", "op2": "skip", "agg": "sum"}],
                          "blocks": []})";
    CHECK_NOTHROW(deserialize(text));
    CHECK_THROWS_AS(deserialize(text, SpaceConfig{}), ParseError);
  }
}

TEST_CASE("template index out of range is a validation violation on load") {
  SpaceConfig cfg;
  std::mt19937_64 rng(5);
  Genotype g = testing::random_genotype(rng, cfg);
  g.blocks[2].template_id = 5;
  const Genotype loaded = deserialize(serialize(g), cfg);
  CHECK(has_kind(validate(loaded, cfg), Violation::Kind::TemplateOutOfRange, 2));
}

TEST_CASE("load_genotype reports the file") {
  CHECK_THROWS_AS(load_genotype("/nonexistent/genotype.json"), ParseError);
}

}  // TEST_SUITE
