#ifndef TNAS_GENOTYPE_HPP_
#define TNAS_GENOTYPE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tnas/error.hpp"

namespace tnas {

// Operation vocabulary. Integer codes are stable and used for serialization
// of controller decisions.
enum class OpKind : std::uint8_t {
  SepConv3x3 = 0,
  SepConv5x5 = 1,
  GapConv1x1 = 2,
  MaxPool3x3 = 3,
  SepConv5x5Dil6 = 4,
  Skip = 5,
};
inline constexpr int kNumOps = 6;

enum class AggKind : std::uint8_t { Sum = 0, Concat = 1 };
inline constexpr int kNumAggs = 2;

std::string_view to_string(OpKind op);
std::string_view to_string(AggKind agg);
std::optional<OpKind> parse_op(std::string_view name);
std::optional<AggKind> parse_agg(std::string_view name);

struct Template {
  OpKind op1 = OpKind::Skip;
  OpKind op2 = OpKind::Skip;
  AggKind agg = AggKind::Sum;

  // (op1, op2) sorted by code; used for uniqueness only, never for graph
  // construction since op1/op2 bind to loc1/loc2.
  Template canonical() const;
  bool operator==(const Template&) const = default;
};

std::string to_string(const Template& t);

struct BlockDecision {
  int loc1 = 0;
  int loc2 = 0;
  int template_id = 0;
  int repeats = 1;
  int stride = 1;
  bool operator==(const BlockDecision&) const = default;
};

struct Genotype {
  std::vector<Template> templates;
  std::vector<BlockDecision> blocks;
  bool operator==(const Genotype&) const = default;
};

struct SpaceConfig {
  int num_blocks = 7;
  int num_templates = 3;
  int k_max = 4;
  int base_channels = 48;
  int channel_multiplier = 2;
  int num_classes = 19;
  std::int64_t stem_param_count = 60000;
  // Reduce concatenated outputs back to the template width with a 1x1 conv.
  bool concat_reduce = true;

  // Blocks [0, stride_blocks()) may downsample; the rest are fixed at stride 1.
  int stride_blocks() const { return num_blocks / 2; }
  // Number of selectable pool entries when block `j` is built.
  int pool_size_at(int j) const { return 2 + j; }
  bool operator==(const SpaceConfig&) const = default;
};

// Returns the list of config-level violations (empty when usable).
std::vector<Violation> check_config(const SpaceConfig& cfg);

enum class Encoding { Baseline, Template, TemplateWithKs };

// Length of the decision string describing one architecture.
int decision_count(const SpaceConfig& cfg, Encoding encoding);

// All templates distinct under op-order symmetry, ordered by (op1, op2, agg)
// with op1 <= op2. Length is C(num_ops + 1, 2) * num_aggs.
std::vector<Template> template_universe(int num_ops = kNumOps, int num_aggs = kNumAggs);

// Position of t's canonical form inside template_universe().
int canonical_index(const Template& t);

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate(const Genotype& genotype, const SpaceConfig& cfg);

nlohmann::json to_json(const Genotype& genotype);
Genotype genotype_from_json(const nlohmann::json& j);

std::string serialize(const Genotype& genotype);
// Parses without reference to a configuration; throws ParseError.
Genotype deserialize(std::string_view text);
// Parses and checks list lengths against cfg (M templates, N blocks).
Genotype deserialize(std::string_view text, const SpaceConfig& cfg);

Genotype load_genotype(const std::string& path);

}  // namespace tnas

#endif  // TNAS_GENOTYPE_HPP_
