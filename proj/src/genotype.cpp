#include "tnas/genotype.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <utility>

namespace tnas {

namespace {

constexpr std::array<std::string_view, kNumOps> kOpNames = {
    "sep3x3", "sep5x5", "gap1x1", "maxpool3x3", "sep5x5d6", "skip"};
constexpr std::array<std::string_view, kNumAggs> kAggNames = {"sum", "concat"};

int line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key,
                            const std::string& where) {
  if (!obj.is_object()) throw ParseError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "." + key, "missing field");
  return *it;
}

int int_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_integer()) throw ParseError(where + "." + key, "expected an integer");
  return v.get<int>();
}

std::string string_field(const nlohmann::json& obj, const char* key,
                         const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

std::string_view to_string(OpKind op) { return kOpNames.at(static_cast<int>(op)); }
std::string_view to_string(AggKind agg) { return kAggNames.at(static_cast<int>(agg)); }

std::optional<OpKind> parse_op(std::string_view name) {
  for (int i = 0; i < kNumOps; ++i)
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  return std::nullopt;
}

std::optional<AggKind> parse_agg(std::string_view name) {
  for (int i = 0; i < kNumAggs; ++i)
    if (kAggNames[i] == name) return static_cast<AggKind>(i);
  return std::nullopt;
}

Template Template::canonical() const {
  Template t = *this;
  if (static_cast<int>(t.op2) < static_cast<int>(t.op1)) std::swap(t.op1, t.op2);
  return t;
}

std::string to_string(const Template& t) {
  std::string s = "[";
  s += to_string(t.op1);
  s += ", ";
  s += to_string(t.op2);
  s += ", ";
  s += to_string(t.agg);
  s += "]";
  return s;
}

std::vector<Violation> check_config(const SpaceConfig& cfg) {
  std::vector<Violation> out;
  auto need = [&](bool cond, const char* msg) {
    if (!cond) out.push_back({Violation::Kind::Config, -1, msg});
  };
  need(cfg.num_blocks >= 1, "num_blocks must be >= 1");
  need(cfg.num_templates >= 1, "num_templates must be >= 1");
  need(cfg.k_max >= 1, "k_max must be >= 1");
  need(cfg.channel_multiplier >= 1, "channel_multiplier must be >= 1");
  need(cfg.base_channels >= 1, "base_channels must be >= 1");
  need(cfg.num_classes >= 1, "num_classes must be >= 1");
  need(cfg.stem_param_count >= 0, "stem_param_count must be >= 0");
  return out;
}

int decision_count(const SpaceConfig& cfg, Encoding encoding) {
  const int n = cfg.num_blocks;
  const int m = cfg.num_templates;
  switch (encoding) {
    case Encoding::Baseline:
      return (2 + 3) * n;
    case Encoding::Template:
      return (2 + 1) * n + 3 * m;
    case Encoding::TemplateWithKs:
      return 3 * m + 4 * n + cfg.stride_blocks();
  }
  return 0;
}

std::vector<Template> template_universe(int num_ops, int num_aggs) {
  if (num_ops < 1 || num_ops > kNumOps || num_aggs < 1 || num_aggs > kNumAggs)
    throw std::invalid_argument("template_universe: vocabulary size out of range");
  std::vector<Template> out;
  out.reserve(static_cast<std::size_t>(num_ops * (num_ops + 1) / 2 * num_aggs));
  for (int a = 0; a < num_ops; ++a)
    for (int b = a; b < num_ops; ++b)
      for (int g = 0; g < num_aggs; ++g)
        out.push_back({static_cast<OpKind>(a), static_cast<OpKind>(b), static_cast<AggKind>(g)});
  return out;
}

int canonical_index(const Template& t) {
  const Template c = t.canonical();
  const int a = static_cast<int>(c.op1);
  const int b = static_cast<int>(c.op2);
  // rows a' < a contribute (kNumOps - a') pairs each
  const int pairs_before = a * kNumOps - a * (a - 1) / 2;
  return (pairs_before + (b - a)) * kNumAggs + static_cast<int>(c.agg);
}

ValidationResult validate(const Genotype& g, const SpaceConfig& cfg) {
  ValidationResult result;
  auto& v = result.violations;
  v = check_config(cfg);
  if (!v.empty()) return result;

  const int m = cfg.num_templates;
  const int n = cfg.num_blocks;
  if (static_cast<int>(g.templates.size()) != m)
    v.push_back({Violation::Kind::Shape, -1,
                 "expected " + std::to_string(m) + " templates, got " +
                     std::to_string(g.templates.size())});
  if (static_cast<int>(g.blocks.size()) != n)
    v.push_back({Violation::Kind::Shape, -1,
                 "expected " + std::to_string(n) + " blocks, got " +
                     std::to_string(g.blocks.size())});
  for (std::size_t t = 0; t < g.templates.size(); ++t) {
    const auto& tp = g.templates[t];
    if (static_cast<int>(tp.op1) >= kNumOps || static_cast<int>(tp.op2) >= kNumOps ||
        static_cast<int>(tp.agg) >= kNumAggs)
      v.push_back({Violation::Kind::Shape, -1,
                   "template " + std::to_string(t) + " has an unknown operation code"});
  }

  const int num_templates = static_cast<int>(g.templates.size());
  for (int j = 0; j < static_cast<int>(g.blocks.size()); ++j) {
    const auto& b = g.blocks[j];
    const int pool = cfg.pool_size_at(j);
    const std::string at = " at block " + std::to_string(j);
    if (b.loc1 < 0 || b.loc1 >= pool)
      v.push_back({Violation::Kind::Loc1OutOfPool, j,
                   "loc1 >= pool size " + std::to_string(pool) + at});
    if (b.loc2 < 0 || b.loc2 >= pool)
      v.push_back({Violation::Kind::Loc2OutOfPool, j,
                   "loc2 >= pool size " + std::to_string(pool) + at});
    if (b.template_id < 0 || b.template_id >= num_templates)
      v.push_back({Violation::Kind::TemplateOutOfRange, j,
                   "template id " + std::to_string(b.template_id) + " out of range [0, " +
                       std::to_string(num_templates) + ")" + at});
    if (b.repeats < 1 || b.repeats > cfg.k_max)
      v.push_back({Violation::Kind::RepeatsOutOfRange, j,
                   "repeats must lie in [1, " + std::to_string(cfg.k_max) + "]" + at});
    if (b.stride != 1 && b.stride != 2)
      v.push_back({Violation::Kind::StrideInvalid, j, "stride must be 1 or 2" + at});
    else if (b.stride == 2 && j >= cfg.stride_blocks())
      v.push_back({Violation::Kind::StrideInSecondHalf, j,
                   "stride must be 1 for block >= " + std::to_string(cfg.stride_blocks()) +
                       at});
  }
  return result;
}

nlohmann::json to_json(const Genotype& g) {
  nlohmann::json templates = nlohmann::json::array();
  for (const auto& t : g.templates)
    templates.push_back({{"op1", to_string(t.op1)},
                         {"op2", to_string(t.op2)},
                         {"agg", to_string(t.agg)}});
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : g.blocks)
    blocks.push_back({{"loc1", b.loc1},
                      {"loc2", b.loc2},
                      {"template", b.template_id},
                      {"repeats", b.repeats},
                      {"stride", b.stride}});
  return {{"templates", std::move(templates)}, {"blocks", std::move(blocks)}};
}

Genotype genotype_from_json(const nlohmann::json& j) {
  Genotype g;
  const auto& templates = field(j, "templates", "genotype");
  if (!templates.is_array()) throw ParseError("genotype.templates", "expected an array");
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const std::string where = "templates[" + std::to_string(i) + "]";
    const auto& t = templates[i];
    Template tp;
    const auto op1 = string_field(t, "op1", where);
    const auto op2 = string_field(t, "op2", where);
    const auto agg = string_field(t, "agg", where);
    auto o1 = parse_op(op1);
    if (!o1) throw ParseError(where + ".op1", "unknown operation '" + op1 + "'");
    auto o2 = parse_op(op2);
    if (!o2) throw ParseError(where + ".op2", "unknown operation '" + op2 + "'");
    auto ag = parse_agg(agg);
    if (!ag) throw ParseError(where + ".agg", "unknown aggregation '" + agg + "'");
    tp.op1 = *o1;
    tp.op2 = *o2;
    tp.agg = *ag;
    g.templates.push_back(tp);
  }
  const auto& blocks = field(j, "blocks", "genotype");
  if (!blocks.is_array()) throw ParseError("genotype.blocks", "expected an array");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string where = "blocks[" + std::to_string(i) + "]";
    const auto& b = blocks[i];
    BlockDecision d;
    d.loc1 = int_field(b, "loc1", where);
    d.loc2 = int_field(b, "loc2", where);
    d.template_id = int_field(b, "template", where);
    d.repeats = int_field(b, "repeats", where);
    d.stride = int_field(b, "stride", where);
    g.blocks.push_back(d);
  }
  return g;
}

std::string serialize(const Genotype& g) { return to_json(g).dump(2) + "\n"; }

Genotype deserialize(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)),
                     e.what());
  }
  return genotype_from_json(j);
}

Genotype deserialize(std::string_view text, const SpaceConfig& cfg) {
  Genotype g = deserialize(text);
  if (static_cast<int>(g.templates.size()) != cfg.num_templates)
    throw ParseError("templates", "expected " + std::to_string(cfg.num_templates) +
                                      " entries, got " + std::to_string(g.templates.size()));
  if (static_cast<int>(g.blocks.size()) != cfg.num_blocks)
    throw ParseError("blocks", "expected " + std::to_string(cfg.num_blocks) +
                                   " entries, got " + std::to_string(g.blocks.size()));
  return g;
}

Genotype load_genotype(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ":" + e.locus(), e.detail());
  }
}

}  // namespace tnas
