#include "tnas/policy.hpp"

#include <stdexcept>

namespace tnas {

namespace {

Step step(Family f, int valid) { return {static_cast<int>(f), valid}; }

}  // namespace

std::vector<int> family_sizes(const SpaceConfig& cfg) {
  return {kNumOps, kNumAggs, 2 + cfg.num_blocks, cfg.num_templates, cfg.k_max, 2};
}

Schedule make_schedule(const SpaceConfig& cfg) {
  Schedule s;
  s.reserve(static_cast<std::size_t>(decision_count(cfg, Encoding::TemplateWithKs)));
  for (int t = 0; t < cfg.num_templates; ++t) {
    s.push_back(step(Family::Op, kNumOps));
    s.push_back(step(Family::Op, kNumOps));
    s.push_back(step(Family::Agg, kNumAggs));
  }
  for (int j = 0; j < cfg.num_blocks; ++j) {
    s.push_back(step(Family::Loc, cfg.pool_size_at(j)));
    s.push_back(step(Family::Loc, cfg.pool_size_at(j)));
    s.push_back(step(Family::Template, cfg.num_templates));
    s.push_back(step(Family::Repeats, cfg.k_max));
    if (j < cfg.stride_blocks()) s.push_back(step(Family::Stride, 2));
  }
  return s;
}

std::vector<int> encode(const Genotype& g, const SpaceConfig& cfg) {
  if (auto vr = validate(g, cfg); !vr.ok()) throw ValidationError(vr.violations);
  std::vector<int> c;
  for (const auto& t : g.templates) {
    c.push_back(static_cast<int>(t.op1));
    c.push_back(static_cast<int>(t.op2));
    c.push_back(static_cast<int>(t.agg));
  }
  for (int j = 0; j < cfg.num_blocks; ++j) {
    const auto& b = g.blocks[j];
    c.push_back(b.loc1);
    c.push_back(b.loc2);
    c.push_back(b.template_id);
    c.push_back(b.repeats - 1);
    if (j < cfg.stride_blocks()) c.push_back(b.stride - 1);
  }
  return c;
}

Genotype decode(std::span<const int> choices, const SpaceConfig& cfg) {
  if (static_cast<int>(choices.size()) != decision_count(cfg, Encoding::TemplateWithKs))
    throw std::invalid_argument("decision sequence has the wrong length");
  Genotype g;
  std::size_t at = 0;
  auto next = [&] { return choices[at++]; };
  for (int t = 0; t < cfg.num_templates; ++t) {
    Template tp;
    tp.op1 = static_cast<OpKind>(next());
    tp.op2 = static_cast<OpKind>(next());
    tp.agg = static_cast<AggKind>(next());
    g.templates.push_back(tp);
  }
  for (int j = 0; j < cfg.num_blocks; ++j) {
    BlockDecision b;
    b.loc1 = next();
    b.loc2 = next();
    b.template_id = next();
    b.repeats = next() + 1;
    b.stride = j < cfg.stride_blocks() ? next() + 1 : 1;
    g.blocks.push_back(b);
  }
  return g;
}

double Trajectory::log_prob() const {
  double s = 0;
  for (const auto& d : decisions) s += d.log_prob;
  return s;
}

std::vector<int> Trajectory::choices() const {
  std::vector<int> c;
  c.reserve(decisions.size());
  for (const auto& d : decisions) c.push_back(d.choice);
  return c;
}

Trajectory to_trajectory(const Controller<double>::Tape& tape) {
  Trajectory t;
  t.decisions.reserve(tape.size());
  for (const auto& s : tape)
    t.decisions.push_back({static_cast<Family>(s.family), s.choice, s.log_prob, s.entropy, s.valid});
  return t;
}

Policy::Policy(SpaceConfig space, ControllerConfig cfg)
    : space_(space), schedule_(make_schedule(space)), controller_(cfg, family_sizes(space)) {
  if (auto v = check_config(space_); !v.empty()) throw ValidationError(v);
}

Trajectory Policy::sample(std::mt19937_64& rng) const {
  Trajectory t = to_trajectory(controller_.sample(schedule_, rng));
  t.genotype = decode(t.choices(), space_);
  return t;
}

Trajectory Policy::greedy() const {
  Trajectory t = to_trajectory(controller_.greedy(schedule_));
  t.genotype = decode(t.choices(), space_);
  return t;
}

LogProb Policy::log_prob_of(const Genotype& genotype) const {
  const auto choices = encode(genotype, space_);
  const auto tape = controller_.evaluate(schedule_, choices);
  LogProb out;
  for (const auto& s : tape) {
    out.total += s.log_prob;
    out.entropies.push_back(s.entropy);
  }
  return out;
}

}  // namespace tnas
