#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "support.hpp"
#include "tnas/policy.hpp"

using namespace tnas;

namespace {

SpaceConfig tiny_space() {
  SpaceConfig cfg;
  cfg.num_blocks = 1;
  cfg.num_templates = 1;
  return cfg;
}

ControllerConfig random_heads(int hidden, std::uint64_t seed) {
  ControllerConfig cc;
  cc.hidden_size = hidden;
  cc.embedding_size = 6;
  cc.init_range = 0.5;
  cc.zero_heads = false;
  cc.seed = seed;
  return cc;
}

// Visits every complete decision sequence of a schedule.
void enumerate(const Schedule& schedule, std::vector<int>& prefix,
               const std::function<void(const std::vector<int>&)>& visit) {
  if (prefix.size() == schedule.size()) {
    visit(prefix);
    return;
  }
  for (int c = 0; c < schedule[prefix.size()].valid; ++c) {
    prefix.push_back(c);
    enumerate(schedule, prefix, visit);
    prefix.pop_back();
  }
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("schedule layout") {
  const SpaceConfig cfg;
  const Schedule s = make_schedule(cfg);
  CHECK(s.size() == 40);
  CHECK(static_cast<int>(s.size()) == decision_count(cfg, Encoding::TemplateWithKs));
  CHECK(family_sizes(cfg) == std::vector<int>{6, 2, 9, 3, 4, 2});
  // block 0 starts right after the three templates
  CHECK(s[9].family == static_cast<int>(Family::Loc));
  CHECK(s[9].valid == 2);
  CHECK(s[13].family == static_cast<int>(Family::Stride));
  int strides = 0;
  for (const auto& st : s) strides += st.family == static_cast<int>(Family::Stride);
  CHECK(strides == 3);
  CHECK(s.back().family == static_cast<int>(Family::Repeats));
}

TEST_CASE("encode and decode agree") {
  std::mt19937_64 rng(12);
  const SpaceConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const Genotype g = testing::random_genotype(rng, cfg);
    const auto choices = encode(g, cfg);
    CHECK(decode(choices, cfg) == g);
  }
  std::vector<int> short_seq(5, 0);
  CHECK_THROWS_AS(decode(short_seq, cfg), std::invalid_argument);
}

TEST_CASE("probabilities over an enumerable space sum to one") {
  const SpaceConfig cfg = tiny_space();
  for (bool untrained : {true, false}) {
    const Policy policy(cfg, untrained ? ControllerConfig{} : random_heads(8, 5));
    std::vector<int> prefix;
    double total = 0;
    long leaves = 0;
    enumerate(policy.schedule(), prefix, [&](const std::vector<int>& choices) {
      total += std::exp(policy.log_prob_of(decode(choices, cfg)).total);
      ++leaves;
    });
    // 6 * 6 * 2 template choices, then 2 * 2 * 1 * 4 block choices, no stride
    CHECK(leaves == 1152);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("analytic gradient of log_prob_of matches finite differences") {
  SpaceConfig cfg;
  cfg.num_blocks = 3;
  cfg.num_templates = 2;
  Policy policy(cfg, random_heads(8, 17));
  std::mt19937_64 rng(3);
  const Genotype g = policy.sample(rng).genotype;
  const auto choices = encode(g, cfg);

  auto& c = policy.controller();
  const auto tape = c.evaluate(policy.schedule(), choices);
  const std::vector<double> ones(tape.size(), 1.0), zeros(tape.size(), 0.0);
  const Eigen::VectorXd grad = c.backward(tape, ones, zeros);

  double worst = 0;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < c.num_parameters(); ++i) {
    const double saved = c.parameters()[i];
    c.parameters()[i] = saved + h;
    const double up = policy.log_prob_of(g).total;
    c.parameters()[i] = saved - h;
    const double down = policy.log_prob_of(g).total;
    c.parameters()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-3});
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("entropy gradient matches finite differences") {
  const SpaceConfig cfg = tiny_space();
  Policy policy(cfg, random_heads(8, 23));
  std::mt19937_64 rng(9);
  const auto choices = policy.sample(rng).choices();
  auto& c = policy.controller();
  const auto tape = c.evaluate(policy.schedule(), choices);
  const std::vector<double> zeros(tape.size(), 0.0), ones(tape.size(), 1.0);
  const Eigen::VectorXd grad = c.backward(tape, zeros, ones);
  auto entropy = [&] {
    double s = 0;
    for (const auto& st : c.evaluate(policy.schedule(), choices)) s += st.entropy;
    return s;
  };
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < c.num_parameters(); i += 7) {
    const double saved = c.parameters()[i];
    c.parameters()[i] = saved + h;
    const double up = entropy();
    c.parameters()[i] = saved - h;
    const double down = entropy();
    c.parameters()[i] = saved;
    CHECK(grad[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4).scale(1e-3));
  }
}

TEST_CASE("single decision with probabilities one quarter and three quarters") {
  ControllerConfig cc;
  cc.hidden_size = 4;
  cc.embedding_size = 3;
  Controller<double> c(cc, {2});
  const Schedule schedule = {{0, 2}};
  // zero head weights leave the logits equal to the head bias, stored last
  const auto n = c.num_parameters();
  c.parameters()[n - 2] = std::log(0.25);
  c.parameters()[n - 1] = std::log(0.75);
  const std::vector<int> pick = {1};
  const auto tape = c.evaluate(schedule, pick);
  CHECK(tape[0].log_prob == doctest::Approx(std::log(0.75)).epsilon(1e-12));
  CHECK(tape[0].probs[0] == doctest::Approx(0.25));
}

TEST_CASE("sampling is seeded and self-consistent") {
  const SpaceConfig cfg;
  const Policy policy(cfg, random_heads(16, 1));
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 50; ++i) {
    const Trajectory ta = policy.sample(a);
    const Trajectory tb = policy.sample(b);
    REQUIRE(ta.choices() == tb.choices());
    CHECK(ta.genotype == decode(ta.choices(), cfg));
    CHECK(validate(ta.genotype, cfg).ok());
    CHECK(ta.decisions.size() == 40);
    CHECK(policy.log_prob_of(ta.genotype).total == doctest::Approx(ta.log_prob()).epsilon(1e-6));
  }
}

TEST_CASE("masked locations have probability zero") {
  const SpaceConfig cfg;
  const Policy policy(cfg, random_heads(16, 2));
  std::mt19937_64 rng(0);
  const auto tape = policy.controller().sample(policy.schedule(), rng);
  for (const auto& s : tape) {
    double mass = 0;
    for (Eigen::Index i = 0; i < s.probs.size(); ++i) {
      if (i >= s.valid) CHECK(s.probs[i] == 0.0);
      mass += s.probs[i];
    }
    CHECK(mass == doctest::Approx(1.0));
    CHECK(s.choice < s.valid);
  }
  Genotype g = policy.sample(rng).genotype;
  g.blocks[0].loc1 = 2;
  CHECK_THROWS_AS(policy.log_prob_of(g), ValidationError);
  const std::vector<int> bad(40, 8);
  CHECK_THROWS(policy.controller().evaluate(policy.schedule(), bad));
}

TEST_CASE("untrained controller is masked-uniform") {
  const SpaceConfig cfg;
  const Policy policy(cfg, ControllerConfig{});
  std::mt19937_64 rng(7);
  const auto tape = policy.controller().sample(policy.schedule(), rng);
  for (const auto& s : tape) {
    CHECK(std::exp(s.log_prob) == doctest::Approx(1.0 / s.valid));
    CHECK(s.entropy == doctest::Approx(std::log(static_cast<double>(s.valid))));
  }

  const int n = 10000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const Trajectory t = policy.sample(rng);
    REQUIRE(validate(t.genotype, cfg).ok());
    zeros += t.genotype.blocks[0].loc1 == 0;
  }
  // fair coin: within three standard deviations of n / 2
  CHECK(std::abs(zeros - n / 2) <= 3 * std::sqrt(n * 0.25));

  // ties go to the lowest index
  const Trajectory best = policy.greedy();
  for (int c : best.choices()) CHECK(c == 0);
}

}  // TEST_SUITE
