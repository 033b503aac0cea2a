#ifndef TNAS_POLICY_HPP_
#define TNAS_POLICY_HPP_

#include <random>
#include <span>
#include <vector>

#include "tnas/controller.hpp"
#include "tnas/genotype.hpp"

namespace tnas {

// Decision families emitted by the controller, in head order.
enum class Family : int { Op = 0, Agg = 1, Loc = 2, Template = 3, Repeats = 4, Stride = 5 };
inline constexpr int kNumFamilies = 6;

std::vector<int> family_sizes(const SpaceConfig& cfg);

// M x (op1, op2, agg), then per block (loc1, loc2, template, repeats) plus a
// stride decision for the first floor(N/2) blocks. Location heads are masked
// to the 2 + j entries of the pool at block j.
Schedule make_schedule(const SpaceConfig& cfg);

// Choice indices for the schedule (repeats and stride are stored minus one).
std::vector<int> encode(const Genotype& genotype, const SpaceConfig& cfg);
Genotype decode(std::span<const int> choices, const SpaceConfig& cfg);

struct Decision {
  Family family = Family::Op;
  int choice = 0;
  double log_prob = 0;
  double entropy = 0;
  int valid = 0;
};

// One controller episode: a single architecture.
struct Trajectory {
  std::vector<Decision> decisions;
  Genotype genotype;
  double reward = 0;
  double advantage = 0;

  double log_prob() const;
  std::vector<int> choices() const;
};

Trajectory to_trajectory(const Controller<double>::Tape& tape);

struct LogProb {
  double total = 0;
  std::vector<double> entropies;
};

// Controller bound to a search space.
class Policy {
 public:
  Policy(SpaceConfig space, ControllerConfig cfg);

  Trajectory sample(std::mt19937_64& rng) const;
  Trajectory greedy() const;
  // Throws ValidationError for an invalid genotype.
  LogProb log_prob_of(const Genotype& genotype) const;

  Controller<double>& controller() { return controller_; }
  const Controller<double>& controller() const { return controller_; }
  const SpaceConfig& space() const { return space_; }
  const Schedule& schedule() const { return schedule_; }

 private:
  SpaceConfig space_;
  Schedule schedule_;
  Controller<double> controller_;
};

}  // namespace tnas

#endif  // TNAS_POLICY_HPP_
