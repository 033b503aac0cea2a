#ifndef TNAS_SEARCH_HPP_
#define TNAS_SEARCH_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tnas/analysis.hpp"
#include "tnas/config.hpp"
#include "tnas/eval.hpp"
#include "tnas/record.hpp"
#include "tnas/rl.hpp"

namespace tnas {

// Run directory layout.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kSearchLog = "search_log.jsonl";
inline constexpr const char* kRandomLog = "random_log.jsonl";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kCheckpointDir = "checkpoints";
inline constexpr int kCheckpointVersion = 1;

// Builds the evaluator named by bundle.search.evaluator: "surrogate" or
// "external:<command>".
std::unique_ptr<Evaluator> make_evaluator(const ConfigBundle& bundle);

void save_checkpoint(const std::string& path, const TrainState& state, const ConfigBundle& bundle);
// Throws ParseError for unreadable files and ValidationError when the stored
// space or controller configuration differs from `bundle`.
TrainState load_checkpoint(const std::string& path, const ConfigBundle& bundle);
// Highest-numbered checkpoint in `run_dir`, or empty.
std::string latest_checkpoint(const std::string& run_dir);

// Thrown by the test hook SearchOptions::interrupt_after.
class SearchInterrupted : public Error {
 public:
  using Error::Error;
};

struct SearchOptions {
  bool resume = false;
  std::int64_t interrupt_after = -1;  // simulate a crash once this many records exist
};

struct SearchSummary {
  std::int64_t architectures = 0;
  std::vector<SearchRecord> best;
  std::vector<double> median_reward;  // per window
  std::vector<ProportionWindow> downsampling;
};

SearchSummary summarize_search(std::span<const SearchRecord> log, int best_k, int window);
nlohmann::json to_json(const SearchSummary& s);

// Controller search writing config snapshot, log, checkpoints and summary
// into `out_dir`. With options.resume the latest checkpoint is restored and
// log records past it are dropped before continuing.
SearchSummary run_search(const ConfigBundle& bundle, const std::string& out_dir,
                         Evaluator& evaluator, const SearchOptions& options = {});

// `count` architectures from the untrained controller, tagged "random".
std::vector<SearchRecord> run_random(const ConfigBundle& bundle, std::int64_t count,
                                     Evaluator& evaluator);

// Samples `count` genotypes from a policy without evaluating them.
std::vector<Genotype> sample_genotypes(const Policy& policy, std::int64_t count,
                                       std::uint64_t seed);

struct RerankResult {
  std::vector<double> short_rewards;
  std::vector<double> long_rewards;
  double rho = 0;
};

// Scores every genotype under both evaluators (failures score 0) and
// correlates the two rankings. Needs at least three genotypes.
RerankResult rerank_experiment(std::span<const Genotype> genotypes, const SpaceConfig& space,
                               Evaluator& short_setup, Evaluator& long_setup);

void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace tnas

#endif  // TNAS_SEARCH_HPP_
