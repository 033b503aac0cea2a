#ifndef TNAS_RECORD_HPP_
#define TNAS_RECORD_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tnas/cost.hpp"
#include "tnas/eval.hpp"
#include "tnas/genotype.hpp"

namespace tnas {

// One evaluated architecture, as written to a line-delimited search log.
struct SearchRecord {
  std::int64_t index = 0;
  std::int64_t epoch = 0;  // index / batch_size
  Genotype genotype;
  double reward = 0;
  std::optional<MetricTriple> metrics;
  std::string error;  // non-empty when evaluation failed
  GraphSummary summary;
  std::string source = "controller";  // or "random"
  std::optional<double> reward_long;  // filled by the rerank experiment
};

nlohmann::json to_json(const SearchRecord& r);
SearchRecord record_from_json(const nlohmann::json& j);

std::vector<SearchRecord> load_log(const std::string& path);
void write_log(const std::string& path, const std::vector<SearchRecord>& records);

}  // namespace tnas

#endif  // TNAS_RECORD_HPP_
