#include "tnas/record.hpp"

#include <fstream>

namespace tnas {

nlohmann::json to_json(const SearchRecord& r) {
  nlohmann::json j = {{"index", r.index},
                      {"epoch", r.epoch},
                      {"genotype", to_json(r.genotype)},
                      {"reward", r.reward},
                      {"metrics", r.metrics ? to_json(*r.metrics) : nlohmann::json(nullptr)},
                      {"params", r.summary.params},
                      {"downsample_factor", r.summary.downsample_factor},
                      {"source", r.source},
                      {"summary", to_json(r.summary)}};
  if (!r.error.empty()) j["error"] = r.error;
  if (r.reward_long) j["reward_long"] = *r.reward_long;
  return j;
}

SearchRecord record_from_json(const nlohmann::json& j) {
  SearchRecord r;
  r.index = j.at("index").get<std::int64_t>();
  r.epoch = j.at("epoch").get<std::int64_t>();
  r.genotype = genotype_from_json(j.at("genotype"));
  r.reward = j.at("reward").get<double>();
  if (const auto& m = j.at("metrics"); !m.is_null()) r.metrics = metrics_from_json(m);
  r.error = j.value("error", "");
  r.summary = summary_from_json(j.at("summary"));
  r.source = j.at("source").get<std::string>();
  if (j.contains("reward_long")) r.reward_long = j["reward_long"].get<double>();
  return r;
}

std::vector<SearchRecord> load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open log");
  std::vector<SearchRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no), e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ":" + e.locus(), e.detail());
    }
  }
  return out;
}

void write_log(const std::string& path, const std::vector<SearchRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  for (const auto& r : records) out << to_json(r).dump() << "\n";
}

}  // namespace tnas
