#ifndef TNAS_CONFIG_HPP_
#define TNAS_CONFIG_HPP_

#include <cstdint>
#include <string>

#include <json.hpp>

#include "tnas/controller.hpp"
#include "tnas/eval.hpp"
#include "tnas/external.hpp"
#include "tnas/genotype.hpp"
#include "tnas/rl.hpp"

namespace tnas {

struct SearchConfig {
  std::int64_t budget = 2000;
  std::uint64_t seed = 0;
  int workers = 1;
  int checkpoint_every = 100;
  int best_k = 5;
  int window = 100;
  std::string evaluator = "surrogate";  // or "external:<command>"
  bool operator==(const SearchConfig&) const = default;
};

struct ConfigBundle {
  SpaceConfig space;
  ControllerConfig controller;
  PpoConfig ppo;
  SurrogateConfig surrogate;
  ExternalConfig external;
  SearchConfig search;
  bool operator==(const ConfigBundle&) const = default;
};

nlohmann::json to_json(const SpaceConfig& c);
nlohmann::json to_json(const ControllerConfig& c);
nlohmann::json to_json(const PpoConfig& c);
nlohmann::json to_json(const SurrogateConfig& c);
nlohmann::json to_json(const ConfigBundle& b);

SpaceConfig space_from_json(const nlohmann::json& j, SpaceConfig base = {});
ControllerConfig controller_from_json(const nlohmann::json& j, ControllerConfig base = {});

// Sections and keys absent from `j` keep the values of `base`; unknown keys
// throw ParseError.
ConfigBundle bundle_from_json(const nlohmann::json& j, ConfigBundle base = {});
ConfigBundle load_config(const std::string& path);

// Applies the single --seed to every seeded component.
void apply_seed(ConfigBundle& bundle, std::uint64_t seed);

}  // namespace tnas

#endif  // TNAS_CONFIG_HPP_
