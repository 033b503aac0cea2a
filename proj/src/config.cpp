#include "tnas/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tnas/random.hpp"

namespace tnas {

namespace {

// Copies j[key] into `out` when present, rejecting keys not listed.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ParseError(section_, "expected an object");
  }
  template <class T>
  Reader& get(const char* key, T& out) {
    seen_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        out = it->template get<T>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(section_ + "." + key, e.what());
      }
    }
    return *this;
  }
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw ParseError(section_ + "." + key, "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string section_;
  std::vector<std::string> seen_;
};

}  // namespace

nlohmann::json to_json(const SpaceConfig& c) {
  return {{"num_blocks", c.num_blocks},           {"num_templates", c.num_templates},
          {"k_max", c.k_max},                     {"base_channels", c.base_channels},
          {"channel_multiplier", c.channel_multiplier}, {"num_classes", c.num_classes},
          {"stem_param_count", c.stem_param_count}, {"concat_reduce", c.concat_reduce}};
}

nlohmann::json to_json(const ControllerConfig& c) {
  return {{"hidden_size", c.hidden_size}, {"embedding_size", c.embedding_size},
          {"init_range", c.init_range},   {"zero_heads", c.zero_heads},
          {"seed", c.seed}};
}

nlohmann::json to_json(const PpoConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"clip_epsilon", c.clip_epsilon},
          {"update_epochs", c.update_epochs}, {"batch_size", c.batch_size},
          {"entropy_coef", c.entropy_coef},   {"baseline_decay", c.baseline_decay},
          {"max_grad_norm", c.max_grad_norm}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},       {"adam_epsilon", c.adam_epsilon}};
}

nlohmann::json to_json(const SurrogateConfig& c) {
  return {{"target_params", c.target_params},
          {"connectivity_scale", c.connectivity_scale},
          {"target_strided_blocks", c.target_strided_blocks},
          {"noise_sigma", c.noise_sigma},
          {"seed", c.seed}};
}

nlohmann::json to_json(const ConfigBundle& b) {
  return {{"space", to_json(b.space)},
          {"controller", to_json(b.controller)},
          {"ppo", to_json(b.ppo)},
          {"surrogate", to_json(b.surrogate)},
          {"external", {{"command", b.external.command},
                        {"timeout_seconds", b.external.timeout_seconds}}},
          {"search", {{"budget", b.search.budget},
                      {"seed", b.search.seed},
                      {"workers", b.search.workers},
                      {"checkpoint_every", b.search.checkpoint_every},
                      {"best_k", b.search.best_k},
                      {"window", b.search.window},
                      {"evaluator", b.search.evaluator}}}};
}

SpaceConfig space_from_json(const nlohmann::json& j, SpaceConfig c) {
  Reader r(j, "space");
  r.get("num_blocks", c.num_blocks)
      .get("num_templates", c.num_templates)
      .get("k_max", c.k_max)
      .get("base_channels", c.base_channels)
      .get("channel_multiplier", c.channel_multiplier)
      .get("num_classes", c.num_classes)
      .get("stem_param_count", c.stem_param_count)
      .get("concat_reduce", c.concat_reduce)
      .finish();
  return c;
}

ControllerConfig controller_from_json(const nlohmann::json& j, ControllerConfig c) {
  Reader r(j, "controller");
  r.get("hidden_size", c.hidden_size)
      .get("embedding_size", c.embedding_size)
      .get("init_range", c.init_range)
      .get("zero_heads", c.zero_heads)
      .get("seed", c.seed)
      .finish();
  return c;
}

ConfigBundle bundle_from_json(const nlohmann::json& j, ConfigBundle b) {
  Reader top(j, "config");
  nlohmann::json section;
  for (const char* name : {"space", "controller", "ppo", "surrogate", "external", "search"}) {
    nlohmann::json dummy;
    top.get(name, dummy);
  }
  top.finish();

  if (j.contains("space")) b.space = space_from_json(j["space"], b.space);
  if (j.contains("controller")) b.controller = controller_from_json(j["controller"], b.controller);
  if (j.contains("ppo")) {
    Reader r(j["ppo"], "ppo");
    auto& c = b.ppo;
    r.get("learning_rate", c.learning_rate)
        .get("clip_epsilon", c.clip_epsilon)
        .get("update_epochs", c.update_epochs)
        .get("batch_size", c.batch_size)
        .get("entropy_coef", c.entropy_coef)
        .get("baseline_decay", c.baseline_decay)
        .get("max_grad_norm", c.max_grad_norm)
        .get("adam_beta1", c.adam_beta1)
        .get("adam_beta2", c.adam_beta2)
        .get("adam_epsilon", c.adam_epsilon)
        .finish();
  }
  if (j.contains("surrogate")) {
    Reader r(j["surrogate"], "surrogate");
    auto& c = b.surrogate;
    r.get("target_params", c.target_params)
        .get("connectivity_scale", c.connectivity_scale)
        .get("target_strided_blocks", c.target_strided_blocks)
        .get("noise_sigma", c.noise_sigma)
        .get("seed", c.seed)
        .finish();
  }
  if (j.contains("external")) {
    Reader r(j["external"], "external");
    r.get("command", b.external.command).get("timeout_seconds", b.external.timeout_seconds).finish();
  }
  if (j.contains("search")) {
    Reader r(j["search"], "search");
    auto& c = b.search;
    r.get("budget", c.budget)
        .get("seed", c.seed)
        .get("workers", c.workers)
        .get("checkpoint_every", c.checkpoint_every)
        .get("best_k", c.best_k)
        .get("window", c.window)
        .get("evaluator", c.evaluator)
        .finish();
  }
  return b;
}

ConfigBundle load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return bundle_from_json(nlohmann::json::parse(ss.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, e.what());
  }
}

void apply_seed(ConfigBundle& b, std::uint64_t seed) {
  b.search.seed = seed;
  b.controller.seed = derive_seed(seed, 1);
  b.surrogate.seed = derive_seed(seed, 2);
}

}  // namespace tnas
