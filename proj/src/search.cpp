#include "tnas/search.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tnas/external.hpp"
#include "tnas/random.hpp"

namespace fs = std::filesystem;

namespace tnas {

namespace {

constexpr std::uint64_t kSampleStream = 3;
constexpr std::uint64_t kRandomStream = 4;

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index expected,
                                 const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected)
    throw ParseError(what, "expected " + std::to_string(expected) + " values");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

std::string checkpoint_name(std::int64_t count) {
  std::ostringstream os;
  os << "controller_";
  os.width(8);
  os.fill('0');
  os << count << ".json";
  return os.str();
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << text;
    out.flush();
    if (!out) throw Error("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

std::unique_ptr<Evaluator> make_evaluator(const ConfigBundle& b) {
  const std::string& name = b.search.evaluator;
  if (name == "surrogate")
    return std::make_unique<SurrogateEvaluator>(b.space, b.surrogate, b.search.workers);
  const std::string prefix = "external:";
  if (name.rfind(prefix, 0) == 0) {
    ExternalConfig ext = b.external;
    ext.command = name.substr(prefix.size());
    return std::make_unique<ExternalEvaluator>(ext);
  }
  throw ParseError("search.evaluator", "expected 'surrogate' or 'external:<command>', got '" +
                                           name + "'");
}

void save_checkpoint(const std::string& path, const TrainState& s, const ConfigBundle& b) {
  std::ostringstream rng;
  rng << s.rng;
  nlohmann::json j = {
      {"version", kCheckpointVersion},
      {"space", to_json(b.space)},
      {"controller_config", to_json(s.policy.controller().config())},
      {"ppo", to_json(b.ppo)},
      {"next_index", s.next_index},
      {"parameters", vector_json(s.policy.controller().parameters())},
      {"adam", {{"m", vector_json(s.optimizer.first_moment())},
                {"v", vector_json(s.optimizer.second_moment())},
                {"t", s.optimizer.steps()}}},
      {"baseline", {{"ema", s.baseline.ema}, {"initialized", s.baseline.initialized}}},
      {"rng", rng.str()}};
  write_text_atomic(path, j.dump() + "\n");
}

TrainState load_checkpoint(const std::string& path, const ConfigBundle& b) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open checkpoint");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ParseError(path + ":version", "unsupported checkpoint version");
    const SpaceConfig space = space_from_json(j.at("space"));
    if (!(space == b.space))
      throw ValidationError({{Violation::Kind::Config, -1,
                              "checkpoint was written for a different search space"}});
    const ControllerConfig ctrl = controller_from_json(j.at("controller_config"));
    if (ctrl.hidden_size != b.controller.hidden_size ||
        ctrl.embedding_size != b.controller.embedding_size)
      throw ValidationError({{Violation::Kind::Config, -1,
                              "checkpoint was written for a different controller size"}});

    TrainState s(Policy(space, ctrl), b.ppo, 0);
    auto& theta = s.policy.controller().parameters();
    theta = vector_from_json(j.at("parameters"), theta.size(), "parameters");
    const auto& adam = j.at("adam");
    s.optimizer.restore(vector_from_json(adam.at("m"), theta.size(), "adam.m"),
                        vector_from_json(adam.at("v"), theta.size(), "adam.v"),
                        adam.at("t").get<std::int64_t>());
    s.baseline.ema = j.at("baseline").at("ema").get<double>();
    s.baseline.initialized = j.at("baseline").at("initialized").get<bool>();
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> s.rng;
    if (!rng) throw ParseError(path + ":rng", "bad generator state");
    s.next_index = j.at("next_index").get<std::int64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, e.what());
  }
}

std::string latest_checkpoint(const std::string& run_dir) {
  const fs::path dir = fs::path(run_dir) / kCheckpointDir;
  if (!fs::is_directory(dir)) return {};
  std::string best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("controller_", 0) == 0 && e.path().extension() == ".json")
      best = std::max(best, e.path().string());
  }
  return best;
}

SearchSummary summarize_search(std::span<const SearchRecord> log, int best_k, int window) {
  SearchSummary s;
  s.architectures = static_cast<std::int64_t>(log.size());
  std::vector<SearchRecord> sorted(log.begin(), log.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const SearchRecord& a, const SearchRecord& b) {
    return a.reward > b.reward;
  });
  if (static_cast<int>(sorted.size()) > best_k) sorted.resize(static_cast<std::size_t>(best_k));
  s.best = std::move(sorted);
  if (!log.empty()) {
    GroupOptions opt;
    opt.min_reward = -1.0;
    opt.window = window;
    for (const auto& g : reward_by_group(log, Grouping::Window, opt)) s.median_reward.push_back(g.median);
    s.downsampling = downsampling_proportions(log, window);
  }
  return s;
}

nlohmann::json to_json(const SearchSummary& s) {
  nlohmann::json best = nlohmann::json::array();
  for (const auto& r : s.best) best.push_back(to_json(r));
  nlohmann::json props = nlohmann::json::array();
  for (const auto& w : s.downsampling) props.push_back(to_json(w));
  return {{"architectures", s.architectures},
          {"best", best},
          {"median_reward_per_window", s.median_reward},
          {"downsampling_proportions", props}};
}

SearchSummary run_search(const ConfigBundle& bundle, const std::string& out_dir,
                         Evaluator& evaluator, const SearchOptions& options) {
  if (auto v = check_config(bundle.space); !v.empty()) throw ValidationError(v);
  if (auto v = check_config(bundle.ppo); !v.empty()) throw ValidationError(v);
  fs::create_directories(fs::path(out_dir) / kCheckpointDir);
  write_text_atomic((fs::path(out_dir) / kConfigFile).string(), to_json(bundle).dump(2) + "\n");
  const std::string log_path = (fs::path(out_dir) / kSearchLog).string();

  TrainState state(Policy(bundle.space, bundle.controller), bundle.ppo,
                   derive_seed(bundle.search.seed, kSampleStream));
  std::vector<SearchRecord> log;
  if (options.resume) {
    if (const auto ckpt = latest_checkpoint(out_dir); !ckpt.empty()) {
      state = load_checkpoint(ckpt, bundle);
      if (fs::exists(log_path)) {
        for (auto& r : load_log(log_path))
          if (r.index < state.next_index) log.push_back(std::move(r));
      }
    }
  }
  write_log(log_path, log);

  std::ofstream out(log_path, std::ios::app);
  if (!out) throw Error("cannot append to " + log_path);

  TrainOptions train;
  train.ppo = bundle.ppo;
  train.budget = bundle.search.budget;
  const int every = std::max(1, bundle.search.checkpoint_every);
  train.on_batch = [&](std::span<const SearchRecord> records, const UpdateStats&) {
    for (const auto& r : records) out << to_json(r).dump() << "\n";
    out.flush();
    log.insert(log.end(), records.begin(), records.end());
    const std::int64_t done = state.next_index;
    const std::int64_t before = done - static_cast<std::int64_t>(records.size());
    if (before / every != done / every || done >= bundle.search.budget) {
      const auto path = fs::path(out_dir) / kCheckpointDir / checkpoint_name(done);
      save_checkpoint(path.string(), state, bundle);
    }
    if (options.interrupt_after >= 0 && done >= options.interrupt_after)
      throw SearchInterrupted("interrupted after " + std::to_string(done) + " architectures");
  };
  train_controller(state, evaluator, train);

  SearchSummary summary = summarize_search(log, bundle.search.best_k, bundle.search.window);
  write_text_atomic((fs::path(out_dir) / kSummaryFile).string(), to_json(summary).dump(2) + "\n");
  return summary;
}

std::vector<Genotype> sample_genotypes(const Policy& policy, std::int64_t count,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Genotype> out;
  for (std::int64_t i = 0; i < count; ++i) out.push_back(policy.sample(rng).genotype);
  return out;
}

std::vector<SearchRecord> run_random(const ConfigBundle& bundle, std::int64_t count,
                                     Evaluator& evaluator) {
  const Policy prior(bundle.space, bundle.controller);
  const auto genotypes =
      sample_genotypes(prior, count, derive_seed(bundle.search.seed, kRandomStream));
  std::vector<SearchRecord> out;
  const auto batch = static_cast<std::size_t>(std::max(1, bundle.ppo.batch_size));
  for (std::size_t start = 0; start < genotypes.size(); start += batch) {
    std::vector<EvalRequest> requests;
    for (std::size_t i = start; i < std::min(genotypes.size(), start + batch); ++i)
      requests.push_back(make_request(static_cast<std::int64_t>(i), genotypes[i], bundle.space));
    const auto outcomes = evaluator.evaluate(requests);
    for (std::size_t i = 0; i < requests.size(); ++i)
      out.push_back(make_record(requests[i], outcomes[i], bundle.ppo.batch_size, "random"));
  }
  return out;
}

RerankResult rerank_experiment(std::span<const Genotype> genotypes, const SpaceConfig& space,
                               Evaluator& short_setup, Evaluator& long_setup) {
  if (genotypes.size() < 3) throw std::invalid_argument("rerank needs at least three genotypes");
  std::vector<EvalRequest> requests;
  for (std::size_t i = 0; i < genotypes.size(); ++i)
    requests.push_back(make_request(static_cast<std::int64_t>(i), genotypes[i], space));
  const auto a = short_setup.evaluate(requests);
  const auto b = long_setup.evaluate(requests);
  RerankResult r;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    r.short_rewards.push_back(a[i].reward());
    r.long_rewards.push_back(b[i].reward());
  }
  r.rho = spearman(r.short_rewards, r.long_rewards);
  return r;
}

}  // namespace tnas
