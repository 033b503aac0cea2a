// Command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 invalid input (parse, validation,
// protocol), 3 evaluator failure.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tnas/analysis.hpp"
#include "tnas/search.hpp"

using namespace tnas;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitEvaluator = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string config;
  std::optional<std::int64_t> budget;
  std::optional<std::string> evaluator;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool resume = false;
  std::int64_t count = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--budget", f.budget, "architectures to evaluate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--evaluator", f.evaluator, "surrogate | external:<command>");
  cmd->add_option("--seed", f.seed, "seed for every random component");
  cmd->add_option("--workers", f.workers, "surrogate worker threads")->check(CLI::PositiveNumber);
}

// Configuration file first, then flags on top.
ConfigBundle make_bundle(const RunFlags& f) {
  ConfigBundle b = f.config.empty() ? ConfigBundle{} : load_config(f.config);
  if (f.seed) apply_seed(b, *f.seed);
  if (f.budget) b.search.budget = *f.budget;
  if (f.evaluator) b.search.evaluator = *f.evaluator;
  if (f.workers) b.search.workers = *f.workers;
  return b;
}

// Space for a lone genotype file: from --config when given, else sized to
// the genotype itself.
SpaceConfig space_for(const Genotype& g, const std::string& config) {
  if (!config.empty()) return load_config(config).space;
  SpaceConfig s;
  s.num_blocks = static_cast<int>(g.blocks.size());
  s.num_templates = static_cast<int>(g.templates.size());
  return s;
}

GraphIR checked_graph(const Genotype& g, const SpaceConfig& space) {
  const auto v = validate(g, space);
  if (!v.ok()) throw ValidationError(v.violations);
  return compile(g, space);
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text_atomic(path, text);
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

int cmd_search(const RunFlags& f) {
  const ConfigBundle b = make_bundle(f);
  auto evaluator = make_evaluator(b);
  SearchOptions opt;
  opt.resume = f.resume;
  const SearchSummary s = run_search(b, f.out, *evaluator, opt);
  std::cout << to_json(s).dump(2) << "\n";
  return 0;
}

int cmd_random(const RunFlags& f) {
  const ConfigBundle b = make_bundle(f);
  auto evaluator = make_evaluator(b);
  const auto records = run_random(b, f.count, *evaluator);
  fs::create_directories(f.out);
  write_file((fs::path(f.out) / kConfigFile).string(), to_json(b).dump(2) + "\n");
  write_log((fs::path(f.out) / kRandomLog).string(), records);
  std::cout << to_json(summarize_search(records, b.search.best_k, b.search.window)).dump(2) << "\n";
  return 0;
}

int cmd_decode(const std::string& path, const std::string& config) {
  const Genotype g = load_genotype(path);
  const SpaceConfig space = space_for(g, config);
  std::cout << to_json(summarize(checked_graph(g, space), space)).dump(2) << "\n";
  return 0;
}

int cmd_inspect(const std::string& path, const std::string& config, const std::vector<int>& hw) {
  const Genotype g = load_genotype(path);
  const SpaceConfig space = space_for(g, config);
  const GraphIR ir = checked_graph(g, space);
  const int h = hw.empty() ? kReferenceHeight : hw[0];
  const int w = hw.empty() ? kReferenceWidth : hw[1];
  const CostReport r = count_params(ir, space, h, w);

  std::cout << pad("node", 5) << "  " << std::string("label").append(22, ' ') << pad("ch", 6)
            << pad("down", 6) << pad("params", 10) << pad("flops", 14) << "\n";
  for (const auto& c : r.per_node) {
    std::string label = c.label;
    label.resize(std::max<std::size_t>(label.size(), 27), ' ');
    std::cout << pad(std::to_string(c.node), 5) << "  " << label << pad(std::to_string(c.out.channels), 6)
              << pad("x" + std::to_string(1 << c.out.down_exp), 6)
              << pad(std::to_string(c.params), 10) << pad(std::to_string(c.flops), 14) << "\n";
  }
  std::cout << "generated params  " << r.params_generated << "\n"
            << "stem params       " << space.stem_param_count << "\n"
            << "total params      " << r.params_total << "\n"
            << "flops             " << r.flops << " at " << h << "x" << w << "\n"
            << "downsampling      x" << r.downsample_factor << "\n";
  std::cout << to_json(r).dump() << "\n";
  return 0;
}

int cmd_export_dot(const std::string& path, const std::string& config, const std::string& out) {
  const Genotype g = load_genotype(path);
  const SpaceConfig space = space_for(g, config);
  const std::string dot = export_dot(checked_graph(g, space));
  if (out.empty())
    std::cout << dot;
  else
    write_file(out, dot);
  return 0;
}

struct AnalyzeFlags {
  std::string log;
  std::string report;
  double min_reward = 0.40;
  int window = 100;
  int top = 10;
  std::string csv;
};

int cmd_analyze(const AnalyzeFlags& f) {
  const auto log = load_log(f.log);
  nlohmann::json record = {{"report", f.report}, {"log", f.log}, {"records", log.size()}};
  std::ostringstream table, csv;

  if (f.report == "strides") {
    if (f.window <= 0) throw UsageError("--window must be positive");
    const auto windows = downsampling_proportions(log, f.window);
    nlohmann::json rows = nlohmann::json::array();
    table << pad("start", 8) << pad("count", 7);
    csv << "start,count";
    if (!windows.empty())
      for (int factor : windows.front().factors) {
        table << pad("x" + std::to_string(factor), 8);
        csv << ",x" << factor;
      }
    table << "\n";
    csv << "\n";
    for (const auto& w : windows) {
      rows.push_back(to_json(w));
      table << pad(std::to_string(w.start), 8) << pad(std::to_string(w.count), 7);
      csv << w.start << "," << w.count;
      for (double share : w.shares) {
        table << pad(fixed(share, 3), 8);
        csv << "," << fixed(share, 6);
      }
      table << "\n";
      csv << "\n";
    }
    record["window"] = f.window;
    record["windows"] = rows;
  } else if (f.report == "spearman") {
    std::vector<double> short_r, long_r;
    for (const auto& r : log)
      if (r.reward_long) {
        short_r.push_back(r.reward);
        long_r.push_back(*r.reward_long);
      }
    if (short_r.size() < 2)
      throw ParseError(f.log, "spearman needs at least two records with a long-training reward");
    const double rho = spearman(short_r, long_r);
    record["pairs"] = short_r.size();
    record["rho"] = rho;
    table << "pairs " << short_r.size() << "\nrho   " << fixed(rho) << "\n";
    csv << "reward,reward_long\n";
    for (std::size_t i = 0; i < short_r.size(); ++i)
      csv << fixed(short_r[i], 6) << "," << fixed(long_r[i], 6) << "\n";
  } else {
    GroupOptions opt;
    opt.min_reward = f.min_reward;
    opt.window = f.window;
    const auto groups = reward_by_group(log, parse_grouping(f.report), opt);
    nlohmann::json rows = nlohmann::json::array();
    table << std::string("group").append(32, ' ') << pad("n", 6) << pad("min", 8) << pad("q1", 8)
          << pad("median", 8) << pad("q3", 8) << pad("max", 8) << pad("mean", 8) << "\n";
    csv << "key,label,count,min,q1,median,q3,max,mean\n";
    for (const auto& g : groups) {
      rows.push_back(to_json(g));
      std::string label = g.label;
      label.resize(std::max<std::size_t>(label.size(), 37), ' ');
      table << label << pad(std::to_string(g.count), 6);
      for (double v : {g.min, g.q1, g.median, g.q3, g.max, g.mean}) table << pad(fixed(v, 3), 8);
      table << "\n";
      csv << g.key << ",\"" << g.label << "\"," << g.count;
      for (double v : {g.min, g.q1, g.median, g.q3, g.max, g.mean}) csv << "," << fixed(v, 6);
      csv << "\n";
    }
    record["min_reward"] = f.min_reward;
    record["groups"] = rows;
    if (f.report == "templates") {
      nlohmann::json top = nlohmann::json::array();
      table << "\ntop " << f.top << " templates by mean reward\n";
      for (const auto& t : top_templates(log, f.top, f.min_reward)) {
        top.push_back({{"template", to_string(t.templ)},
                       {"mean_reward", t.mean_reward},
                       {"count", t.count}});
        table << "  " << to_string(t.templ) << "  " << fixed(t.mean_reward) << "  (" << t.count
              << ")\n";
      }
      record["top"] = top;
    }
  }

  std::cout << table.str() << record.dump() << "\n";
  if (!f.csv.empty()) write_file(f.csv, csv.str());
  return 0;
}

struct RerankFlags {
  RunFlags run;
  std::string log;
  std::string long_evaluator = "surrogate";
};

int cmd_rerank(RerankFlags f) {
  if (f.run.config.empty()) {
    const fs::path beside = fs::path(f.log).parent_path() / kConfigFile;
    if (fs::exists(beside)) f.run.config = beside.string();
  }
  const ConfigBundle b = make_bundle(f.run);
  auto log = load_log(f.log);
  if (f.run.count > static_cast<std::int64_t>(log.size()))
    throw UsageError("--count " + std::to_string(f.run.count) + " exceeds the " +
                     std::to_string(log.size()) + " records of the log");
  // the last K architectures, i.e. the most trained part of the search
  std::vector<SearchRecord> chosen(log.end() - f.run.count, log.end());
  std::vector<Genotype> genotypes;
  for (const auto& r : chosen) genotypes.push_back(r.genotype);

  auto short_setup = make_evaluator(b);
  std::unique_ptr<Evaluator> long_setup;
  if (f.long_evaluator == "surrogate") {
    long_setup = std::make_unique<SurrogateEvaluator>(b.space, long_training_variant(b.surrogate),
                                                      b.search.workers);
  } else {
    ConfigBundle lb = b;
    lb.search.evaluator = f.long_evaluator;
    long_setup = make_evaluator(lb);
  }
  const RerankResult r = rerank_experiment(genotypes, b.space, *short_setup, *long_setup);

  for (std::size_t i = 0; i < chosen.size(); ++i) {
    chosen[i].reward = r.short_rewards[i];
    chosen[i].reward_long = r.long_rewards[i];
    chosen[i].metrics.reset();
    chosen[i].error.clear();
    chosen[i].source = "rerank";
  }
  write_log(f.run.out, chosen);
  std::cout << nlohmann::json{{"count", chosen.size()}, {"rho", r.rho}, {"out", f.run.out}}.dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Template-based neural architecture search"};
  app.require_subcommand(1);

  RunFlags search;
  auto* search_cmd = app.add_subcommand("search", "train the controller against an evaluator");
  add_run_flags(search_cmd, search);
  search_cmd->add_option("--out", search.out, "run directory")->required();
  search_cmd->add_flag("--resume", search.resume, "continue from the latest checkpoint");

  RunFlags random;
  auto* random_cmd = app.add_subcommand("random", "evaluate samples of the untrained controller");
  add_run_flags(random_cmd, random);
  random_cmd->add_option("--count", random.count, "architectures")->required()->check(CLI::PositiveNumber);
  random_cmd->add_option("--out", random.out, "output directory")->required();

  std::string genotype, config, dot_out;
  std::vector<int> hw;
  auto* decode_cmd = app.add_subcommand("decode", "validate a genotype and print its summary");
  auto* inspect_cmd = app.add_subcommand("inspect", "per-node cost report of a genotype");
  auto* dot_cmd = app.add_subcommand("export-dot", "write the compiled graph as Graphviz");
  for (auto* cmd : {decode_cmd, inspect_cmd, dot_cmd}) {
    cmd->add_option("--genotype", genotype, "genotype JSON file")->required();
    cmd->add_option("--config", config, "configuration file for the search space")
        ->check(CLI::ExistingFile);
  }
  inspect_cmd->add_option("--input-hw", hw, "input height and width")
      ->expected(2)
      ->check(CLI::PositiveNumber);
  dot_cmd->add_option("--out", dot_out, "output .dot file (standard output when absent)");

  AnalyzeFlags analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "summarize a search log");
  analyze_cmd->add_option("--log", analyze.log, "search log (JSON lines)")->required();
  analyze_cmd->add_option("--report", analyze.report, "report kind")
      ->required()
      ->check(CLI::IsMember({"rewards", "strides", "templates", "params", "spearman"}));
  analyze_cmd->add_option("--min-reward", analyze.min_reward, "drop records below this reward");
  analyze_cmd->add_option("--window", analyze.window, "records per window")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--top", analyze.top, "templates listed by the templates report")
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--csv", analyze.csv, "also write the table as CSV");

  RerankFlags rerank;
  auto* rerank_cmd = app.add_subcommand("rerank", "rank the last K architectures under two setups");
  rerank_cmd->add_option("--log", rerank.log, "search log (JSON lines)")->required();
  rerank_cmd->add_option("--count", rerank.run.count, "architectures")->required()->check(CLI::Range(3, 1 << 30));
  rerank_cmd->add_option("--out", rerank.run.out, "output log with both rewards")->required();
  rerank_cmd->add_option("--config", rerank.run.config, "configuration file")->check(CLI::ExistingFile);
  rerank_cmd->add_option("--seed", rerank.run.seed, "seed for every random component");
  rerank_cmd->add_option("--evaluator", rerank.run.evaluator, "short setup");
  rerank_cmd->add_option("--long-evaluator", rerank.long_evaluator,
                         "long setup: surrogate (long-training variant) or external:<command>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*search_cmd) return cmd_search(search);
    if (*random_cmd) return cmd_random(random);
    if (*decode_cmd) return cmd_decode(genotype, config);
    if (*inspect_cmd) return cmd_inspect(genotype, config, hw);
    if (*dot_cmd) return cmd_export_dot(genotype, config, dot_out);
    if (*analyze_cmd) return cmd_analyze(analyze);
    if (*rerank_cmd) return cmd_rerank(rerank);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const EvaluatorError& e) {
    std::cerr << "evaluator failure: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}
