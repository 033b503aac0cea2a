#include "tnas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace tnas {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());

  auto has_ties = [](std::vector<double> r) {
    std::sort(r.begin(), r.end());
    return std::adjacent_find(r.begin(), r.end()) != r.end();
  };
  if (!has_ties(rx) && !has_ties(ry)) {
    double d2 = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
  }
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;  // a constant input carries no ranking
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<ProportionWindow> downsampling_proportions(std::span<const SearchRecord> log,
                                                       int window) {
  if (window <= 0) throw std::invalid_argument("window must be positive");
  if (log.empty()) throw std::invalid_argument("empty log");
  int max_factor = 8;
  for (const auto& r : log) max_factor = std::max(max_factor, r.summary.downsample_factor);
  std::vector<int> factors;
  for (int f = 1; f <= max_factor; f *= 2) factors.push_back(f);

  std::vector<ProportionWindow> out;
  for (std::size_t start = 0; start < log.size(); start += static_cast<std::size_t>(window)) {
    const std::size_t end = std::min(log.size(), start + static_cast<std::size_t>(window));
    ProportionWindow w;
    w.start = static_cast<std::int64_t>(start);
    w.count = static_cast<std::int64_t>(end - start);
    w.factors = factors;
    w.shares.assign(factors.size(), 0.0);
    for (std::size_t i = start; i < end; ++i) {
      const int f = log[i].summary.downsample_factor;
      const auto pos = std::find(factors.begin(), factors.end(), f);
      if (pos == factors.end()) throw std::invalid_argument("downsampling factor is not a power of two");
      w.shares[static_cast<std::size_t>(pos - factors.begin())] += 1.0;
    }
    for (double& s : w.shares) s /= static_cast<double>(w.count);
    out.push_back(std::move(w));
  }
  return out;
}

Grouping parse_grouping(const std::string& name) {
  if (name == "downsample_factor" || name == "strides") return Grouping::DownsampleFactor;
  if (name == "param_bucket" || name == "params") return Grouping::ParamBucket;
  if (name == "template_id" || name == "templates") return Grouping::Template;
  if (name == "window" || name == "rewards") return Grouping::Window;
  throw std::invalid_argument("unknown grouping '" + name + "'");
}

double quantile_sorted(std::span<const double> s, double q) {
  if (s.empty()) return 0.0;
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

namespace {

std::set<int> templates_used(const Genotype& g) {
  std::set<int> used;
  for (const auto& b : g.blocks)
    if (b.template_id >= 0 && b.template_id < static_cast<int>(g.templates.size()))
      used.insert(canonical_index(g.templates[b.template_id]));
  return used;
}

GroupStats stats_of(std::int64_t key, std::string label, std::vector<double> rewards) {
  std::sort(rewards.begin(), rewards.end());
  GroupStats g;
  g.key = key;
  g.label = std::move(label);
  g.count = static_cast<std::int64_t>(rewards.size());
  g.min = rewards.front();
  g.max = rewards.back();
  g.q1 = quantile_sorted(rewards, 0.25);
  g.median = quantile_sorted(rewards, 0.5);
  g.q3 = quantile_sorted(rewards, 0.75);
  g.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(g.count);
  return g;
}

}  // namespace

std::vector<GroupStats> reward_by_group(std::span<const SearchRecord> log, Grouping grouping,
                                        const GroupOptions& options) {
  if (grouping == Grouping::ParamBucket && options.param_bucket <= 0)
    throw std::invalid_argument("parameter bucket width must be positive");
  if (grouping == Grouping::Window && options.window <= 0)
    throw std::invalid_argument("window must be positive");
  std::map<std::int64_t, std::vector<double>> groups;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& r = log[i];
    if (r.reward < options.min_reward) continue;
    switch (grouping) {
      case Grouping::DownsampleFactor:
        groups[r.summary.downsample_factor].push_back(r.reward);
        break;
      case Grouping::ParamBucket:
        groups[r.summary.params / options.param_bucket].push_back(r.reward);
        break;
      case Grouping::Template:
        for (int t : templates_used(r.genotype)) groups[t].push_back(r.reward);
        break;
      case Grouping::Window:
        groups[static_cast<std::int64_t>(i) / options.window].push_back(r.reward);
        break;
    }
  }
  const auto universe = template_universe();
  std::vector<GroupStats> out;
  for (auto& [key, rewards] : groups) {
    std::string label;
    switch (grouping) {
      case Grouping::DownsampleFactor: label = "x" + std::to_string(key); break;
      case Grouping::ParamBucket:
        label = std::to_string(key * options.param_bucket / 1000) + "K-" +
                std::to_string((key + 1) * options.param_bucket / 1000) + "K";
        break;
      case Grouping::Template: label = to_string(universe.at(static_cast<std::size_t>(key))); break;
      case Grouping::Window:
        label = std::to_string(key * options.window) + "-" +
                std::to_string((key + 1) * options.window - 1);
        break;
    }
    out.push_back(stats_of(key, std::move(label), std::move(rewards)));
  }
  return out;
}

std::vector<TemplateScore> top_templates(std::span<const SearchRecord> log, int k,
                                         double min_reward) {
  if (k <= 0) throw std::invalid_argument("k must be positive");
  GroupOptions opt;
  opt.min_reward = min_reward;
  const auto groups = reward_by_group(log, Grouping::Template, opt);
  const auto universe = template_universe();
  std::vector<TemplateScore> scores;
  for (const auto& g : groups)
    scores.push_back({universe.at(static_cast<std::size_t>(g.key)), g.mean, g.count});
  std::stable_sort(scores.begin(), scores.end(), [](const TemplateScore& a, const TemplateScore& b) {
    if (a.mean_reward != b.mean_reward) return a.mean_reward > b.mean_reward;
    if (a.count != b.count) return a.count > b.count;
    return canonical_index(a.templ) < canonical_index(b.templ);
  });
  if (static_cast<int>(scores.size()) > k) scores.resize(static_cast<std::size_t>(k));
  return scores;
}

nlohmann::json to_json(const GroupStats& g) {
  return {{"key", g.key},   {"label", g.label}, {"count", g.count},   {"min", g.min},
          {"q1", g.q1},     {"median", g.median}, {"q3", g.q3},     {"max", g.max},
          {"mean", g.mean}};
}

nlohmann::json to_json(const ProportionWindow& w) {
  nlohmann::json shares = nlohmann::json::object();
  for (std::size_t i = 0; i < w.factors.size(); ++i) shares[std::to_string(w.factors[i])] = w.shares[i];
  return {{"start", w.start}, {"count", w.count}, {"shares", shares}};
}

}  // namespace tnas
