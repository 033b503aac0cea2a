#ifndef TNAS_ANALYSIS_HPP_
#define TNAS_ANALYSIS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tnas/genotype.hpp"
#include "tnas/record.hpp"

namespace tnas {

// Ranks starting at 1; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation. Uses 1 - 6 sum d^2 / (n (n^2 - 1)) without ties
// and Pearson correlation of average ranks otherwise. Throws
// std::invalid_argument on length mismatch or fewer than two samples.
double spearman(std::span<const double> x, std::span<const double> y);

struct ProportionWindow {
  std::int64_t start = 0;  // position of the first record in the window
  std::int64_t count = 0;
  std::vector<int> factors;     // 1, 2, 4, ...
  std::vector<double> shares;   // parallel to factors, sums to 1
};

// Share of each downsampling factor per window of consecutive records. The
// factor set always covers {1, 2, 4, 8} and grows if larger factors appear.
std::vector<ProportionWindow> downsampling_proportions(std::span<const SearchRecord> log,
                                                       int window);

enum class Grouping { DownsampleFactor, ParamBucket, Template, Window };

Grouping parse_grouping(const std::string& name);

struct GroupOptions {
  double min_reward = 0.40;           // records below are dropped
  std::int64_t param_bucket = 50000;  // width of parameter buckets
  int window = 100;                   // records per window for Grouping::Window
};

struct GroupStats {
  std::int64_t key = 0;  // factor, bucket index, canonical template index or window index
  std::string label;
  std::int64_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

// Linear-interpolation quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

// Reward distribution per group, ordered by key. For templates, each
// architecture contributes its reward once to every distinct canonical
// template referenced by at least one of its blocks.
std::vector<GroupStats> reward_by_group(std::span<const SearchRecord> log, Grouping grouping,
                                        const GroupOptions& options = {});

struct TemplateScore {
  Template templ;  // canonical
  double mean_reward = 0;
  std::int64_t count = 0;
};

// k templates with the highest mean reward; ties by larger count, then by
// canonical code. Throws std::invalid_argument for k <= 0.
std::vector<TemplateScore> top_templates(std::span<const SearchRecord> log, int k,
                                         double min_reward = 0.0);

nlohmann::json to_json(const GroupStats& g);
nlohmann::json to_json(const ProportionWindow& w);

}  // namespace tnas

#endif  // TNAS_ANALYSIS_HPP_
