#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oss/errors.hpp"
#include "oss/feature_table.hpp"
#include "oss/osscore.hpp"
#include "oss/rng.hpp"
#include "oss/stats.hpp"

namespace oss {

struct SubsetSearchConfig {
  std::size_t z = 100;        // candidate subsets
  double fraction = 0.1;      // subset size as a fraction of the image count
  std::uint64_t seed = 0;
  bool include_full_set = false;

  void validate() const {
    if (z < 1) throw domain_error("subset search: z must be >= 1");
    if (!(fraction > 0.0) || fraction > 1.0)
      throw domain_error("subset search: fraction must be in (0, 1]");
  }
};

struct SubsetSearchResult {
  std::vector<std::string> best_subset;  // image ids, ascending
  std::size_t best_index = 0;
  double oss_z = 0.0;
  std::vector<double> candidate_scores;   // one per candidate; 0 where excluded
  std::vector<bool> candidate_excluded;   // candidates that could not be scored
  std::optional<double> full_set_score;   // present when include_full_set
  std::uint64_t seed = 0;
};

namespace detail {

// Candidate membership depends only on (seed, index), so a shorter search with
// the same seed walks a prefix of the same subsets.
inline std::vector<std::size_t> draw_subset(std::uint64_t seed, std::size_t index,
                                            std::size_t universe, std::size_t count) {
  RandomStream rs(derive_seed(seed, "subset", index));
  std::vector<std::size_t> ids(universe);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t t = 0; t < count; ++t)
    std::swap(ids[t], ids[t + static_cast<std::size_t>(rs.below(universe - t))]);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace detail

// Draws z image-level subsets of the validation table, scores them all against
// the alternative set in one pass (so the scale normalization spans the whole
// candidate pool), and returns the argmax.
inline SubsetSearchResult subsample_search(const FeatureTable& val_table,
                                           const FeatureTable& alt_table,
                                           const SubsetSearchConfig& search_config,
                                           const OSSConfig& oss_config,
                                           const std::map<std::string, std::string>& aliases = {}) {
  search_config.validate();
  oss_config.validate();
  if (val_table.rows.empty()) throw domain_error("subset search: validation table is empty");
  if (alt_table.rows.empty()) throw domain_error("subset search: alternative table is empty");

  std::set<std::string> id_set;
  for (const auto& row : val_table.rows) id_set.insert(row.image_id);
  const std::vector<std::string> image_ids(id_set.begin(), id_set.end());
  const std::size_t n_images = image_ids.size();

  const auto needed = static_cast<std::size_t>(std::ceil(1.0 / search_config.fraction));
  if (n_images < needed)
    throw domain_error("subset search: validation set has too few images for the fraction");
  const std::size_t subset_size = std::min(
      n_images,
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::llround(search_config.fraction * static_cast<double>(n_images)))));

  std::vector<std::vector<std::size_t>> picks(search_config.z);
  std::vector<FeatureTable> candidates;
  candidates.reserve(search_config.z + 1);
  for (std::size_t i = 0; i < search_config.z; ++i) {
    picks[i] = detail::draw_subset(search_config.seed, i, n_images, subset_size);
    std::set<std::string> chosen;
    for (std::size_t idx : picks[i]) chosen.insert(image_ids[idx]);

    FeatureTable sub;
    sub.set_id = val_table.set_id + "@" + std::to_string(i);
    sub.feature_schema = val_table.feature_schema;
    sub.class_catalog = val_table.class_catalog;
    for (const auto& row : val_table.rows)
      if (chosen.count(row.image_id)) sub.rows.push_back(row);
    candidates.push_back(std::move(sub));
  }
  if (search_config.include_full_set) {
    FeatureTable full = val_table;
    full.set_id = val_table.set_id + "@full";
    candidates.push_back(std::move(full));
  }

  const auto outcomes = oss_detailed(candidates, alt_table, oss_config, aliases);

  SubsetSearchResult result;
  result.seed = search_config.seed;
  result.candidate_scores.assign(search_config.z, 0.0);
  result.candidate_excluded.assign(search_config.z, false);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < search_config.z; ++i) {
    if (!outcomes[i].ok) {
      result.candidate_excluded[i] = true;
      continue;
    }
    result.candidate_scores[i] = outcomes[i].result.oss;
    if (!best || outcomes[i].result.oss > result.candidate_scores[*best]) best = i;
  }
  if (!best) throw domain_error("subset search: every candidate subset was excluded");
  result.best_index = *best;
  result.oss_z = result.candidate_scores[*best];
  for (std::size_t idx : picks[*best]) result.best_subset.push_back(image_ids[idx]);
  if (search_config.include_full_set && outcomes.back().ok)
    result.full_set_score = outcomes.back().result.oss;
  return result;
}

struct MethodScore {
  std::string id;
  double oss = 0.0;
};

struct RankingReport {
  std::vector<std::string> method_ids;  // input order
  std::vector<double> oss_scores;
  std::vector<double> map_scores;  // empty when no external scores given
  std::vector<int> oss_ranks;      // permutation of 1..m, aligned with method_ids
  std::vector<int> map_ranks;      // empty when no external scores given
  std::optional<CorrelationResult> pearson;  // oss vs map, raw scores
  std::optional<CorrelationResult> kendall;  // between the two rank lists
};

namespace detail {

// Descending by score; equal scores fall back to the lexicographically
// smaller id so rankings are reproducible.
inline std::vector<int> ranks_desc(const std::vector<std::string>& ids,
                                   const std::vector<double>& scores) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  std::vector<int> ranks(ids.size());
  for (std::size_t t = 0; t < order.size(); ++t) ranks[order[t]] = static_cast<int>(t) + 1;
  return ranks;
}

inline void check_methods(const std::vector<MethodScore>& methods, std::size_t minimum) {
  if (methods.size() < minimum) throw domain_error("ranking: too few methods");
  std::set<std::string> seen;
  for (const auto& m : methods)
    if (!seen.insert(m.id).second) throw domain_error("ranking: duplicate method id '" + m.id + "'");
}

}  // namespace detail

inline RankingReport rank_methods(const std::vector<MethodScore>& methods) {
  detail::check_methods(methods, 2);
  RankingReport report;
  for (const auto& m : methods) {
    report.method_ids.push_back(m.id);
    report.oss_scores.push_back(m.oss);
  }
  report.oss_ranks = detail::ranks_desc(report.method_ids, report.oss_scores);
  return report;
}

inline RankingReport rank_methods(const std::vector<OSSResult>& results) {
  std::vector<MethodScore> methods;
  for (const auto& r : results) methods.push_back({r.set_id, r.oss});
  return rank_methods(methods);
}

inline RankingReport correlate_with_map(const std::vector<MethodScore>& methods,
                                        const std::vector<double>& map_scores) {
  detail::check_methods(methods, 3);
  if (map_scores.size() != methods.size())
    throw domain_error("ranking: oss and map score lists differ in length");
  RankingReport report = rank_methods(methods);
  report.map_scores = map_scores;
  report.map_ranks = detail::ranks_desc(report.method_ids, map_scores);
  report.pearson = pearson(report.oss_scores, map_scores);
  std::vector<double> a(report.oss_ranks.begin(), report.oss_ranks.end());
  std::vector<double> b(report.map_ranks.begin(), report.map_ranks.end());
  report.kendall = kendall_tau(a, b);
  return report;
}

inline std::pair<std::vector<std::string>, std::vector<std::string>> eliminate(
    const RankingReport& ranking, std::size_t keep_top) {
  const std::size_t m = ranking.method_ids.size();
  if (keep_top < 1 || keep_top > m) throw domain_error("eliminate: keep_top out of range");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ranking.oss_ranks[a] < ranking.oss_ranks[b]; });
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (std::size_t t = 0; t < m; ++t) {
    auto& bucket = t < keep_top ? out.first : out.second;
    bucket.push_back(ranking.method_ids[order[t]]);
  }
  return out;
}

// costs[0] is the warm-up iteration; stopping before training iteration i
// saves everything from i on, while a metric that needs the trained model
// still pays for iteration i itself.
inline std::pair<double, double> savings(const std::vector<double>& costs, std::size_t i) {
  if (costs.size() < 2) throw domain_error("savings: cost table needs at least two iterations");
  for (double c : costs)
    if (!(c >= 0.0)) throw domain_error("savings: costs must be non-negative");
  const std::size_t n_i = costs.size() - 1;
  if (i < 1 || i > n_i - 1) throw domain_error("savings: iteration index out of range");
  double s_oss = 0.0;
  for (std::size_t t = i; t <= n_i; ++t) s_oss += costs[t];
  return {s_oss, s_oss - costs[i]};
}

struct SavingsRow {
  std::size_t iteration = 0;
  double s_oss = 0.0;
  double s_map = 0.0;
};

inline std::vector<SavingsRow> savings_table(const std::vector<double>& costs) {
  if (costs.size() < 3) throw domain_error("savings: cost table too short for a savings table");
  std::vector<SavingsRow> rows;
  for (std::size_t i = 1; i + 1 < costs.size(); ++i) {
    const auto [s_oss, s_map] = savings(costs, i);
    rows.push_back({i, s_oss, s_map});
  }
  return rows;
}

// Two-column CSV (iteration, gpu_hours); a non-numeric header line is allowed.
inline std::vector<double> parse_cost_csv(std::istream& in) {
  std::vector<std::pair<long long, double>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string it_text, cost_text;
    if (!std::getline(fields, it_text, ',') || !std::getline(fields, cost_text))
      throw parse_error("cost csv: expected two comma-separated columns at line " +
                        std::to_string(line_no));
    try {
      std::size_t used = 0;
      const long long it = std::stoll(it_text, &used);
      if (used != it_text.size()) throw std::invalid_argument(it_text);
      const double cost = std::stod(cost_text);
      entries.emplace_back(it, cost);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw parse_error("cost csv: malformed row at line " + std::to_string(line_no));
    }
  }
  if (entries.empty()) throw parse_error("cost csv: no cost rows");
  std::sort(entries.begin(), entries.end());
  std::vector<double> costs;
  for (std::size_t t = 0; t < entries.size(); ++t) {
    if (entries[t].first != static_cast<long long>(t))
      throw parse_error("cost csv: iterations must be contiguous from 0");
    costs.push_back(entries[t].second);
  }
  return costs;
}

}  // namespace oss
