#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "oss/divergence.hpp"
#include "oss/errors.hpp"
#include "oss/feature_table.hpp"
#include "oss/kde.hpp"
#include "oss/parallel.hpp"
#include "oss/rng.hpp"
#include "oss/stats.hpp"

namespace oss {

struct OSSConfig {
  double c_w = 1.0;                  // CV activation threshold for class weighting
  int k_neighbors = 1;               // kNN order of the divergence estimator
  std::size_t kde_sample_size = 1000;  // equalized draw size per class
  std::uint64_t seed = 0;
  std::size_t min_class_crops = 5;   // per side, for KDE viability
  int threads = 0;

  // Ablation toggles.
  bool disable_r = false;      // drop the count-ratio term entirely
  bool raw_count_r = false;    // r_j = n_j(P) instead of the smoothed ratio
  bool disable_jsd = false;    // force JSD_j = 0
  bool disable_t1 = false;     // r_j = beta * ratio (no sigmoid smoothing)
  bool disable_beta = false;   // beta = 1 regardless of set sizes
  bool disable_weights = false;  // w_j = 1 regardless of CV

  // Debug-only variant: one pooled JSD instead of the per-class reading.
  bool global_jsd = false;

  void validate() const {
    if (!(c_w > 0.0)) throw domain_error("oss config: C_w must be positive");
    if (k_neighbors < 1) throw domain_error("oss config: k_neighbors must be >= 1");
    if (kde_sample_size < 2 * (static_cast<std::size_t>(k_neighbors) + 1))
      throw domain_error("oss config: kde_sample_size too small for k_neighbors");
    if (min_class_crops < 2) throw domain_error("oss config: min_class_crops must be >= 2");
    if (disable_r && disable_jsd)
      throw domain_error("oss config: disabling both the ratio and JSD terms leaves nothing to score");
  }
};

struct ClassOutcome {
  std::uint32_t class_id = 0;  // index into the reference catalog
  std::string class_name;
  double jsd = 0.0;
  double r = 0.0;
  double w = 1.0;
  bool included = false;
  std::string exclusion_reason;  // empty when included
  std::size_t count_p = 0;
  std::size_t count_q = 0;
};

struct OSSResult {
  std::string set_id;
  double oss = 0.0;
  double beta = 1.0;
  bool weighting_active = false;
  std::size_t included_classes = 0;
  std::size_t n_det = 0;           // mapped crops in this comparison set
  std::size_t unmapped_rows = 0;   // rows whose class has no catalog match
  std::vector<ClassOutcome> classes;  // one entry per reference-catalog class
  OSSConfig config;
};

// Per-set outcome that keeps failures inline instead of throwing, so searches
// over many candidate sets can skip the bad ones.
struct OSSOutcome {
  bool ok = false;
  OSSResult result;
  std::string error_message;
};

// beta = max(1, n_det(m) / Q1 of all comparison-set counts); identity for a
// single set or when disabled.
inline double beta_factor(const std::vector<double>& n_det_all, std::size_t m_index,
                          bool disabled = false) {
  if (n_det_all.empty() || m_index >= n_det_all.size())
    throw domain_error("beta_factor: set index out of range");
  if (disabled || n_det_all.size() == 1) return 1.0;
  const double q1 = percentile(n_det_all, 25.0);
  if (q1 <= 0.0) throw domain_error("beta_factor: zero 25th percentile of set sizes");
  return std::max(1.0, n_det_all[m_index] / q1);
}

// Smoothed class-count ratio r_j; the toggles swap in the ablated forms.
inline double count_ratio(double n_j_p, double n_j_q, double beta, const OSSConfig& config) {
  if (config.raw_count_r) return n_j_p;
  if (n_j_q < 1.0) throw domain_error("count_ratio: reference class count must be >= 1");
  const double scaled = beta * (n_j_p / n_j_q);
  if (config.disable_t1) return scaled;
  return 0.25 * scaled + 0.5;  // first-order sigmoid approximation around 0
}

struct WeightInfo {
  std::vector<double> weights;       // per catalog class
  bool active = false;
  std::vector<bool> excluded;        // true where w_j < Q1(w), only when active
  double cv = 0.0;                   // coefficient of variation of the candidates
};

// Candidate w_j = average class proportion across the k comparison sets; the
// weights only take effect when their spread clears the activation threshold.
inline WeightInfo class_weights(const std::vector<std::vector<double>>& counts_per_set, double c_w,
                                bool disabled = false) {
  if (counts_per_set.empty()) throw domain_error("class_weights: no comparison sets");
  const std::size_t c = counts_per_set.front().size();
  if (c == 0) throw domain_error("class_weights: empty class catalog");

  std::vector<double> candidate(c, 0.0);
  for (const auto& counts : counts_per_set) {
    if (counts.size() != c) throw domain_error("class_weights: ragged count vectors");
    const double n_det = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (n_det <= 0.0) throw domain_error("class_weights: comparison set with no detections");
    for (std::size_t j = 0; j < c; ++j) candidate[j] += counts[j] / n_det;
  }
  for (auto& w : candidate) w /= static_cast<double>(counts_per_set.size());

  WeightInfo info;
  info.cv = coefficient_of_variation(candidate);
  info.excluded.assign(c, false);
  if (disabled || info.cv <= c_w) {
    info.weights.assign(c, 1.0);
    info.active = false;
    return info;
  }
  info.active = true;
  info.weights = candidate;
  const double q1 = percentile(candidate, 25.0);
  for (std::size_t j = 0; j < c; ++j) info.excluded[j] = candidate[j] < q1;
  return info;
}

// JSD between two per-class feature samples after KDE equalization.
inline DivergenceEstimate per_class_divergence(const Eigen::MatrixXd& rows_p,
                                               const Eigen::MatrixXd& rows_q,
                                               const OSSConfig& config, std::uint64_t seed) {
  if (config.disable_jsd) return DivergenceEstimate{0.0, config.k_neighbors, 0, false};
  const KDEModel kde_p = fit_kde(rows_p);
  const KDEModel kde_q = fit_kde(rows_q);
  return jsd_knn(kde_p, kde_q, config.kde_sample_size, config.k_neighbors, seed);
}

namespace detail {

inline std::string lower_ascii(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Class-id remapping from a table's own catalog into the reference catalog:
// explicit aliases first, then case-insensitive name match. Unmatched classes
// map to -1 and their rows are ignored.
inline std::vector<std::int64_t> catalog_mapping(
    const std::vector<std::string>& from_catalog, const std::vector<std::string>& to_catalog,
    const std::map<std::string, std::string>& aliases) {
  std::map<std::string, std::size_t> to_index;
  for (std::size_t i = 0; i < to_catalog.size(); ++i)
    to_index.emplace(lower_ascii(to_catalog[i]), i);

  std::vector<std::int64_t> mapping(from_catalog.size(), -1);
  for (std::size_t i = 0; i < from_catalog.size(); ++i) {
    std::string name = from_catalog[i];
    const auto alias = aliases.find(name);
    if (alias != aliases.end()) name = alias->second;
    const auto it = to_index.find(lower_ascii(name));
    if (it != to_index.end()) mapping[i] = static_cast<std::int64_t>(it->second);
  }
  return mapping;
}

struct MappedSet {
  std::vector<std::size_t> counts;             // per reference-catalog class
  std::vector<Eigen::MatrixXd> rows_by_class;  // feature rows per class
  std::size_t n_det = 0;
  std::size_t unmapped = 0;
};

inline MappedSet map_table(const FeatureTable& table, const std::vector<std::string>& ref_catalog,
                           const std::map<std::string, std::string>& aliases) {
  const auto mapping = catalog_mapping(table.class_catalog, ref_catalog, aliases);
  const std::size_t c = ref_catalog.size();
  const std::size_t d = table.dim();

  MappedSet mapped;
  mapped.counts.assign(c, 0);
  for (const auto& row : table.rows) {
    if (row.class_id >= mapping.size() || mapping[row.class_id] < 0) {
      ++mapped.unmapped;
      continue;
    }
    ++mapped.counts[static_cast<std::size_t>(mapping[row.class_id])];
  }
  mapped.n_det = std::accumulate(mapped.counts.begin(), mapped.counts.end(), std::size_t{0});

  mapped.rows_by_class.resize(c);
  std::vector<Eigen::Index> cursor(c, 0);
  for (std::size_t j = 0; j < c; ++j)
    mapped.rows_by_class[j].resize(static_cast<Eigen::Index>(mapped.counts[j]),
                                   static_cast<Eigen::Index>(d));
  for (const auto& row : table.rows) {
    if (row.class_id >= mapping.size() || mapping[row.class_id] < 0) continue;
    const auto j = static_cast<std::size_t>(mapping[row.class_id]);
    for (std::size_t f = 0; f < d; ++f)
      mapped.rows_by_class[j](cursor[j], static_cast<Eigen::Index>(f)) = row.values[f];
    ++cursor[j];
  }
  return mapped;
}

}  // namespace detail

// OSS(P_m || Q) for each comparison set, with full per-class breakdowns. Bad
// sets come back as failed outcomes instead of exceptions.
inline std::vector<OSSOutcome> oss_detailed(const std::vector<FeatureTable>& tables_p,
                                            const FeatureTable& table_q, const OSSConfig& config,
                                            const std::map<std::string, std::string>& aliases = {}) {
  config.validate();
  if (tables_p.empty()) throw domain_error("oss: need at least one comparison set");
  if (table_q.rows.empty()) throw domain_error("oss: reference table is empty");
  if (table_q.class_catalog.empty()) throw domain_error("oss: reference table has no class catalog");
  {
    std::map<std::string, int> seen;
    for (const auto& name : table_q.class_catalog)
      if (++seen[detail::lower_ascii(name)] > 1)
        throw domain_error("oss: reference catalog has case-colliding class names");
  }
  for (const auto& t : tables_p) {
    if (t.dim() != table_q.dim())
      throw domain_error("oss: feature schema mismatch between comparison and reference tables");
  }

  const std::size_t k_sets = tables_p.size();
  const std::size_t c = table_q.class_catalog.size();
  const std::vector<std::size_t> q_counts = table_q.class_counts();
  const detail::MappedSet q_self = detail::map_table(table_q, table_q.class_catalog, {});

  std::vector<detail::MappedSet> mapped(k_sets);
  for (std::size_t m = 0; m < k_sets; ++m)
    mapped[m] = detail::map_table(tables_p[m], table_q.class_catalog, aliases);

  std::vector<OSSOutcome> outcomes(k_sets);
  for (std::size_t m = 0; m < k_sets; ++m) {
    outcomes[m].result.set_id = tables_p[m].set_id;
    outcomes[m].result.config = config;
    outcomes[m].result.n_det = mapped[m].n_det;
    outcomes[m].result.unmapped_rows = mapped[m].unmapped;
    if (mapped[m].n_det == 0) {
      outcomes[m].error_message = "no rows map onto the reference class catalog";
    }
  }

  // Scale normalization pool: the comparison-set detection counts. Sets that
  // failed to map are left out so they cannot zero the 25th percentile.
  std::vector<double> beta_pool;
  std::vector<std::size_t> pool_index(k_sets, 0);
  for (std::size_t m = 0; m < k_sets; ++m) {
    if (mapped[m].n_det == 0) continue;
    pool_index[m] = beta_pool.size();
    beta_pool.push_back(static_cast<double>(mapped[m].n_det));
  }

  // Class weights come from the comparison sets that actually mapped.
  std::vector<std::vector<double>> weight_counts;
  for (const auto& set : mapped) {
    if (set.n_det == 0) continue;
    std::vector<double> counts(c);
    for (std::size_t j = 0; j < c; ++j) counts[j] = static_cast<double>(set.counts[j]);
    weight_counts.push_back(std::move(counts));
  }
  WeightInfo weights;
  if (!weight_counts.empty())
    weights = class_weights(weight_counts, config.c_w, config.disable_weights);

  // Build the per-(set, class) divergence job list over included classes.
  struct Job {
    std::size_t m = 0, j = 0;
    std::uint64_t seed = 0;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < k_sets; ++m) {
    if (!outcomes[m].error_message.empty()) continue;
    auto& res = outcomes[m].result;
    res.beta = beta_factor(beta_pool, pool_index[m], config.disable_beta);
    res.weighting_active = weights.active;
    res.classes.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
      ClassOutcome& cls = res.classes[j];
      cls.class_id = static_cast<std::uint32_t>(j);
      cls.class_name = table_q.class_catalog[j];
      cls.count_p = mapped[m].counts[j];
      cls.count_q = q_counts[j];
      cls.w = weights.weights.empty() ? 1.0 : weights.weights[j];
      if (cls.count_q == 0) {
        cls.exclusion_reason = "absent_from_reference";
      } else if (cls.count_p < config.min_class_crops || cls.count_q < config.min_class_crops) {
        cls.exclusion_reason = "insufficient_samples";
      } else if (weights.active && weights.excluded[j]) {
        cls.exclusion_reason = "below_weight_threshold";
      } else {
        cls.included = true;
        if (!config.disable_jsd && !config.global_jsd)
          jobs.push_back({m, j, derive_seed(config.seed, "oss-jsd", m, j)});
      }
    }
  }

  std::vector<double> job_jsd(jobs.size(), 0.0);
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    job_jsd[i] = per_class_divergence(mapped[job.m].rows_by_class[job.j],
                                      q_self.rows_by_class[job.j], config, job.seed).value;
  });
  for (std::size_t i = 0; i < jobs.size(); ++i)
    outcomes[jobs[i].m].result.classes[jobs[i].j].jsd = job_jsd[i];

  // Debug variant: one pooled divergence shared by every included class.
  if (config.global_jsd && !config.disable_jsd) {
    for (std::size_t m = 0; m < k_sets; ++m) {
      if (!outcomes[m].error_message.empty()) continue;
      auto& res = outcomes[m].result;
      std::vector<std::size_t> incl;
      for (std::size_t j = 0; j < c; ++j)
        if (res.classes[j].included) incl.push_back(j);
      if (incl.empty()) continue;
      auto pool = [&](const detail::MappedSet& set) {
        Eigen::Index total = 0;
        for (std::size_t j : incl) total += set.rows_by_class[j].rows();
        Eigen::MatrixXd out(total, static_cast<Eigen::Index>(table_q.dim()));
        Eigen::Index at = 0;
        for (std::size_t j : incl) {
          out.middleRows(at, set.rows_by_class[j].rows()) = set.rows_by_class[j];
          at += set.rows_by_class[j].rows();
        }
        return out;
      };
      const double pooled =
          per_class_divergence(pool(mapped[m]), pool(q_self), config,
                               derive_seed(config.seed, "oss-jsd-global", m)).value;
      for (std::size_t j : incl) res.classes[j].jsd = pooled;
    }
  }

  for (std::size_t m = 0; m < k_sets; ++m) {
    if (!outcomes[m].error_message.empty()) continue;
    auto& res = outcomes[m].result;
    double sum = 0.0;
    std::size_t included = 0;
    for (auto& cls : res.classes) {
      if (!cls.included) continue;
      cls.r = config.disable_r
                  ? 0.0
                  : count_ratio(static_cast<double>(cls.count_p), static_cast<double>(cls.count_q),
                                res.beta, config);
      sum += cls.w * (cls.jsd + cls.r);
      ++included;
    }
    res.included_classes = included;
    if (included == 0) {
      outcomes[m].error_message = "no classes shared between the set and the reference";
      continue;
    }
    const double denominator = sum / static_cast<double>(included);
    if (!(denominator > 0.0) || !std::isfinite(denominator)) {
      outcomes[m].error_message = "non-positive or non-finite score denominator";
      continue;
    }
    res.oss = 1.0 / denominator;
    outcomes[m].ok = true;
  }
  return outcomes;
}

// Strict variant: any failed set raises.
inline std::vector<OSSResult> oss(const std::vector<FeatureTable>& tables_p,
                                  const FeatureTable& table_q, const OSSConfig& config,
                                  const std::map<std::string, std::string>& aliases = {}) {
  auto outcomes = oss_detailed(tables_p, table_q, config, aliases);
  std::vector<OSSResult> results;
  results.reserve(outcomes.size());
  for (auto& outcome : outcomes) {
    if (!outcome.ok)
      throw domain_error("oss: set '" + outcome.result.set_id + "': " + outcome.error_message);
    results.push_back(std::move(outcome.result));
  }
  return results;
}

// Named ablation variants, shared seed, fixed order.
inline std::vector<std::pair<std::string, std::vector<OSSResult>>> oss_variant_suite(
    const std::vector<FeatureTable>& tables_p, const FeatureTable& table_q,
    const OSSConfig& base_config, const std::map<std::string, std::string>& aliases = {}) {
  std::vector<std::pair<std::string, std::vector<OSSResult>>> out;
  auto run = [&](const std::string& name, auto mutate) {
    OSSConfig cfg = base_config;
    mutate(cfg);
    out.emplace_back(name, oss(tables_p, table_q, cfg, aliases));
  };
  run("all", [](OSSConfig&) {});
  run("no_r", [](OSSConfig& c) { c.disable_r = true; });
  run("raw_count", [](OSSConfig& c) { c.raw_count_r = true; });
  run("no_jsd", [](OSSConfig& c) { c.disable_jsd = true; });
  run("no_t1", [](OSSConfig& c) { c.disable_t1 = true; });
  run("no_beta", [](OSSConfig& c) { c.disable_beta = true; });
  run("no_weights", [](OSSConfig& c) { c.disable_weights = true; });
  return out;
}

}  // namespace oss
