#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oss/config.hpp"
#include "oss/errors.hpp"
#include "oss/osscore.hpp"
#include "oss/select.hpp"

namespace oss {

// Shortest decimal form that round-trips back to the same double; locale
// independent, so report bytes never depend on the host environment.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string quoted = "\"";
  for (const char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

// Common report header: tool identity, command, and the root seed, so every
// report file is reproducible from its own contents.
inline nlohmann::ordered_json report_envelope(const std::string& command, std::uint64_t seed) {
  nlohmann::ordered_json doc;
  doc["tool"] = "osskit";
  doc["report_version"] = 1;
  doc["command"] = command;
  doc["seed"] = seed;
  return doc;
}

inline nlohmann::ordered_json class_outcome_to_json(const ClassOutcome& outcome) {
  nlohmann::ordered_json doc;
  doc["class_id"] = outcome.class_id;
  doc["class_name"] = outcome.class_name;
  doc["included"] = outcome.included;
  if (!outcome.included) doc["exclusion_reason"] = outcome.exclusion_reason;
  doc["jsd"] = outcome.jsd;
  doc["r"] = outcome.r;
  doc["w"] = outcome.w;
  doc["count_p"] = outcome.count_p;
  doc["count_q"] = outcome.count_q;
  return doc;
}

inline nlohmann::ordered_json oss_result_to_json(const OSSResult& result) {
  nlohmann::ordered_json doc;
  doc["set_id"] = result.set_id;
  doc["oss"] = result.oss;
  doc["beta"] = result.beta;
  doc["weighting_active"] = result.weighting_active;
  doc["included_classes"] = result.included_classes;
  doc["n_det"] = result.n_det;
  doc["unmapped_rows"] = result.unmapped_rows;
  auto& classes = doc["classes"] = nlohmann::ordered_json::array();
  for (const auto& outcome : result.classes) classes.push_back(class_outcome_to_json(outcome));
  return doc;
}

inline nlohmann::ordered_json oss_report_json(const std::string& command,
                                              const std::vector<OSSResult>& results,
                                              const OSSConfig& config) {
  auto doc = report_envelope(command, config.seed);
  doc["config"] = oss_config_to_json(config);
  auto& out = doc["results"] = nlohmann::ordered_json::array();
  for (const auto& result : results) out.push_back(oss_result_to_json(result));
  return doc;
}

inline std::string oss_report_csv(const std::vector<OSSResult>& results) {
  std::string out = "set_id,oss,beta,weighting_active,included_classes,n_det,unmapped_rows\n";
  for (const auto& result : results) {
    out += csv_field(result.set_id);
    out += ',' + format_double(result.oss);
    out += ',' + format_double(result.beta);
    out += result.weighting_active ? ",1" : ",0";
    out += ',' + std::to_string(result.included_classes);
    out += ',' + std::to_string(result.n_det);
    out += ',' + std::to_string(result.unmapped_rows);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json variant_suite_json(
    const std::string& command,
    const std::vector<std::pair<std::string, std::vector<OSSResult>>>& suite,
    const OSSConfig& config) {
  auto doc = report_envelope(command, config.seed);
  doc["config"] = oss_config_to_json(config);
  auto& variants = doc["variants"] = nlohmann::ordered_json::array();
  for (const auto& [name, results] : suite) {
    nlohmann::ordered_json block;
    block["variant"] = name;
    auto& out = block["results"] = nlohmann::ordered_json::array();
    for (const auto& result : results) out.push_back(oss_result_to_json(result));
    variants.push_back(std::move(block));
  }
  return doc;
}

inline std::string variant_suite_csv(
    const std::vector<std::pair<std::string, std::vector<OSSResult>>>& suite) {
  std::string out = "variant,set_id,oss,beta,weighting_active,included_classes,n_det\n";
  for (const auto& [name, results] : suite) {
    for (const auto& result : results) {
      out += csv_field(name);
      out += ',' + csv_field(result.set_id);
      out += ',' + format_double(result.oss);
      out += ',' + format_double(result.beta);
      out += result.weighting_active ? ",1" : ",0";
      out += ',' + std::to_string(result.included_classes);
      out += ',' + std::to_string(result.n_det);
      out += '\n';
    }
  }
  return out;
}

inline nlohmann::ordered_json subset_report_json(const std::string& command,
                                                 const SubsetSearchResult& result,
                                                 const SubsetSearchConfig& search_config,
                                                 const OSSConfig& oss_config) {
  auto doc = report_envelope(command, search_config.seed);
  nlohmann::ordered_json sc = subset_config_to_json(search_config);
  doc["subset_config"] = std::move(sc);
  doc["oss_config"] = oss_config_to_json(oss_config);
  doc["best_index"] = result.best_index;
  doc["oss_z"] = result.oss_z;
  if (result.full_set_score) doc["full_set_score"] = *result.full_set_score;
  doc["best_subset"] = result.best_subset;
  auto& candidates = doc["candidates"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.candidate_scores.size(); ++i) {
    nlohmann::ordered_json row;
    row["index"] = i;
    row["oss"] = result.candidate_scores[i];
    row["excluded"] = static_cast<bool>(result.candidate_excluded[i]);
    candidates.push_back(std::move(row));
  }
  return doc;
}

inline std::string subset_report_csv(const SubsetSearchResult& result) {
  std::string out = "candidate,oss,excluded,best\n";
  for (std::size_t i = 0; i < result.candidate_scores.size(); ++i) {
    out += std::to_string(i);
    out += ',' + format_double(result.candidate_scores[i]);
    out += result.candidate_excluded[i] ? ",1" : ",0";
    out += (i == result.best_index) ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json correlation_to_json(const CorrelationResult& result) {
  nlohmann::ordered_json doc;
  doc["statistic"] = result.statistic;
  if (result.p_value) doc["p_value"] = *result.p_value;
  doc["n"] = result.n;
  return doc;
}

inline nlohmann::ordered_json ranking_report_json(const std::string& command,
                                                  const RankingReport& report,
                                                  std::uint64_t seed) {
  auto doc = report_envelope(command, seed);
  auto& methods = doc["methods"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.method_ids.size(); ++i) {
    nlohmann::ordered_json row;
    row["id"] = report.method_ids[i];
    row["oss"] = report.oss_scores[i];
    row["oss_rank"] = report.oss_ranks[i];
    if (!report.map_scores.empty()) {
      row["map"] = report.map_scores[i];
      row["map_rank"] = report.map_ranks[i];
    }
    methods.push_back(std::move(row));
  }
  if (report.pearson) doc["pearson"] = correlation_to_json(*report.pearson);
  if (report.kendall) doc["kendall"] = correlation_to_json(*report.kendall);
  return doc;
}

inline std::string ranking_report_csv(const RankingReport& report) {
  const bool with_map = !report.map_scores.empty();
  std::string out = with_map ? "id,oss,oss_rank,map,map_rank\n" : "id,oss,oss_rank\n";
  for (std::size_t i = 0; i < report.method_ids.size(); ++i) {
    out += csv_field(report.method_ids[i]);
    out += ',' + format_double(report.oss_scores[i]);
    out += ',' + std::to_string(report.oss_ranks[i]);
    if (with_map) {
      out += ',' + format_double(report.map_scores[i]);
      out += ',' + std::to_string(report.map_ranks[i]);
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json elimination_report_json(const std::string& command,
                                                      const std::vector<std::string>& kept,
                                                      const std::vector<std::string>& dropped,
                                                      int keep_top, std::uint64_t seed) {
  auto doc = report_envelope(command, seed);
  doc["keep_top"] = keep_top;
  doc["kept"] = kept;
  doc["dropped"] = dropped;
  return doc;
}

inline std::string elimination_report_csv(const std::vector<std::string>& kept,
                                          const std::vector<std::string>& dropped) {
  std::string out = "id,status\n";
  for (const auto& id : kept) out += csv_field(id) + ",kept\n";
  for (const auto& id : dropped) out += csv_field(id) + ",dropped\n";
  return out;
}

inline nlohmann::ordered_json savings_report_json(const std::string& command,
                                                  const std::vector<double>& costs,
                                                  const std::vector<SavingsRow>& rows) {
  auto doc = report_envelope(command, 0);
  doc["costs"] = costs;
  auto& table = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json item;
    item["iteration"] = row.iteration;
    item["s_oss"] = row.s_oss;
    item["s_map"] = row.s_map;
    table.push_back(std::move(item));
  }
  return doc;
}

inline std::string savings_report_csv(const std::vector<SavingsRow>& rows) {
  std::string out = "iteration,s_oss,s_map\n";
  for (const auto& row : rows) {
    out += std::to_string(row.iteration);
    out += ',' + format_double(row.s_oss);
    out += ',' + format_double(row.s_map);
    out += '\n';
  }
  return out;
}

// Serialized reports end with a single trailing newline.
inline std::string json_text(const nlohmann::ordered_json& doc) { return doc.dump(2) + '\n'; }

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw io_error("failed writing '" + path.string() + "'");
}

// format: "json", "csv", or "both". Returns the paths written.
inline std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                       const std::string& stem,
                                                       const nlohmann::ordered_json& doc,
                                                       const std::string& csv,
                                                       const std::string& format = "both") {
  if (format != "json" && format != "csv" && format != "both")
    throw domain_error("report format must be json, csv, or both");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory '" + dir.string() + "'");
  std::vector<std::filesystem::path> written;
  if (format != "csv") {
    auto path = dir / (stem + ".json");
    write_text_file(path, json_text(doc));
    written.push_back(std::move(path));
  }
  if (format != "json") {
    auto path = dir / (stem + ".csv");
    write_text_file(path, csv);
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace oss
