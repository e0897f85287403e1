#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oss/coco.hpp"
#include "oss/config.hpp"
#include "oss/crops.hpp"
#include "oss/feature_table.hpp"
#include "oss/features.hpp"
#include "oss/kitti.hpp"
#include "oss/osscore.hpp"
#include "oss/reports.hpp"
#include "oss/select.hpp"
#include "oss/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::string format = "both";
};

// Loads the run config (if any) and applies the flag overrides. Flags beat
// config-file values so a single file can drive many runs.
oss::RunConfig effective_config(const GlobalOptions& global) {
  oss::RunConfig config;
  if (!global.config_path.empty()) config = oss::load_run_config(global.config_path);
  if (global.seed) {
    config.oss.seed = *global.seed;
    config.subset.seed = *global.seed;
  }
  if (global.out_dir) config.output_dir = *global.out_dir;
  if (global.threads) config.oss.threads = *global.threads;
  config.validate();
  return config;
}

class Timer {
public:
  explicit Timer(std::string label, int verbosity)
      : label_(std::move(label)), verbosity_(verbosity), start_(clock::now()) {}
  // Wall time goes to stderr only; report files must stay byte-stable.
  ~Timer() {
    if (verbosity_ < 1) return;
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start_).count();
    std::cerr << label_ << ": " << ms << " ms\n";
  }

private:
  using clock = std::chrono::steady_clock;
  std::string label_;
  int verbosity_;
  clock::time_point start_;
};

oss::FeatureTable load_table(const std::string& path) {
  if (!fs::exists(path)) throw oss::io_error("feature table '" + path + "' does not exist");
  return oss::load_feature_table(path);
}

// Reads an id,score CSV (header optional). Extra columns beyond the first two
// are ignored, so the toolkit's own OSS report CSVs feed straight back in.
std::vector<oss::MethodScore> read_score_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oss::io_error("cannot open score csv '" + path + "'");
  std::vector<oss::MethodScore> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, score_text;
    if (!std::getline(fields, id, ',') || !std::getline(fields, score_text, ','))
      throw oss::parse_error("score csv '" + path + "': expected at least two columns at line " +
                             std::to_string(line_no));
    try {
      std::size_t used = 0;
      const double value = std::stod(score_text, &used);
      while (used < score_text.size() && std::isspace(static_cast<unsigned char>(score_text[used])))
        ++used;
      if (used != score_text.size()) throw std::invalid_argument(score_text);
      scores.push_back({id, value});
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header row
      throw oss::parse_error("score csv '" + path + "': malformed row at line " +
                             std::to_string(line_no));
    }
  }
  if (scores.empty()) throw oss::parse_error("score csv '" + path + "': no score rows");
  return scores;
}

std::string catalog_diagnostic(const oss::FeatureTable& comparison,
                               const oss::FeatureTable& reference) {
  std::string text = "comparison set '" + comparison.set_id + "' shares no usable classes with '" +
                     reference.set_id + "'\n  " + comparison.set_id + " classes:";
  for (const auto& name : comparison.class_catalog) text += " " + name;
  text += "\n  " + reference.set_id + " classes:";
  for (const auto& name : reference.class_catalog) text += " " + name;
  return text;
}

int cmd_extract(const GlobalOptions& global, const std::string& dataset_id) {
  const auto config = effective_config(global);
  const auto& entry = config.find_dataset(dataset_id);
  Timer timer("extract " + dataset_id, config.verbosity);

  oss::DatasetManifest manifest;
  if (entry.format == "coco")
    manifest = oss::parse_coco_file(entry.annotations, entry.images);
  else
    manifest = oss::parse_kitti(entry.annotations, entry.images);

  const fs::path out_dir = config.output_dir;
  const fs::path table_path = out_dir / (dataset_id + ".oft");
  const fs::path summary_path = out_dir / (dataset_id + ".extract.json");
  try {
    const auto crops = oss::extract_crops(manifest, 2, config.oss.threads);
    const auto featurized = oss::featurize_table(crops.crops, config.features, dataset_id,
                                                 manifest.class_catalog, config.oss.threads);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw oss::io_error("cannot create output directory '" + out_dir.string() + "'");
    oss::save_feature_table(featurized.table, table_path.string());

    auto doc = oss::report_envelope("extract", config.oss.seed);
    doc["dataset_id"] = dataset_id;
    doc["format"] = entry.format;
    doc["features"] = oss::feature_config_to_json(config.features);
    doc["images"] = manifest.images.size();
    doc["annotations"] = manifest.annotations.size();
    doc["ingest_issues"] = manifest.issues.size();
    doc["crops"] = crops.crops.size();
    doc["skipped_annotations"] = crops.skips.size();
    doc["rows"] = featurized.table.rows.size();
    doc["dropped_rows"] = featurized.dropped.size();
    doc["table_file"] = table_path.filename().string();
    auto& counts = doc["class_counts"] = nlohmann::ordered_json::object();
    const auto per_class = featurized.table.class_counts();
    for (std::size_t j = 0; j < per_class.size(); ++j)
      counts[featurized.table.class_catalog[j]] = per_class[j];
    oss::write_text_file(summary_path, oss::json_text(doc));

    if (config.verbosity >= 1)
      std::cerr << "extract " << dataset_id << ": " << featurized.table.rows.size()
                << " rows -> " << table_path.string() << '\n';
  } catch (...) {
    // Never leave partial outputs behind.
    std::error_code ec;
    fs::remove(table_path, ec);
    fs::remove(summary_path, ec);
    throw;
  }
  return 0;
}

int cmd_oss(const GlobalOptions& global, const std::vector<std::string>& comparison_paths,
            const std::string& reference_path) {
  const auto config = effective_config(global);
  Timer timer("oss", config.verbosity);

  std::vector<oss::FeatureTable> comparisons;
  for (const auto& path : comparison_paths) comparisons.push_back(load_table(path));
  const auto reference = load_table(reference_path);

  const auto outcomes =
      oss::oss_detailed(comparisons, reference, config.oss, config.combined_aliases());
  std::vector<oss::OSSResult> results;
  for (std::size_t m = 0; m < outcomes.size(); ++m) {
    if (!outcomes[m].ok)
      throw oss::domain_error(catalog_diagnostic(comparisons[m], reference) + "\n  cause: " +
                              outcomes[m].error_message);
    results.push_back(outcomes[m].result);
  }

  const auto doc = oss::oss_report_json("oss", results, config.oss);
  oss::write_report(config.output_dir, "oss", doc, oss::oss_report_csv(results), global.format);
  if (config.verbosity >= 1)
    for (const auto& result : results)
      std::cerr << "oss " << result.set_id << ": " << oss::format_double(result.oss) << '\n';
  return 0;
}

int cmd_select_val(const GlobalOptions& global, const std::string& val_path,
                   const std::string& alt_path, std::optional<std::size_t> z,
                   std::optional<double> fraction, bool include_full) {
  auto config = effective_config(global);
  if (z) config.subset.z = *z;
  if (fraction) config.subset.fraction = *fraction;
  if (include_full) config.subset.include_full_set = true;
  config.subset.validate();
  Timer timer("select-val", config.verbosity);

  const auto val_table = load_table(val_path);
  const auto alt_table = load_table(alt_path);
  const auto result = oss::subsample_search(val_table, alt_table, config.subset, config.oss,
                                            config.combined_aliases());

  const auto doc = oss::subset_report_json("select-val", result, config.subset, config.oss);
  oss::write_report(config.output_dir, "select_val", doc, oss::subset_report_csv(result),
                    global.format);
  if (config.verbosity >= 1)
    std::cerr << "select-val: candidate " << result.best_index << " of "
              << result.candidate_scores.size() << ", " << result.best_subset.size()
              << " images, oss_z " << oss::format_double(result.oss_z) << '\n';
  return 0;
}

int cmd_correlate(const GlobalOptions& global, const std::string& oss_csv,
                  const std::string& map_csv) {
  const auto config = effective_config(global);
  Timer timer("correlate", config.verbosity);

  const auto oss_scores = read_score_csv(oss_csv);
  const auto map_scores = read_score_csv(map_csv);
  std::map<std::string, double> map_by_id;
  for (const auto& entry : map_scores) map_by_id[entry.id] = entry.oss;

  std::vector<oss::MethodScore> methods;
  std::vector<double> aligned_map;
  for (const auto& entry : oss_scores) {
    const auto it = map_by_id.find(entry.id);
    if (it == map_by_id.end()) continue;
    methods.push_back(entry);
    aligned_map.push_back(it->second);
  }
  if (methods.size() < 3)
    throw oss::domain_error("correlate: need at least 3 ids present in both score files, got " +
                            std::to_string(methods.size()));

  const auto report = oss::correlate_with_map(methods, aligned_map);
  const auto doc = oss::ranking_report_json("correlate", report, config.oss.seed);
  oss::write_report(config.output_dir, "correlate", doc, oss::ranking_report_csv(report),
                    global.format);
  if (config.verbosity >= 1)
    std::cerr << "correlate: pearson " << oss::format_double(report.pearson->statistic)
              << ", kendall " << oss::format_double(report.kendall->statistic) << " over "
              << methods.size() << " methods\n";
  return 0;
}

int cmd_rank(const GlobalOptions& global, const std::string& oss_csv, int keep_top) {
  const auto config = effective_config(global);
  Timer timer("rank", config.verbosity);

  const auto scores = read_score_csv(oss_csv);
  const auto ranking = oss::rank_methods(scores);
  const int effective_keep = keep_top > 0 ? keep_top : static_cast<int>(scores.size());
  const auto [kept, dropped] = oss::eliminate(ranking, effective_keep);

  auto doc = oss::elimination_report_json("rank", kept, dropped, effective_keep, config.oss.seed);
  doc["ranking"] = oss::ranking_report_json("rank", ranking, config.oss.seed)["methods"];
  oss::write_report(config.output_dir, "rank", doc, oss::elimination_report_csv(kept, dropped),
                    global.format);
  if (config.verbosity >= 1)
    std::cerr << "rank: kept " << kept.size() << ", dropped " << dropped.size() << '\n';
  return 0;
}

int cmd_savings(const GlobalOptions& global, const std::string& cost_csv,
                std::optional<std::size_t> iteration) {
  const auto config = effective_config(global);
  Timer timer("savings", config.verbosity);

  std::ifstream in(cost_csv, std::ios::binary);
  if (!in) throw oss::io_error("cannot open cost csv '" + cost_csv + "'");
  const auto costs = oss::parse_cost_csv(in);
  const auto rows = oss::savings_table(costs);

  if (iteration) {
    const oss::SavingsRow* hit = nullptr;
    for (const auto& row : rows)
      if (row.iteration == *iteration) hit = &row;
    if (!hit)
      throw oss::domain_error("savings: iteration " + std::to_string(*iteration) +
                              " outside the valid range");
    std::cout << "S_OSS=" << oss::format_double(hit->s_oss)
              << " S_mAP=" << oss::format_double(hit->s_map) << '\n';
  }

  const auto doc = oss::savings_report_json("savings", costs, rows);
  oss::write_report(config.output_dir, "savings", doc, oss::savings_report_csv(rows),
                    global.format);
  return 0;
}

int cmd_ablate(const GlobalOptions& global, const std::vector<std::string>& comparison_paths,
               const std::string& reference_path) {
  const auto config = effective_config(global);
  Timer timer("ablate", config.verbosity);

  std::vector<oss::FeatureTable> comparisons;
  for (const auto& path : comparison_paths) comparisons.push_back(load_table(path));
  const auto reference = load_table(reference_path);

  const auto suite =
      oss::oss_variant_suite(comparisons, reference, config.oss, config.combined_aliases());
  const auto doc = oss::variant_suite_json("ablate", suite, config.oss);
  oss::write_report(config.output_dir, "ablate", doc, oss::variant_suite_csv(suite),
                    global.format);
  if (config.verbosity >= 1)
    std::cerr << "ablate: " << suite.size() << " variants over " << comparisons.size()
              << " sets\n";
  return 0;
}

int cmd_synth(const GlobalOptions& global, const std::string& spec_path) {
  const auto config = effective_config(global);
  auto spec = oss::load_synth_spec(spec_path);
  if (global.seed) spec.seed = *global.seed;
  if (global.threads) spec.threads = *global.threads;
  Timer timer("synth", config.verbosity);

  const fs::path out_dir = config.output_dir;
  const auto output = oss::generate(spec, out_dir);

  auto doc = oss::report_envelope("synth", spec.seed);
  doc["spec_file"] = fs::path(spec_path).filename().string();
  doc["images"] = output.manifest.images.size();
  doc["objects"] = output.object_count;
  std::error_code rel_ec;
  const auto rel = fs::relative(output.manifest_path, out_dir, rel_ec);
  doc["manifest_file"] = rel_ec ? output.manifest_path.string() : rel.string();
  oss::write_text_file(out_dir / "synth.json", oss::json_text(doc));
  if (config.verbosity >= 1)
    std::cerr << "synth: " << output.manifest.images.size() << " images, " << output.object_count
              << " objects -> " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOptions global;
  CLI::App app{"osskit: object-set similarity toolkit for detection datasets"};
  app.require_subcommand(1);
  app.add_option("--config", global.config_path, "run config file (JSON, comments allowed)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "root seed override");
  std::string out_value;
  auto* out_opt = app.add_option("--out", out_value, "output directory override");
  int threads_value = 0;
  auto* threads_opt = app.add_option("--threads", threads_value, "worker thread override");
  app.add_option("--format", global.format, "report format: json, csv, or both")
      ->check(CLI::IsMember({"json", "csv", "both"}));

  int exit_code = 0;
  auto finish_globals = [&] {
    if (*seed_opt) global.seed = seed_value;
    if (*out_opt) global.out_dir = out_value;
    if (*threads_opt) global.threads = threads_value;
  };

  // extract
  std::string extract_dataset;
  auto* extract = app.add_subcommand("extract", "parse a dataset and persist its feature table");
  extract->add_option("dataset", extract_dataset, "dataset id from the run config")->required();
  extract->callback([&] {
    finish_globals();
    exit_code = cmd_extract(global, extract_dataset);
  });

  // oss
  std::vector<std::string> oss_comparisons;
  std::string oss_reference;
  auto* oss_cmd = app.add_subcommand("oss", "score comparison tables against a reference table");
  oss_cmd->add_option("comparisons", oss_comparisons, "comparison feature tables")
      ->required()
      ->expected(-1);
  oss_cmd->add_option("--reference", oss_reference, "reference feature table")->required();
  oss_cmd->callback([&] {
    finish_globals();
    exit_code = cmd_oss(global, oss_comparisons, oss_reference);
  });

  // select-val
  std::string sel_val, sel_alt;
  std::size_t sel_z = 0;
  double sel_fraction = 0.0;
  bool sel_full = false;
  auto* select_val =
      app.add_subcommand("select-val", "pick a representative validation subset");
  select_val->add_option("val", sel_val, "validation feature table")->required();
  select_val->add_option("alt", sel_alt, "alternative-domain feature table")->required();
  auto* z_opt = select_val->add_option("--z", sel_z, "candidate subset count");
  auto* frac_opt = select_val->add_option("--fraction", sel_fraction, "subset size fraction");
  select_val->add_flag("--full-set", sel_full, "also score the full validation set");
  select_val->callback([&] {
    finish_globals();
    exit_code = cmd_select_val(global, sel_val, sel_alt,
                               *z_opt ? std::optional<std::size_t>(sel_z) : std::nullopt,
                               *frac_opt ? std::optional<double>(sel_fraction) : std::nullopt,
                               sel_full);
  });

  // correlate
  std::string cor_oss, cor_map;
  auto* correlate = app.add_subcommand("correlate", "correlate OSS scores with mAP scores");
  correlate->add_option("oss_csv", cor_oss, "id,oss CSV")->required();
  correlate->add_option("map_csv", cor_map, "id,map CSV")->required();
  correlate->callback([&] {
    finish_globals();
    exit_code = cmd_correlate(global, cor_oss, cor_map);
  });

  // rank
  std::string rank_csv;
  int keep_top = 0;
  auto* rank = app.add_subcommand("rank", "rank methods by OSS and split kept/dropped");
  rank->add_option("oss_csv", rank_csv, "id,oss CSV")->required();
  rank->add_option("--keep-top", keep_top, "methods to keep (default: all)");
  rank->callback([&] {
    finish_globals();
    exit_code = cmd_rank(global, rank_csv, keep_top);
  });

  // savings
  std::string savings_csv;
  std::size_t savings_iteration = 0;
  auto* savings = app.add_subcommand("savings", "compute GPU-hour savings from a cost table");
  savings->add_option("cost_csv", savings_csv, "iteration,gpu_hours CSV")->required();
  auto* iter_opt = savings->add_option("--iteration", savings_iteration,
                                       "print S_OSS / S_mAP for this elimination iteration");
  savings->callback([&] {
    finish_globals();
    exit_code = cmd_savings(global, savings_csv,
                            *iter_opt ? std::optional<std::size_t>(savings_iteration)
                                      : std::nullopt);
  });

  // ablate
  std::vector<std::string> ablate_comparisons;
  std::string ablate_reference;
  auto* ablate = app.add_subcommand("ablate", "run the score-term ablation suite");
  ablate->add_option("comparisons", ablate_comparisons, "comparison feature tables")
      ->required()
      ->expected(-1);
  ablate->add_option("--reference", ablate_reference, "reference feature table")->required();
  ablate->callback([&] {
    finish_globals();
    exit_code = cmd_ablate(global, ablate_comparisons, ablate_reference);
  });

  // synth
  std::string synth_spec;
  auto* synth = app.add_subcommand("synth", "render a synthetic labeled dataset");
  synth->add_option("spec", synth_spec, "synthesis spec file (JSON, comments allowed)")
      ->required();
  synth->callback([&] {
    finish_globals();
    exit_code = cmd_synth(global, synth_spec);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems collapse onto one exit code
  } catch (const oss::parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const oss::io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const oss::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return exit_code;
}
