#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oss/select.hpp"

using Catch::Matchers::WithinAbs;

namespace {

struct ImageBlock {
  std::string image_id;
  std::uint32_t class_id;
  std::size_t crops;
};

oss::FeatureTable make_table(const std::string& set_id, const std::vector<std::string>& catalog,
                             std::size_t dim, const std::vector<ImageBlock>& blocks,
                             std::uint64_t seed, double shift = 0.0) {
  oss::FeatureTable table;
  table.set_id = set_id;
  table.class_catalog = catalog;
  for (std::size_t f = 0; f < dim; ++f) table.feature_schema.push_back("f" + std::to_string(f));
  oss::RandomStream rs(seed);
  for (const auto& block : blocks) {
    for (std::size_t i = 0; i < block.crops; ++i) {
      oss::FeatureRow row;
      row.class_id = block.class_id;
      row.image_id = block.image_id;
      for (std::size_t f = 0; f < dim; ++f) row.values.push_back(rs.normal() + shift);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace

TEST_CASE("subsample_search with a single full-size candidate is the identity", "[select]") {
  const std::vector<std::string> catalog{"a", "b"};
  std::vector<ImageBlock> val_blocks;
  for (int i = 0; i < 4; ++i) {
    val_blocks.push_back({"img" + std::to_string(i), 0, 5});
    val_blocks.push_back({"img" + std::to_string(i), 1, 5});
  }
  const auto val = make_table("val", catalog, 2, val_blocks, 42);
  const auto alt = make_table("alt", catalog, 2,
                              {{"x0", 0, 20}, {"x1", 1, 20}}, 43, 0.3);

  oss::SubsetSearchConfig scfg;
  scfg.z = 1;
  scfg.fraction = 1.0;
  scfg.seed = 17;
  oss::OSSConfig ocfg;
  ocfg.seed = 5;

  const auto result = oss::subsample_search(val, alt, scfg, ocfg);
  CHECK(result.best_index == 0);
  CHECK(result.best_subset == std::vector<std::string>{"img0", "img1", "img2", "img3"});
  CHECK(result.seed == scfg.seed);
  REQUIRE(result.candidate_scores.size() == 1);

  // A full-size subset is the validation table itself, so the score must
  // match a direct evaluation bit for bit.
  const auto direct = oss::oss({val}, alt, ocfg);
  CHECK(std::memcmp(&result.oss_z, &direct[0].oss, sizeof(double)) == 0);
}

TEST_CASE("subsample_search is deterministic and streams candidates", "[select]") {
  const std::vector<std::string> catalog{"a"};
  std::vector<ImageBlock> val_blocks;
  for (int i = 0; i < 12; ++i) val_blocks.push_back({"img" + std::to_string(i), 0, 6});
  const auto val = make_table("val", catalog, 1, val_blocks, 7);
  const auto alt = make_table("alt", catalog, 1, {{"y0", 0, 40}}, 8, 0.2);

  oss::SubsetSearchConfig scfg;
  scfg.z = 6;
  scfg.fraction = 0.25;
  scfg.seed = 99;

  // Kill the cross-candidate couplings so each candidate's score depends only
  // on its own draw; a shorter search must then reproduce a prefix exactly.
  oss::OSSConfig ocfg;
  ocfg.seed = 3;
  ocfg.disable_beta = true;
  ocfg.disable_weights = true;

  const auto full = oss::subsample_search(val, alt, scfg, ocfg);
  const auto again = oss::subsample_search(val, alt, scfg, ocfg);
  CHECK(full.best_subset == again.best_subset);
  CHECK(full.candidate_scores == again.candidate_scores);

  oss::SubsetSearchConfig short_cfg = scfg;
  short_cfg.z = 3;
  const auto prefix = oss::subsample_search(val, alt, short_cfg, ocfg);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::memcmp(&prefix.candidate_scores[i], &full.candidate_scores[i], sizeof(double)) == 0);

  // Subset sizes are equal across candidates: 3 of 12 images.
  CHECK(full.best_subset.size() == 3);

  // Raw draws are index-addressed, independent of z.
  CHECK(oss::detail::draw_subset(99, 2, 12, 3) == oss::detail::draw_subset(99, 2, 12, 3));
}

TEST_CASE("subsample_search skips unscorable candidates and reports the argmax", "[select]") {
  // Six images carry the shared class, four carry only an unknown class; any
  // candidate that draws two unknown-only images cannot be scored.
  const std::vector<std::string> catalog{"a", "junk"};
  std::vector<ImageBlock> val_blocks;
  for (int i = 0; i < 6; ++i) val_blocks.push_back({"a" + std::to_string(i), 0, 6});
  for (int i = 0; i < 4; ++i) val_blocks.push_back({"j" + std::to_string(i), 1, 3});
  const auto val = make_table("val", catalog, 1, val_blocks, 11);
  const auto alt = make_table("alt", std::vector<std::string>{"a"}, 1, {{"z0", 0, 30}}, 12);

  oss::SubsetSearchConfig scfg;
  scfg.z = 30;
  scfg.fraction = 0.2;  // 2 of 10 images
  scfg.seed = 4;
  oss::OSSConfig ocfg;
  ocfg.seed = 1;
  ocfg.disable_jsd = true;

  const auto result = oss::subsample_search(val, alt, scfg, ocfg);
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < scfg.z; ++i) {
    if (result.candidate_excluded[i]) {
      ++excluded;
      CHECK(result.candidate_scores[i] == 0.0);
    } else {
      CHECK(result.oss_z >= result.candidate_scores[i]);
    }
  }
  CHECK(excluded > 0);
  CHECK(excluded < scfg.z);
  CHECK_FALSE(result.candidate_excluded[result.best_index]);
  CHECK(result.oss_z == result.candidate_scores[result.best_index]);

  SECTION("an unscorable validation set fails cleanly") {
    const auto val_junk = make_table("val", catalog, 1, {{"j0", 1, 5}, {"j1", 1, 5}}, 13);
    CHECK_THROWS_AS(oss::subsample_search(val_junk, alt, scfg, ocfg), oss::domain_error);
  }
}

TEST_CASE("subsample_search can pit the full set against its subsets", "[select]") {
  const std::vector<std::string> catalog{"a"};
  std::vector<ImageBlock> val_blocks;
  for (int i = 0; i < 10; ++i) val_blocks.push_back({"img" + std::to_string(i), 0, 6});
  const auto val = make_table("val", catalog, 1, val_blocks, 21);
  const auto alt = make_table("alt", catalog, 1, {{"w0", 0, 45}}, 22, 0.1);

  oss::SubsetSearchConfig scfg;
  scfg.z = 8;
  scfg.fraction = 0.2;
  scfg.seed = 30;
  scfg.include_full_set = true;
  oss::OSSConfig ocfg;
  ocfg.seed = 9;

  const auto result = oss::subsample_search(val, alt, scfg, ocfg);
  REQUIRE(result.full_set_score.has_value());
  CHECK(result.candidate_scores.size() == 8);  // the full set is not a candidate
  CHECK(result.best_subset.size() == 2);

  oss::SubsetSearchConfig no_full = scfg;
  no_full.include_full_set = false;
  const auto without = oss::subsample_search(val, alt, no_full, ocfg);
  CHECK_FALSE(without.full_set_score.has_value());
}

TEST_CASE("subsample_search validates its inputs", "[select]") {
  const std::vector<std::string> catalog{"a"};
  const auto val = make_table("val", catalog, 1, {{"i0", 0, 6}, {"i1", 0, 6}}, 31);
  const auto alt = make_table("alt", catalog, 1, {{"x", 0, 20}}, 32);
  oss::OSSConfig ocfg;
  ocfg.disable_jsd = true;

  oss::SubsetSearchConfig bad_z;
  bad_z.z = 0;
  CHECK_THROWS_AS(oss::subsample_search(val, alt, bad_z, ocfg), oss::domain_error);

  oss::SubsetSearchConfig bad_frac;
  bad_frac.fraction = 0.0;
  CHECK_THROWS_AS(oss::subsample_search(val, alt, bad_frac, ocfg), oss::domain_error);
  bad_frac.fraction = 1.5;
  CHECK_THROWS_AS(oss::subsample_search(val, alt, bad_frac, ocfg), oss::domain_error);

  // 2 images cannot support a 1/10 fraction.
  oss::SubsetSearchConfig thin;
  thin.fraction = 0.1;
  CHECK_THROWS_AS(oss::subsample_search(val, alt, thin, ocfg), oss::domain_error);

  oss::FeatureTable empty;
  CHECK_THROWS_AS(oss::subsample_search(empty, alt, oss::SubsetSearchConfig{}, ocfg),
                  oss::domain_error);
}

TEST_CASE("rank_methods assigns descending ranks with lexicographic ties", "[select]") {
  const auto report = oss::rank_methods(
      std::vector<oss::MethodScore>{{"a", 3.0}, {"b", 1.0}, {"c", 2.0}});
  CHECK(report.method_ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(report.oss_ranks == std::vector<int>{1, 3, 2});

  const auto tied =
      oss::rank_methods(std::vector<oss::MethodScore>{{"b", 5.0}, {"a", 5.0}, {"c", 1.0}});
  CHECK(tied.oss_ranks == std::vector<int>{2, 1, 3});  // a wins the tie over b

  // Ranks are a permutation of 1..m.
  std::set<int> unique(tied.oss_ranks.begin(), tied.oss_ranks.end());
  CHECK(unique == std::set<int>{1, 2, 3});

  CHECK_THROWS_AS(oss::rank_methods(std::vector<oss::MethodScore>{{"a", 1.0}}),
                  oss::domain_error);
  CHECK_THROWS_AS(oss::rank_methods(std::vector<oss::MethodScore>{{"a", 1.0}, {"a", 2.0}}),
                  oss::domain_error);
}

TEST_CASE("correlate_with_map reports recomputable statistics", "[select]") {
  SECTION("affine relation gives perfect correlation") {
    std::vector<oss::MethodScore> methods;
    std::vector<double> map_scores;
    for (int i = 0; i < 6; ++i) {
      const double score = 1.0 + 0.37 * i;
      methods.push_back({"m" + std::to_string(i), score});
      map_scores.push_back(2.0 * score + 1.0);
    }
    const auto report = oss::correlate_with_map(methods, map_scores);
    REQUIRE(report.pearson.has_value());
    REQUIRE(report.kendall.has_value());
    CHECK_THAT(report.pearson->statistic, WithinAbs(1.0, 1e-12));
    CHECK_THAT(report.kendall->statistic, WithinAbs(1.0, 1e-12));
    CHECK(report.oss_ranks == report.map_ranks);
  }

  SECTION("anti-monotone scores give tau of minus one") {
    std::vector<oss::MethodScore> methods;
    std::vector<double> map_scores;
    for (int i = 0; i < 5; ++i) {
      methods.push_back({"m" + std::to_string(i), static_cast<double>(i)});
      map_scores.push_back(-static_cast<double>(i));
    }
    const auto report = oss::correlate_with_map(methods, map_scores);
    CHECK_THAT(report.kendall->statistic, WithinAbs(-1.0, 1e-12));
    CHECK(report.pearson->statistic < -0.999999);
  }

  SECTION("statistics recompute from the stored scores") {
    oss::RandomStream rs(321);
    std::vector<oss::MethodScore> methods;
    std::vector<double> map_scores;
    for (int i = 0; i < 10; ++i) {
      methods.push_back({"m" + std::to_string(i), rs.normal()});
      map_scores.push_back(0.8 * methods.back().oss + 0.5 * rs.normal());
    }
    const auto report = oss::correlate_with_map(methods, map_scores);

    const auto direct = oss::pearson(report.oss_scores, report.map_scores);
    CHECK_THAT(report.pearson->statistic, WithinAbs(direct.statistic, 1e-12));

    std::vector<double> ra(report.oss_ranks.begin(), report.oss_ranks.end());
    std::vector<double> rb(report.map_ranks.begin(), report.map_ranks.end());
    CHECK_THAT(report.kendall->statistic,
               WithinAbs(oss::kendall_tau(ra, rb).statistic, 1e-12));
  }

  SECTION("input validation") {
    std::vector<oss::MethodScore> two{{"a", 1.0}, {"b", 2.0}};
    CHECK_THROWS_AS(oss::correlate_with_map(two, {1.0, 2.0}), oss::domain_error);
    std::vector<oss::MethodScore> three{{"a", 1.0}, {"b", 2.0}, {"c", 3.0}};
    CHECK_THROWS_AS(oss::correlate_with_map(three, {1.0, 2.0}), oss::domain_error);
  }
}

TEST_CASE("eliminate partitions methods by rank", "[select]") {
  const auto report = oss::rank_methods(std::vector<oss::MethodScore>{
      {"a", 3.0}, {"b", 1.0}, {"c", 2.0}, {"d", 5.0}, {"e", 4.0}});

  const auto [kept, dropped] = oss::eliminate(report, 2);
  CHECK(kept == std::vector<std::string>{"d", "e"});
  CHECK(dropped == std::vector<std::string>{"a", "c", "b"});

  const auto [all_kept, none] = oss::eliminate(report, 5);
  CHECK(all_kept.size() == 5);
  CHECK(none.empty());

  const auto small = oss::rank_methods(
      std::vector<oss::MethodScore>{{"a", 3.0}, {"b", 1.0}, {"c", 2.0}});
  CHECK(oss::eliminate(small, 1).first == std::vector<std::string>{"a"});

  CHECK_THROWS_AS(oss::eliminate(report, 0), oss::domain_error);
  CHECK_THROWS_AS(oss::eliminate(report, 6), oss::domain_error);
}

TEST_CASE("savings reproduces the cost accounting by hand", "[select]") {
  const std::vector<double> kitti{3, 4, 4, 5, 6, 9, 23};
  const std::vector<double> bdd{25, 29, 44, 54, 164, 233, 282};

  CHECK(oss::savings(kitti, 1) == std::pair{51.0, 47.0});
  CHECK(oss::savings(kitti, 5) == std::pair{32.0, 23.0});
  CHECK(oss::savings(bdd, 1) == std::pair{806.0, 777.0});

  const auto rows = oss::savings_table(kitti);
  REQUIRE(rows.size() == 5);
  const std::vector<double> expect_oss{51, 47, 43, 38, 32};
  const std::vector<double> expect_map{47, 43, 38, 32, 23};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].iteration == i + 1);
    CHECK(rows[i].s_oss == expect_oss[i]);
    CHECK(rows[i].s_map == expect_map[i]);
    CHECK(rows[i].s_map == rows[i].s_oss - kitti[i + 1]);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].s_oss <= rows[i - 1].s_oss);

  CHECK_THROWS_AS(oss::savings(kitti, 0), oss::domain_error);
  CHECK_THROWS_AS(oss::savings(kitti, 6), oss::domain_error);
  CHECK_THROWS_AS(oss::savings({1.0}, 1), oss::domain_error);
  CHECK_THROWS_AS(oss::savings({1.0, -2.0, 3.0}, 1), oss::domain_error);
  CHECK_THROWS_AS(oss::savings_table({1.0, 2.0}), oss::domain_error);
}

TEST_CASE("parse_cost_csv accepts headers and shuffled rows", "[select]") {
  {
    std::istringstream in("iteration,gpu_hours\n0,3\n1,4\n2,4.5\n");
    CHECK(oss::parse_cost_csv(in) == std::vector<double>{3.0, 4.0, 4.5});
  }
  {
    std::istringstream in("2,4\r\n0,3\r\n1,9\r\n");
    CHECK(oss::parse_cost_csv(in) == std::vector<double>{3.0, 9.0, 4.0});
  }
  {
    std::istringstream in("0,3\n2,4\n");
    CHECK_THROWS_AS(oss::parse_cost_csv(in), oss::parse_error);
  }
  {
    std::istringstream in("0,3\nnot,a number\n");
    CHECK_THROWS_AS(oss::parse_cost_csv(in), oss::parse_error);
  }
  {
    std::istringstream in("just a header\n");
    CHECK_THROWS_AS(oss::parse_cost_csv(in), oss::parse_error);
  }
  {
    std::istringstream in("0\n");
    CHECK_THROWS_AS(oss::parse_cost_csv(in), oss::parse_error);
  }
}
