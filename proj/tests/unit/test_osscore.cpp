#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "oss/osscore.hpp"
#include "oss/rng.hpp"

using Catch::Matchers::WithinAbs;

namespace {

// Builds a feature table directly; each block is (class index, row count,
// mean shift added to every coordinate, stream seed).
struct ClassBlock {
  std::uint32_t class_id;
  std::size_t count;
  double shift;
  std::uint64_t seed;
};

oss::FeatureTable build_table(const std::string& set_id, const std::vector<std::string>& catalog,
                              std::size_t dim, const std::vector<ClassBlock>& blocks) {
  oss::FeatureTable table;
  table.set_id = set_id;
  table.class_catalog = catalog;
  for (std::size_t f = 0; f < dim; ++f) table.feature_schema.push_back("f" + std::to_string(f));
  for (const auto& block : blocks) {
    oss::RandomStream rs(block.seed);
    for (std::size_t i = 0; i < block.count; ++i) {
      oss::FeatureRow row;
      row.class_id = block.class_id;
      row.image_id = "img_" + std::to_string(i);
      for (std::size_t f = 0; f < dim; ++f) row.values.push_back(rs.normal() + block.shift);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

double recompose(const oss::OSSResult& res) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& cls : res.classes) {
    if (!cls.included) continue;
    sum += cls.w * (cls.jsd + cls.r);
    ++n;
  }
  REQUIRE(n > 0);
  return 1.0 / (sum / static_cast<double>(n));
}

}  // namespace

TEST_CASE("count_ratio covers the smoothed form and every toggle", "[osscore]") {
  oss::OSSConfig cfg;
  CHECK_THAT(oss::count_ratio(100.0, 100.0, 1.0, cfg), WithinAbs(0.75, 1e-15));
  CHECK_THAT(oss::count_ratio(0.0, 50.0, 1.0, cfg), WithinAbs(0.5, 1e-15));
  CHECK_THAT(oss::count_ratio(50.0, 100.0, 2.0, cfg), WithinAbs(0.75, 1e-15));

  oss::OSSConfig no_t1 = cfg;
  no_t1.disable_t1 = true;
  CHECK_THAT(oss::count_ratio(50.0, 100.0, 2.0, no_t1), WithinAbs(1.0, 1e-15));

  oss::OSSConfig raw = cfg;
  raw.raw_count_r = true;
  CHECK_THAT(oss::count_ratio(123.0, 7.0, 3.0, raw), WithinAbs(123.0, 1e-15));
  CHECK_NOTHROW(oss::count_ratio(123.0, 0.0, 3.0, raw));  // raw form ignores the reference count

  CHECK_THROWS_AS(oss::count_ratio(10.0, 0.0, 1.0, cfg), oss::domain_error);
}

TEST_CASE("beta_factor reproduces the quartile normalization example", "[osscore]") {
  const std::vector<double> counts{100.0, 200.0, 300.0, 400.0};
  CHECK_THAT(oss::beta_factor(counts, 0), WithinAbs(1.0, 1e-12));
  CHECK_THAT(oss::beta_factor(counts, 1), WithinAbs(8.0 / 7.0, 1e-12));
  CHECK_THAT(oss::beta_factor(counts, 2), WithinAbs(12.0 / 7.0, 1e-12));
  CHECK_THAT(oss::beta_factor(counts, 3), WithinAbs(16.0 / 7.0, 1e-12));

  CHECK_THAT(oss::beta_factor({5000.0}, 0), WithinAbs(1.0, 1e-15));      // single set
  CHECK_THAT(oss::beta_factor(counts, 3, true), WithinAbs(1.0, 1e-15));  // disabled

  CHECK_THROWS_AS(oss::beta_factor({0.0, 0.0, 0.0, 10.0}, 3), oss::domain_error);
  CHECK_THROWS_AS(oss::beta_factor(counts, 4), oss::domain_error);
  CHECK_THROWS_AS(oss::beta_factor({}, 0), oss::domain_error);
}

TEST_CASE("class_weights gates on CV and excludes below the first quartile", "[osscore]") {
  SECTION("balanced counts leave weighting inactive") {
    const auto info = oss::class_weights({{10, 10, 10}, {5, 5, 5}}, 1.0);
    CHECK_FALSE(info.active);
    CHECK_THAT(info.cv, WithinAbs(0.0, 1e-15));
    for (double w : info.weights) CHECK(w == 1.0);
    for (bool ex : info.excluded) CHECK_FALSE(ex);
  }

  SECTION("imbalanced single set with a low threshold activates") {
    const auto info = oss::class_weights({{90, 5, 5}}, 0.5);
    // Direct-formula oracle: mean 1/3, population variance of the proportions.
    const double mean = 1.0 / 3.0;
    const double var = ((0.9 - mean) * (0.9 - mean) + 2 * (0.05 - mean) * (0.05 - mean)) / 3.0;
    CHECK_THAT(info.cv, WithinAbs(std::sqrt(var) / mean, 1e-12));
    CHECK(info.active);
    CHECK_THAT(info.weights[0], WithinAbs(0.9, 1e-12));
    CHECK_THAT(info.weights[1], WithinAbs(0.05, 1e-12));
    CHECK_THAT(info.weights[2], WithinAbs(0.05, 1e-12));
    // Q1 of {0.9, 0.05, 0.05} is 0.05; exclusion is strict, so nothing falls below.
    for (bool ex : info.excluded) CHECK_FALSE(ex);
  }

  SECTION("a genuinely low-proportion class is excluded") {
    const auto info = oss::class_weights({{700, 150, 100, 50}}, 1.0);
    CHECK(info.active);
    CHECK_FALSE(info.excluded[0]);
    CHECK_FALSE(info.excluded[1]);
    CHECK_FALSE(info.excluded[2]);
    CHECK(info.excluded[3]);  // 0.05 < Q1 = 0.0875
  }

  SECTION("disable_weights wins over any CV") {
    const auto info = oss::class_weights({{90, 5, 5}}, 0.5, true);
    CHECK_FALSE(info.active);
    for (double w : info.weights) CHECK(w == 1.0);
  }

  SECTION("input validation") {
    CHECK_THROWS_AS(oss::class_weights({}, 1.0), oss::domain_error);
    CHECK_THROWS_AS(oss::class_weights({{0.0, 0.0}}, 1.0), oss::domain_error);
    CHECK_THROWS_AS(oss::class_weights({{1.0, 2.0}, {1.0}}, 1.0), oss::domain_error);
  }
}

TEST_CASE("per_class_divergence is near zero on identical rows", "[osscore]") {
  oss::RandomStream rs(4242);
  Eigen::MatrixXd rows(500, 3);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = rs.normal();

  oss::OSSConfig cfg;
  cfg.kde_sample_size = 2000;
  double total = 0.0;
  const int kSeeds = 10;
  for (int s = 0; s < kSeeds; ++s)
    total += oss::per_class_divergence(rows, rows, cfg, 9000 + static_cast<std::uint64_t>(s)).value;
  CHECK(total / kSeeds <= 0.02);

  oss::OSSConfig off = cfg;
  off.disable_jsd = true;
  CHECK(oss::per_class_divergence(rows, rows, off, 1).value == 0.0);
}

TEST_CASE("oss config validation rejects degenerate settings", "[osscore]") {
  auto bad = [](auto mutate) {
    oss::OSSConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_NOTHROW(oss::OSSConfig{}.validate());
  CHECK_THROWS_AS(bad([](oss::OSSConfig& c) { c.c_w = 0.0; }).validate(), oss::domain_error);
  CHECK_THROWS_AS(bad([](oss::OSSConfig& c) { c.k_neighbors = 0; }).validate(), oss::domain_error);
  CHECK_THROWS_AS(bad([](oss::OSSConfig& c) { c.min_class_crops = 1; }).validate(),
                  oss::domain_error);
  CHECK_THROWS_AS(bad([](oss::OSSConfig& c) { c.kde_sample_size = 3; }).validate(),
                  oss::domain_error);
  CHECK_THROWS_AS(bad([](oss::OSSConfig& c) {
                    c.disable_r = true;
                    c.disable_jsd = true;
                  }).validate(),
                  oss::domain_error);
}

TEST_CASE("oss matches the hand-computed single- and two-class scores", "[osscore]") {
  oss::OSSConfig cfg;
  cfg.disable_jsd = true;

  const std::vector<std::string> catalog{"car"};
  const auto q = build_table("q", catalog, 1, {{0, 40, 0.0, 11}});
  const auto p = build_table("p", catalog, 1, {{0, 40, 0.0, 12}});
  const auto res = oss::oss({p}, q, cfg);
  REQUIRE(res.size() == 1);
  CHECK_THAT(res[0].oss, WithinAbs(4.0 / 3.0, 1e-12));
  CHECK(res[0].beta == 1.0);
  CHECK_FALSE(res[0].weighting_active);
  REQUIRE(res[0].classes.size() == 1);
  CHECK(res[0].classes[0].included);
  CHECK_THAT(res[0].classes[0].r, WithinAbs(0.75, 1e-15));
  CHECK(res[0].classes[0].jsd == 0.0);

  const std::vector<std::string> catalog2{"car", "person"};
  const auto q2 = build_table("q2", catalog2, 1, {{0, 30, 0.0, 21}, {1, 30, 0.0, 22}});
  const auto p2 = build_table("p2", catalog2, 1, {{0, 30, 0.0, 23}, {1, 30, 0.0, 24}});
  const auto res2 = oss::oss({p2}, q2, cfg);
  CHECK_THAT(res2[0].oss, WithinAbs(4.0 / 3.0, 1e-12));
}

TEST_CASE("oss weight activation excludes and reweights exactly", "[osscore]") {
  oss::OSSConfig cfg;
  cfg.disable_jsd = true;

  const std::vector<std::string> catalog{"w", "x", "y", "z"};
  const auto q = build_table("q", catalog, 1,
                             {{0, 100, 0.0, 1}, {1, 100, 0.0, 2}, {2, 100, 0.0, 3}, {3, 100, 0.0, 4}});
  const auto p = build_table("p", catalog, 1,
                             {{0, 700, 0.0, 5}, {1, 150, 0.0, 6}, {2, 100, 0.0, 7}, {3, 50, 0.0, 8}});
  const auto res = oss::oss({p}, q, cfg);
  REQUIRE(res.size() == 1);
  const auto& r0 = res[0];
  CHECK(r0.weighting_active);
  REQUIRE(r0.classes.size() == 4);
  CHECK(r0.classes[0].included);
  CHECK(r0.classes[1].included);
  CHECK(r0.classes[2].included);
  CHECK_FALSE(r0.classes[3].included);
  CHECK(r0.classes[3].exclusion_reason == "below_weight_threshold");
  CHECK_THAT(r0.classes[0].w, WithinAbs(0.7, 1e-12));
  CHECK_THAT(r0.classes[3].w, WithinAbs(0.05, 1e-12));
  // By hand: mean of {0.7*2.25, 0.15*0.875, 0.1*0.75} is 19/32.
  CHECK_THAT(r0.oss, WithinAbs(32.0 / 19.0, 1e-12));
  CHECK_THAT(recompose(r0), WithinAbs(r0.oss, 1e-12));
}

TEST_CASE("oss exclusion reasons cover absent and undersampled classes", "[osscore]") {
  oss::OSSConfig cfg;
  cfg.disable_jsd = true;
  cfg.c_w = 2.0;  // keep weighting out of this scenario

  const std::vector<std::string> catalog{"a", "b", "c", "d"};
  const auto q =
      build_table("q", catalog, 1, {{0, 50, 0.0, 31}, {1, 50, 0.0, 32}, {3, 3, 0.0, 33}});
  const auto p = build_table(
      "p", catalog, 1, {{0, 50, 0.0, 34}, {1, 2, 0.0, 35}, {2, 10, 0.0, 36}, {3, 10, 0.0, 37}});
  const auto res = oss::oss({p}, q, cfg);
  const auto& classes = res[0].classes;
  REQUIRE(classes.size() == 4);

  CHECK(classes[0].included);
  CHECK(classes[0].exclusion_reason.empty());

  CHECK_FALSE(classes[1].included);
  CHECK(classes[1].exclusion_reason == "insufficient_samples");  // 2 < 5 on the comparison side

  CHECK_FALSE(classes[2].included);
  CHECK(classes[2].exclusion_reason == "absent_from_reference");

  CHECK_FALSE(classes[3].included);
  CHECK(classes[3].exclusion_reason == "insufficient_samples");  // 3 < 5 on the reference side

  CHECK(res[0].n_det == 72);
  CHECK(res[0].unmapped_rows == 0);
  CHECK_THAT(res[0].oss, WithinAbs(4.0 / 3.0, 1e-12));  // only class a contributes, r = 0.75
}

TEST_CASE("oss maps catalogs case-insensitively and through aliases", "[osscore]") {
  oss::OSSConfig cfg;
  cfg.disable_jsd = true;

  const std::vector<std::string> q_catalog{"car", "van"};
  const auto q = build_table("q", q_catalog, 1, {{0, 6, 0.0, 41}, {1, 6, 0.0, 42}});

  oss::FeatureTable p = build_table("p", {"CAR", "vanX", "tree"}, 1,
                                    {{0, 6, 0.0, 43}, {1, 6, 0.0, 44}, {2, 4, 0.0, 45}});
  const std::map<std::string, std::string> aliases{{"vanX", "van"}};
  const auto res = oss::oss({p}, q, cfg, aliases);
  CHECK(res[0].n_det == 12);
  CHECK(res[0].unmapped_rows == 4);
  CHECK(res[0].classes[0].count_p == 6);
  CHECK(res[0].classes[1].count_p == 6);
  CHECK_THAT(res[0].oss, WithinAbs(4.0 / 3.0, 1e-12));
}

TEST_CASE("oss failure modes surface as outcomes and throws", "[osscore]") {
  oss::OSSConfig cfg;
  cfg.disable_jsd = true;

  const auto q = build_table("q", {"a", "b"}, 1, {{0, 20, 0.0, 51}, {1, 20, 0.0, 52}});

  SECTION("nothing maps onto the reference catalog") {
    const auto p = build_table("p_bad", {"x", "y"}, 1, {{0, 10, 0.0, 53}, {1, 10, 0.0, 54}});
    const auto outcomes = oss::oss_detailed({p}, q, cfg);
    REQUIRE(outcomes.size() == 1);
    CHECK_FALSE(outcomes[0].ok);
    CHECK(outcomes[0].error_message.find("no rows map") != std::string::npos);
    try {
      oss::oss({p}, q, cfg);
      FAIL("expected a domain error");
    } catch (const oss::domain_error& err) {
      CHECK(std::string(err.what()).find("p_bad") != std::string::npos);
    }
  }

  SECTION("mapped classes all fall below the crop floor") {
    const auto p = build_table("p_thin", {"a"}, 1, {{0, 3, 0.0, 55}});
    const auto outcomes = oss::oss_detailed({p}, q, cfg);
    CHECK_FALSE(outcomes[0].ok);
    CHECK(outcomes[0].error_message.find("no classes shared") != std::string::npos);
    CHECK_THROWS_AS(oss::oss({p}, q, cfg), oss::domain_error);
  }

  SECTION("a failed set does not poison the scale pool for healthy ones") {
    const auto p_ok = build_table("p_ok", {"a", "b"}, 1, {{0, 20, 0.0, 56}, {1, 20, 0.0, 57}});
    const auto p_bad1 = build_table("bad1", {"x"}, 1, {{0, 10, 0.0, 58}});
    const auto p_bad2 = build_table("bad2", {"y"}, 1, {{0, 10, 0.0, 59}});
    const auto outcomes = oss::oss_detailed({p_bad1, p_bad2, p_ok}, q, cfg);
    CHECK_FALSE(outcomes[0].ok);
    CHECK_FALSE(outcomes[1].ok);
    REQUIRE(outcomes[2].ok);
    CHECK(outcomes[2].result.beta == 1.0);  // pool collapses to a single valid set
    CHECK_THAT(outcomes[2].result.oss, WithinAbs(4.0 / 3.0, 1e-12));
  }

  SECTION("top-level input validation") {
    CHECK_THROWS_AS(oss::oss({}, q, cfg), oss::domain_error);
    oss::FeatureTable empty_q;
    empty_q.set_id = "q";
    empty_q.feature_schema = {"f0"};
    empty_q.class_catalog = {"a"};
    const auto p = build_table("p", {"a"}, 1, {{0, 10, 0.0, 60}});
    CHECK_THROWS_AS(oss::oss({p}, empty_q, cfg), oss::domain_error);
    const auto p_wide = build_table("p", {"a"}, 2, {{0, 10, 0.0, 61}});
    CHECK_THROWS_AS(oss::oss({p_wide}, q, cfg), oss::domain_error);
    oss::FeatureTable q_collide = q;
    q_collide.class_catalog = {"a", "A"};
    CHECK_THROWS_AS(oss::oss({p}, q_collide, cfg), oss::domain_error);
  }
}

TEST_CASE("oss self-comparison stays near the count floor", "[osscore]") {
  const std::vector<std::string> catalog{"c0", "c1", "c2", "c3"};
  const auto q = build_table("q", catalog, 3,
                             {{0, 500, 0.0, 71}, {1, 500, 0.0, 72}, {2, 500, 0.0, 73}, {3, 500, 0.0, 74}});
  oss::FeatureTable p = q;
  p.set_id = "p_self";

  oss::OSSConfig cfg;
  cfg.kde_sample_size = 4000;
  cfg.seed = 2024;
  const auto res = oss::oss({p}, q, cfg);
  REQUIRE(res.size() == 1);
  // Every r_j is exactly 0.75 and each JSD estimate should sit within the
  // small-bias band, putting the score just below the 4/3 ceiling.
  for (const auto& cls : res[0].classes) {
    CHECK(cls.included);
    CHECK_THAT(cls.r, WithinAbs(0.75, 1e-15));
    CHECK(cls.jsd >= 0.0);
  }
  CHECK(res[0].oss <= 4.0 / 3.0 + 1e-12);
  CHECK(res[0].oss >= 1.0 / 0.77);
  CHECK_THAT(recompose(res[0]), WithinAbs(res[0].oss, 1e-12));
}

TEST_CASE("oss decreases when a class distribution drifts", "[osscore]") {
  const std::vector<std::string> catalog{"obj"};
  const auto q = build_table("q", catalog, 2, {{0, 200, 0.0, 81}});
  const auto near = build_table("near", catalog, 2, {{0, 200, 0.0, 82}});
  const auto far = build_table("far", catalog, 2, {{0, 200, 2.5, 83}});

  oss::OSSConfig cfg;
  cfg.seed = 5;
  const auto res = oss::oss({near, far}, q, cfg);
  REQUIRE(res.size() == 2);
  CHECK(res[0].classes[0].r == res[1].classes[0].r);  // identical counts, identical ratio term
  CHECK(res[0].classes[0].jsd < res[1].classes[0].jsd);
  CHECK(res[0].oss > res[1].oss);
}

TEST_CASE("oss results are deterministic and self-consistent", "[osscore]") {
  const std::vector<std::string> catalog{"c0", "c1"};
  const auto q = build_table("q", catalog, 2, {{0, 60, 0.0, 91}, {1, 80, 0.3, 92}});
  const auto p = build_table("p", catalog, 2, {{0, 50, 0.1, 93}, {1, 90, 0.0, 94}});

  oss::OSSConfig cfg;
  cfg.seed = 77;
  const auto a = oss::oss({p}, q, cfg);
  const auto b = oss::oss({p}, q, cfg);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(&a[0].oss, &b[0].oss, sizeof(double)) == 0);
  CHECK(a[0].beta == b[0].beta);
  REQUIRE(a[0].classes.size() == b[0].classes.size());
  for (std::size_t j = 0; j < a[0].classes.size(); ++j) {
    CHECK(std::memcmp(&a[0].classes[j].jsd, &b[0].classes[j].jsd, sizeof(double)) == 0);
    CHECK(a[0].classes[j].r == b[0].classes[j].r);
    CHECK(a[0].classes[j].w == b[0].classes[j].w);
    CHECK(a[0].classes[j].class_name == catalog[j]);
    CHECK(a[0].classes[j].class_id == j);
  }
  CHECK_THAT(recompose(a[0]), WithinAbs(a[0].oss, 1e-12));

  // The echoed configuration matches the input.
  CHECK(a[0].config.seed == cfg.seed);
  CHECK(a[0].config.c_w == cfg.c_w);
  CHECK(a[0].config.kde_sample_size == cfg.kde_sample_size);

  // Thread count must not change any value.
  oss::OSSConfig threaded = cfg;
  threaded.threads = 4;
  const auto c = oss::oss({p}, q, threaded);
  CHECK(std::memcmp(&a[0].oss, &c[0].oss, sizeof(double)) == 0);
}

TEST_CASE("scale normalization keeps a tenfold set from dominating", "[osscore]") {
  // Four sets drawn from the reference distribution; one is ten times larger.
  // Its denser rows give it the least-noisy divergence estimates, and the
  // count ratios are too small to offset that while the normalization is off.
  const std::vector<std::string> catalog{"c0", "c1", "c2", "c3"};
  std::vector<ClassBlock> q_blocks;
  for (std::uint32_t j = 0; j < 4; ++j) q_blocks.push_back({j, 4000, 0.0, 100 + j});
  const auto q = build_table("q", catalog, 3, q_blocks);

  std::vector<oss::FeatureTable> sets;
  for (int s = 0; s < 3; ++s) {
    std::vector<ClassBlock> blocks;
    for (std::uint32_t j = 0; j < 4; ++j)
      blocks.push_back({j, 70, 0.0, static_cast<std::uint64_t>(200 + 10 * s + j)});
    sets.push_back(build_table("small_" + std::to_string(s), catalog, 3, blocks));
  }
  {
    std::vector<ClassBlock> blocks;
    for (std::uint32_t j = 0; j < 4; ++j) blocks.push_back({j, 700, 0.0, 300 + j});
    sets.push_back(build_table("large", catalog, 3, blocks));
  }

  oss::OSSConfig cfg;
  cfg.seed = 31;

  auto argmax = [](const std::vector<oss::OSSResult>& results) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
      if (results[i].oss > results[best].oss) best = i;
    return best;
  };

  oss::OSSConfig off = cfg;
  off.disable_beta = true;
  const auto res_off = oss::oss(sets, q, off);
  for (const auto& r : res_off) CHECK(r.beta == 1.0);
  CHECK(argmax(res_off) == 3);

  const auto res_on = oss::oss(sets, q, cfg);
  CHECK_THAT(res_on[3].beta, WithinAbs(10.0, 1e-12));  // 2800 over a Q1 of 280
  CHECK_THAT(res_on[0].beta, WithinAbs(1.0, 1e-12));
  CHECK(argmax(res_on) != 3);

  // The larger set carries the larger ratio terms in both runs.
  CHECK(res_off[3].classes[0].r > res_off[0].classes[0].r);
  CHECK(res_on[3].classes[0].r > res_on[0].classes[0].r);
}

TEST_CASE("oss_variant_suite runs every ablation with a shared seed", "[osscore]") {
  const std::vector<std::string> catalog{"c0", "c1"};
  const auto q = build_table("q", catalog, 2, {{0, 30, 0.0, 111}, {1, 40, 0.0, 112}});
  const auto p = build_table("p", catalog, 2, {{0, 35, 0.5, 113}, {1, 30, 0.5, 114}});

  oss::OSSConfig cfg;
  cfg.seed = 9;
  const auto suite = oss::oss_variant_suite({p}, q, cfg);
  REQUIRE(suite.size() == 7);
  const std::vector<std::string> expected{"all",   "no_r",    "raw_count", "no_jsd",
                                          "no_t1", "no_beta", "no_weights"};
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(suite[i].first == expected[i]);

  const auto plain = oss::oss({p}, q, cfg);
  CHECK(suite[0].second[0].oss == plain[0].oss);

  for (const auto& cls : suite[3].second[0].classes) CHECK(cls.jsd == 0.0);

  for (const auto& cls : suite[2].second[0].classes)
    if (cls.included) CHECK(cls.r == static_cast<double>(cls.count_p));

  for (const auto& cls : suite[4].second[0].classes)
    if (cls.included)
      CHECK_THAT(cls.r,
                 WithinAbs(static_cast<double>(cls.count_p) / static_cast<double>(cls.count_q),
                           1e-12));

  for (const auto& cls : suite[1].second[0].classes)
    if (cls.included) CHECK(cls.r == 0.0);
  CHECK(suite[1].second[0].oss > 0.0);
}

TEST_CASE("global divergence debug mode shares one estimate across classes", "[osscore]") {
  const std::vector<std::string> catalog{"c0", "c1"};
  const auto q = build_table("q", catalog, 2, {{0, 40, 0.0, 121}, {1, 40, 0.8, 122}});
  const auto p = build_table("p", catalog, 2, {{0, 40, 0.2, 123}, {1, 40, 1.0, 124}});

  oss::OSSConfig cfg;
  cfg.seed = 55;
  cfg.global_jsd = true;
  const auto res = oss::oss({p}, q, cfg);
  REQUIRE(res[0].classes.size() == 2);
  CHECK(res[0].classes[0].jsd == res[0].classes[1].jsd);
  CHECK(res[0].classes[0].jsd > 0.0);

  oss::OSSConfig per_class = cfg;
  per_class.global_jsd = false;
  const auto res_pc = oss::oss({p}, q, per_class);
  CHECK(res_pc[0].classes[0].jsd != res_pc[0].classes[1].jsd);
}
