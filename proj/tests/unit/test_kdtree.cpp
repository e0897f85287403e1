#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oss/kdtree.hpp"
#include "oss/rng.hpp"

namespace {

// Brute-force k-th nearest neighbor distance.
double brute_kth(const std::vector<double>& pts, std::size_t dim, const double* q, std::size_t k,
                 std::ptrdiff_t skip) {
  std::vector<double> d2;
  const std::size_t n = pts.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    if (skip >= 0 && i == static_cast<std::size_t>(skip)) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = q[j] - pts[i * dim + j];
      s += d * d;
    }
    d2.push_back(s);
  }
  std::sort(d2.begin(), d2.end());
  return std::sqrt(d2[k - 1]);
}

}  // namespace

TEST_CASE("kdtree matches brute-force neighbor distances", "[kdtree]") {
  oss::RandomStream rs(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t dim = 1 + rs.below(4);
    const std::size_t n = 5 + rs.below(120);
    std::vector<double> pts(n * dim);
    // Quantized coordinates provoke duplicate values and ties on split planes.
    const bool quantize = rs.uniform() < 0.4;
    for (auto& v : pts)
      v = quantize ? static_cast<double>(rs.below(8)) : rs.uniform(-10.0, 10.0);
    oss::KDTree tree(pts, dim);
    REQUIRE(tree.size() == n);

    for (int query = 0; query < 10; ++query) {
      std::vector<double> q(dim);
      const bool on_point = rs.uniform() < 0.5;
      if (on_point) {
        const std::size_t pick = rs.below(n);
        for (std::size_t j = 0; j < dim; ++j) q[j] = pts[pick * dim + j];
      } else {
        for (std::size_t j = 0; j < dim; ++j) q[j] = rs.uniform(-12.0, 12.0);
      }
      const std::size_t k = 1 + rs.below(3);
      const std::ptrdiff_t skip = rs.uniform() < 0.5 ? static_cast<std::ptrdiff_t>(rs.below(n)) : -1;
      if ((skip >= 0 ? n - 1 : n) < k) continue;
      const double got = tree.kth_neighbor_distance(q.data(), k, skip);
      const double want = brute_kth(pts, dim, q.data(), k, skip);
      CHECK(got == Catch::Approx(want).margin(1e-12));
    }
  }
}

TEST_CASE("kdtree handles identical points and rejects bad k", "[kdtree]") {
  std::vector<double> pts = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};  // three identical 2-D points
  oss::KDTree tree(pts, 2);
  const double q[2] = {1.0, 1.0};
  CHECK(tree.kth_neighbor_distance(q, 1) == Catch::Approx(0.0));
  CHECK(tree.kth_neighbor_distance(q, 3) == Catch::Approx(0.0));
  CHECK(tree.kth_neighbor_distance(q, 2, 0) == Catch::Approx(0.0));
  CHECK_THROWS_AS(tree.kth_neighbor_distance(q, 4), oss::domain_error);
  CHECK_THROWS_AS(tree.kth_neighbor_distance(q, 3, 1), oss::domain_error);
  CHECK_THROWS_AS(tree.kth_neighbor_distance(q, 0), oss::domain_error);
  CHECK_THROWS_AS(oss::KDTree({}, 2), oss::domain_error);
  CHECK_THROWS_AS(oss::KDTree({1.0, 2.0, 3.0}, 2), oss::domain_error);
}
