#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oss/errors.hpp"
#include "oss/kde.hpp"
#include "oss/kdtree.hpp"
#include "oss/rng.hpp"

namespace oss {

struct DivergenceEstimate {
  double value = 0.0;
  int k_neighbors = 0;
  std::size_t sample_size = 0;
  bool clamped = false;
};

namespace detail {

inline std::vector<double> flatten_rows(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()) * static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out[static_cast<std::size_t>(r) * m.cols() + c] = m(r, c);
  return out;
}

// kNN KL estimate without the final clamp:
//   D = (d/n) * sum_i log(nu_k(x_i) / rho_k(x_i)) + log(m / (n - 1))
// rho is the k-th neighbor of x_i within X \ {x_i}, nu within Y. Near-duplicate
// points (distance < 1e-12) get one round of +-1e-10 jitter on the X side to
// keep the logs finite; a still-degenerate sample is an error.
inline double raw_knn_kl(const Eigen::MatrixXd& x_from_p, const Eigen::MatrixXd& y_from_q, int k) {
  const std::size_t n = static_cast<std::size_t>(x_from_p.rows());
  const std::size_t m = static_cast<std::size_t>(y_from_q.rows());
  const std::size_t d = static_cast<std::size_t>(x_from_p.cols());
  if (d == 0 || static_cast<std::size_t>(y_from_q.cols()) != d)
    throw domain_error("knn_kl: dimension mismatch");
  if (k < 1 || static_cast<std::size_t>(k) >= n || static_cast<std::size_t>(k) > m)
    throw domain_error("knn_kl: invalid k for sample sizes");

  std::vector<double> xs = flatten_rows(x_from_p);
  const std::vector<double> ys = flatten_rows(y_from_q);
  const KDTree y_tree(ys, d);
  constexpr double kDegenerate = 1e-12;

  std::vector<double> rho(n), nu(n);
  auto run_queries = [&](const KDTree& x_tree) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* q = xs.data() + i * d;
      rho[i] = x_tree.kth_neighbor_distance(q, static_cast<std::size_t>(k),
                                            static_cast<std::ptrdiff_t>(i));
      nu[i] = y_tree.kth_neighbor_distance(q, static_cast<std::size_t>(k));
    }
  };
  {
    const KDTree x_tree(xs, d);
    run_queries(x_tree);
  }

  bool needs_jitter = false;
  for (std::size_t i = 0; i < n; ++i)
    if (rho[i] < kDegenerate || nu[i] < kDegenerate) { needs_jitter = true; break; }

  if (needs_jitter) {
    RandomStream rs(derive_seed(0x6a177e5ULL, "knn-kl-jitter"));
    for (std::size_t i = 0; i < n; ++i) {
      if (rho[i] < kDegenerate || nu[i] < kDegenerate)
        for (std::size_t j = 0; j < d; ++j) xs[i * d + j] += rs.uniform(-1e-10, 1e-10);
    }
    const KDTree x_tree(xs, d);
    run_queries(x_tree);
    for (std::size_t i = 0; i < n; ++i)
      if (rho[i] < kDegenerate || nu[i] < kDegenerate)
        throw domain_error("knn_kl: degenerate sample (duplicate points persist after jitter)");
  }

  double log_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) log_sum += std::log(nu[i] / rho[i]);
  return static_cast<double>(d) / static_cast<double>(n) * log_sum +
         std::log(static_cast<double>(m) / static_cast<double>(n - 1));
}

}  // namespace detail

// Nearest-neighbor KL divergence estimate, clamped at zero.
inline DivergenceEstimate knn_kl(const Eigen::MatrixXd& x_from_p, const Eigen::MatrixXd& y_from_q,
                                 int k = 1) {
  const double raw = detail::raw_knn_kl(x_from_p, y_from_q, k);
  DivergenceEstimate est;
  est.k_neighbors = k;
  est.sample_size = static_cast<std::size_t>(x_from_p.rows());
  est.clamped = raw < 0.0;
  est.value = est.clamped ? 0.0 : raw;
  return est;
}

// Jensen-Shannon divergence between two fitted KDE models. Equal-sized samples
// are drawn from each model, the mixture sample is a fresh half-and-half draw,
// and the two KL halves are averaged before a single clamp to [0, ln 2]; the
// raw halves keep their sign so opposite small-sample biases can cancel.
inline DivergenceEstimate jsd_knn(const KDEModel& kde_p, const KDEModel& kde_q, std::size_t n_draw,
                                  int k, std::uint64_t seed) {
  if (k < 1) throw domain_error("jsd_knn: k must be >= 1");
  if (n_draw < 2 * (static_cast<std::size_t>(k) + 1))
    throw domain_error("jsd_knn: sample size too small for k");
  const std::size_t half_p = n_draw / 2;
  const std::size_t half_q = n_draw - half_p;

  const Eigen::MatrixXd x_p = sample_kde(kde_p, n_draw, derive_seed(seed, "jsd-p"));
  const Eigen::MatrixXd x_q = sample_kde(kde_q, n_draw, derive_seed(seed, "jsd-q"));
  Eigen::MatrixXd x_m(static_cast<Eigen::Index>(n_draw), x_p.cols());
  x_m.topRows(static_cast<Eigen::Index>(half_p)) =
      sample_kde(kde_p, half_p, derive_seed(seed, "jsd-mix-p"));
  x_m.bottomRows(static_cast<Eigen::Index>(half_q)) =
      sample_kde(kde_q, half_q, derive_seed(seed, "jsd-mix-q"));

  const double raw = 0.5 * detail::raw_knn_kl(x_p, x_m, k) +
                     0.5 * detail::raw_knn_kl(x_q, x_m, k);
  const double ln2 = std::log(2.0);
  DivergenceEstimate est;
  est.k_neighbors = k;
  est.sample_size = n_draw;
  est.clamped = raw < 0.0 || raw > ln2;
  est.value = std::clamp(raw, 0.0, ln2);
  return est;
}

}  // namespace oss
