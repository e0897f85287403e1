#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "oss/errors.hpp"
#include "oss/rng.hpp"

namespace oss {

// Gaussian KDE with Scott bandwidth. The kernel covariance is shared across
// all training points: Sigma = h^2 * (sample covariance + eps * I).
struct KDEModel {
  Eigen::MatrixXd samples;     // n x d training data
  double bandwidth = 0.0;      // h = n^(-1/(d+4))
  Eigen::MatrixXd covariance;  // kernel covariance
  Eigen::MatrixXd chol_lower;  // L with L * L^T = covariance

  std::size_t n() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
};

inline KDEModel fit_kde(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw domain_error("fit_kde: need at least 2 samples");
  if (d < 1) throw domain_error("fit_kde: need at least 1 dimension");
  if (!samples.allFinite()) throw domain_error("fit_kde: non-finite sample values");

  KDEModel model;
  model.samples = samples;
  model.bandwidth = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));

  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double ridge = std::max(1e-9 * cov.trace() / static_cast<double>(d), 1e-12);
  cov += ridge * Eigen::MatrixXd::Identity(d, d);
  model.covariance = model.bandwidth * model.bandwidth * cov;

  Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
  if (llt.info() != Eigen::Success) {
    // The ridge keeps this positive definite in practice; escalate if numerics disagree.
    Eigen::MatrixXd boosted = model.covariance;
    double extra = ridge;
    for (int attempt = 0; attempt < 4 && llt.info() != Eigen::Success; ++attempt) {
      extra *= 100.0;
      boosted += extra * Eigen::MatrixXd::Identity(d, d);
      llt.compute(boosted);
    }
    if (llt.info() != Eigen::Success) throw domain_error("fit_kde: covariance not positive definite");
    model.covariance = boosted;
  }
  model.chol_lower = llt.matrixL();
  return model;
}

// Draw N points: uniformly chosen training point plus correlated Gaussian noise.
// Deterministic for a given seed, independent of thread count.
inline Eigen::MatrixXd sample_kde(const KDEModel& model, std::size_t n_draw, std::uint64_t seed) {
  if (n_draw < 1) throw domain_error("sample_kde: need at least 1 draw");
  if (model.n() == 0) throw domain_error("sample_kde: model not fitted");
  const std::size_t d = model.dim();
  RandomStream rs(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_draw), static_cast<Eigen::Index>(d));
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n_draw; ++i) {
    const std::uint64_t pick = rs.below(model.n());
    for (std::size_t j = 0; j < d; ++j) z[static_cast<Eigen::Index>(j)] = rs.normal();
    out.row(static_cast<Eigen::Index>(i)) =
        model.samples.row(static_cast<Eigen::Index>(pick)) +
        (model.chol_lower * z).transpose();
  }
  return out;
}

}  // namespace oss
