#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "oss/errors.hpp"
#include "oss/special.hpp"

namespace oss {

struct CorrelationResult {
  double statistic = 0.0;             // r or tau, always in [-1, 1]
  std::optional<double> p_value;      // two-sided, Pearson only
  std::size_t n = 0;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Merge-sort inversion count on v: pairs i < j with v[i] > v[j].
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf,
                                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      buf[out++] = v[i++];
    } else {
      inv += mid - i;  // every remaining left element beats v[j]
      buf[out++] = v[j++];
    }
  }
  while (i < mid) buf[out++] = v[i++];
  while (j < hi) buf[out++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

// Sum of t*(t-1)/2 over runs of equal values in a sorted range.
template <typename It, typename Eq>
std::uint64_t tie_pair_count(It first, It last, Eq eq) {
  std::uint64_t total = 0;
  while (first != last) {
    It run = first;
    while (run != last && eq(*first, *run)) ++run;
    const std::uint64_t t = static_cast<std::uint64_t>(run - first);
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

}  // namespace detail

// Linear-interpolation percentile: position (n-1)*q/100 between order statistics.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw domain_error("percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) throw domain_error("percentile: q must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = static_cast<double>(values.size() - 1) * q / 100.0;
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= values.size()) return values[lo];
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Population standard deviation over mean.
inline double coefficient_of_variation(const std::vector<double>& w) {
  if (w.empty()) throw domain_error("coefficient_of_variation: empty input");
  const double mu = detail::mean_of(w);
  if (mu == 0.0) throw domain_error("coefficient_of_variation: zero mean");
  double ss = 0.0;
  for (double x : w) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(w.size())) / mu;
}

inline CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw domain_error("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw domain_error("pearson: need at least 3 observations");
  const double mx = detail::mean_of(x);
  const double my = detail::mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw domain_error("pearson: undefined correlation (zero variance)");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double denom = 1.0 - r * r;
  // |r| = 1 drives t to infinity; the t-CDF helper maps that to p = 0.
  const double t = denom > 0.0 ? r * std::sqrt(df / denom)
                               : std::numeric_limits<double>::infinity();
  return CorrelationResult{r, student_t_two_sided_p(t, df), n};
}

// Kendall tau-b with tie correction, O(n log n) via inversion counting.
inline CorrelationResult kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw domain_error("kendall_tau: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw domain_error("kendall_tau: need at least 2 observations");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (a[i] != a[j]) return a[i] < a[j];
    return b[i] < b[j];
  });

  std::vector<std::pair<double, double>> ab(n);
  for (std::size_t i = 0; i < n; ++i) ab[i] = {a[order[i]], b[order[i]]};

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = detail::tie_pair_count(
      ab.begin(), ab.end(), [](const auto& p, const auto& q) { return p.first == q.first; });
  const std::uint64_t n3 = detail::tie_pair_count(
      ab.begin(), ab.end(), [](const auto& p, const auto& q) { return p == q; });

  std::vector<double> bs(n);
  for (std::size_t i = 0; i < n; ++i) bs[i] = ab[i].second;
  std::vector<double> sorted_b = bs;
  std::sort(sorted_b.begin(), sorted_b.end());
  const std::uint64_t n2 = detail::tie_pair_count(
      sorted_b.begin(), sorted_b.end(), [](double p, double q) { return p == q; });

  if (n1 == n0 || n2 == n0)
    throw domain_error("kendall_tau: undefined correlation (all values tied)");

  // With rows sorted by (a, then b), inversions in the b sequence are exactly
  // the discordant pairs; tied-in-a rows are b-ascending and contribute none.
  std::vector<double> buf(n);
  const std::uint64_t d = detail::count_inversions(bs, buf, 0, n);

  const double c_minus_d = static_cast<double>(n0) - static_cast<double>(n1) -
                           static_cast<double>(n2) + static_cast<double>(n3) -
                           2.0 * static_cast<double>(d);
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
  double tau = c_minus_d / denom;
  tau = std::clamp(tau, -1.0, 1.0);
  return CorrelationResult{tau, std::nullopt, n};
}

}  // namespace oss
