#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "oss/errors.hpp"

namespace oss {

// Exact k-d tree over row-major points, built for repeated k-th-nearest-neighbor
// distance queries in low dimension (d <= ~6). Median splits, small leaves,
// linear scan at the leaf level.
class KDTree {
public:
  KDTree(const std::vector<double>& points, std::size_t dim)
      : pts_(points), dim_(dim) {
    if (dim_ == 0) throw domain_error("KDTree: dimension must be positive");
    if (pts_.size() % dim_ != 0) throw domain_error("KDTree: point buffer not divisible by dim");
    n_ = pts_.size() / dim_;
    if (n_ == 0) throw domain_error("KDTree: no points");
    index_.resize(n_);
    std::iota(index_.begin(), index_.end(), std::uint32_t{0});
    nodes_.reserve(2 * n_ / kLeafSize + 2);
    root_ = build(0, n_);
  }

  std::size_t size() const { return n_; }

  // Euclidean distance from q (dim-long) to its k-th nearest neighbor among the
  // stored points, optionally ignoring the point at original index `skip`.
  double kth_neighbor_distance(const double* q, std::size_t k, std::ptrdiff_t skip = -1) const {
    const std::size_t available = skip >= 0 ? n_ - 1 : n_;
    if (k == 0 || k > available) throw domain_error("KDTree: k out of range for stored points");
    std::vector<double> heap;  // max-heap of the k best squared distances
    heap.reserve(k);
    search(root_, q, k, skip, heap);
    return std::sqrt(heap.front());
  }

private:
  static constexpr std::size_t kLeafSize = 16;

  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;           // -1 marks a leaf
    std::uint32_t left = 0, right = 0;
    std::uint32_t begin = 0, end = 0; // leaf range into index_
  };

  const double* point(std::uint32_t idx) const { return pts_.data() + std::size_t{idx} * dim_; }

  std::uint32_t build(std::size_t begin, std::size_t end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = static_cast<std::uint32_t>(begin);
      node.end = static_cast<std::uint32_t>(end);
      nodes_.push_back(node);
      return static_cast<std::uint32_t>(nodes_.size() - 1);
    }
    // Split on the axis with the largest spread across this range.
    std::size_t axis = 0;
    double best_spread = -1.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = point(index_[i])[a];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        axis = a;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return point(a)[axis] < point(b)[axis];
                     });
    node.axis = static_cast<std::int32_t>(axis);
    node.split = point(index_[mid])[axis];
    nodes_.push_back(node);
    const std::uint32_t self = static_cast<std::uint32_t>(nodes_.size() - 1);
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  double sq_dist(const double* a, const double* b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return s;
  }

  void offer(std::vector<double>& heap, std::size_t k, double d2) const {
    if (heap.size() < k) {
      heap.push_back(d2);
      std::push_heap(heap.begin(), heap.end());
    } else if (d2 < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = d2;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void search(std::uint32_t node_id, const double* q, std::size_t k, std::ptrdiff_t skip,
              std::vector<double>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = index_[i];
        if (skip >= 0 && idx == static_cast<std::uint32_t>(skip)) continue;
        offer(heap, k, sq_dist(q, point(idx)));
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const std::uint32_t near = delta <= 0.0 ? node.left : node.right;
    const std::uint32_t far = delta <= 0.0 ? node.right : node.left;
    search(near, q, k, skip, heap);
    if (heap.size() < k || delta * delta < heap.front()) search(far, q, k, skip, heap);
  }

  std::vector<double> pts_;
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

}  // namespace oss
