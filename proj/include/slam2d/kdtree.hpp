#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace slam2d {

/// Balanced 2-d tree over a fixed point set. Queries are exact; equidistant
/// candidates resolve to the lowest point index.
class KdTree2 {
 public:
  KdTree2() = default;

  explicit KdTree2(std::vector<Eigen::Vector2d> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) {
      root_ = build(0, static_cast<int>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Eigen::Vector2d>& points() const { return points_; }

  /// Index and Euclidean distance of the nearest point.
  std::pair<int, double> nearest(const Eigen::Vector2d& query) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_d2);
    return {best, std::sqrt(best_d2)};
  }

  /// Indices of the k nearest points, sorted by (distance, index).
  std::vector<int> knearest(const Eigen::Vector2d& query, int k) const {
    k = std::min<int>(k, static_cast<int>(points_.size()));
    if (k <= 0) return {};
    // max-heap on (squared distance, index)
    std::priority_queue<std::pair<double, int>> heap;
    search_k(root_, query, k, heap);
    std::vector<std::pair<double, int>> found;
    found.reserve(heap.size());
    while (!heap.empty()) {
      found.push_back(heap.top());
      heap.pop();
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) {
                return a.first < b.first || (a.first == b.first && a.second < b.second);
              });
    std::vector<int> out;
    out.reserve(found.size());
    for (const auto& [d2, idx] : found) out.push_back(idx);
    return out;
  }

 private:
  static constexpr int kLeafSize = 8;

  struct Node {
    int dim = 0;
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;  // leaf iff end > begin
  };

  int build(int lo, int hi) {
    Node node;
    if (hi - lo <= kLeafSize) {
      node.begin = lo;
      node.end = hi;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    // split the wider extent
    Eigen::Vector2d mn = points_[order_[lo]], mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(points_[order_[i]]);
      mx = mx.cwiseMax(points_[order_[i]]);
    }
    node.dim = (mx.x() - mn.x() >= mx.y() - mn.y()) ? 0 : 1;
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) { return points_[a][node.dim] < points_[b][node.dim]; });
    node.split = points_[order_[mid]][node.dim];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(lo, mid);
    const int right = build(mid, hi);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int node_id, const Eigen::Vector2d& q, int& best, double& best_d2) const {
    const Node& node = nodes_[node_id];
    if (node.end > node.begin) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
      return;
    }
    const double delta = q[node.dim] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, best, best_d2);
    // visit the far side unless strictly farther than the current best,
    // so exact ties are still explored
    if (delta * delta <= best_d2) {
      search(far, q, best, best_d2);
    }
  }

  void search_k(int node_id, const Eigen::Vector2d& q, int k,
                std::priority_queue<std::pair<double, int>>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.end > node.begin) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (static_cast<int>(heap.size()) < k) {
          heap.emplace(d2, idx);
        } else if (d2 < heap.top().first) {
          heap.pop();
          heap.emplace(d2, idx);
        }
      }
      return;
    }
    const double delta = q[node.dim] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search_k(near, q, k, heap);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().first) {
      search_k(far, q, k, heap);
    }
  }

  std::vector<Eigen::Vector2d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace slam2d
