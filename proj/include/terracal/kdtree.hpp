#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace terracal {

// Exact nearest-neighbour search over a fixed set of 3D points. The tree is
// median-split on the widest axis of each node's bounding box; queries are
// exact (branch-and-bound, not approximate).
class KdTree {
 public:
  explicit KdTree(const std::vector<Eigen::Vector3d>& points) : points_(points) {
    indices_.resize(points_.size());
    std::iota(indices_.begin(), indices_.end(), 0);
    nodes_.reserve(points_.empty() ? 1 : 2 * points_.size());
    if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()));
  }

  bool empty() const { return points_.empty(); }

  // Returns the index of the nearest point and its squared distance.
  // Precondition: !empty().
  std::pair<int, double> nearest(const Eigen::Vector3d& query) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_d2);
    return {best, best_d2};
  }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;  // leaf range into indices_
    int end = 0;
    int axis = 0;
    double split = 0.0;
  };

  static constexpr int kLeafSize = 16;

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Eigen::Vector3d lo = points_[indices_[begin]];
    Eigen::Vector3d hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[indices_[i]]);
      hi = hi.cwiseMax(points_[indices_[i]]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(indices_.begin() + begin, indices_.begin() + mid, indices_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    node.axis = axis;
    node.split = points_[indices_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int node_id, const Eigen::Vector3d& query, int& best, double& best_d2) const {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = indices_[i];
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
      return;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, query, best, best_d2);
    if (delta * delta <= best_d2) search(far, query, best, best_d2);
  }

  const std::vector<Eigen::Vector3d>& points_;
  std::vector<int> indices_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace terracal
