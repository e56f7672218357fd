#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace beamgat {

/// Neighbor hit ordered by (squared distance, index). The index tie-break
/// makes every query result unique.
struct Neighbor {
  double dist2 = 0.0;
  std::size_t index = 0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree over points in R^Dim. Points are copied at build time.
template <std::size_t Dim>
class KdTree {
 public:
  using Point = std::array<double, Dim>;

  KdTree() = default;
  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 1);
      build(0, order_.size(), 0);
    }
  }

  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }

  /// The k smallest (dist2, index) pairs, ascending. Points whose index equals
  /// `exclude` are skipped.
  std::vector<Neighbor> knn(const Point& q, std::size_t k,
                            std::size_t exclude = static_cast<std::size_t>(-1)) const {
    std::vector<Neighbor> heap;
    if (k == 0 || nodes_.empty()) return heap;
    heap.reserve(k + 1);
    search(0, q, k, exclude, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  Neighbor nearest(const Point& q) const { return knn(q, 1).front(); }

  static double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) {
      const double t = a[d] - b[d];
      s += t * t;
    }
    return s;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    std::size_t left = 0, right = 0; // child node ids, 0 for leaves
    std::size_t axis = 0;
    double split = 0.0;
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end, 0, 0, 0, 0.0});
    if (end - begin <= kLeafSize) return id;

    // Split on the widest axis at the median.
    Point lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t d = 0; d < Dim; ++d) {
        lo[d] = std::min(lo[d], points_[order_[i]][d]);
        hi[d] = std::max(hi[d], points_[order_[i]][d]);
      }
    }
    std::size_t axis = depth % Dim;
    for (std::size_t d = 0; d < Dim; ++d) {
      if (hi[d] - lo[d] > hi[axis] - lo[axis]) axis = d;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    auto first = order_.begin();
    std::nth_element(first + static_cast<std::ptrdiff_t>(begin),
                     first + static_cast<std::ptrdiff_t>(mid),
                     first + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid, depth + 1);
    const std::size_t right = build(mid, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    return id;
  }

  void search(std::size_t id, const Point& q, std::size_t k, std::size_t exclude,
              std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        if (idx == exclude) continue;
        const Neighbor cand{dist2(q, points_[idx]), idx};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const std::size_t near = diff <= 0.0 ? node.left : node.right;
    const std::size_t far = diff <= 0.0 ? node.right : node.left;
    search(near, q, k, exclude, heap);
    // Equal distance must still be explored: a lower index may win the tie.
    if (heap.size() < k || diff * diff <= heap.front().dist2) search(far, q, k, exclude, heap);
  }

  std::vector<Point> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace beamgat
