#include "fourn/kdtree.hpp"

#include <algorithm>
#include <numeric>

#include "fourn/kernels/kernels.hpp"

namespace fourn {
namespace {

inline bool hit_less(const NeighborHit& a, const NeighborHit& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}

}  // namespace

KdTree::KdTree(std::span<const Location> points, std::size_t leaf_size)
    : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  const std::size_t n = points.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  xs_.resize(n);
  ys_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs_[i] = points[i].x;
    ys_[i] = points[i].y;
  }
  if (n == 0) return;
  nodes_.reserve(2 * (n / leaf_size_ + 1));
  build(0, n, 0);
  // Coordinates were permuted alongside order_ during the build.
}

std::size_t KdTree::build(std::size_t begin, std::size_t end, std::size_t depth) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({});
  Node node{};
  node.begin = begin;
  node.end = end;
  node.min_x = node.max_x = xs_[begin];
  node.min_y = node.max_y = ys_[begin];
  node.min_index = order_[begin];
  for (std::size_t p = begin; p < end; ++p) {
    node.min_x = std::min(node.min_x, xs_[p]);
    node.max_x = std::max(node.max_x, xs_[p]);
    node.min_y = std::min(node.min_y, ys_[p]);
    node.max_y = std::max(node.max_y, ys_[p]);
    node.min_index = std::min(node.min_index, order_[p]);
  }
  node.left = node.right = 0;

  if (end - begin > leaf_size_) {
    const bool split_x = (node.max_x - node.min_x) >= (node.max_y - node.min_y);
    const std::vector<double>& key = split_x ? xs_ : ys_;
    const std::size_t mid = begin + (end - begin) / 2;

    std::vector<std::size_t> local(end - begin);
    std::iota(local.begin(), local.end(), begin);
    std::nth_element(local.begin(), local.begin() + (mid - begin), local.end(),
                     [&](std::size_t a, std::size_t b) {
                       if (key[a] != key[b]) return key[a] < key[b];
                       return order_[a] < order_[b];
                     });
    std::vector<std::size_t> ord(local.size());
    std::vector<double> xs(local.size()), ys(local.size());
    for (std::size_t t = 0; t < local.size(); ++t) {
      ord[t] = order_[local[t]];
      xs[t] = xs_[local[t]];
      ys[t] = ys_[local[t]];
    }
    std::copy(ord.begin(), ord.end(), order_.begin() + begin);
    std::copy(xs.begin(), xs.end(), xs_.begin() + begin);
    std::copy(ys.begin(), ys.end(), ys_.begin() + begin);

    node.left = build(begin, mid, depth + 1);
    node.right = build(mid, end, depth + 1);
  }
  nodes_[id] = node;
  return id;
}

std::vector<NeighborHit> KdTree::nearest(Location query, std::size_t k, std::size_t limit) const {
  std::vector<NeighborHit> heap;
  if (k == 0 || nodes_.empty()) return heap;
  heap.reserve(k + 1);
  std::vector<double> scratch(leaf_size_);
  const auto& kern = kernels::active();

  auto box_distance = [&](const Node& nd) {
    const double dx = std::max({nd.min_x - query.x, 0.0, query.x - nd.max_x});
    const double dy = std::max({nd.min_y - query.y, 0.0, query.y - nd.max_y});
    return dx * dx + dy * dy;
  };

  auto visit = [&](auto&& self, std::size_t id) -> void {
    const Node& nd = nodes_[id];
    if (nd.min_index >= limit) return;
    // Equal box distance may still hide a tie with a lower index.
    if (heap.size() == k && box_distance(nd) > heap.front().squared_distance) return;
    if (nd.left == 0) {
      const std::size_t count = nd.end - nd.begin;
      kern.squared_distances(xs_.data() + nd.begin, ys_.data() + nd.begin, count, query.x, query.y,
                             scratch.data());
      for (std::size_t t = 0; t < count; ++t) {
        const NeighborHit hit{order_[nd.begin + t], scratch[t]};
        if (hit.index >= limit) continue;
        if (heap.size() < k) {
          heap.push_back(hit);
          std::push_heap(heap.begin(), heap.end(), hit_less);
        } else if (hit_less(hit, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), hit_less);
          heap.back() = hit;
          std::push_heap(heap.begin(), heap.end(), hit_less);
        }
      }
      return;
    }
    const double dl = box_distance(nodes_[nd.left]);
    const double dr = box_distance(nodes_[nd.right]);
    if (dl <= dr) {
      self(self, nd.left);
      self(self, nd.right);
    } else {
      self(self, nd.right);
      self(self, nd.left);
    }
  };
  visit(visit, 0);
  std::sort_heap(heap.begin(), heap.end(), hit_less);
  return heap;
}

}  // namespace fourn
