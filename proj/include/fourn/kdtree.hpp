#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fourn/spatial.hpp"

namespace fourn {

struct NeighborHit {
  std::size_t index;
  double squared_distance;
};

/// Static 2-d tree for exact k-nearest-neighbor queries.
///
/// Results are ordered by (squared distance, index), so equidistant points
/// resolve to the lower index exactly as a linear scan would. Immutable after
/// construction; concurrent queries are safe.
class KdTree {
 public:
  static constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

  explicit KdTree(std::span<const Location> points, std::size_t leaf_size = 16);

  std::size_t size() const noexcept { return xs_.size(); }

  /// The k nearest points among those with index < limit.
  std::vector<NeighborHit> nearest(Location query, std::size_t k,
                                   std::size_t limit = kNoLimit) const;

 private:
  struct Node {
    double min_x, min_y, max_x, max_y;
    std::size_t begin, end;      // range in the permuted arrays
    std::size_t min_index;       // smallest original index in the subtree
    std::size_t left, right;     // child node ids; 0 for leaves
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t depth);

  std::size_t leaf_size_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> order_;  // permuted position -> original index
  std::vector<double> xs_;          // coordinates in permuted order
  std::vector<double> ys_;
};

}  // namespace fourn
