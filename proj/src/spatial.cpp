#include "fourn/spatial.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fourn/error.hpp"
#include "fourn/kdtree.hpp"
#include "fourn/rng.hpp"

namespace fourn {

std::optional<std::pair<std::size_t, std::size_t>> find_duplicate_location(
    std::span<const Location> locations) {
  std::vector<std::size_t> idx(locations.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (locations[a].x != locations[b].x) return locations[a].x < locations[b].x;
    if (locations[a].y != locations[b].y) return locations[a].y < locations[b].y;
    return a < b;
  });
  constexpr double tol2 = kDuplicateTolerance * kDuplicateTolerance;
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const Location a = locations[idx[s]];
    for (std::size_t t = s + 1; t < idx.size(); ++t) {
      const Location b = locations[idx[t]];
      if (b.x - a.x > kDuplicateTolerance) break;
      if (squared_distance(a, b) <= tol2) {
        const std::pair<std::size_t, std::size_t> pair{std::min(idx[s], idx[t]), std::max(idx[s], idx[t])};
        if (!best || pair < *best) best = pair;
      }
    }
  }
  return best;
}

SpatialDataset::SpatialDataset(std::vector<Location> locations, std::vector<double> values)
    : locations_(std::move(locations)), values_(std::move(values)) {
  if (locations_.size() != values_.size())
    throw Error("dataset has " + std::to_string(locations_.size()) + " locations but " +
                std::to_string(values_.size()) + " responses");
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    if (!std::isfinite(locations_[i].x) || !std::isfinite(locations_[i].y))
      throw Error("non-finite coordinate at row " + std::to_string(i));
    if (!std::isfinite(values_[i])) throw Error("non-finite response at row " + std::to_string(i));
  }
  if (auto dup = find_duplicate_location(locations_))
    throw Error("duplicate locations at rows " + std::to_string(dup->first) + " and " +
                std::to_string(dup->second));
}

SpatialDataset SpatialDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Location> locs;
  std::vector<double> vals;
  locs.reserve(indices.size());
  vals.reserve(indices.size());
  std::vector<char> seen(size(), 0);
  for (std::size_t i : indices) {
    if (i >= size()) throw Error("subset index out of range");
    if (seen[i]) throw Error("subset index repeated: " + std::to_string(i));
    seen[i] = 1;
    locs.push_back(locations_[i]);
    vals.push_back(values_[i]);
  }
  return SpatialDataset(Trusted{}, std::move(locs), std::move(vals));
}

SpatialDataset SpatialDataset::with_values(std::vector<double> values) const {
  if (values.size() != size()) throw Error("replacement responses have the wrong length");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("non-finite response");
  return SpatialDataset(Trusted{}, locations_, std::move(values));
}

std::vector<std::size_t> order_reference(const SpatialDataset& dataset, OrderingScheme scheme) {
  if (dataset.empty()) throw Error("empty reference set");
  std::vector<std::size_t> perm(dataset.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  switch (scheme.kind) {
    case OrderingKind::Identity:
      break;
    case OrderingKind::Coordinate: {
      const auto& locs = dataset.locations();
      std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        if (locs[a].x != locs[b].x) return locs[a].x < locs[b].x;
        return locs[a].y < locs[b].y;
      });
      break;
    }
    case OrderingKind::Random: {
      Rng rng(scheme.seed);
      // Fisher-Yates with an explicit bounded draw so the result does not
      // depend on the standard library's shuffle.
      for (std::size_t i = perm.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
      }
      break;
    }
  }
  return perm;
}

NeighborTable::NeighborTable(NeighborMode mode, std::size_t m, std::vector<Location> sites,
                             std::vector<std::size_t> offsets, std::vector<std::size_t> indices,
                             std::vector<double> distances)
    : mode_(mode),
      m_(m),
      sites_(std::move(sites)),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      distances_(std::move(distances)) {
  if (offsets_.size() != sites_.size() + 1 || offsets_.front() != 0 ||
      offsets_.back() != indices_.size() || indices_.size() != distances_.size())
    throw Error("inconsistent neighbor table layout");
}

namespace {

void append_hits(const std::vector<NeighborHit>& hits, std::vector<std::size_t>& indices,
                 std::vector<double>& distances) {
  for (const NeighborHit& h : hits) {
    indices.push_back(h.index);
    distances.push_back(std::sqrt(h.squared_distance));
  }
}

}  // namespace

NeighborTable build_neighbor_table_training(const SpatialDataset& ordered, std::size_t m) {
  if (m == 0) throw Error("neighbor count m must be at least 1");
  const auto& locs = ordered.locations();
  const std::size_t n = locs.size();
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;
  std::vector<double> distances;
  offsets.reserve(n + 1);
  indices.reserve(n * m);
  distances.reserve(n * m);
  if (n > 0) {
    const KdTree tree(locs);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) append_hits(tree.nearest(locs[i], std::min(m, i), i), indices, distances);
      offsets.push_back(indices.size());
    }
  }
  return NeighborTable(NeighborMode::Training, m, locs, std::move(offsets), std::move(indices),
                       std::move(distances));
}

NeighborTable build_neighbor_table_prediction(const SpatialDataset& reference,
                                              std::span<const Location> queries, std::size_t m) {
  if (m == 0) throw Error("neighbor count m must be at least 1");
  if (reference.size() < m) throw Error("insufficient reference points");
  const KdTree tree(reference.locations());
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;
  std::vector<double> distances;
  offsets.reserve(queries.size() + 1);
  indices.reserve(queries.size() * m);
  distances.reserve(queries.size() * m);
  for (const Location& q : queries) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw Error("non-finite query location");
    append_hits(tree.nearest(q, m), indices, distances);
    offsets.push_back(indices.size());
  }
  return NeighborTable(NeighborMode::Prediction, m,
                       std::vector<Location>(queries.begin(), queries.end()), std::move(offsets),
                       std::move(indices), std::move(distances));
}

NeighborTable build_neighbor_table_others(const SpatialDataset& reference, std::size_t m) {
  if (m == 0) throw Error("neighbor count m must be at least 1");
  if (reference.size() <= m) throw Error("insufficient reference points");
  const KdTree tree(reference.locations());
  const std::size_t n = reference.size();
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;
  std::vector<double> distances;
  offsets.reserve(n + 1);
  indices.reserve(n * m);
  distances.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    auto hits = tree.nearest(reference.location(i), m + 1);
    std::erase_if(hits, [i](const NeighborHit& h) { return h.index == i; });
    hits.resize(m);
    append_hits(hits, indices, distances);
    offsets.push_back(indices.size());
  }
  return NeighborTable(NeighborMode::Prediction, m, reference.locations(), std::move(offsets),
                       std::move(indices), std::move(distances));
}

std::vector<std::size_t> find_neighbors_prediction(const SpatialDataset& reference, Location query,
                                                   std::size_t m) {
  if (m == 0) throw Error("neighbor count m must be at least 1");
  if (reference.size() < m) throw Error("insufficient reference points");
  const KdTree tree(reference.locations());
  std::vector<std::size_t> out;
  out.reserve(m);
  for (const NeighborHit& h : tree.nearest(query, m)) out.push_back(h.index);
  return out;
}

}  // namespace fourn
