#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fourn {

struct Location {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

inline double squared_distance(Location a, Location b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(Location a, Location b) noexcept { return std::sqrt(squared_distance(a, b)); }

/// Two locations closer than this are treated as the same site.
inline constexpr double kDuplicateTolerance = 1e-12;

/// First pair (i < j) of locations within kDuplicateTolerance of each other.
std::optional<std::pair<std::size_t, std::size_t>> find_duplicate_location(
    std::span<const Location> locations);

/// Point-referenced observations: locations with one scalar response each.
/// Construction validates finiteness, equal lengths and distinct locations.
class SpatialDataset {
 public:
  SpatialDataset() = default;
  SpatialDataset(std::vector<Location> locations, std::vector<double> values);

  std::size_t size() const noexcept { return locations_.size(); }
  bool empty() const noexcept { return locations_.empty(); }

  const std::vector<Location>& locations() const noexcept { return locations_; }
  const std::vector<double>& values() const noexcept { return values_; }
  Location location(std::size_t i) const { return locations_[i]; }
  double value(std::size_t i) const { return values_[i]; }

  /// Dataset whose row k is this dataset's row indices[k].
  SpatialDataset subset(std::span<const std::size_t> indices) const;

  /// Same sites with replaced responses.
  SpatialDataset with_values(std::vector<double> values) const;

 private:
  struct Trusted {};
  SpatialDataset(Trusted, std::vector<Location> locations, std::vector<double> values)
      : locations_(std::move(locations)), values_(std::move(values)) {}

  std::vector<Location> locations_;
  std::vector<double> values_;
};

enum class OrderingKind { Coordinate, Random, Identity };

struct OrderingScheme {
  OrderingKind kind = OrderingKind::Coordinate;
  std::uint64_t seed = 0;  // Random only
  friend bool operator==(const OrderingScheme&, const OrderingScheme&) = default;
};

/// Permutation (0-based) placing the reference set in conditioning order.
/// Coordinate: ascending x, ties by y, then by index.
std::vector<std::size_t> order_reference(const SpatialDataset& dataset, OrderingScheme scheme);

enum class NeighborMode { Training, Prediction };

/// Per-site neighbor lists in CSR form, each sorted by ascending distance with
/// equal distances broken by lower index.
///
/// Training tables are built over an ordered reference set and only admit
/// predecessors (index < i); prediction tables index into a reference set for
/// sites outside it.
class NeighborTable {
 public:
  NeighborTable(NeighborMode mode, std::size_t m, std::vector<Location> sites,
                std::vector<std::size_t> offsets, std::vector<std::size_t> indices,
                std::vector<double> distances);

  NeighborMode mode() const noexcept { return mode_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t size() const noexcept { return sites_.size(); }

  Location site(std::size_t i) const { return sites_[i]; }
  const std::vector<Location>& sites() const noexcept { return sites_; }

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {indices_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> distances(std::size_t i) const {
    return {distances_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

 private:
  NeighborMode mode_;
  std::size_t m_;
  std::vector<Location> sites_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> indices_;
  std::vector<double> distances_;
};

/// Site i gets the min(m, i) nearest among sites 0..i-1.
NeighborTable build_neighbor_table_training(const SpatialDataset& ordered, std::size_t m);

/// Each query gets its m nearest reference sites.
NeighborTable build_neighbor_table_prediction(const SpatialDataset& reference,
                                              std::span<const Location> queries, std::size_t m);

/// Each reference site gets its m nearest other reference sites.
NeighborTable build_neighbor_table_others(const SpatialDataset& reference, std::size_t m);

std::vector<std::size_t> find_neighbors_prediction(const SpatialDataset& reference, Location query,
                                                   std::size_t m);

}  // namespace fourn
