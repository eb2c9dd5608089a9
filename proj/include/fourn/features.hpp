#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fourn/matrix.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

enum class FeatureKind { KrigingOnly, Nonparametric, KrigingPlusNP };

/// CLI spelling: "kriging", "np", "kriging-np".
std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view text);

struct FeatureSpec {
  FeatureKind kind = FeatureKind::KrigingPlusNP;
  std::size_t m = 10;

  /// 1, 3m+2 or 3m+3.
  std::size_t columns() const noexcept;
  bool uses_kriging() const noexcept { return kind != FeatureKind::Nonparametric; }
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Column tags: krig, sx, sy, then dx<l>, dy<l>, yn<l> for l = 1..m.
std::vector<std::string> feature_layout(const FeatureSpec& spec);

/// Per-column affine map fitted on training rows (population sd).
struct Standardization {
  std::vector<double> means;
  std::vector<double> sds;

  /// Divisor actually used; zero-variance columns are only centered.
  double scale(std::size_t c) const noexcept;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct FeatureMatrix {
  Matrix values;                                 // rows x p
  std::vector<std::string> layout;               // p column tags
  std::vector<std::size_t> row_sites;            // table row behind each emitted row
  std::vector<std::size_t> excluded_sites;       // training rows with < m neighbors
  std::optional<Standardization> standardization;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

/// Feature rows for every table row with at least m neighbors.
///
/// `reference` supplies neighbor locations and responses; the table supplies
/// the site locations. `kriging_preds` is indexed by table row and is required
/// exactly when the feature spec includes the Kriging column.
FeatureMatrix build_features(const SpatialDataset& reference, const NeighborTable& table,
                             const FeatureSpec& spec,
                             std::optional<std::span<const double>> kriging_preds);

/// Fits column statistics on `fm` and returns the standardized copy.
FeatureMatrix standardize(const FeatureMatrix& fm);

/// Applies previously fitted statistics.
FeatureMatrix apply_standardization(const FeatureMatrix& fm, const Standardization& stats);

/// Inverse of apply_standardization using the stored statistics.
FeatureMatrix unstandardize(const FeatureMatrix& fm);

/// Picks values[row_sites[r]] for each emitted row.
std::vector<double> gather_rows(std::span<const double> values,
                                std::span<const std::size_t> row_sites);

/// CSV with the layout tags as header; values printed round-trip exact.
void write_feature_csv(std::ostream& out, const FeatureMatrix& fm);
FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace fourn
