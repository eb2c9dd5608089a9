#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fourn/spatial.hpp"

namespace fourn {

/// Reads "x,y,value" (an extra trailing "label" column is accepted and
/// ignored). Errors name the offending line; duplicate sites name both lines.
SpatialDataset read_dataset_csv(std::istream& in);
SpatialDataset load_csv(const std::filesystem::path& path);

/// Query sites: "x,y" or "x,y,value". Missing values come back as NaN.
struct QueryTable {
  std::vector<Location> locations;
  std::vector<double> values;
  bool has_values = false;
};
QueryTable load_query_csv(const std::filesystem::path& path);

/// Writes "x,y,value" plus "label" when labels are given; values are
/// printed in shortest round-trip form.
void write_dataset_csv(std::ostream& out, const SpatialDataset& data,
                       std::span<const int> labels = {});
void save_csv(const std::filesystem::path& path, const SpatialDataset& data,
              std::span<const int> labels = {});

/// "x,y,truth,pred"; NaN truth is written as "nan".
void write_predictions_csv(std::ostream& out, std::span<const Location> sites,
                           std::span<const double> truth, std::span<const double> pred);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace fourn
