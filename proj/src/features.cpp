#include "fourn/features.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "fourn/error.hpp"

namespace fourn {

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::KrigingOnly:
      return "kriging";
    case FeatureKind::Nonparametric:
      return "np";
    case FeatureKind::KrigingPlusNP:
      return "kriging-np";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "kriging") return FeatureKind::KrigingOnly;
  if (text == "np") return FeatureKind::Nonparametric;
  if (text == "kriging-np") return FeatureKind::KrigingPlusNP;
  throw ConfigError("unknown feature set '" + std::string(text) + "' (kriging|np|kriging-np)");
}

std::size_t FeatureSpec::columns() const noexcept {
  switch (kind) {
    case FeatureKind::KrigingOnly:
      return 1;
    case FeatureKind::Nonparametric:
      return 3 * m + 2;
    case FeatureKind::KrigingPlusNP:
      return 3 * m + 3;
  }
  return 0;
}

std::vector<std::string> feature_layout(const FeatureSpec& spec) {
  std::vector<std::string> tags;
  tags.reserve(spec.columns());
  if (spec.uses_kriging()) tags.emplace_back("krig");
  if (spec.kind == FeatureKind::KrigingOnly) return tags;
  tags.emplace_back("sx");
  tags.emplace_back("sy");
  for (std::size_t l = 1; l <= spec.m; ++l) {
    tags.push_back("dx" + std::to_string(l));
    tags.push_back("dy" + std::to_string(l));
    tags.push_back("yn" + std::to_string(l));
  }
  return tags;
}

double Standardization::scale(std::size_t c) const noexcept {
  const double sd = sds[c];
  return sd > 1e-12 * std::max(1.0, std::abs(means[c])) ? sd : 1.0;
}

FeatureMatrix build_features(const SpatialDataset& reference, const NeighborTable& table,
                             const FeatureSpec& spec,
                             std::optional<std::span<const double>> kriging_preds) {
  if (spec.m == 0) throw Error("feature spec needs m >= 1");
  if (spec.uses_kriging() && !kriging_preds)
    throw Error("Kriging predictions are required for this feature set");
  if (kriging_preds && kriging_preds->size() != table.size())
    throw Error("Kriging predictions do not match the neighbor table");

  FeatureMatrix fm;
  fm.layout = feature_layout(spec);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.neighbors(i).size() >= spec.m)
      fm.row_sites.push_back(i);
    else
      fm.excluded_sites.push_back(i);
  }
  const std::size_t p = spec.columns();
  fm.values = Matrix(fm.row_sites.size(), p);
  for (std::size_t r = 0; r < fm.row_sites.size(); ++r) {
    const std::size_t i = fm.row_sites[r];
    auto row = fm.values.row(r);
    std::size_t c = 0;
    if (spec.uses_kriging()) row[c++] = (*kriging_preds)[i];
    if (spec.kind == FeatureKind::KrigingOnly) continue;
    const Location s = table.site(i);
    row[c++] = s.x;
    row[c++] = s.y;
    const auto nb = table.neighbors(i);
    for (std::size_t l = 0; l < spec.m; ++l) {
      const Location sl = reference.location(nb[l]);
      row[c++] = sl.x - s.x;
      row[c++] = sl.y - s.y;
      row[c++] = reference.value(nb[l]);
    }
  }
  return fm;
}

FeatureMatrix standardize(const FeatureMatrix& fm) {
  if (fm.rows() < 2) throw Error("standardization needs at least two training rows");
  Standardization stats;
  const std::size_t n = fm.rows(), p = fm.cols();
  stats.means.assign(p, 0.0);
  stats.sds.assign(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) stats.means[c] += fm.values(r, c);
  for (double& mean : stats.means) mean /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) {
      const double d = fm.values(r, c) - stats.means[c];
      stats.sds[c] += d * d;
    }
  for (double& sd : stats.sds) sd = std::sqrt(sd / static_cast<double>(n));
  return apply_standardization(fm, stats);
}

FeatureMatrix apply_standardization(const FeatureMatrix& fm, const Standardization& stats) {
  if (stats.means.size() != fm.cols() || stats.sds.size() != fm.cols())
    throw Error("standardization statistics do not match the feature columns");
  FeatureMatrix out = fm;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out.values(r, c) = (fm.values(r, c) - stats.means[c]) / stats.scale(c);
  out.standardization = stats;
  return out;
}

FeatureMatrix unstandardize(const FeatureMatrix& fm) {
  if (!fm.standardization) throw Error("feature matrix carries no standardization");
  const Standardization& stats = *fm.standardization;
  FeatureMatrix out = fm;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out.values(r, c) = fm.values(r, c) * stats.scale(c) + stats.means[c];
  out.standardization.reset();
  return out;
}

std::vector<double> gather_rows(std::span<const double> values,
                                std::span<const std::size_t> row_sites) {
  std::vector<double> out;
  out.reserve(row_sites.size());
  for (std::size_t i : row_sites) {
    if (i >= values.size()) throw Error("row index outside the value vector");
    out.push_back(values[i]);
  }
  return out;
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_feature_csv(std::ostream& out, const FeatureMatrix& fm) {
  for (std::size_t c = 0; c < fm.layout.size(); ++c) out << (c ? "," : "") << fm.layout[c];
  out << '\n';
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (std::size_t c = 0; c < fm.cols(); ++c) {
      if (c) out << ',';
      write_double(out, fm.values(r, c));
    }
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  FeatureMatrix fm;
  std::string line;
  if (!std::getline(in, line)) throw Error("feature CSV is empty");
  {
    std::stringstream ss(line);
    std::string tag;
    while (std::getline(ss, tag, ',')) fm.layout.push_back(tag);
  }
  const std::size_t p = fm.layout.size();
  std::vector<double> data;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < p; ++c) {
      double v = 0.0;
      const auto res = std::from_chars(cur, end, v);
      if (res.ec != std::errc{}) throw Error("malformed feature CSV at line " + std::to_string(line_no));
      data.push_back(v);
      cur = res.ptr;
      if (c + 1 < p) {
        if (cur == end || *cur != ',') throw Error("too few columns at line " + std::to_string(line_no));
        ++cur;
      }
    }
    if (cur != end) throw Error("too many columns at line " + std::to_string(line_no));
    ++rows;
  }
  fm.values = Matrix(rows, p);
  fm.values.storage() = std::move(data);
  fm.row_sites.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) fm.row_sites[r] = r;
  return fm;
}

}  // namespace fourn
