#include "fourn/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "fourn/error.hpp"

namespace fourn {
namespace {

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (field.empty() || res.ec != std::errc{} || res.ptr != end)
    throw Error("malformed number '" + field + "' at line " + std::to_string(line_no));
  return v;
}

struct RawTable {
  std::vector<Location> locations;
  std::vector<double> values;
  std::vector<std::size_t> lines;
  bool has_values = false;
};

RawTable read_table(std::istream& in, bool require_values) {
  std::string line;
  if (!std::getline(in, line)) throw Error("missing header: expected x,y,value");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(trim(line));
  RawTable t;
  std::size_t width = 0;
  if (header.size() >= 3 && header[0] == "x" && header[1] == "y" && header[2] == "value" &&
      (header.size() == 3 || (header.size() == 4 && header[3] == "label"))) {
    t.has_values = true;
    width = header.size();
  } else if (!require_values && header.size() == 2 && header[0] == "x" && header[1] == "y") {
    width = 2;
  } else {
    throw Error(require_values ? "missing header: expected x,y,value"
                               : "missing header: expected x,y or x,y,value");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != width)
      throw Error("expected " + std::to_string(width) + " fields at line " + std::to_string(line_no));
    const Location loc{parse_real(fields[0], line_no), parse_real(fields[1], line_no)};
    if (!std::isfinite(loc.x) || !std::isfinite(loc.y))
      throw Error("non-finite coordinate at line " + std::to_string(line_no));
    t.locations.push_back(loc);
    t.values.push_back(t.has_values ? parse_real(fields[2], line_no)
                                    : std::numeric_limits<double>::quiet_NaN());
    t.lines.push_back(line_no);
  }
  return t;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

SpatialDataset read_dataset_csv(std::istream& in) {
  RawTable t = read_table(in, true);
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (!std::isfinite(t.values[i]))
      throw Error("non-finite value at line " + std::to_string(t.lines[i]));
  if (auto dup = find_duplicate_location(t.locations))
    throw Error("duplicate location at lines " + std::to_string(t.lines[dup->first]) + " and " +
                std::to_string(t.lines[dup->second]));
  return SpatialDataset(std::move(t.locations), std::move(t.values));
}

SpatialDataset load_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset_csv(in);
}

QueryTable load_query_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  RawTable t = read_table(in, false);
  return {std::move(t.locations), std::move(t.values), t.has_values};
}

void write_dataset_csv(std::ostream& out, const SpatialDataset& data, std::span<const int> labels) {
  if (!labels.empty() && labels.size() != data.size()) throw Error("label count does not match dataset");
  out << (labels.empty() ? "x,y,value\n" : "x,y,value,label\n");
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.location(i).x) << ',' << format_double(data.location(i).y) << ','
        << format_double(data.value(i));
    if (!labels.empty()) out << ',' << labels[i];
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const SpatialDataset& data,
              std::span<const int> labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset_csv(out, data, labels);
}

void write_predictions_csv(std::ostream& out, std::span<const Location> sites,
                           std::span<const double> truth, std::span<const double> pred) {
  if (sites.size() != truth.size() || sites.size() != pred.size())
    throw Error("prediction table columns differ in length");
  out << "x,y,truth,pred\n";
  for (std::size_t i = 0; i < sites.size(); ++i)
    out << format_double(sites[i].x) << ',' << format_double(sites[i].y) << ','
        << format_double(truth[i]) << ',' << format_double(pred[i]) << '\n';
}

}  // namespace fourn
