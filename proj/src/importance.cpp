#include "fourn/importance.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <ostream>

#include "fourn/error.hpp"

namespace fourn {

std::vector<double> garson_importance(const MlpModel& model) {
  if (model.num_layers() == 0) throw Error("model has no layers");
  // share[j] = fraction of the output attributed to unit j of the current layer
  std::vector<double> share{1.0};
  for (std::size_t l = model.num_layers(); l-- > 0;) {
    const DenseLayer& layer = model.layer(l);
    bool any = false;
    std::vector<double> next(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double row_sum = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) row_sum += std::abs(layer.w(o, i));
      if (row_sum == 0.0) continue;
      any = true;
      for (std::size_t i = 0; i < layer.in; ++i)
        next[i] += share[o] * std::abs(layer.w(o, i)) / row_sum;
    }
    if (!any) throw NumericalError("degenerate network");
    share = std::move(next);
  }
  double total = 0.0;
  for (double s : share) total += s;
  if (!(total > 0.0)) throw NumericalError("degenerate network");
  // Units with all-zero incoming weights drop their share; renormalize.
  for (double& s : share) s /= total;
  return share;
}

std::vector<ImportanceGroup> aggregate_importance(std::span<const double> importance,
                                                  std::span<const std::string> layout) {
  if (importance.size() != layout.size())
    throw Error("importance vector and layout differ in length");
  std::vector<ImportanceGroup> groups;
  std::map<std::string, std::size_t> slot;
  auto add = [&](const std::string& name, double v) {
    auto [it, inserted] = slot.try_emplace(name, groups.size());
    if (inserted) groups.push_back({name, 0.0});
    groups[it->second].importance += v;
  };
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const std::string& tag = layout[c];
    if (tag == "krig") {
      add("kriging", importance[c]);
    } else if (tag == "sx" || tag == "sy") {
      add("site", importance[c]);
    } else if (tag.size() > 2 && (tag.starts_with("dx") || tag.starts_with("dy") || tag.starts_with("yn"))) {
      const std::string digits = tag.substr(2);
      std::size_t l = 0;
      const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), l);
      if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || l == 0)
        throw Error("unknown feature tag '" + tag + "'");
      add("neighbor_" + std::to_string(l), importance[c]);
    } else {
      throw Error("unknown feature tag '" + tag + "'");
    }
  }
  return groups;
}

void write_importance_csv(std::ostream& out, std::span<const ImportanceGroup> groups) {
  out << "group,importance\n";
  char buf[32];
  for (const ImportanceGroup& g : groups) {
    const auto res = std::to_chars(buf, buf + sizeof buf, g.importance);
    out << g.group << ',';
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
}

}  // namespace fourn
