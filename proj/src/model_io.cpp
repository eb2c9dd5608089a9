#include "fourn/model_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fourn/error.hpp"

namespace fourn {
namespace {

using nlohmann::json;

std::string_view ordering_name(OrderingKind k) {
  switch (k) {
    case OrderingKind::Coordinate: return "coordinate";
    case OrderingKind::Random: return "random";
    case OrderingKind::Identity: return "identity";
  }
  return "coordinate";
}

OrderingKind parse_ordering(const std::string& s) {
  if (s == "coordinate") return OrderingKind::Coordinate;
  if (s == "random") return OrderingKind::Random;
  if (s == "identity") return OrderingKind::Identity;
  throw Error("unknown ordering '" + s + "' in model file");
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json layers = json::array();
  for (const auto& l : model.network.layers())
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  json doc = {
      {"format", "fourn-model"},
      {"version", kModelFormatVersion},
      {"layer_dims", model.network.layer_dims()},
      {"layers", layers},
      {"standardization",
       {{"means", model.standardization.means}, {"sds", model.standardization.sds}}},
      {"loss", to_string(model.loss)},
      {"loss_gamma", model.loss.gamma},
      {"features", {{"kind", std::string(to_string(model.features.kind))}, {"m", model.features.m}}},
      {"layout", model.layout},
      {"cov",
       {{"mu", model.cov.mu},
        {"sigma2", model.cov.sigma2},
        {"tau2", model.cov.tau2},
        {"rho", model.cov.rho}}},
      {"ordering",
       {{"kind", std::string(ordering_name(model.ordering.kind))}, {"seed", model.ordering.seed}}},
  };
  return doc.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "fourn-model") throw Error("not a model file");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("unsupported model format version " + std::to_string(version));

    TrainedModel m;
    MlpModel net(doc.at("layer_dims").get<std::vector<std::size_t>>());
    const auto& layers = doc.at("layers");
    if (layers.size() != net.num_layers()) throw Error("layer count does not match layer_dims");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      DenseLayer& dst = net.layer(l);
      auto w = layers[l].at("weights").get<std::vector<double>>();
      auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != dst.weights.size() || b.size() != dst.bias.size())
        throw Error("layer " + std::to_string(l) + " has wrong parameter count");
      dst.weights = std::move(w);
      dst.bias = std::move(b);
    }
    m.network = std::move(net);
    m.standardization.means = doc.at("standardization").at("means").get<std::vector<double>>();
    m.standardization.sds = doc.at("standardization").at("sds").get<std::vector<double>>();
    m.loss = parse_loss(doc.at("loss").get<std::string>());
    m.loss.gamma = doc.at("loss_gamma").get<double>();
    m.features.kind = parse_feature_kind(doc.at("features").at("kind").get<std::string>());
    m.features.m = doc.at("features").at("m").get<std::size_t>();
    m.layout = doc.at("layout").get<std::vector<std::string>>();
    const auto& cov = doc.at("cov");
    m.cov = {cov.at("mu").get<double>(), cov.at("sigma2").get<double>(),
             cov.at("tau2").get<double>(), cov.at("rho").get<double>()};
    m.ordering.kind = parse_ordering(doc.at("ordering").at("kind").get<std::string>());
    m.ordering.seed = doc.at("ordering").at("seed").get<std::uint64_t>();

    const std::size_t p = m.features.columns();
    if (m.layout != feature_layout(m.features) || m.network.input_dim() != p ||
        m.standardization.means.size() != p || m.standardization.sds.size() != p)
      throw Error("model file is internally inconsistent");
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace fourn
