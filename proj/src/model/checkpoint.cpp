#include <fstream>

#include <json.hpp>

#include "beamgat/errors.hpp"
#include "beamgat/model.hpp"

namespace beamgat::model {

NLOHMANN_JSON_SERIALIZE_ENUM(Activation, {{Activation::leaky_relu, "leaky_relu"}, {Activation::elu, "elu"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ResidualInput, {{ResidualInput::projection, "projection"},
                                             {ResidualInput::zero_pad, "zero_pad"}})

namespace {

constexpr const char* kFormat = "beamgat-params";
constexpr int kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"arch", std::string(to_string(c.arch))},
          {"heads", c.heads},
          {"head_width", c.head_width},
          {"ffn_hidden", c.ffn_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"layers", c.layers},
          {"activation", c.activation},
          {"residual_input", c.residual_input},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.arch = architecture_from_string(j.at("arch").get<std::string>());
  j.at("heads").get_to(c.heads);
  j.at("head_width").get_to(c.head_width);
  j.at("ffn_hidden").get_to(c.ffn_hidden);
  j.at("decoder_hidden").get_to(c.decoder_hidden);
  j.at("layers").get_to(c.layers);
  j.at("activation").get_to(c.activation);
  j.at("residual_input").get_to(c.residual_input);
  j.at("seed").get_to(c.seed);
  c.validate();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg, const ParamSet& params) {
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& e : params.entries()) {
    arrays.push_back({{"name", e.name},
                      {"shape", e.value.shape()},
                      {"trainable", e.trainable},
                      {"data", e.value.storage()}});
  }
  const nlohmann::json doc = {
      {"format", kFormat}, {"version", kVersion}, {"config", config_to_json(cfg)}, {"params", arrays}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << doc.dump(1) << '\n';
}

std::pair<ModelConfig, ParamSet> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    if (doc.at("format") != kFormat || doc.at("version") != kVersion) {
      throw FormatError("unsupported checkpoint format in " + path.string());
    }
    ModelConfig cfg = config_from_json(doc.at("config"));
    ParamSet params;
    for (const auto& a : doc.at("params")) {
      params.add(a.at("name").get<std::string>(),
                 ad::Tensor(a.at("shape").get<std::vector<std::size_t>>(), a.at("data").get<std::vector<double>>()),
                 a.at("trainable").get<bool>());
    }
    return {cfg, std::move(params)};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace beamgat::model
