#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "beamgat/errors.hpp"
#include "beamgat/model.hpp"

namespace beamgat::model {

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::superior_gat: return "superior_gat";
    case Architecture::gat_baseline: return "gat_baseline";
    case Architecture::simple_gcn: return "simple_gcn";
  }
  return "unknown";
}

Architecture architecture_from_string(std::string_view s) {
  for (auto a : {Architecture::superior_gat, Architecture::gat_baseline, Architecture::simple_gcn}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError(fmt::format("unknown architecture '{}'", s));
}

void ModelConfig::validate() const {
  if (heads < 1 || head_width < 1 || ffn_hidden < 1 || decoder_hidden < 1 || layers < 1) {
    throw ConfigError("model widths and layer count must be >= 1");
  }
  if (arch == Architecture::superior_gat && layers != 1) {
    throw ConfigError("superior_gat is a single-layer model");
  }
  if (residual_input == ResidualInput::zero_pad && width() < NodeFeatures::kWidth) {
    throw ConfigError("zero_pad residual needs heads * head_width >= 4");
  }
}

ModelConfig ModelConfig::defaults(Architecture arch) {
  ModelConfig c;
  c.arch = arch;
  switch (arch) {
    case Architecture::superior_gat: c.layers = 1; break;
    case Architecture::gat_baseline: c.layers = 3; break;
    case Architecture::simple_gcn: c.layers = 2; break;
  }
  return c;
}

void ParamSet::add(std::string name, ad::Tensor value, bool trainable) {
  if (contains(name)) throw ConfigError(fmt::format("duplicate parameter '{}'", name));
  entries_.push_back({std::move(name), std::move(value), trainable});
}

bool ParamSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const NamedTensor& e) { return e.name == name; });
}

const ad::Tensor& ParamSet::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw ConfigError(fmt::format("no parameter named '{}'", name));
}

ad::Tensor& ParamSet::at(std::string_view name) {
  return const_cast<ad::Tensor&>(static_cast<const ParamSet&>(*this).at(name));
}

std::size_t ParamSet::num_trainable_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.value.size();
  }
  return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.trainable != y.trainable || !(x.value == y.value)) return false;
  }
  return true;
}

namespace {

class Initializer {
 public:
  Initializer(ParamSet& set, std::uint64_t seed) : set_(set), rng_(seed) {}

  void glorot(std::string name, std::size_t fan_in, std::size_t fan_out, std::vector<std::size_t> shape) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    ad::Tensor t(std::move(shape));
    for (double& v : t.data()) v = u(rng_);
    set_.add(std::move(name), std::move(t));
  }
  void matrix(std::string name, std::size_t in, std::size_t out) { glorot(std::move(name), in, out, {in, out}); }
  void fill(std::string name, std::size_t n, double v) { set_.add(std::move(name), ad::Tensor({n}, v)); }
  void norm(const std::string& prefix, std::size_t n) {
    fill(prefix + ".gain", n, 1.0);
    fill(prefix + ".bias", n, 0.0);
  }
  void heads(const std::string& prefix, std::size_t in, const ModelConfig& c) {
    for (std::size_t k = 0; k < c.heads; ++k) {
      matrix(fmt::format("{}head{}.W", prefix, k), in, c.head_width);
      glorot(fmt::format("{}head{}.a", prefix, k), 2 * c.head_width, 1, {2 * c.head_width});
    }
  }
  void decoder(std::size_t in, const ModelConfig& c) {
    matrix("decoder.W1", in, c.decoder_hidden);
    fill("decoder.b1", c.decoder_hidden, 0.0);
    matrix("decoder.W2", c.decoder_hidden, 1);
    fill("decoder.b2", 1, 0.0);
  }

 private:
  ParamSet& set_;
  std::mt19937_64 rng_;
};

}  // namespace

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParamSet set;
  Initializer init(set, seed);
  const std::size_t in = NodeFeatures::kWidth;
  const std::size_t d = config.width();

  set.add(std::string(kInputScale), ad::Tensor({in}, 1.0), false);
  set.add(std::string(kOutputAffine), ad::Tensor::vector({1.0, 0.0}), false);

  switch (config.arch) {
    case Architecture::superior_gat:
      if (config.residual_input == ResidualInput::projection) init.matrix("proj_in", in, d);
      init.norm("input_norm", d);
      init.heads("", in, config);
      set.add(std::string(kGateLogit), ad::Tensor::scalar(0.0));
      init.norm("gated_norm", d);
      init.matrix("ffn.W1", d, config.ffn_hidden);
      init.fill("ffn.b1", config.ffn_hidden, 0.0);
      init.matrix("ffn.W2", config.ffn_hidden, d);
      init.fill("ffn.b2", d, 0.0);
      init.norm("ffn_norm", d);
      break;
    case Architecture::gat_baseline:
      for (std::size_t l = 0; l < config.layers; ++l) {
        init.heads(fmt::format("layer{}.", l), l == 0 ? in : d, config);
      }
      break;
    case Architecture::simple_gcn:
      for (std::size_t l = 0; l < config.layers; ++l) {
        init.matrix(fmt::format("gcn{}.W", l), l == 0 ? in : d, d);
      }
      break;
  }
  init.decoder(d, config);
  return set;
}

}  // namespace beamgat::model
