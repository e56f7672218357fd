#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "beamgat/ad/ops.hpp"
#include "beamgat/graph.hpp"

namespace beamgat::model {

enum class Architecture { superior_gat, gat_baseline, simple_gcn };

/// Nonlinearity applied to aggregated messages (attention heads, GCN layers).
enum class Activation { leaky_relu, elu };

/// How the gated residual obtains its width-K*F' "normalized input" branch.
enum class ResidualInput {
  projection,  // layer_norm(features x proj_in), learned projection
  zero_pad,    // layer_norm(features zero-padded to K*F')
};

std::string_view to_string(Architecture a);
Architecture architecture_from_string(std::string_view s);

struct ModelConfig {
  Architecture arch = Architecture::superior_gat;
  std::size_t heads = 4;
  std::size_t head_width = 16;
  std::size_t ffn_hidden = 128;
  std::size_t decoder_hidden = 32;
  /// Message-passing layers; forced to 1 for superior_gat.
  std::size_t layers = 1;
  Activation activation = Activation::leaky_relu;
  ResidualInput residual_input = ResidualInput::projection;
  std::uint64_t seed = 0;

  std::size_t width() const { return heads * head_width; }
  void validate() const;

  /// Defaults per architecture: superior_gat 1 layer, gat_baseline 3,
  /// simple_gcn 2; all share K=4, F'=16, H_ff=128, H_dec=32.
  static ModelConfig defaults(Architecture arch);
};

struct NamedTensor {
  std::string name;
  ad::Tensor value;
  /// Buffers (feature scaling, output affine) are fixed during training.
  bool trainable = true;
};

/// Ordered collection of named arrays. Order is the init and checkpoint order.
class ParamSet {
 public:
  void add(std::string name, ad::Tensor value, bool trainable = true);
  bool contains(std::string_view name) const;
  const ad::Tensor& at(std::string_view name) const;
  ad::Tensor& at(std::string_view name);

  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t num_trainable_values() const;

  friend bool operator==(const ParamSet&, const ParamSet&);

 private:
  std::vector<NamedTensor> entries_;
};

inline constexpr std::string_view kInputScale = "input_scale";     // [4] multipliers for x, y, z~, b
inline constexpr std::string_view kOutputAffine = "output_affine"; // [2] z = a[0] * out + a[1]
inline constexpr std::string_view kGateLogit = "gate_logit";

/// Glorot-uniform weights, zero biases, unit layer-norm gains, gate_logit 0,
/// identity buffers. Deterministic in `seed`.
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

/// CSR arrays of a Graph shared with tape backward rules.
struct GraphIndex {
  explicit GraphIndex(const Graph& graph);

  std::size_t num_nodes = 0;
  ad::Segments segments;
  ad::Index src;
  ad::Index dst;
};

/// Parameters recorded on a tape, looked up by name.
class BoundParams {
 public:
  /// Trainable entries become tape parameters unless `with_grad` is false.
  BoundParams(ad::Tape& tape, const ParamSet& params, bool with_grad = true);
  ad::Var operator()(std::string_view name) const;
  const std::map<std::string, ad::Var, std::less<>>& vars() const { return vars_; }

 private:
  std::map<std::string, ad::Var, std::less<>> vars_;
};

/// Intermediate values exposed for tests and diagnostics.
struct ForwardTrace {
  std::vector<ad::Var> attention;  // one [E] tensor per head per layer
  ad::Var gate;                    // superior_gat only
  ad::Var h_attn, h_norm, h_gated, h_final;
};

/// Multi-head GAT aggregation, heads concatenated -> [N, K * F'].
/// Parameter names: `<prefix>head<k>.W` [F_in, F'] and `<prefix>head<k>.a` [2F'].
ad::Var gat_attention_layer(const GraphIndex& graph, ad::Var h, const BoundParams& p,
                            std::string_view prefix, std::size_t heads, Activation act,
                            ForwardTrace* trace = nullptr);

/// act(mean_{j in N(i)} h_j x W).
ad::Var gcn_layer(const GraphIndex& graph, ad::Var h, ad::Var w, Activation act);

/// Each forward maps scaled features [N, 4] to z estimates [N, 1].
ad::Var superior_gat_forward(const ModelConfig& cfg, const GraphIndex& graph, ad::Var features,
                             const BoundParams& p, ForwardTrace* trace = nullptr);
ad::Var gat_baseline_forward(const ModelConfig& cfg, const GraphIndex& graph, ad::Var features,
                             const BoundParams& p, ForwardTrace* trace = nullptr);
ad::Var simple_gcn_forward(const ModelConfig& cfg, const GraphIndex& graph, ad::Var features,
                           const BoundParams& p);

/// Applies `input_scale` to raw node features, dispatches on the architecture,
/// and maps the decoder output through `output_affine`.
ad::Var forward(const ModelConfig& cfg, const GraphIndex& graph, const NodeFeatures& features,
                const BoundParams& p, ForwardTrace* trace = nullptr);

/// Gradient-free forward; one z estimate per node.
std::vector<double> predict(const ModelConfig& cfg, const Graph& graph, const NodeFeatures& features,
                            const ParamSet& params);

// Checkpoints: JSON with the config and every named array (shape, data).
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg, const ParamSet& params);
std::pair<ModelConfig, ParamSet> load_checkpoint(const std::filesystem::path& path);

}  // namespace beamgat::model
