#include <fmt/format.h>

#include "beamgat/errors.hpp"
#include "beamgat/model.hpp"

namespace beamgat::model {

GraphIndex::GraphIndex(const Graph& graph)
    : num_nodes(graph.num_nodes),
      segments{ad::make_index(graph.row_offsets)},
      src(ad::make_index(graph.neighbor_ids)),
      dst(ad::make_index(graph.edge_targets())) {}

BoundParams::BoundParams(ad::Tape& tape, const ParamSet& params, bool with_grad) {
  for (const auto& e : params.entries()) {
    vars_.emplace(e.name, e.trainable && with_grad ? tape.parameter(e.value) : tape.constant(e.value));
  }
}

ad::Var BoundParams::operator()(std::string_view name) const {
  const auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError(fmt::format("parameter '{}' not bound", name));
  return it->second;
}

namespace {

ad::Var activate(ad::Var x, Activation act) {
  return act == Activation::elu ? ad::elu(x) : ad::leaky_relu(x, ad::kAttentionSlope);
}

ad::Var norm(ad::Var x, const BoundParams& p, const std::string& prefix) {
  return ad::layer_norm(x, p(prefix + ".gain"), p(prefix + ".bias"));
}

ad::Var decoder(ad::Var h, const BoundParams& p) {
  ad::Var hidden = ad::leaky_relu(ad::add_row(ad::matmul(h, p("decoder.W1")), p("decoder.b1")), ad::kFfnSlope);
  return ad::add_row(ad::matmul(hidden, p("decoder.W2")), p("decoder.b2"));
}

}  // namespace

ad::Var gat_attention_layer(const GraphIndex& graph, ad::Var h, const BoundParams& p,
                            std::string_view prefix, std::size_t heads, Activation act,
                            ForwardTrace* trace) {
  std::vector<ad::Var> outputs;
  outputs.reserve(heads);
  for (std::size_t k = 0; k < heads; ++k) {
    const ad::Var w = p(fmt::format("{}head{}.W", prefix, k));
    const ad::Var a = p(fmt::format("{}head{}.a", prefix, k));
    const std::size_t f = w.value().cols();
    if (a.value().size() != 2 * f) throw ShapeError("attention vector must have 2 * F' entries");

    const ad::Var hp = ad::matmul(h, w);  // [N, F']
    // a^T [h'_i || h'_j] splits into a destination and a source score.
    const ad::Var score_dst = ad::matmul(hp, ad::slice_rows(a, 0, f));
    const ad::Var score_src = ad::matmul(hp, ad::slice_rows(a, f, 2 * f));
    const ad::Var logits = ad::leaky_relu(
        ad::add(ad::gather_rows(score_dst, graph.dst), ad::gather_rows(score_src, graph.src)),
        ad::kAttentionSlope);
    const ad::Var alpha = ad::segment_softmax(logits, graph.segments);
    if (trace) trace->attention.push_back(alpha);
    const ad::Var agg = ad::segment_weighted_sum(ad::gather_rows(hp, graph.src), alpha, graph.segments);
    outputs.push_back(activate(agg, act));
  }
  return heads == 1 ? outputs.front() : ad::concat_cols(outputs);
}

ad::Var gcn_layer(const GraphIndex& graph, ad::Var h, ad::Var w, Activation act) {
  const auto& offsets = *graph.segments.offsets;
  ad::Tensor inv_deg({graph.src->size()});
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const double wgt = 1.0 / static_cast<double>(offsets[i + 1] - offsets[i]);
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) inv_deg[e] = wgt;
  }
  ad::Var weights = h.tape().constant(std::move(inv_deg));
  // mean(h_j) W == mean(h_j W); aggregate first when that is the narrower side.
  if (h.value().cols() <= w.value().cols()) {
    const ad::Var mean = ad::segment_weighted_sum(ad::gather_rows(h, graph.src), weights, graph.segments);
    return activate(ad::matmul(mean, w), act);
  }
  const ad::Var hw = ad::matmul(h, w);
  return activate(ad::segment_weighted_sum(ad::gather_rows(hw, graph.src), weights, graph.segments), act);
}

ad::Var superior_gat_forward(const ModelConfig& cfg, const GraphIndex& graph, ad::Var features,
                             const BoundParams& p, ForwardTrace* trace) {
  ad::Tape& tape = features.tape();
  const std::size_t d = cfg.width();

  ad::Var residual_in;
  if (cfg.residual_input == ResidualInput::projection) {
    residual_in = ad::matmul(features, p("proj_in"));
  } else {
    ad::Tensor pad({NodeFeatures::kWidth, d}, 0.0);
    for (std::size_t c = 0; c < NodeFeatures::kWidth; ++c) pad.at(c, c) = 1.0;
    residual_in = ad::matmul(features, tape.constant(std::move(pad)));
  }
  const ad::Var h_norm = norm(residual_in, p, "input_norm");
  const ad::Var h_attn = gat_attention_layer(graph, features, p, "", cfg.heads, cfg.activation, trace);

  const ad::Var gamma = ad::sigmoid(p(kGateLogit));
  const ad::Var one_minus_gamma = ad::add_scalar(ad::scale(gamma, -1.0), 1.0);
  const ad::Var h_gated =
      norm(ad::add(ad::mul_scalar(h_attn, gamma), ad::mul_scalar(h_norm, one_minus_gamma)), p, "gated_norm");

  const ad::Var ffn_hidden =
      ad::leaky_relu(ad::add_row(ad::matmul(h_gated, p("ffn.W1")), p("ffn.b1")), ad::kFfnSlope);
  const ad::Var ffn = ad::add_row(ad::matmul(ffn_hidden, p("ffn.W2")), p("ffn.b2"));
  const ad::Var h_final = norm(ad::add(ffn, h_gated), p, "ffn_norm");

  if (trace) {
    trace->gate = gamma;
    trace->h_attn = h_attn;
    trace->h_norm = h_norm;
    trace->h_gated = h_gated;
    trace->h_final = h_final;
  }
  return decoder(h_final, p);
}

ad::Var gat_baseline_forward(const ModelConfig& cfg, const GraphIndex& graph, ad::Var features,
                             const BoundParams& p, ForwardTrace* trace) {
  ad::Var h = features;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const ad::Var out =
        gat_attention_layer(graph, h, p, fmt::format("layer{}.", l), cfg.heads, cfg.activation, trace);
    // Additive residual wherever the widths agree (every layer after the first).
    h = l == 0 ? out : ad::add(h, out);
  }
  return decoder(h, p);
}

ad::Var simple_gcn_forward(const ModelConfig& cfg, const GraphIndex& graph, ad::Var features,
                           const BoundParams& p) {
  ad::Var h = features;
  for (std::size_t l = 0; l < cfg.layers; ++l) h = gcn_layer(graph, h, p(fmt::format("gcn{}.W", l)), cfg.activation);
  return decoder(h, p);
}

ad::Var forward(const ModelConfig& cfg, const GraphIndex& graph, const NodeFeatures& features,
                const BoundParams& p, ForwardTrace* trace) {
  if (features.rows != graph.num_nodes) throw ShapeError("feature rows != graph nodes");
  ad::Tape& tape = p(kInputScale).tape();
  const ad::Tensor& scale = p(kInputScale).value();
  ad::Tensor x({features.rows, NodeFeatures::kWidth});
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t c = 0; c < NodeFeatures::kWidth; ++c) x.at(i, c) = features.at(i, c) * scale[c];
  }
  const ad::Var input = tape.constant(std::move(x));

  ad::Var out;
  switch (cfg.arch) {
    case Architecture::superior_gat: out = superior_gat_forward(cfg, graph, input, p, trace); break;
    case Architecture::gat_baseline: out = gat_baseline_forward(cfg, graph, input, p, trace); break;
    case Architecture::simple_gcn: out = simple_gcn_forward(cfg, graph, input, p); break;
  }
  const ad::Tensor& affine = p(kOutputAffine).value();
  return ad::add_scalar(ad::scale(out, affine[0]), affine[1]);
}

std::vector<double> predict(const ModelConfig& cfg, const Graph& graph, const NodeFeatures& features,
                            const ParamSet& params) {
  ad::Tape tape;
  const BoundParams p(tape, params, false);
  const GraphIndex index(graph);
  const ad::Var z = forward(cfg, index, features, p);
  const auto data = z.value().data();
  return {data.begin(), data.end()};
}

}  // namespace beamgat::model
