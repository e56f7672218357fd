#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "beamgat/ad/tape.hpp"

namespace beamgat::ad {

/// Shared, immutable index array captured by backward rules.
using Index = std::shared_ptr<const std::vector<std::size_t>>;

inline Index make_index(std::vector<std::size_t> ids) {
  return std::make_shared<const std::vector<std::size_t>>(std::move(ids));
}

/// CSR segment boundaries: segment s covers [offsets[s], offsets[s + 1]).
struct Segments {
  Index offsets;

  std::size_t count() const { return offsets->size() - 1; }
  std::size_t begin(std::size_t s) const { return (*offsets)[s]; }
  std::size_t end(std::size_t s) const { return (*offsets)[s + 1]; }
  std::size_t total() const { return offsets->back(); }
};

inline constexpr double kAttentionSlope = 0.2;
inline constexpr double kFfnSlope = 0.01;
inline constexpr double kLayerNormEps = 1e-5;

// Linear algebra --------------------------------------------------------------

/// [M,K] x [K,N] -> [M,N].
Var matmul(Var a, Var b);
/// Elementwise a + b, equal shapes.
Var add(Var a, Var b);
/// x[M,N] + bias[N] broadcast over rows.
Var add_row(Var x, Var bias);
/// c * x.
Var scale(Var x, double c);
/// x + c.
Var add_scalar(Var x, double c);
/// s * x, where s holds a single element.
Var mul_scalar(Var x, Var s);
/// Column-wise concatenation of matrices with equal row counts.
Var concat_cols(const std::vector<Var>& parts);
/// Rows [begin, end) of x.
Var slice_rows(Var x, std::size_t begin, std::size_t end);
/// out[e] = x[ids[e]] row-wise.
Var gather_rows(Var x, Index ids);

// Activations -----------------------------------------------------------------

/// max(x, slope * x); derivative at 0 is `slope`.
Var leaky_relu(Var x, double slope = kAttentionSlope);
Var elu(Var x, double alpha = 1.0);
Var sigmoid(Var x);

/// Per-row (x - mean) / sqrt(var + eps) * gain + bias with population variance.
Var layer_norm(Var x, Var gain, Var bias, double eps = kLayerNormEps);

// Segment operations ----------------------------------------------------------

/// Max-shifted softmax of `logits` (E entries) inside every segment.
/// Throws ConfigError on an empty segment.
Var segment_softmax(Var logits, const Segments& segments);
/// out[s] = sum_{e in s} weights[e] * values[e]; values [E,F] -> out [S,F].
Var segment_weighted_sum(Var values, Var weights, const Segments& segments);

// Reductions ------------------------------------------------------------------

Var sum(Var x);
/// mean((pred - target)^2) over all elements; equal sizes required.
Var mse_loss(Var pred, Var target);

}  // namespace beamgat::ad
