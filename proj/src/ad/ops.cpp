#include "beamgat/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <fmt/format.h>

#include "beamgat/errors.hpp"

namespace beamgat::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

struct Dims {
  std::size_t rows, cols;
};

/// Matrix view of a tensor: rank 1 is a column.
Dims dims(const Tensor& t) {
  if (t.rank() > 2) throw ShapeError(fmt::format("expected rank <= 2, got {}", t.shape_string()));
  return {t.rows(), t.cols()};
}

MapC view(const Tensor& t) {
  const Dims d = dims(t);
  return MapC(t.data().data(), static_cast<Eigen::Index>(d.rows), static_cast<Eigen::Index>(d.cols));
}

Map view(Tensor& t) {
  const Dims d = dims(t);
  return Map(t.data().data(), static_cast<Eigen::Index>(d.rows), static_cast<Eigen::Index>(d.cols));
}

template <class F>
Tensor map_unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

void check_segments(const Segments& seg, std::size_t entries, const char* op) {
  if (!seg.offsets || seg.offsets->empty()) throw ConfigError(fmt::format("{}: missing segments", op));
  if (seg.total() != entries) {
    throw ShapeError(fmt::format("{}: segments cover {} entries, input has {}", op, seg.total(), entries));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const Dims da = dims(A), db = dims(B);
  if (da.cols != db.rows) {
    throw ShapeError(fmt::format("matmul: {} x {}", A.shape_string(), B.shape_string()));
  }
  Tensor C({da.rows, db.cols});
  view(C).noalias() = view(A) * view(B);
  return a.tape().record("matmul", std::move(C), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    const MapC G = view(g);
    if (tape.requires_grad(a)) view(tape.grad_buffer(a)).noalias() += G * view(b.value()).transpose();
    if (tape.requires_grad(b)) view(tape.grad_buffer(b)).noalias() += view(a.value()).transpose() * G;
  });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) throw ShapeError(fmt::format("add: {} + {}", A.shape_string(), B.shape_string()));
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  return a.tape().record("add", std::move(C), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    for (Var v : {a, b}) {
      if (!tape.requires_grad(v)) continue;
      Tensor& gv = tape.grad_buffer(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var add_row(Var x, Var bias) {
  const Tensor& X = x.value();
  const Dims d = dims(X);
  if (bias.value().size() != d.cols) {
    throw ShapeError(fmt::format("add_row: {} + {}", X.shape_string(), bias.value().shape_string()));
  }
  Tensor Y = X;
  view(Y).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data().data(), static_cast<Eigen::Index>(d.cols));
  return x.tape().record("add_row", std::move(Y), {x, bias}, [x, bias, d](Tape& tape, const Tensor& g) {
    const MapC G = view(g);
    if (tape.requires_grad(x)) view(tape.grad_buffer(x)) += G;
    if (tape.requires_grad(bias)) {
      Tensor& gb = tape.grad_buffer(bias);
      const Eigen::RowVectorXd s = G.colwise().sum();
      for (std::size_t c = 0; c < d.cols; ++c) gb[c] += s[static_cast<Eigen::Index>(c)];
    }
  });
}

Var scale(Var x, double c) {
  Tensor Y = map_unary(x.value(), [c](double v) { return c * v; });
  return x.tape().record("scale", std::move(Y), {x}, [x, c](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  });
}

Var add_scalar(Var x, double c) {
  Tensor Y = map_unary(x.value(), [c](double v) { return v + c; });
  return x.tape().record("add_scalar", std::move(Y), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var mul_scalar(Var x, Var s) {
  if (s.value().size() != 1) throw ShapeError("mul_scalar: factor must hold one element");
  const double k = s.value()[0];
  Tensor Y = map_unary(x.value(), [k](double v) { return k * v; });
  return x.tape().record("mul_scalar", std::move(Y), {x, s}, [x, s](Tape& tape, const Tensor& g) {
    const Tensor& X = x.value();
    if (tape.requires_grad(x)) {
      const double k = s.value()[0];
      Tensor& gx = tape.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += k * g[i];
    }
    if (tape.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += X[i] * g[i];
      tape.grad_buffer(s)[0] += acc;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = dims(parts.front().value()).rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Dims d = dims(p.value());
    if (d.rows != rows) throw ShapeError("concat_cols: row count mismatch");
    widths.push_back(d.cols);
    total += d.cols;
  }
  Tensor Y({rows, total});
  std::size_t c0 = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    view(Y).middleCols(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(widths[k])) =
        view(parts[k].value());
    c0 += widths[k];
  }
  return parts.front().tape().record(
      "concat_cols", std::move(Y), parts, [parts, widths](Tape& tape, const Tensor& g) {
        std::size_t c0 = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
          if (tape.requires_grad(parts[k])) {
            view(tape.grad_buffer(parts[k])) +=
                view(g).middleCols(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(widths[k]));
          }
          c0 += widths[k];
        }
      });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  const Tensor& X = x.value();
  const Dims d = dims(X);
  if (begin > end || end > d.rows) throw ShapeError("slice_rows: range out of bounds");
  std::vector<std::size_t> shape = X.shape();
  shape[0] = end - begin;
  Tensor Y(shape, std::vector<double>(X.data().begin() + static_cast<std::ptrdiff_t>(begin * d.cols),
                                      X.data().begin() + static_cast<std::ptrdiff_t>(end * d.cols)));
  return x.tape().record("slice_rows", std::move(Y), {x}, [x, begin, d](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * d.cols + i] += g[i];
  });
}

Var gather_rows(Var x, Index ids) {
  const Tensor& X = x.value();
  const Dims d = dims(X);
  const auto& idx = *ids;
  Tensor Y({idx.size(), d.cols});
  for (std::size_t e = 0; e < idx.size(); ++e) {
    if (idx[e] >= d.rows) throw ShapeError("gather_rows: index out of range");
    std::copy_n(X.data().begin() + static_cast<std::ptrdiff_t>(idx[e] * d.cols), d.cols,
                Y.data().begin() + static_cast<std::ptrdiff_t>(e * d.cols));
  }
  return x.tape().record("gather_rows", std::move(Y), {x}, [x, ids, d](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    const auto& idx = *ids;
    for (std::size_t e = 0; e < idx.size(); ++e) {
      double* dst = gx.data().data() + idx[e] * d.cols;
      const double* src = g.data().data() + e * d.cols;
      for (std::size_t c = 0; c < d.cols; ++c) dst[c] += src[c];
    }
  });
}

Var leaky_relu(Var x, double slope) {
  Tensor Y = map_unary(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; });
  return x.tape().record("leaky_relu", std::move(Y), {x}, [x, slope](Tape& tape, const Tensor& g) {
    const Tensor& X = x.value();
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += (X[i] > 0.0 ? 1.0 : slope) * g[i];
  });
}

Var elu(Var x, double alpha) {
  Tensor Y = map_unary(x.value(), [alpha](double v) { return v > 0.0 ? v : alpha * std::expm1(v); });
  return x.tape().record("elu", std::move(Y), {x}, [x, alpha](Tape& tape, const Tensor& g) {
    const Tensor& X = x.value();
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += (X[i] > 0.0 ? 1.0 : alpha * std::exp(X[i])) * g[i];
  });
}

Var sigmoid(Var x) {
  Tensor Y = map_unary(x.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Tensor saved = Y;
  return x.tape().record("sigmoid", std::move(Y), {x}, [x, saved](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += saved[i] * (1.0 - saved[i]) * g[i];
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& X = x.value();
  const Dims d = dims(X);
  if (d.cols < 1) throw ShapeError("layer_norm: need at least one feature");
  if (gain.value().size() != d.cols || bias.value().size() != d.cols) {
    throw ShapeError(fmt::format("layer_norm: width {} vs gain {} / bias {}", d.cols,
                                 gain.value().shape_string(), bias.value().shape_string()));
  }
  Tensor xhat(X.shape());
  std::vector<double> inv_std(d.rows);
  Tensor Y(X.shape());
  const Tensor& G = gain.value();
  const Tensor& B = bias.value();
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* row = X.data().data() + r * d.cols;
    double mean = 0.0;
    for (std::size_t c = 0; c < d.cols; ++c) mean += row[c];
    mean /= static_cast<double>(d.cols);
    double var = 0.0;
    for (std::size_t c = 0; c < d.cols; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(d.cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d.cols; ++c) {
      const double h = (row[c] - mean) * inv_std[r];
      xhat[r * d.cols + c] = h;
      Y[r * d.cols + c] = h * G[c] + B[c];
    }
  }
  return x.tape().record(
      "layer_norm", std::move(Y), {x, gain, bias},
      [x, gain, bias, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tape, const Tensor& g) {
        const Tensor& G = gain.value();
        if (tape.requires_grad(gain) || tape.requires_grad(bias)) {
          std::vector<double> dg(d.cols, 0.0), db(d.cols, 0.0);
          for (std::size_t r = 0; r < d.rows; ++r) {
            for (std::size_t c = 0; c < d.cols; ++c) {
              dg[c] += g[r * d.cols + c] * xhat[r * d.cols + c];
              db[c] += g[r * d.cols + c];
            }
          }
          if (tape.requires_grad(gain)) {
            Tensor& gg = tape.grad_buffer(gain);
            for (std::size_t c = 0; c < d.cols; ++c) gg[c] += dg[c];
          }
          if (tape.requires_grad(bias)) {
            Tensor& gb = tape.grad_buffer(bias);
            for (std::size_t c = 0; c < d.cols; ++c) gb[c] += db[c];
          }
        }
        if (!tape.requires_grad(x)) return;
        Tensor& gx = tape.grad_buffer(x);
        const double n = static_cast<double>(d.cols);
        for (std::size_t r = 0; r < d.rows; ++r) {
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t c = 0; c < d.cols; ++c) {
            const double dh = g[r * d.cols + c] * G[c];
            mean_dh += dh;
            mean_dh_h += dh * xhat[r * d.cols + c];
          }
          mean_dh /= n;
          mean_dh_h /= n;
          for (std::size_t c = 0; c < d.cols; ++c) {
            const double dh = g[r * d.cols + c] * G[c];
            gx[r * d.cols + c] += inv_std[r] * (dh - mean_dh - xhat[r * d.cols + c] * mean_dh_h);
          }
        }
      });
}

Var segment_softmax(Var logits, const Segments& segments) {
  const Tensor& L = logits.value();
  check_segments(segments, L.size(), "segment_softmax");
  Tensor Y(L.shape());
  for (std::size_t s = 0; s < segments.count(); ++s) {
    const std::size_t b = segments.begin(s), e = segments.end(s);
    if (b >= e) throw ConfigError(fmt::format("segment_softmax: segment {} is empty", s));
    double mx = L[b];
    for (std::size_t i = b + 1; i < e; ++i) mx = std::max(mx, L[i]);
    double z = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      Y[i] = std::exp(L[i] - mx);
      z += Y[i];
    }
    for (std::size_t i = b; i < e; ++i) Y[i] /= z;
  }
  Tensor saved = Y;
  return logits.tape().record(
      "segment_softmax", std::move(Y), {logits}, [logits, segments, saved](Tape& tape, const Tensor& g) {
        Tensor& gl = tape.grad_buffer(logits);
        for (std::size_t s = 0; s < segments.count(); ++s) {
          const std::size_t b = segments.begin(s), e = segments.end(s);
          double dot = 0.0;
          for (std::size_t i = b; i < e; ++i) dot += saved[i] * g[i];
          for (std::size_t i = b; i < e; ++i) gl[i] += saved[i] * (g[i] - dot);
        }
      });
}

Var segment_weighted_sum(Var values, Var weights, const Segments& segments) {
  const Tensor& V = values.value();
  const Tensor& W = weights.value();
  const Dims d = dims(V);
  check_segments(segments, d.rows, "segment_weighted_sum");
  if (W.size() != d.rows) throw ShapeError("segment_weighted_sum: one weight per row required");
  const std::size_t f = d.cols;
  Tensor Y({segments.count(), f});
  for (std::size_t s = 0; s < segments.count(); ++s) {
    double* out = Y.data().data() + s * f;
    for (std::size_t e = segments.begin(s); e < segments.end(s); ++e) {
      const double w = W[e];
      const double* v = V.data().data() + e * f;
      for (std::size_t c = 0; c < f; ++c) out[c] += w * v[c];
    }
  }
  return values.tape().record(
      "segment_weighted_sum", std::move(Y), {values, weights},
      [values, weights, segments, f](Tape& tape, const Tensor& g) {
        const Tensor& V = values.value();
        const Tensor& W = weights.value();
        const bool gv = tape.requires_grad(values), gw = tape.requires_grad(weights);
        Tensor* dv = gv ? &tape.grad_buffer(values) : nullptr;
        Tensor* dw = gw ? &tape.grad_buffer(weights) : nullptr;
        for (std::size_t s = 0; s < segments.count(); ++s) {
          const double* go = g.data().data() + s * f;
          for (std::size_t e = segments.begin(s); e < segments.end(s); ++e) {
            if (dv) {
              double* out = dv->data().data() + e * f;
              for (std::size_t c = 0; c < f; ++c) out[c] += W[e] * go[c];
            }
            if (dw) {
              const double* v = V.data().data() + e * f;
              double acc = 0.0;
              for (std::size_t c = 0; c < f; ++c) acc += v[c] * go[c];
              (*dw)[e] += acc;
            }
          }
        }
      });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record("sum", Tensor::scalar(s), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
  });
}

Var mse_loss(Var pred, Var target) {
  const Tensor& P = pred.value();
  const Tensor& T = target.value();
  if (P.size() != T.size() || P.size() == 0) {
    throw ShapeError(fmt::format("mse_loss: {} vs {}", P.shape_string(), T.shape_string()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) acc += (P[i] - T[i]) * (P[i] - T[i]);
  const double m = static_cast<double>(P.size());
  return pred.tape().record("mse_loss", Tensor::scalar(acc / m), {pred, target},
                            [pred, target, m](Tape& tape, const Tensor& g) {
                              const Tensor& P = pred.value();
                              const Tensor& T = target.value();
                              const double k = 2.0 * g[0] / m;
                              if (tape.requires_grad(pred)) {
                                Tensor& gp = tape.grad_buffer(pred);
                                for (std::size_t i = 0; i < P.size(); ++i) gp[i] += k * (P[i] - T[i]);
                              }
                              if (tape.requires_grad(target)) {
                                Tensor& gt = tape.grad_buffer(target);
                                for (std::size_t i = 0; i < P.size(); ++i) gt[i] -= k * (P[i] - T[i]);
                              }
                            });
}

}  // namespace beamgat::ad
