#include "beamgat/ad/tape.hpp"

#include <fmt/format.h>

#include "beamgat/errors.hpp"

namespace beamgat::ad {

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
  if (backward_done_) throw ConfigError("tape already differentiated; record a new tape");
  nodes_.push_back({std::move(value), Tensor{}, std::move(backward), requires_grad});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::record(std::string_view op, Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  if (const std::size_t bad = value.first_non_finite(); bad != value.size()) {
    throw NumericError(fmt::format("{}: non-finite output {} at flat index {}", op, value[bad], bad));
  }
  bool needs = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ConfigError(fmt::format("{}: input from another tape", op));
    needs = needs || nodes_[in.id()].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(op, std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == n.value.size()) return n.grad;
  return Tensor(n.value.shape(), 0.0);
}

void Tape::backward(Var loss) {
  if (backward_done_) throw ConfigError("double backward is not supported");
  if (&loss.tape() != this) throw ConfigError("loss belongs to another tape");
  if (value(loss).size() != 1) {
    throw ShapeError(fmt::format("backward needs a scalar loss, got shape {}",
                                 value(loss).shape_string()));
  }
  backward_done_ = true;
  visits_ = 0;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() != n.value.size()) continue;
    n.backward(*this, n.grad);
    ++visits_;
  }
}

}  // namespace beamgat::ad
