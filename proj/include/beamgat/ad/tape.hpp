#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "beamgat/ad/tensor.hpp"

namespace beamgat::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape. Entries are appended in evaluation order, so
/// inputs always precede their consumers. Single-threaded; one backward pass
/// per recording.
class Tape {
 public:
  /// Receives the tape and the gradient flowing into this entry's output.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var parameter(Tensor value);
  /// Leaf excluded from differentiation.
  Var constant(Tensor value);

  /// Appends an operation result. `backward` is dropped when no input needs a
  /// gradient. Throws NumericError on non-finite output.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(std::string_view op, Tensor value, const std::vector<Var>& inputs,
             BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule once, in
  /// reverse order. `loss` must hold exactly one element.
  void backward(Var loss);

  /// Gradient of the last backward pass; zeros for entries it did not reach.
  Tensor grad(Var v) const;

  /// Called by backward rules to accumulate into an input's gradient.
  Tensor& grad_buffer(Var v);

  std::size_t size() const { return nodes_.size(); }
  /// Number of backward rules executed by the last backward().
  std::size_t backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn backward);

  std::deque<Node> nodes_;  // stable references to values across pushes
  bool backward_done_ = false;
  std::size_t visits_ = 0;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace beamgat::ad
