#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace beamgat::ad {

/// Dense row-major float64 array. Rank-1 tensors behave as column vectors
/// wherever an operation expects a matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  /// Convenience for literals in tests: {{1, 2}, {3, 4}}.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  /// Leading dimension (1 for an empty shape).
  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  /// Product of trailing dimensions.
  std::size_t cols() const { return rows() == 0 ? 0 : data_.size() / rows(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_string() const;
  /// Index of the first non-finite entry, or size() if none.
  std::size_t first_non_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace beamgat::ad
