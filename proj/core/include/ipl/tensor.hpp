#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipl {

using Shape = std::vector<std::size_t>;

/// Raised when an operation's inputs have incompatible extents.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation would leave its mathematical domain (log of a
/// non-positive value, division by zero) or produce a non-finite value.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. An empty shape denotes a scalar.
class Tensor {
public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  /// A 1 x n matrix.
  static Tensor row(std::vector<double> values);
  /// An r x c matrix from row-major values.
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  /// Leading extent of a rank-2 tensor.
  std::size_t rows() const;
  /// Trailing extent of a rank-2 tensor.
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Value of a single-element tensor.
  double item() const;

  bool all_finite() const noexcept;
  Tensor reshaped(Shape shape) const;

  /// Row r of a rank-2 tensor as a 1 x cols tensor.
  Tensor row_at(std::size_t r) const;
  /// Rows [begin, end) of a rank-2 tensor.
  Tensor row_range(std::size_t begin, std::size_t end) const;
  /// Each row repeated `times` consecutively.
  Tensor repeat_rows(std::size_t times) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

private:
  Shape shape_;
  std::vector<double> data_;
};

/// Stack 1 x c (or length-c) tensors into an n x c matrix.
Tensor stack_rows(std::span<const Tensor> rows);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ipl
