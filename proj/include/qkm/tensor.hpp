#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace qkm {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

/// Dense complex tensor with row-major storage.
///
/// The shape is never empty: a scalar is stored as shape {1}. Every bond
/// dimension is at least 1 and the number of entries always equals the
/// product of the bond dimensions.
class DenseTensor {
 public:
  /// Scalar zero, shape {1}.
  DenseTensor();
  /// Zero-filled tensor of the given shape.
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<Complex> entries);

  static DenseTensor scalar(Complex value);
  /// Square identity matrix of shape {n, n}.
  static DenseTensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return entries_.size(); }

  std::span<const Complex> entries() const noexcept { return entries_; }
  std::span<Complex> entries() noexcept { return entries_; }

  Complex& operator[](std::size_t flat) { return entries_[flat]; }
  const Complex& operator[](std::size_t flat) const { return entries_[flat]; }

  /// Entry at a multi-index; throws on rank or range mismatch.
  Complex& at(std::span<const std::size_t> index);
  const Complex& at(std::span<const std::size_t> index) const;
  Complex& at(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  const Complex& at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  /// Row-major flat offset of a multi-index.
  std::size_t offset(std::span<const std::size_t> index) const;

  bool operator==(const DenseTensor&) const = default;

 private:
  Shape shape_;
  std::vector<Complex> entries_;
};

/// Number of entries implied by a shape.
std::size_t shape_volume(const Shape& shape);

/// Pair of (axis of a, axis of b) contracted together.
using AxisPair = std::pair<std::size_t, std::size_t>;

/// Contract `a` and `b` over the given axis pairs. The result carries the
/// uncontracted axes of `a` in order, followed by those of `b`. Contracting
/// every axis yields a scalar of shape {1}.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const AxisPair> bond_pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> bond_pairs);

/// Reinterpret the entries under a new shape (row-major bijection).
DenseTensor reshape(const DenseTensor& t, Shape new_shape);

/// Reorder axes: axis k of the result is axis perm[k] of `t`.
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

DenseTensor conjugate(const DenseTensor& t);

/// Frobenius norm.
double norm(const DenseTensor& t);

struct SvdResult {
  /// Shape {row dims..., r}; columns are orthonormal.
  DenseTensor left;
  /// Non-increasing, non-negative, length r >= 1.
  std::vector<double> singular_values;
  /// Shape {r, column dims...}; rows are orthonormal.
  DenseTensor right;
  /// Sum of squares of the singular values removed by truncation.
  double discarded_weight = 0.0;
};

/// Singular values below this fraction of the largest are exact zeros.
inline constexpr double kSingularNoiseFloor = 10.0 * 2.220446049250313e-16;

/// Truncated SVD of `t` viewed as a matrix whose rows are indexed by
/// `row_axes` (in the given order) and columns by the remaining axes (in
/// their original order).
///
/// The longest tail of singular values whose squared sum fits within
/// `budget` is removed; at least one singular value is always kept.
SvdResult svd_truncated(const DenseTensor& t, std::span<const std::size_t> row_axes,
                        double budget);
SvdResult svd_truncated(const DenseTensor& t, std::initializer_list<std::size_t> row_axes,
                        double budget);

/// Truncation rule applied to a sorted spectrum: number of values to keep
/// and the discarded squared weight.
struct TruncationPlan {
  std::size_t keep = 1;
  double discarded_weight = 0.0;
};
TruncationPlan plan_truncation(std::span<const double> singular_values, double budget);

}  // namespace qkm
