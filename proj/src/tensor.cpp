#include "qkm/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cmath>
#include <numeric>
#include <string>

#include "qkm/errors.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qkm {

namespace {

using RowMajorMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void check_shape(const Shape& shape) {
  if (shape.empty()) fail_validation("tensor shape must be non-empty");
  for (auto d : shape)
    if (d == 0) fail_validation("tensor bond dimension must be >= 1, got " + shape_string(shape));
}

// Row-major strides.
std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

}  // namespace

std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor() : shape_{1}, entries_(1) {}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  entries_.assign(shape_volume(shape_), Complex{});
}

DenseTensor::DenseTensor(Shape shape, std::vector<Complex> entries)
    : shape_(std::move(shape)), entries_(std::move(entries)) {
  check_shape(shape_);
  if (entries_.size() != shape_volume(shape_))
    fail_validation("tensor of shape " + shape_string(shape_) + " needs " +
                    std::to_string(shape_volume(shape_)) + " entries, got " +
                    std::to_string(entries_.size()));
}

DenseTensor DenseTensor::scalar(Complex value) { return DenseTensor({1}, {value}); }

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size())
    fail_validation("index rank " + std::to_string(index.size()) + " does not match tensor rank " +
                    std::to_string(shape_.size()));
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) fail_validation("index out of range on axis " + std::to_string(i));
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

Complex& DenseTensor::at(std::span<const std::size_t> index) { return entries_[offset(index)]; }

const Complex& DenseTensor::at(std::span<const std::size_t> index) const {
  return entries_[offset(index)];
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
  const auto& shape = t.shape();
  const std::size_t rank = shape.size();
  if (perm.size() != rank) fail_validation("permutation length does not match tensor rank");
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    if (p >= rank || seen[p]) fail_validation("invalid axis permutation");
    seen[p] = true;
  }
  if (std::is_sorted(perm.begin(), perm.end())) return t;

  Shape out_shape(rank);
  for (std::size_t k = 0; k < rank; ++k) out_shape[k] = shape[perm[k]];
  const auto in_strides = strides_of(shape);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t k = 0; k < rank; ++k) src_stride[k] = in_strides[perm[k]];

  std::vector<Complex> out(t.size());
  std::vector<std::size_t> counter(rank, 0);
  std::size_t src = 0;
  const auto in = t.entries();
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = in[src];
    // Odometer increment over the output index, tracking the source offset.
    for (std::size_t k = rank; k-- > 0;) {
      if (++counter[k] < out_shape[k]) {
        src += src_stride[k];
        break;
      }
      src -= src_stride[k] * (out_shape[k] - 1);
      counter[k] = 0;
    }
  }
  return DenseTensor(std::move(out_shape), std::move(out));
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const AxisPair> bond_pairs) {
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  for (auto [ia, ib] : bond_pairs) {
    if (ia >= a.rank() || ib >= b.rank()) fail_validation("contraction axis out of range");
    if (used_a[ia] || used_b[ib]) fail_validation("contraction axis repeated");
    used_a[ia] = used_b[ib] = true;
    if (a.dim(ia) != b.dim(ib))
      fail_validation("contraction dimension mismatch: axis " + std::to_string(ia) + " has " +
                      std::to_string(a.dim(ia)) + ", axis " + std::to_string(ib) + " has " +
                      std::to_string(b.dim(ib)));
  }

  std::vector<std::size_t> perm_a, perm_b;
  Shape out_shape;
  std::size_t rows = 1, inner = 1, cols = 1;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (!used_a[i]) {
      perm_a.push_back(i);
      out_shape.push_back(a.dim(i));
      rows *= a.dim(i);
    }
  for (auto [ia, ib] : bond_pairs) {
    perm_a.push_back(ia);
    perm_b.push_back(ib);
    inner *= a.dim(ia);
  }
  for (std::size_t i = 0; i < b.rank(); ++i)
    if (!used_b[i]) {
      perm_b.push_back(i);
      out_shape.push_back(b.dim(i));
      cols *= b.dim(i);
    }
  if (out_shape.empty()) out_shape.push_back(1);

  const DenseTensor pa = permute(a, perm_a);
  const DenseTensor pb = permute(b, perm_b);
  Eigen::Map<const RowMajorMatrix> ma(pa.entries().data(), Eigen::Index(rows), Eigen::Index(inner));
  Eigen::Map<const RowMajorMatrix> mb(pb.entries().data(), Eigen::Index(inner), Eigen::Index(cols));

  DenseTensor out(std::move(out_shape));
  Eigen::Map<RowMajorMatrix> mo(out.entries().data(), Eigen::Index(rows), Eigen::Index(cols));
  mo.noalias() = ma * mb;
  return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> bond_pairs) {
  return contract(a, b, std::span<const AxisPair>(bond_pairs.begin(), bond_pairs.size()));
}

DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
  check_shape(new_shape);
  if (shape_volume(new_shape) != t.size())
    fail_validation("reshape size mismatch: " + shape_string(t.shape()) + " -> " +
                    shape_string(new_shape));
  const auto e = t.entries();
  return DenseTensor(std::move(new_shape), std::vector<Complex>(e.begin(), e.end()));
}

DenseTensor conjugate(const DenseTensor& t) {
  const auto e = t.entries();
  std::vector<Complex> out(e.size());
  std::transform(e.begin(), e.end(), out.begin(), [](Complex z) { return std::conj(z); });
  return DenseTensor(t.shape(), std::move(out));
}

double norm(const DenseTensor& t) {
  double sum = 0.0;
  for (auto z : t.entries()) sum += std::norm(z);
  return std::sqrt(sum);
}

TruncationPlan plan_truncation(std::span<const double> singular_values, double budget) {
  TruncationPlan plan;
  if (singular_values.empty()) return plan;
  const double floor = kSingularNoiseFloor * singular_values.front();
  std::size_t keep = singular_values.size();
  double discarded = 0.0;
  while (keep > 1) {
    const double s = singular_values[keep - 1];
    const double weight = s > floor ? s * s : 0.0;
    if (discarded + weight > budget) break;
    discarded += weight;
    --keep;
  }
  plan.keep = keep;
  plan.discarded_weight = discarded;
  return plan;
}

SvdResult svd_truncated(const DenseTensor& t, std::span<const std::size_t> row_axes,
                        double budget) {
  if (!(budget >= 0.0) || !std::isfinite(budget)) fail_validation("truncation budget must be >= 0");
  const std::size_t rank = t.rank();
  if (row_axes.empty() || row_axes.size() >= rank)
    fail_validation("svd split must leave both sides non-empty");
  std::vector<bool> is_row(rank, false);
  for (auto a : row_axes) {
    if (a >= rank || is_row[a]) fail_validation("invalid svd row axis");
    is_row[a] = true;
  }
  for (auto z : t.entries())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      fail_validation("svd input contains non-finite entries");

  std::vector<std::size_t> perm(row_axes.begin(), row_axes.end());
  Shape left_shape, right_shape;
  std::size_t rows = 1, cols = 1;
  for (auto a : row_axes) {
    left_shape.push_back(t.dim(a));
    rows *= t.dim(a);
  }
  for (std::size_t a = 0; a < rank; ++a)
    if (!is_row[a]) {
      perm.push_back(a);
      right_shape.push_back(t.dim(a));
      cols *= t.dim(a);
    }

  DenseTensor p = permute(t, perm);
  const auto r = lapack_int(rows), c = lapack_int(cols), k = std::min(r, c);
  std::vector<double> sv(std::size_t(k), 0.0);
  std::vector<Complex> u(std::size_t(r) * std::size_t(k)), vt(std::size_t(k) * std::size_t(c));
  std::vector<Complex> work(p.entries().begin(), p.entries().end());
  // gesdd overwrites its input; keep a copy for the gesvd fallback.
  lapack_int info = LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'S', r, c, work.data(), c, sv.data(), u.data(), k,
                                   vt.data(), c);
  if (info > 0) {
    std::vector<double> superb(std::size_t(std::max<lapack_int>(k - 1, 1)));
    info = LAPACKE_zgesvd(LAPACK_ROW_MAJOR, 'S', 'S', r, c, p.entries().data(), c, sv.data(), u.data(), k,
                          vt.data(), c, superb.data());
  }
  if (info != 0) throw Error("SVD failed to converge (LAPACK info " + std::to_string(info) + ")");

  std::vector<double> spectrum = std::move(sv);
  const TruncationPlan plan = plan_truncation(spectrum, budget);
  const auto keep = Eigen::Index(plan.keep);
  spectrum.resize(plan.keep);

  left_shape.push_back(plan.keep);
  right_shape.insert(right_shape.begin(), plan.keep);
  SvdResult result{DenseTensor(std::move(left_shape)), std::move(spectrum),
                   DenseTensor(std::move(right_shape)), plan.discarded_weight};
  Eigen::Map<const RowMajorMatrix> um(u.data(), Eigen::Index(rows), Eigen::Index(k));
  Eigen::Map<RowMajorMatrix>(result.left.entries().data(), Eigen::Index(rows), keep) = um.leftCols(keep);
  std::copy_n(vt.begin(), std::size_t(keep) * cols, result.right.entries().begin());
  return result;
}

SvdResult svd_truncated(const DenseTensor& t, std::initializer_list<std::size_t> row_axes,
                        double budget) {
  return svd_truncated(t, std::span<const std::size_t>(row_axes.begin(), row_axes.size()), budget);
}

}  // namespace qkm
