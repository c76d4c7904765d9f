#include <cmath>

#include "qkm/errors.hpp"
#include "qkm/learn.hpp"

namespace qkm {

double default_gaussian_alpha(std::span<const FeatureRow> train) {
  if (train.empty() || train.front().empty()) fail_validation("empty training matrix");
  const std::size_t m = train.front().size();
  double sum = 0.0, count = 0.0;
  for (const auto& row : train) {
    if (row.size() != m) fail_validation("ragged feature rows");
    for (double v : row) sum += v;
    count += double(m);
  }
  const double mean = sum / count;
  double ss = 0.0;
  for (const auto& row : train)
    for (double v : row) ss += (v - mean) * (v - mean);
  const double var = ss / count;
  if (!(var > 0.0)) fail_validation("training features have zero variance");
  return 1.0 / (double(m) * var);
}

GramMatrix gaussian_gram(std::span<const FeatureRow> rows, std::span<const FeatureRow> cols,
                         double alpha, GramKind kind) {
  if (!(alpha > 0.0)) fail_validation("gaussian bandwidth alpha must be positive");
  if (kind == GramKind::train && (rows.data() != cols.data() || rows.size() != cols.size()))
    fail_validation("training Gram requires identical row and column sets");
  auto sqdist = [](const FeatureRow& a, const FeatureRow& b) {
    if (a.size() != b.size()) fail_validation("feature width mismatch");
    double s = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) s += (a[f] - b[f]) * (a[f] - b[f]);
    return s;
  };
  GramMatrix g(rows.size(), cols.size(), kind);
  if (kind == GramKind::train) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      g(i, i) = 1.0;
      for (std::size_t j = i + 1; j < cols.size(); ++j) g(i, j) = g(j, i) = std::exp(-alpha * sqdist(rows[i], cols[j]));
    }
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) g(i, j) = std::exp(-alpha * sqdist(rows[i], cols[j]));
  }
  return g;
}

std::vector<double> c_grid() {
  constexpr std::size_t n = 8;
  const double lo = std::log(0.01), hi = std::log(4.0);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = std::exp(lo + (hi - lo) * double(i) / double(n - 1));
  grid.front() = 0.01;
  grid.back() = 4.0;
  return grid;
}

}  // namespace qkm
