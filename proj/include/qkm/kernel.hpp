#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qkm/ansatz.hpp"
#include "qkm/mps.hpp"
#include "qkm/schedule.hpp"

namespace qkm {

using FeatureRow = std::vector<double>;

/// Kernel matrix of squared state overlaps, row-major.
///
/// The training kind is square and symmetric with unit diagonal; the test
/// kind has one row per test point and one column per training point.
struct GramMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  GramKind kind = GramKind::train;
  std::vector<double> entries;

  GramMatrix() = default;
  GramMatrix(std::size_t rows, std::size_t cols, GramKind kind)
      : rows(rows), cols(cols), kind(kind), entries(rows * cols, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
  bool operator==(const GramMatrix&) const = default;
};

/// Largest |a - b| over all entries; shapes must agree.
double max_abs_difference(const GramMatrix& a, const GramMatrix& b);

/// Throws ValidationError unless every row has `m` finite values in [0, 2].
void validate_rows(std::span<const FeatureRow> rows, std::size_t m);

/// Simulate the feature-map circuit of one rescaled row.
MpsState simulate_row(std::span<const double> x, const FeatureMapConfig& cfg,
                      double trunc_budget = kDefaultTruncBudget);

/// One simulation per row, in order.
std::vector<MpsState> simulate_dataset(std::span<const FeatureRow> rows, const FeatureMapConfig& cfg,
                                       double trunc_budget = kDefaultTruncBudget);

/// Work counters of a Gram computation.
struct KernelCounters {
  std::size_t simulations = 0;
  std::size_t inner_products = 0;
  std::size_t messages = 0;
  std::size_t bytes_sent = 0;
};

/// Serial Gram matrix from simulated states. The training kind requires
/// `bras` and `kets` to be the same list; only i < j products are evaluated
/// and mirrored, the diagonal is one.
GramMatrix compute_gram(std::span<const MpsState> bras, std::span<const MpsState> kets, GramKind kind,
                        KernelCounters* counters = nullptr);

struct DistributedResult {
  GramMatrix gram;
  KernelCounters counters;
  /// Seconds per phase summed over workers: simulation, inner_products,
  /// communication, merge; plus wall for the whole run.
  std::map<std::string, double> timing;
};

/// Execute a schedule with one thread per worker. Workers simulate their
/// states, exchange serialized states over in-process mailboxes, compute
/// their tiles and a collector merges the tiles. For the training kind
/// `bra_rows` is ignored and may be empty. A failing worker aborts the run.
DistributedResult run_distributed(std::span<const FeatureRow> bra_rows,
                                  std::span<const FeatureRow> ket_rows, const FeatureMapConfig& cfg,
                                  const TileSchedule& schedule,
                                  double trunc_budget = kDefaultTruncBudget);

/// Full precision CSV: one line per row, 17 significant digits.
void write_gram_csv(const GramMatrix& gram, const std::filesystem::path& path);
GramMatrix read_gram_csv(const std::filesystem::path& path, GramKind kind);

struct GramRunInfo {
  FeatureMapConfig cfg;
  Strategy strategy = Strategy::no_messaging;
  std::size_t workers = 1;
  KernelCounters counters;
  std::map<std::string, double> timing;
};

/// JSON sidecar describing how a Gram matrix was produced.
void write_gram_sidecar(const GramMatrix& gram, const GramRunInfo& info,
                        const std::filesystem::path& path);

}  // namespace qkm
