#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qkm {

enum class GramKind { train, test };
enum class Strategy { no_messaging, round_robin };

std::string_view to_string(GramKind kind);
std::string_view to_string(Strategy strategy);
/// Accepts "no-messaging"/"no_messaging" and "round-robin"/"round_robin".
Strategy parse_strategy(std::string_view text);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  bool operator==(const IndexRange&) const = default;
};

/// Bra states index the rows of a Gram matrix, ket states its columns. A
/// training Gram matrix only has ket states (bras and kets coincide).
enum class Side { bra, ket };

struct StateBlock {
  Side side = Side::ket;
  IndexRange range;
  bool operator==(const StateBlock&) const = default;
};

/// A rectangle of Gram entries. In a triangular tile (rows == cols, training
/// kind) only i < j is computed and the diagonal is set to one.
struct TileTask {
  std::size_t worker = 0;
  IndexRange rows;
  IndexRange cols;
  bool triangular = false;
};

/// Point-to-point message carrying serialized states. A moved block is
/// dropped by the sender afterwards unless the sender simulated it; a copy
/// is always kept.
struct Transfer {
  std::size_t from = 0;
  std::size_t to = 0;
  StateBlock states;
  bool copy = false;
};

struct SimTask {
  std::size_t worker = 0;
  StateBlock states;
};

/// Transfers run at the start of a step, in list order, then tiles run.
struct ScheduleStep {
  std::vector<Transfer> transfers;
  std::vector<TileTask> tiles;
};

struct TileSchedule {
  Strategy strategy = Strategy::no_messaging;
  GramKind kind = GramKind::train;
  std::size_t workers = 1;       // effective worker count
  std::size_t n_bras = 0;        // rows (equal to n_kets for training)
  std::size_t n_kets = 0;        // columns
  std::size_t column_tiles = 1;  // groups of this many workers (round-robin, test kind)
  std::vector<SimTask> simulations;
  std::vector<ScheduleStep> steps;

  std::size_t simulation_count() const;
  std::size_t transfer_count() const;
};

struct ScheduleOptions {
  /// Column tiles for the rectangular round-robin layout; chosen to make
  /// tiles close to square when unset.
  std::optional<std::size_t> column_tiles;
};

/// Split n items into `parts` contiguous ranges, earlier ranges taking the
/// remainder.
std::vector<IndexRange> split_evenly(std::size_t n, std::size_t parts);

/// Tiling and ownership plan for k workers. A worker count above the number
/// of rows is reduced to the number of rows.
TileSchedule make_schedule(std::size_t n_bras, std::size_t n_kets, std::size_t k, Strategy strategy,
                           GramKind kind, const ScheduleOptions& options = {});

/// How many times each Gram entry is produced, row-major n_bras x n_kets.
/// For training schedules only the upper triangle (with diagonal) is counted.
std::vector<unsigned> coverage_counts(const TileSchedule& schedule);

/// Throws ValidationError when a required entry is not covered exactly once
/// or a worker uses states it does not hold at that point of the schedule.
void validate_schedule(const TileSchedule& schedule);

}  // namespace qkm
