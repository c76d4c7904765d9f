#include "qkm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "qkm/errors.hpp"

namespace qkm {

std::string_view to_string(GramKind kind) { return kind == GramKind::train ? "train" : "test"; }

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::round_robin ? "round-robin" : "no-messaging";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "round-robin" || text == "round_robin") return Strategy::round_robin;
  if (text == "no-messaging" || text == "no_messaging") return Strategy::no_messaging;
  fail_validation("unknown strategy '" + std::string(text) + "'");
}

std::size_t TileSchedule::simulation_count() const {
  std::size_t n = 0;
  for (const auto& s : simulations) n += s.states.range.size();
  return n;
}

std::size_t TileSchedule::transfer_count() const {
  std::size_t n = 0;
  for (const auto& step : steps) n += step.transfers.size();
  return n;
}

std::vector<IndexRange> split_evenly(std::size_t n, std::size_t parts) {
  if (parts == 0) fail_validation("cannot split into zero parts");
  std::vector<IndexRange> out;
  const std::size_t base = n / parts, extra = n % parts;
  std::size_t at = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out.push_back({at, at + len});
    at += len;
  }
  return out;
}

namespace {

// Orient an off-diagonal training tile so that every row index is below
// every column index.
TileTask upper_tile(std::size_t worker, IndexRange a, IndexRange b) {
  if (a == b) return {worker, a, b, true};
  return a.begin < b.begin ? TileTask{worker, a, b, false} : TileTask{worker, b, a, false};
}

TileSchedule train_no_messaging(std::size_t n, std::size_t k) {
  TileSchedule s;
  std::size_t blocks = 1;
  while (blocks * (blocks + 1) / 2 < k) ++blocks;
  blocks = std::min(blocks, n);
  const auto ranges = split_evenly(n, blocks);

  ScheduleStep step;
  std::vector<std::set<std::size_t>> needed(k);
  std::size_t t = 0;
  for (std::size_t bi = 0; bi < blocks; ++bi)
    for (std::size_t bj = bi; bj < blocks; ++bj, ++t) {
      const std::size_t w = t % k;
      step.tiles.push_back(upper_tile(w, ranges[bi], ranges[bj]));
      needed[w].insert(bi);
      needed[w].insert(bj);
    }
  for (std::size_t w = 0; w < k; ++w)
    for (auto b : needed[w]) s.simulations.push_back({w, {Side::ket, ranges[b]}});
  s.steps.push_back(std::move(step));
  return s;
}

TileSchedule train_round_robin(std::size_t n, std::size_t k) {
  TileSchedule s;
  const auto blocks = split_evenly(n, k);
  ScheduleStep local;
  for (std::size_t w = 0; w < k; ++w) {
    s.simulations.push_back({w, {Side::ket, blocks[w]}});
    local.tiles.push_back({w, blocks[w], blocks[w], true});
  }
  s.steps.push_back(std::move(local));

  // Each shift hands the visiting block from worker w+1 to worker w. After
  // k/2 shifts every pair of blocks has met once; with even k the last shift
  // pairs antipodal workers, so only the lower half of the ring computes it.
  for (std::size_t shift = 1; shift <= k / 2; ++shift) {
    const bool antipodal = 2 * shift == k;
    ScheduleStep step;
    for (std::size_t w = 0; w < k; ++w) {
      if (antipodal && w >= k / 2) continue;
      const std::size_t visiting = (w + shift) % k;
      step.transfers.push_back({(w + 1) % k, w, {Side::ket, blocks[visiting]}, false});
      step.tiles.push_back(upper_tile(w, blocks[w], blocks[visiting]));
    }
    s.steps.push_back(std::move(step));
  }
  return s;
}

std::size_t square_column_tiles(std::size_t n_rows, std::size_t n_cols, std::size_t k) {
  // Tile height n_rows/k; pick the column count giving the nearest width.
  const double ideal = double(k) * double(n_cols) / double(n_rows);
  const auto cap = std::min(k, n_cols);
  return std::clamp<std::size_t>(std::size_t(std::llround(ideal)), 1, cap);
}

TileSchedule test_no_messaging(std::size_t n_bras, std::size_t n_kets, std::size_t k) {
  TileSchedule s;
  std::size_t col_tiles = std::clamp<std::size_t>(
      std::size_t(std::llround(std::sqrt(double(k) * double(n_kets) / double(n_bras)))), 1,
      std::min(k, n_kets));
  std::size_t row_tiles = std::min((k + col_tiles - 1) / col_tiles, n_bras);
  if (row_tiles * col_tiles < k) col_tiles = std::min((k + row_tiles - 1) / row_tiles, n_kets);
  const auto rows = split_evenly(n_bras, row_tiles);
  const auto cols = split_evenly(n_kets, col_tiles);

  ScheduleStep step;
  std::vector<std::set<std::size_t>> need_rows(k), need_cols(k);
  std::size_t t = 0;
  for (std::size_t bi = 0; bi < row_tiles; ++bi)
    for (std::size_t bj = 0; bj < col_tiles; ++bj, ++t) {
      const std::size_t w = t % k;
      step.tiles.push_back({w, rows[bi], cols[bj], false});
      need_rows[w].insert(bi);
      need_cols[w].insert(bj);
    }
  for (std::size_t w = 0; w < k; ++w) {
    for (auto b : need_rows[w]) s.simulations.push_back({w, {Side::bra, rows[b]}});
    for (auto b : need_cols[w]) s.simulations.push_back({w, {Side::ket, cols[b]}});
  }
  s.column_tiles = col_tiles;
  s.steps.push_back(std::move(step));
  return s;
}

// Rectangular round-robin: every worker owns a row block of bra states; the
// ket states form `ell` column blocks simulated by the first group. Workers
// are arranged in groups of `ell` which each rotate the column blocks around
// their own ring; the k mod ell leftover workers get a copy of the block they
// need at each step from the matching worker of the first group.
TileSchedule test_round_robin(std::size_t n_bras, std::size_t n_kets, std::size_t k,
                              std::size_t ell) {
  TileSchedule s;
  s.column_tiles = ell;
  const auto rows = split_evenly(n_bras, k);
  const auto cols = split_evenly(n_kets, ell);
  const std::size_t groups = k / ell;
  const std::size_t full = groups * ell;

  for (std::size_t w = 0; w < k; ++w) s.simulations.push_back({w, {Side::bra, rows[w]}});
  for (std::size_t j = 0; j < ell; ++j) s.simulations.push_back({j, {Side::ket, cols[j]}});

  for (std::size_t step_index = 0; step_index < ell; ++step_index) {
    ScheduleStep step;
    if (step_index == 0) {
      for (std::size_t g = 1; g < groups; ++g)
        for (std::size_t j = 0; j < ell; ++j)
          step.transfers.push_back({j, g * ell + j, {Side::ket, cols[j]}, true});
    } else {
      for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t j = 0; j < ell; ++j) {
          const std::size_t block = (j + step_index) % ell;
          step.transfers.push_back(
              {g * ell + (j + 1) % ell, g * ell + j, {Side::ket, cols[block]}, false});
        }
    }
    for (std::size_t x = full; x < k; ++x) {
      const std::size_t i = x - full;
      step.transfers.push_back({i, x, {Side::ket, cols[(i + step_index) % ell]}, true});
    }
    for (std::size_t w = 0; w < k; ++w) {
      const std::size_t j = w < full ? w % ell : w - full;
      step.tiles.push_back({w, rows[w], cols[(j + step_index) % ell], false});
    }
    s.steps.push_back(std::move(step));
  }
  return s;
}

}  // namespace

TileSchedule make_schedule(std::size_t n_bras, std::size_t n_kets, std::size_t k, Strategy strategy,
                           GramKind kind, const ScheduleOptions& options) {
  if (k == 0) fail_validation("worker count must be >= 1");
  if (kind == GramKind::train && n_bras != n_kets)
    fail_validation("training Gram matrix must be square");

  TileSchedule s;
  if (n_bras == 0 || n_kets == 0) {
    s.steps.emplace_back();
  } else {
    k = std::min(k, n_bras);
    if (kind == GramKind::train) {
      s = strategy == Strategy::round_robin ? train_round_robin(n_bras, k)
                                            : train_no_messaging(n_bras, k);
    } else if (strategy == Strategy::no_messaging) {
      s = test_no_messaging(n_bras, n_kets, k);
    } else {
      std::size_t ell = options.column_tiles.value_or(square_column_tiles(n_bras, n_kets, k));
      if (ell < 1 || ell > std::min(k, n_kets))
        fail_validation("column tile count must lie in [1, min(k, columns)]");
      s = test_round_robin(n_bras, n_kets, k, ell);
    }
    s.workers = k;
  }
  s.strategy = strategy;
  s.kind = kind;
  s.n_bras = n_bras;
  s.n_kets = n_kets;
  return s;
}

std::vector<unsigned> coverage_counts(const TileSchedule& schedule) {
  const std::size_t cols = schedule.n_kets;
  std::vector<unsigned> counts(schedule.n_bras * cols, 0);
  for (const auto& step : schedule.steps)
    for (const auto& tile : step.tiles)
      for (std::size_t i = tile.rows.begin; i < tile.rows.end; ++i)
        for (std::size_t j = tile.cols.begin; j < tile.cols.end; ++j) {
          if (tile.triangular && j < i) continue;
          if (schedule.kind == GramKind::train && i > j)
            ++counts[j * cols + i];
          else
            ++counts[i * cols + j];
        }
  return counts;
}

void validate_schedule(const TileSchedule& schedule) {
  const auto counts = coverage_counts(schedule);
  for (std::size_t i = 0; i < schedule.n_bras; ++i)
    for (std::size_t j = 0; j < schedule.n_kets; ++j) {
      const bool required = schedule.kind == GramKind::test || j >= i;
      const unsigned c = counts[i * schedule.n_kets + j];
      if (required ? c != 1 : c != 0)
        fail_validation("entry (" + std::to_string(i) + "," + std::to_string(j) + ") covered " +
                        std::to_string(c) + " times");
    }

  // Replay state ownership through the steps.
  using Key = std::pair<Side, std::size_t>;
  std::vector<std::set<Key>> held(schedule.workers), own(schedule.workers);
  auto check_worker = [&](std::size_t w) {
    if (w >= schedule.workers) fail_validation("schedule references worker " + std::to_string(w));
  };
  for (const auto& sim : schedule.simulations) {
    check_worker(sim.worker);
    for (auto i = sim.states.range.begin; i < sim.states.range.end; ++i) {
      held[sim.worker].insert({sim.states.side, i});
      own[sim.worker].insert({sim.states.side, i});
    }
  }
  auto require = [&](std::size_t w, Side side, IndexRange r, const char* what) {
    for (auto i = r.begin; i < r.end; ++i)
      if (!held[w].count({side, i}))
        fail_validation(std::string(what) + ": worker " + std::to_string(w) + " lacks state " +
                        std::to_string(i));
  };
  const Side row_side = schedule.kind == GramKind::train ? Side::ket : Side::bra;
  for (const auto& step : schedule.steps) {
    for (const auto& t : step.transfers) {
      check_worker(t.from);
      check_worker(t.to);
      require(t.from, t.states.side, t.states.range, "transfer");
      for (auto i = t.states.range.begin; i < t.states.range.end; ++i) {
        const Key key{t.states.side, i};
        held[t.to].insert(key);
        if (!t.copy && !own[t.from].count(key)) held[t.from].erase(key);
      }
    }
    for (const auto& tile : step.tiles) {
      check_worker(tile.worker);
      require(tile.worker, row_side, tile.rows, "tile rows");
      require(tile.worker, Side::ket, tile.cols, "tile columns");
    }
  }
}

}  // namespace qkm
