#include "qkm/kernel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qkm/errors.hpp"

namespace qkm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Entry {
  std::size_t i;
  std::size_t j;
  double value;
};

// Entries of one tile. Row states index `rows`, column states `cols`.
template <typename RowLookup, typename ColLookup>
void compute_tile(const TileTask& tile, RowLookup&& row_state, ColLookup&& col_state,
                  std::vector<Entry>& out, std::size_t& inner_products) {
  for (std::size_t i = tile.rows.begin; i < tile.rows.end; ++i) {
    const MpsState& bra = row_state(i);
    for (std::size_t j = tile.cols.begin; j < tile.cols.end; ++j) {
      if (tile.triangular) {
        if (j < i) continue;
        if (j == i) {
          out.push_back({i, j, 1.0});
          continue;
        }
      }
      out.push_back({i, j, std::norm(inner_product(bra, col_state(j)))});
      ++inner_products;
    }
  }
}

GramMatrix merge_entries(std::size_t rows, std::size_t cols, GramKind kind,
                         std::span<const std::vector<Entry>> parts) {
  GramMatrix gram(rows, cols, kind);
  std::vector<unsigned> seen(rows * cols, 0);
  for (const auto& part : parts)
    for (const auto& e : part) {
      gram(e.i, e.j) = e.value;
      ++seen[e.i * cols + e.j];
      if (kind == GramKind::train && e.i != e.j) {
        gram(e.j, e.i) = e.value;
        ++seen[e.j * cols + e.i];
      }
    }
  for (auto c : seen)
    if (c != 1) throw Error("Gram merge: schedule did not cover every entry exactly once");
  return gram;
}

// Raised in workers blocked on a message when another worker failed.
struct RunAborted : Error {
  RunAborted() : Error("run aborted by a failing worker") {}
};

// In-process message passing between workers, keyed by (step, transfer).
class PostOffice {
 public:
  using Key = std::pair<std::size_t, std::size_t>;

  explicit PostOffice(std::size_t workers) : boxes_(workers) {}

  void post(std::size_t to, Key key, std::vector<std::uint8_t> bytes) {
    {
      std::lock_guard lock(mutex_);
      boxes_[to].emplace(key, std::move(bytes));
    }
    cv_.notify_all();
  }

  std::vector<std::uint8_t> collect(std::size_t me, Key key) {
    std::unique_lock lock(mutex_);
    auto& box = boxes_[me];
    cv_.wait(lock, [&] { return aborted_ || box.count(key); });
    if (aborted_) throw RunAborted();
    auto node = box.extract(key);
    return std::move(node.mapped());
  }

  void abort() {
    {
      std::lock_guard lock(mutex_);
      aborted_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::map<Key, std::vector<std::uint8_t>>> boxes_;
  bool aborted_ = false;
};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(std::uint8_t(v >> (8 * b)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + 8 > bytes.size()) throw IoError("truncated state message");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= std::uint64_t(bytes[pos + b]) << (8 * b);
  pos += 8;
  return v;
}

struct WorkerTotals {
  KernelCounters counters;
  double simulation = 0.0;
  double inner_products = 0.0;
  double communication = 0.0;
  std::vector<Entry> entries;
};

struct RunContext {
  std::span<const FeatureRow> bra_rows;
  std::span<const FeatureRow> ket_rows;
  const FeatureMapConfig& cfg;
  const TileSchedule& schedule;
  double budget;
  PostOffice& office;
};

void run_worker(std::size_t me, const RunContext& ctx, WorkerTotals& totals) {
  using Key = std::pair<Side, std::size_t>;
  std::map<Key, MpsState> store;
  std::set<Key> own;

  auto start = Clock::now();
  for (const auto& sim : ctx.schedule.simulations) {
    if (sim.worker != me) continue;
    const auto rows = sim.states.side == Side::bra ? ctx.bra_rows : ctx.ket_rows;
    for (auto i = sim.states.range.begin; i < sim.states.range.end; ++i) {
      const Key key{sim.states.side, i};
      store.insert_or_assign(key, simulate_row(rows[i], ctx.cfg, ctx.budget));
      own.insert(key);
      ++totals.counters.simulations;
    }
  }
  totals.simulation += seconds_since(start);

  const Side row_side = ctx.schedule.kind == GramKind::train ? Side::ket : Side::bra;
  auto lookup = [&](Side side) {
    return [&store, side](std::size_t i) -> const MpsState& {
      auto it = store.find({side, i});
      if (it == store.end()) throw Error("worker is missing state " + std::to_string(i));
      return it->second;
    };
  };

  for (std::size_t s = 0; s < ctx.schedule.steps.size(); ++s) {
    const ScheduleStep& step = ctx.schedule.steps[s];
    start = Clock::now();
    for (std::size_t t = 0; t < step.transfers.size(); ++t) {
      const Transfer& tr = step.transfers[t];
      if (tr.from == me) {
        std::vector<std::uint8_t> msg;
        put_u64(msg, tr.states.range.size());
        for (auto i = tr.states.range.begin; i < tr.states.range.end; ++i) {
          const Key key{tr.states.side, i};
          auto it = store.find(key);
          if (it == store.end()) throw Error("worker cannot send state it does not hold");
          const auto bytes = it->second.serialize();
          put_u64(msg, i);
          put_u64(msg, bytes.size());
          msg.insert(msg.end(), bytes.begin(), bytes.end());
          if (!tr.copy && !own.count(key)) store.erase(it);
        }
        totals.counters.bytes_sent += msg.size();
        ++totals.counters.messages;
        ctx.office.post(tr.to, {s, t}, std::move(msg));
      } else if (tr.to == me) {
        const auto msg = ctx.office.collect(me, {s, t});
        std::size_t pos = 0;
        const std::uint64_t count = get_u64(msg, pos);
        for (std::uint64_t c = 0; c < count; ++c) {
          const std::size_t index = get_u64(msg, pos);
          const std::size_t len = get_u64(msg, pos);
          if (pos + len > msg.size()) throw IoError("truncated state message");
          store.insert_or_assign(Key{tr.states.side, index},
                                 MpsState::deserialize(std::span(msg).subspan(pos, len)));
          pos += len;
        }
      }
    }
    totals.communication += seconds_since(start);

    start = Clock::now();
    for (const auto& tile : step.tiles)
      if (tile.worker == me)
        compute_tile(tile, lookup(row_side), lookup(Side::ket), totals.entries,
                     totals.counters.inner_products);
    totals.inner_products += seconds_since(start);
  }
}

}  // namespace

double max_abs_difference(const GramMatrix& a, const GramMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) fail_validation("Gram matrices differ in shape");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.entries.size(); ++k)
    worst = std::max(worst, std::abs(a.entries[k] - b.entries[k]));
  return worst;
}

void validate_rows(std::span<const FeatureRow> rows, std::size_t m) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m)
      fail_validation("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                      " features, expected " + std::to_string(m));
    for (double v : rows[r]) {
      if (!std::isfinite(v)) fail_validation("row " + std::to_string(r) + " has a non-finite feature");
      if (v < 0.0 || v > 2.0) fail_validation("row " + std::to_string(r) + " has a feature outside [0, 2]");
    }
  }
}

MpsState simulate_row(std::span<const double> x, const FeatureMapConfig& cfg, double trunc_budget) {
  const Circuit circuit = simulation_circuit(x, cfg);
  MpsState state = MpsState::init(cfg.m, Basis::zero, trunc_budget);
  apply_circuit(state, circuit.gates);
  return state;
}

std::vector<MpsState> simulate_dataset(std::span<const FeatureRow> rows, const FeatureMapConfig& cfg,
                                       double trunc_budget) {
  cfg.validate();
  validate_rows(rows, cfg.m);
  std::vector<MpsState> states;
  states.reserve(rows.size());
  for (const auto& row : rows) states.push_back(simulate_row(row, cfg, trunc_budget));
  return states;
}

GramMatrix compute_gram(std::span<const MpsState> bras, std::span<const MpsState> kets, GramKind kind,
                        KernelCounters* counters) {
  if (kind == GramKind::train && (bras.data() != kets.data() || bras.size() != kets.size()))
    fail_validation("training Gram matrix needs the same state list on both sides");
  if (!bras.empty() && !kets.empty() && bras.front().num_qubits() != kets.front().num_qubits())
    fail_validation("bra and ket states have different qubit counts");
  for (const auto& s : bras)
    if (s.num_qubits() != bras.front().num_qubits()) fail_validation("mixed qubit counts among bras");
  for (const auto& s : kets)
    if (s.num_qubits() != kets.front().num_qubits()) fail_validation("mixed qubit counts among kets");

  TileTask whole{0, {0, bras.size()}, {0, kets.size()}, kind == GramKind::train};
  std::vector<std::vector<Entry>> parts(1);
  std::size_t products = 0;
  if (!bras.empty() && !kets.empty())
    compute_tile(
        whole, [&](std::size_t i) -> const MpsState& { return bras[i]; },
        [&](std::size_t j) -> const MpsState& { return kets[j]; }, parts[0], products);
  if (counters) counters->inner_products += products;
  return merge_entries(bras.size(), kets.size(), kind, parts);
}

DistributedResult run_distributed(std::span<const FeatureRow> bra_rows,
                                  std::span<const FeatureRow> ket_rows, const FeatureMapConfig& cfg,
                                  const TileSchedule& schedule, double trunc_budget) {
  cfg.validate();
  if (schedule.kind == GramKind::test) {
    if (bra_rows.size() != schedule.n_bras) fail_validation("bra row count does not match the schedule");
    validate_rows(bra_rows, cfg.m);
  }
  if (ket_rows.size() != schedule.n_kets) fail_validation("ket row count does not match the schedule");
  validate_rows(ket_rows, cfg.m);

  const auto wall_start = Clock::now();
  PostOffice office(schedule.workers);
  RunContext ctx{bra_rows, ket_rows, cfg, schedule, trunc_budget, office};
  std::vector<WorkerTotals> totals(schedule.workers);
  std::vector<std::exception_ptr> failures(schedule.workers);

  auto body = [&](std::size_t w) {
    try {
      run_worker(w, ctx, totals[w]);
    } catch (...) {
      failures[w] = std::current_exception();
      office.abort();
    }
  };
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 1; w < schedule.workers; ++w) threads.emplace_back(body, w);
    body(0);
  }
  // Report the root cause rather than the aborts it triggered elsewhere.
  for (auto& f : failures) {
    if (!f) continue;
    try {
      std::rethrow_exception(f);
    } catch (const RunAborted&) {
    }
  }

  DistributedResult result;
  const auto merge_start = Clock::now();
  std::vector<std::vector<Entry>> parts;
  for (auto& t : totals) parts.push_back(std::move(t.entries));
  result.gram = merge_entries(schedule.n_bras, schedule.n_kets, schedule.kind, parts);
  result.timing["merge"] = seconds_since(merge_start);

  double sim = 0, ip = 0, comm = 0;
  for (const auto& t : totals) {
    result.counters.simulations += t.counters.simulations;
    result.counters.inner_products += t.counters.inner_products;
    result.counters.messages += t.counters.messages;
    result.counters.bytes_sent += t.counters.bytes_sent;
    sim += t.simulation;
    ip += t.inner_products;
    comm += t.communication;
  }
  result.timing["simulation"] = sim;
  result.timing["inner_products"] = ip;
  result.timing["communication"] = comm;
  result.timing["wall"] = seconds_since(wall_start);
  return result;
}

void write_gram_csv(const GramMatrix& gram, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t i = 0; i < gram.rows; ++i) {
    for (std::size_t j = 0; j < gram.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", gram(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

GramMatrix read_gram_csv(const std::filesystem::path& path, GramKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  GramMatrix gram;
  gram.kind = kind;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw IoError("bad number in " + path.string() + ": '" + cell + "'");
      gram.entries.push_back(v);
      ++count;
    }
    if (gram.rows == 0) gram.cols = count;
    if (count != gram.cols) throw IoError("ragged rows in " + path.string());
    ++gram.rows;
  }
  if (kind == GramKind::train && gram.rows != gram.cols)
    throw IoError("training Gram matrix in " + path.string() + " is not square");
  return gram;
}

void write_gram_sidecar(const GramMatrix& gram, const GramRunInfo& info,
                        const std::filesystem::path& path) {
  nlohmann::json j;
  j["kind"] = to_string(gram.kind);
  j["rows"] = gram.rows;
  j["cols"] = gram.cols;
  j["config"] = {{"m", info.cfg.m}, {"r", info.cfg.r}, {"d", info.cfg.d}, {"gamma", info.cfg.gamma}};
  j["strategy"] = to_string(info.strategy);
  j["workers"] = info.workers;
  j["counters"] = {{"simulations", info.counters.simulations},
                   {"inner_products", info.counters.inner_products},
                   {"messages", info.counters.messages},
                   {"bytes_sent", info.counters.bytes_sent}};
  j["timing_seconds"] = info.timing;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace qkm
