#include <doctest.h>

#include <numbers>
#include <random>
#include <set>

#include "oracle/dense.hpp"
#include "qkm/ansatz.hpp"
#include "qkm/errors.hpp"
#include "qkm/mps.hpp"

using namespace qkm;

namespace {

// Budget 0 keeps every singular value above the noise floor, so amplitudes
// are exact to rounding. The default budget moves amplitudes by up to
// sqrt(discard) and is checked through fidelity instead.
oracle::Vec mps_amplitudes(const Circuit& c, double budget = 0.0) {
  auto s = MpsState::init(c.num_qubits, Basis::zero, budget);
  apply_circuit(s, c.gates);
  const auto t = to_statevector(s);
  return {t.entries().begin(), t.entries().end()};
}

Circuit xx_block(const std::vector<Edge>& edges, std::size_t m, double angle = 0.7) {
  Circuit c{m, {}};
  for (auto [i, j] : edges) c.gates.push_back(Gate::rxx(i, j, angle + 0.1 * double(i + 3 * j)));
  return c;
}

}  // namespace

TEST_CASE("interaction graph") {
  const auto g = interaction_graph(5, 2);
  const std::vector<Edge> want{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}, {1, 3}, {2, 4}};
  CHECK(g.edges == want);
  CHECK(interaction_graph(4, 1).edges.size() == 3);
  CHECK(interaction_graph(6, 5).edges.size() == 15);
  for (std::size_t m = 2; m <= 9; ++m)
    for (std::size_t d = 1; d < m; ++d) {
      std::size_t count = 0;
      for (std::size_t k = 1; k <= d; ++k) count += m - k;
      const auto e = interaction_graph(m, d).edges;
      CHECK(e.size() == count);
      CHECK(std::set<Edge>(e.begin(), e.end()).size() == count);
    }
  CHECK_THROWS_AS(interaction_graph(4, 0), ValidationError);
  CHECK_THROWS_AS(interaction_graph(4, 4), ValidationError);
}

TEST_CASE("feature map config validation") {
  CHECK_NOTHROW((FeatureMapConfig{3, 1, 2, 0.5}.validate()));
  CHECK_THROWS_AS((FeatureMapConfig{0, 1, 1, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((FeatureMapConfig{3, 0, 1, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((FeatureMapConfig{3, 1, 3, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((FeatureMapConfig{3, 1, 1, 0.0}.validate()), ValidationError);
}

TEST_CASE("build_circuit: structure and angles") {
  const std::vector<double> ones{1.0, 1.0};
  const auto c = build_circuit(ones, {2, 1, 1, 1.0});
  REQUIRE(c.count(GateKind::RXX) == 1);
  for (const auto& g : c.gates)
    if (g.kind == GateKind::RXX) CHECK(g.angle == 0.0);

  const std::vector<double> x3{0.2, 1.5, 0.9};
  const auto c3 = build_circuit(x3, {3, 2, 1, 0.5});
  CHECK(c3.gates.size() == 13);
  CHECK(c3.count(GateKind::H) == 3);
  CHECK(c3.count(GateKind::RZ) == 6);
  CHECK(c3.gates[3] == Gate::rz(0, 2 * 0.5 * 0.2));

  const std::vector<double> x{0.0, 2.0};
  const auto e = build_circuit(x, {2, 1, 1, 1.0});
  for (const auto& g : e.gates)
    if (g.kind == GateKind::RXX) CHECK(g.angle == doctest::Approx(-std::numbers::pi).epsilon(1e-15));
  CHECK(oracle::max_diff(oracle::feature_state(x, 1, 1, 1.0), mps_amplitudes(e)) < 1e-10);

  CHECK(rz_angle(0.5, 0.3) == doctest::Approx(0.3));
  CHECK(rxx_angle(0.5, 0.0, 2.0) == doctest::Approx(2 * std::numbers::pi));
}

TEST_CASE("build_circuit: input errors") {
  const std::vector<double> short_row{0.5};
  CHECK_THROWS_AS(build_circuit(short_row, {2, 1, 1, 1.0}), ValidationError);
  const std::vector<double> out{0.5, 2.5};
  CHECK_THROWS_AS(build_circuit(out, {2, 1, 1, 1.0}), ValidationError);
  const std::vector<double> neg{-0.1, 1.0};
  CHECK_THROWS_AS(build_circuit(neg, {2, 1, 1, 1.0}), ValidationError);
  const std::vector<double> nan{std::nan(""), 1.0};
  CHECK_THROWS_AS(build_circuit(nan, {2, 1, 1, 1.0}), ValidationError);
}

TEST_CASE("simulated feature states match the exact exponentials") {
  std::mt19937_64 rng(31);
  for (std::size_t m = 2; m <= 6; ++m)
    for (std::size_t d = 1; d < m && d <= 4; ++d)
      for (std::size_t r : {1, 3})
        for (double gamma : {0.1, 0.5, 1.0}) {
          const auto x = oracle::random_row(m, rng);
          const FeatureMapConfig cfg{m, r, d, gamma};
          const auto want = oracle::feature_state(x, r, d, gamma);
          const auto circuit = simulation_circuit(x, cfg);
          CHECK(oracle::max_diff(want, mps_amplitudes(circuit)) < 1e-10);
          auto lossy = MpsState::init(m, Basis::zero);
          apply_circuit(lossy, circuit.gates);
          const auto t = to_statevector(lossy);
          const oracle::Vec got(t.entries().begin(), t.entries().end());
          // Normalized: rounding drifts the norm by ~1e-14 over a hundred gates.
          const double fidelity = std::norm(oracle::dot(want, got)) / std::real(oracle::dot(got, got));
          CHECK(fidelity >= 1.0 - 2.0 * lossy.accumulated_discard() - 1e-14);
          const auto dense = oracle::run(m, build_circuit(x, cfg).gates);
          CHECK(oracle::max_diff(want, dense) < 1e-10);
        }
}

TEST_CASE("route_linear") {
  SUBCASE("adjacent gate untouched") {
    Circuit c{3, {Gate::rxx(0, 1, 0.4)}};
    CHECK(route_linear(c) == c);
  }
  SUBCASE("distance-3 gate gains 4 swaps") {
    Circuit c{4, {Gate::rxx(0, 3, 0.4)}};
    const auto r = route_linear(c);
    CHECK(r.count(GateKind::SWAP) == 4);
    for (const auto& g : r.gates) CHECK((g.q0 > g.q1 ? g.q0 - g.q1 : g.q1 - g.q0) == 1);
  }
  SUBCASE("full m=6, d=3 circuit keeps its state") {
    std::mt19937_64 rng(32);
    const auto x = oracle::random_row(6, rng);
    const auto c = build_circuit(x, {6, 2, 3, 0.8});
    const auto r = route_linear(c);
    CHECK(oracle::max_diff(oracle::run(6, c.gates), oracle::run(6, r.gates)) < 1e-10);
    CHECK(oracle::max_diff(oracle::run(6, c.gates), mps_amplitudes(r)) < 1e-10);
  }
  SUBCASE("swap count formula") {
    std::mt19937_64 rng(33);
    for (std::size_t m = 2; m <= 8; ++m)
      for (std::size_t d = 1; d < m && d <= 5; ++d)
        for (std::size_t r = 1; r <= 3; ++r) {
          const auto x = oracle::random_row(m, rng);
          const auto c = build_circuit(x, {m, r, d, 1.0}, {.route = true});
          std::size_t want = 0;
          for (std::size_t k = 2; k <= d; ++k) want += (k - 1) * (m - k);
          CHECK(c.count(GateKind::SWAP) == 2 * r * want);
          CHECK(expected_swap_count(m, d, r) == 2 * r * want);
        }
  }
}

TEST_CASE("schedule_layers") {
  auto check_layers = [](const std::vector<std::vector<Gate>>& layers, std::size_t gates) {
    std::size_t total = 0;
    for (const auto& layer : layers) {
      std::set<std::size_t> used;
      for (const auto& g : layer) {
        CHECK(used.insert(g.q0).second);
        CHECK(used.insert(g.q1).second);
      }
      total += layer.size();
    }
    CHECK(total == gates);
  };
  const auto chain = xx_block(interaction_graph(5, 1).edges, 5);
  const auto l1 = schedule_layers(chain, 1);
  CHECK(l1.size() == 2);
  check_layers(l1, 4);

  const auto band = xx_block(interaction_graph(5, 2).edges, 5);
  const auto l2 = schedule_layers(band, 2);
  CHECK(l2.size() <= 4);
  check_layers(l2, 7);
  CHECK(oracle::max_diff(oracle::run(5, band.gates, oracle::plus_state(5)),
                         oracle::run(5, schedule_block(band, 2).gates, oracle::plus_state(5))) < 1e-10);

  for (std::size_t m = 2; m <= 10; ++m)
    for (std::size_t d = 1; d < m; ++d) {
      const auto block = xx_block(interaction_graph(m, d).edges, m);
      const auto layers = schedule_layers(block, d);
      CHECK(layers.size() <= 2 * d);
      check_layers(layers, block.gates.size());
    }

  Circuit mixed{3, {Gate::rxx(0, 1, 0.3), Gate::h(2)}};
  CHECK_THROWS_AS(schedule_layers(mixed, 1), ValidationError);
  Circuit too_far{4, {Gate::rxx(0, 3, 0.3)}};
  CHECK_THROWS_AS(schedule_layers(too_far, 2), ValidationError);
}

TEST_CASE("commuting RXX gates are order independent") {
  std::mt19937_64 rng(34);
  const auto block = xx_block(interaction_graph(6, 3).edges, 6);
  const auto want = oracle::run(6, block.gates, oracle::plus_state(6));
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = block;
    std::shuffle(shuffled.gates.begin(), shuffled.gates.end(), rng);
    CHECK(oracle::max_diff(want, oracle::run(6, shuffled.gates, oracle::plus_state(6))) < 1e-10);
  }
}

TEST_CASE("pruning zero-angle gates is opt-in") {
  const std::vector<double> x{1.0, 0.3, 1.0};
  const FeatureMapConfig cfg{3, 1, 2, 1.0};
  const auto full = build_circuit(x, cfg);
  const auto pruned = build_circuit(x, cfg, {.prune_zero_angles = true});
  CHECK(full.count(GateKind::RXX) == 3);
  CHECK(pruned.count(GateKind::RXX) == 0);
  CHECK(oracle::max_diff(oracle::run(3, full.gates), oracle::run(3, pruned.gates)) < 1e-12);
}

TEST_CASE("circuit text round trip") {
  std::mt19937_64 rng(35);
  const auto x = oracle::random_row(5, rng);
  const auto c = simulation_circuit(x, {5, 2, 3, 0.7});
  const auto text = to_text(c);
  CHECK(text.rfind("# qubits 5\n", 0) == 0);
  CHECK(parse_circuit(text) == c);
  CHECK(parse_circuit("# qubits 2\nH 0\nRZ 1 0.5\nRXX 0 1 -1.25\nSWAP 0 1\n").gates.size() == 4);
  CHECK_THROWS_AS(parse_circuit("# qubits 2\nCNOT 0 1\n"), IoError);
  CHECK_THROWS_AS(parse_circuit("# qubits 2\nRZ 0\n"), IoError);
  CHECK(parse_circuit("H 0\nSWAP 1 2\n").num_qubits == 3);
  CHECK_THROWS_AS(parse_circuit("# qubits 2\nH 5\n"), IoError);
}

TEST_CASE("circuit validation") {
  Circuit c{2, {Gate::h(2)}};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(Circuit{3, {Gate::rxx(0, 1, 0.1), Gate::swap(1, 2), Gate::h(0)}}.two_qubit_count() == 2);
}
