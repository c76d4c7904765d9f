#include "qkm/ansatz.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qkm/errors.hpp"

namespace qkm {

void FeatureMapConfig::validate() const {
  if (m < 1) fail_validation("feature map needs m >= 1");
  if (r < 1) fail_validation("feature map needs r >= 1");
  if (d < 1 || d + 1 > m)
    fail_validation("interaction distance d=" + std::to_string(d) + " must lie in [1, m-1] for m=" +
                    std::to_string(m));
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail_validation("gamma must be a positive number");
}

void Circuit::validate() const {
  for (const auto& g : gates) {
    if (g.q0 >= num_qubits || (g.is_two_qubit() && g.q1 >= num_qubits))
      fail_validation("gate " + std::string(to_string(g.kind)) + " references a qubit beyond " +
                      std::to_string(num_qubits));
    if (g.is_two_qubit() && g.q0 == g.q1) fail_validation("two-qubit gate on a single qubit");
  }
}

std::size_t Circuit::two_qubit_count() const {
  return std::size_t(std::count_if(gates.begin(), gates.end(),
                                   [](const Gate& g) { return g.is_two_qubit(); }));
}

std::size_t Circuit::count(GateKind kind) const {
  return std::size_t(
      std::count_if(gates.begin(), gates.end(), [kind](const Gate& g) { return g.kind == kind; }));
}

InteractionGraph interaction_graph(std::size_t m, std::size_t d) {
  if (d < 1 || d + 1 > m)
    fail_validation("interaction distance d=" + std::to_string(d) + " must lie in [1, m-1] for m=" +
                    std::to_string(m));
  InteractionGraph g;
  for (std::size_t k = 1; k <= d; ++k)
    for (std::size_t i = 0; i + k < m; ++i) g.edges.emplace_back(i, i + k);
  return g;
}

double rz_angle(double x, double gamma) { return 2.0 * gamma * x; }

double rxx_angle(double xi, double xj, double gamma) {
  return 2.0 * gamma * gamma * (std::numbers::pi / 2.0) * (1.0 - xi) * (1.0 - xj);
}

Circuit build_circuit(std::span<const double> x, const FeatureMapConfig& cfg,
                      const CircuitOptions& options) {
  cfg.validate();
  if (x.size() != cfg.m)
    fail_validation("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                    std::to_string(cfg.m));
  for (double v : x)
    if (!(v >= 0.0 && v <= 2.0)) fail_validation("feature value outside [0, 2]");

  const InteractionGraph graph = interaction_graph(cfg.m, cfg.d);
  Circuit c{cfg.m, {}};
  c.gates.reserve(cfg.m + cfg.r * (cfg.m + graph.edges.size()));
  for (std::size_t q = 0; q < cfg.m; ++q) c.gates.push_back(Gate::h(q));
  for (std::size_t rep = 0; rep < cfg.r; ++rep) {
    for (std::size_t q = 0; q < cfg.m; ++q) c.gates.push_back(Gate::rz(q, rz_angle(x[q], cfg.gamma)));
    Circuit block{cfg.m, {}};
    for (auto [i, j] : graph.edges) {
      const double angle = rxx_angle(x[i], x[j], cfg.gamma);
      if (options.prune_zero_angles && angle == 0.0) continue;
      block.gates.push_back(Gate::rxx(i, j, angle));
    }
    if (options.schedule_layers) block = schedule_block(block, cfg.d);
    c.gates.insert(c.gates.end(), block.gates.begin(), block.gates.end());
  }
  return options.route ? route_linear(c) : c;
}

Circuit simulation_circuit(std::span<const double> x, const FeatureMapConfig& cfg) {
  return build_circuit(x, cfg, {.schedule_layers = true, .route = true});
}

Circuit route_linear(const Circuit& c) {
  c.validate();
  Circuit out{c.num_qubits, {}};
  for (const auto& g : c.gates) {
    if (!g.is_two_qubit()) {
      out.gates.push_back(g);
      continue;
    }
    const std::size_t lo = std::min(g.q0, g.q1), hi = std::max(g.q0, g.q1);
    if (hi - lo == 1) {
      out.gates.push_back(g);
      continue;
    }
    for (std::size_t p = hi; p > lo + 1; --p) out.gates.push_back(Gate::swap(p - 1, p));
    Gate moved = g;
    if (g.q0 == hi)
      moved.q0 = lo + 1;
    else
      moved.q1 = lo + 1;
    out.gates.push_back(moved);
    for (std::size_t p = lo + 2; p <= hi; ++p) out.gates.push_back(Gate::swap(p - 1, p));
  }
  return out;
}

std::vector<std::vector<Gate>> schedule_layers(const Circuit& block, std::size_t d) {
  // Distance-k edges split into k disjoint paths (i mod k); colouring edge
  // (i, i+k) by the parity of i/k separates consecutive edges of each path.
  // That gives 2 layers per distance, 2d in total.
  std::vector<std::vector<Gate>> layers(2 * d);
  for (const auto& g : block.gates) {
    if (g.kind != GateKind::RXX)
      fail_validation("layer scheduling only accepts commuting RXX gates, got " +
                      std::string(to_string(g.kind)));
    const std::size_t lo = std::min(g.q0, g.q1), hi = std::max(g.q0, g.q1);
    const std::size_t k = hi - lo;
    if (k < 1 || k > d) fail_validation("RXX distance exceeds the interaction distance");
    layers[2 * (k - 1) + (lo / k) % 2].push_back(g);
  }
  for (auto& layer : layers)
    std::stable_sort(layer.begin(), layer.end(), [](const Gate& a, const Gate& b) {
      return std::min(a.q0, a.q1) < std::min(b.q0, b.q1);
    });
  std::erase_if(layers, [](const auto& layer) { return layer.empty(); });
  return layers;
}

Circuit schedule_block(const Circuit& block, std::size_t d) {
  Circuit out{block.num_qubits, {}};
  for (auto& layer : schedule_layers(block, d))
    out.gates.insert(out.gates.end(), layer.begin(), layer.end());
  return out;
}

std::size_t expected_swap_count(std::size_t m, std::size_t d, std::size_t r) {
  std::size_t per_block = 0;
  for (std::size_t k = 2; k <= d && k < m; ++k) per_block += (k - 1) * (m - k);
  return 2 * r * per_block;
}

namespace {

std::string format_angle(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view token, std::size_t line) {
  T value{};
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size())
    throw IoError("circuit line " + std::to_string(line) + ": bad number '" + std::string(token) + "'");
  return value;
}

}  // namespace

std::string to_text(const Circuit& c) {
  std::string out = "# qubits " + std::to_string(c.num_qubits) + "\n";
  for (const auto& g : c.gates) {
    out += to_string(g.kind);
    out += ' ';
    out += std::to_string(g.q0);
    if (g.is_two_qubit()) out += ' ' + std::to_string(g.q1);
    if (g.kind == GateKind::RZ || g.kind == GateKind::RXX) out += ' ' + format_angle(g.angle);
    out += '\n';
  }
  return out;
}

Circuit parse_circuit(std::string_view text) {
  Circuit c;
  bool have_header = false;
  std::size_t max_qubit = 0;
  bool any_gate = false;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0].starts_with('#')) {
      if (tok.size() == 3 && tok[0] == "#" && tok[1] == "qubits") {
        c.num_qubits = parse_number<std::size_t>(tok[2], n);
        have_header = true;
      }
      continue;
    }
    const std::string& op = tok[0];
    Gate g;
    std::size_t expected = 0;
    if (op == "H") {
      g.kind = GateKind::H;
      expected = 2;
    } else if (op == "RZ") {
      g.kind = GateKind::RZ;
      expected = 3;
    } else if (op == "RXX") {
      g.kind = GateKind::RXX;
      expected = 4;
    } else if (op == "SWAP") {
      g.kind = GateKind::SWAP;
      expected = 3;
    } else {
      throw IoError("circuit line " + std::to_string(n) + ": unknown gate '" + op + "'");
    }
    if (tok.size() != expected)
      throw IoError("circuit line " + std::to_string(n) + ": wrong field count for " + op);
    g.q0 = parse_number<std::size_t>(tok[1], n);
    g.q1 = g.is_two_qubit() ? parse_number<std::size_t>(tok[2], n) : g.q0;
    if (g.kind == GateKind::RZ) g.angle = parse_number<double>(tok[2], n);
    if (g.kind == GateKind::RXX) g.angle = parse_number<double>(tok[3], n);
    max_qubit = std::max({max_qubit, g.q0, g.q1});
    any_gate = true;
    c.gates.push_back(g);
  }
  if (!have_header) c.num_qubits = any_gate ? max_qubit + 1 : 0;
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw IoError(std::string("circuit text: ") + e.what());
  }
  return c;
}

}  // namespace qkm
