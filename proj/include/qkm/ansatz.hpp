#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkm/gate.hpp"

namespace qkm {

/// Hyperparameters of the data-encoding circuit
/// U(x) = (exp(-i H_XX(x)) exp(-i H_Z(x)))^r acting on |+>^m.
struct FeatureMapConfig {
  std::size_t m = 2;    // features = qubits
  std::size_t r = 1;    // repetitions of the Z / XX pair
  std::size_t d = 1;    // interaction distance along the chain
  double gamma = 1.0;   // bandwidth

  /// Throws ValidationError unless m >= 1, r >= 1, 1 <= d <= m-1, gamma > 0.
  void validate() const;
  bool operator==(const FeatureMapConfig&) const = default;
};

using Edge = std::pair<std::size_t, std::size_t>;

/// Banded chain: edges (i, i+k) for 1 <= k <= d, grouped by distance then i.
struct InteractionGraph {
  std::vector<Edge> edges;
};

struct Circuit {
  std::size_t num_qubits = 0;
  std::vector<Gate> gates;

  /// Throws ValidationError if any gate touches a qubit >= num_qubits.
  void validate() const;
  std::size_t two_qubit_count() const;
  std::size_t count(GateKind kind) const;
  bool operator==(const Circuit&) const = default;
};

InteractionGraph interaction_graph(std::size_t m, std::size_t d);

/// Rotation angle of RZ on a qubit carrying feature value x.
double rz_angle(double x, double gamma);
/// Rotation angle of RXX on an edge with feature values (xi, xj).
double rxx_angle(double xi, double xj, double gamma);

struct CircuitOptions {
  bool schedule_layers = false;     // reorder each XX block into parallel layers
  bool route = false;               // insert SWAPs for non-adjacent RXX gates
  bool prune_zero_angles = false;   // drop RXX gates whose angle is exactly 0
};

/// H on every qubit, then r times: RZ(2 gamma x_i) on every qubit followed by
/// RXX(2 gamma^2 (pi/2)(1-x_i)(1-x_j)) on every edge of the interaction graph.
/// Features must lie in [0, 2].
Circuit build_circuit(std::span<const double> x, const FeatureMapConfig& cfg,
                      const CircuitOptions& options = {});

/// Circuit ready for MPS simulation: scheduled and routed.
Circuit simulation_circuit(std::span<const double> x, const FeatureMapConfig& cfg);

/// Surround every two-qubit gate on (i, i+k), k > 1, with k-1 SWAPs that
/// bring qubit i+k next to i and the reverse sequence that restores it.
Circuit route_linear(const Circuit& c);

/// Partition a block of commuting RXX gates (all with distance <= d) into at
/// most 2d layers in which no qubit appears twice.
std::vector<std::vector<Gate>> schedule_layers(const Circuit& block, std::size_t d);

/// schedule_layers flattened back into a circuit.
Circuit schedule_block(const Circuit& block, std::size_t d);

/// SWAPs added by route_linear to a full feature-map circuit.
std::size_t expected_swap_count(std::size_t m, std::size_t d, std::size_t r);

/// Line-oriented text form: "H q", "RZ q angle", "RXX q1 q2 angle",
/// "SWAP q1 q2", preceded by a "# qubits m" header line.
std::string to_text(const Circuit& c);
Circuit parse_circuit(std::string_view text);

}  // namespace qkm
