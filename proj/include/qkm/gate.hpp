#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "qkm/tensor.hpp"

namespace qkm {

enum class GateKind { H, RZ, RXX, SWAP };

std::string_view to_string(GateKind kind);

/// A gate of the feature-map circuit.
///
/// Rotations follow RZ(t) = exp(-i t Z / 2) and RXX(t) = exp(-i t X(x)X / 2).
struct Gate {
  GateKind kind = GateKind::H;
  std::size_t q0 = 0;
  std::size_t q1 = 0;  // second qubit; unused for one-qubit kinds
  double angle = 0.0;  // unused for H and SWAP

  static Gate h(std::size_t q) { return {GateKind::H, q, q, 0.0}; }
  static Gate rz(std::size_t q, double angle) { return {GateKind::RZ, q, q, angle}; }
  static Gate rxx(std::size_t a, std::size_t b, double angle) { return {GateKind::RXX, a, b, angle}; }
  static Gate swap(std::size_t a, std::size_t b) { return {GateKind::SWAP, a, b, 0.0}; }

  std::size_t arity() const noexcept { return is_two_qubit() ? 2 : 1; }
  bool is_two_qubit() const noexcept { return kind == GateKind::RXX || kind == GateKind::SWAP; }

  bool operator==(const Gate&) const = default;
};

/// Unitary of a gate: shape {2,2} (out, in) for one-qubit gates and
/// {2,2,2,2} (out0, out1, in0, in1) for two-qubit gates, where index 0
/// refers to `q0`.
DenseTensor gate_matrix(const Gate& gate);

/// Throws ValidationError unless `m` (square, viewed as a matrix) is unitary
/// to within `tol` in every entry of U^dagger U - I.
void check_unitary(const DenseTensor& m, double tol = 1e-10);

}  // namespace qkm
