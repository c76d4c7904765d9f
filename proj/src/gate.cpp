#include "qkm/gate.hpp"

#include <cmath>
#include <numbers>

#include "qkm/errors.hpp"

namespace qkm {

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::H:
      return "H";
    case GateKind::RZ:
      return "RZ";
    case GateKind::RXX:
      return "RXX";
    case GateKind::SWAP:
      return "SWAP";
  }
  return "?";
}

DenseTensor gate_matrix(const Gate& gate) {
  using namespace std::complex_literals;
  switch (gate.kind) {
    case GateKind::H: {
      const double s = std::numbers::sqrt2 / 2.0;
      return DenseTensor({2, 2}, {s, s, s, -s});
    }
    case GateKind::RZ: {
      const Complex lo = std::exp(-0.5i * gate.angle);
      return DenseTensor({2, 2}, {lo, 0.0, 0.0, std::conj(lo)});
    }
    case GateKind::RXX: {
      const Complex c = std::cos(gate.angle / 2.0);
      const Complex s = -1.0i * std::sin(gate.angle / 2.0);
      // Rows/cols in basis |00>,|01>,|10>,|11>.
      return DenseTensor({2, 2, 2, 2}, {c, 0, 0, s,  //
                                        0, c, s, 0,  //
                                        0, s, c, 0,  //
                                        s, 0, 0, c});
    }
    case GateKind::SWAP:
      return DenseTensor({2, 2, 2, 2}, {1, 0, 0, 0,  //
                                        0, 0, 1, 0,  //
                                        0, 1, 0, 0,  //
                                        0, 0, 0, 1});
  }
  fail_validation("unknown gate kind");
}

void check_unitary(const DenseTensor& m, double tol) {
  const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(double(m.size()))));
  if (n * n != m.size()) fail_validation("gate matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Complex dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += std::conj(m[k * n + i]) * m[k * n + j];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > tol) fail_validation("gate matrix is not unitary");
    }
}

}  // namespace qkm
