#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkm/gate.hpp"
#include "qkm/tensor.hpp"

namespace qkm {

/// Per-gate truncation budget: squared singular-value mass that may be dropped.
inline constexpr double kDefaultTruncBudget = 1e-16;

/// Largest qubit count accepted by to_statevector.
inline constexpr std::size_t kMaxStatevectorQubits = 20;

enum class Basis { zero, plus };

/// Which tensor of a two-qubit split receives the singular values.
enum class Absorb { left, right };

struct SimStats {
  std::size_t max_chi = 1;      // largest virtual bond reached over the state's life
  std::size_t current_chi = 1;  // largest virtual bond right now
  std::size_t entry_count = 0;
  std::size_t memory_bytes = 0;  // entry_count * sizeof(Complex)
  std::size_t gate_count_1q = 0;
  std::size_t gate_count_2q = 0;
  std::map<std::string, double> wall_time_per_phase;
};

/// Matrix product state of an m-qubit register.
///
/// Site i holds a tensor with bonds (left virtual, physical = 2, right
/// virtual); the outer virtual bonds have dimension 1. Two-qubit gates are
/// only accepted on neighbouring sites. Every two-qubit gate first moves the
/// orthogonality centre onto the gate so the SVD truncation that follows is
/// optimal, and the discarded weight is added to accumulated_discard().
class MpsState {
 public:
  /// Product state |0...0> or |+...+> on `num_qubits` qubits.
  static MpsState init(std::size_t num_qubits, Basis basis,
                       double trunc_budget = kDefaultTruncBudget);

  /// Build from explicit site tensors (validated); no canonical form assumed.
  static MpsState from_sites(std::vector<DenseTensor> sites,
                             double trunc_budget = kDefaultTruncBudget);

  std::size_t num_qubits() const noexcept { return sites_.size(); }
  std::span<const DenseTensor> sites() const noexcept { return sites_; }
  const DenseTensor& site(std::size_t i) const { return sites_.at(i); }

  double trunc_budget() const noexcept { return trunc_budget_; }
  double accumulated_discard() const noexcept { return accumulated_discard_; }
  std::optional<std::size_t> ortho_center() const noexcept { return center_; }

  /// Dimensions of the m-1 internal virtual bonds.
  std::vector<std::size_t> bond_dims() const;

  void apply(const Gate& gate, Absorb absorb = Absorb::right);

  /// Apply a 2x2 unitary (shape {2,2}, out x in) to qubit q.
  void apply_one_qubit(std::size_t q, const DenseTensor& unitary);

  /// Apply a 4x4 unitary (shape {2,2,2,2}: out0, out1, in0, in1) to the
  /// neighbouring qubits (qa, qb). Index 0 of the unitary refers to qa.
  void apply_two_qubit(std::size_t qa, std::size_t qb, const DenseTensor& unitary,
                       Absorb absorb = Absorb::right);

  /// Gauge transformation making every site left of `center` a left
  /// isometry and every site right of it a right isometry.
  void canonicalize(std::size_t center);

  SimStats stats() const;

  /// Little-endian binary encoding for moving states between workers.
  std::vector<std::uint8_t> serialize() const;
  static MpsState deserialize(std::span<const std::uint8_t> bytes);

 private:
  MpsState() = default;

  void move_center_right(std::size_t i);  // isometrize site i, push gauge into i+1
  void move_center_left(std::size_t i);   // isometrize site i, push gauge into i-1
  void record_chi();

  std::vector<DenseTensor> sites_;
  double trunc_budget_ = kDefaultTruncBudget;
  double accumulated_discard_ = 0.0;
  std::optional<std::size_t> center_;
  std::size_t peak_chi_ = 1;
  std::size_t gates_1q_ = 0;
  std::size_t gates_2q_ = 0;
  double time_canonicalize_ = 0.0;
  double time_contract_ = 0.0;
  double time_svd_ = 0.0;
};

/// Apply gates in order. Consecutive two-qubit gates on the same pair are
/// multiplied and applied as one split. The singular values of each split are
/// absorbed towards the next two-qubit gate to shorten gauge moves.
/// `after_gate`, when set, is called with the state after every applied
/// one-qubit gate or two-qubit split.
void apply_circuit(MpsState& state, std::span<const Gate> gates,
                   const std::function<void(const MpsState&)>& after_gate = {});

/// <bra, ket>, conjugating the bra and contracting site by site from the
/// left in O(m chi^3).
Complex inner_product(const MpsState& bra, const MpsState& ket);

/// Dense amplitudes, qubit 0 most significant. Requires m <= 20.
DenseTensor to_statevector(const MpsState& state);

}  // namespace qkm
