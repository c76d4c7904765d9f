#include "qkm/mps.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>

#include "qkm/errors.hpp"

namespace qkm {

namespace {

using RowMajorMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::Map<const RowMajorMatrix> as_matrix(const DenseTensor& t, std::size_t rows,
                                           std::size_t cols) {
  return {t.entries().data(), Eigen::Index(rows), Eigen::Index(cols)};
}

DenseTensor from_matrix(const RowMajorMatrix& m, Shape shape) {
  DenseTensor t(std::move(shape));
  Eigen::Map<RowMajorMatrix>(t.entries().data(), m.rows(), m.cols()) = m;
  return t;
}

void check_site(const DenseTensor& t, std::size_t i) {
  if (t.rank() != 3 || t.dim(1) != 2)
    fail_validation("site " + std::to_string(i) + " must have shape (chi, 2, chi)");
}

// Serialization helpers: fixed-width little-endian fields.
constexpr char kMagic[8] = {'Q', 'K', 'M', 'P', 'S', '0', '0', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(std::uint8_t(v >> (8 * b)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) throw IoError("truncated MPS encoding");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t(bytes_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("truncated MPS encoding");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

MpsState MpsState::init(std::size_t num_qubits, Basis basis, double trunc_budget) {
  if (num_qubits == 0) fail_validation("MPS needs at least one qubit");
  if (!(trunc_budget >= 0.0)) fail_validation("truncation budget must be >= 0");
  MpsState s;
  s.trunc_budget_ = trunc_budget;
  const double a = basis == Basis::plus ? std::numbers::sqrt2 / 2.0 : 1.0;
  const double b = basis == Basis::plus ? std::numbers::sqrt2 / 2.0 : 0.0;
  s.sites_.assign(num_qubits, DenseTensor({1, 2, 1}, {a, b}));
  s.center_ = 0;
  return s;
}

MpsState MpsState::from_sites(std::vector<DenseTensor> sites, double trunc_budget) {
  if (sites.empty()) fail_validation("MPS needs at least one qubit");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    check_site(sites[i], i);
    if (i + 1 < sites.size() && sites[i].dim(2) != sites[i + 1].dim(0))
      fail_validation("virtual bond mismatch between sites " + std::to_string(i) + " and " +
                      std::to_string(i + 1));
  }
  if (sites.front().dim(0) != 1 || sites.back().dim(2) != 1)
    fail_validation("boundary virtual bonds must have dimension 1");
  MpsState s;
  s.sites_ = std::move(sites);
  s.trunc_budget_ = trunc_budget;
  s.record_chi();
  return s;
}

std::vector<std::size_t> MpsState::bond_dims() const {
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) dims.push_back(sites_[i].dim(2));
  return dims;
}

void MpsState::record_chi() {
  for (const auto& t : sites_) peak_chi_ = std::max({peak_chi_, t.dim(0), t.dim(2)});
}

void MpsState::move_center_right(std::size_t i) {
  const DenseTensor& site = sites_[i];
  const std::size_t chi_l = site.dim(0), chi_r = site.dim(2);
  const std::size_t rows = chi_l * 2;
  const std::size_t k = std::min(rows, chi_r);

  Eigen::MatrixXcd m = as_matrix(site, rows, chi_r);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  RowMajorMatrix q = qr.householderQ() * Eigen::MatrixXcd::Identity(Eigen::Index(rows), Eigen::Index(k));
  RowMajorMatrix r = qr.matrixQR().topRows(Eigen::Index(k)).triangularView<Eigen::Upper>();

  DenseTensor& next = sites_[i + 1];
  const std::size_t next_r = next.dim(2);
  RowMajorMatrix merged = r * as_matrix(next, chi_r, 2 * next_r);
  sites_[i] = from_matrix(q, {chi_l, 2, k});
  next = from_matrix(merged, {k, 2, next_r});
}

void MpsState::move_center_left(std::size_t i) {
  const DenseTensor& site = sites_[i];
  const std::size_t chi_l = site.dim(0), chi_r = site.dim(2);
  const std::size_t cols = 2 * chi_r;
  const std::size_t k = std::min(cols, chi_l);

  // site = R^dagger Q^dagger from the QR of its adjoint.
  Eigen::MatrixXcd m = as_matrix(site, chi_l, cols).adjoint();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(Eigen::Index(cols), Eigen::Index(k));
  Eigen::MatrixXcd r = qr.matrixQR().topRows(Eigen::Index(k)).triangularView<Eigen::Upper>();

  DenseTensor& prev = sites_[i - 1];
  const std::size_t prev_l = prev.dim(0);
  RowMajorMatrix merged = as_matrix(prev, prev_l * 2, chi_l) * r.adjoint();
  sites_[i] = from_matrix(q.adjoint(), {k, 2, chi_r});
  prev = from_matrix(merged, {prev_l, 2, k});
}

void MpsState::canonicalize(std::size_t center) {
  if (center >= sites_.size())
    fail_validation("canonicalization centre " + std::to_string(center) + " out of range");
  const auto start = Clock::now();
  if (!center_) {
    for (std::size_t i = 0; i < center; ++i) move_center_right(i);
    for (std::size_t i = sites_.size() - 1; i > center; --i) move_center_left(i);
  } else {
    for (std::size_t i = *center_; i < center; ++i) move_center_right(i);
    for (std::size_t i = *center_; i > center; --i) move_center_left(i);
  }
  center_ = center;
  time_canonicalize_ += seconds_since(start);
}

void MpsState::apply(const Gate& gate, Absorb absorb) {
  const DenseTensor u = gate_matrix(gate);
  if (gate.is_two_qubit())
    apply_two_qubit(gate.q0, gate.q1, u, absorb);
  else
    apply_one_qubit(gate.q0, u);
}

void MpsState::apply_one_qubit(std::size_t q, const DenseTensor& unitary) {
  if (q >= sites_.size()) fail_validation("qubit index " + std::to_string(q) + " out of range");
  if (unitary.shape() != Shape{2, 2}) fail_validation("one-qubit gate must have shape (2,2)");
  check_unitary(unitary);
  const auto start = Clock::now();
  // result[a, s', b] = sum_s U[s', s] site[a, s, b]
  sites_[q] = permute(contract(unitary, sites_[q], {{1, 1}}), std::vector<std::size_t>{1, 0, 2});
  ++gates_1q_;
  time_contract_ += seconds_since(start);
}

void MpsState::apply_two_qubit(std::size_t qa, std::size_t qb, const DenseTensor& unitary,
                               Absorb absorb) {
  const std::size_t m = sites_.size();
  if (qa >= m || qb >= m) fail_validation("qubit index out of range");
  if (unitary.shape() != Shape{2, 2, 2, 2}) fail_validation("two-qubit gate must have shape (2,2,2,2)");
  if (qa + 1 != qb && qb + 1 != qa)
    fail_validation("two-qubit gate on non-adjacent sites " + std::to_string(qa) + "," +
                    std::to_string(qb));
  check_unitary(unitary);

  const std::size_t left = std::min(qa, qb);
  // Orient the gate so index 0 refers to the left site.
  const DenseTensor u =
      qa < qb ? unitary : permute(unitary, std::vector<std::size_t>{1, 0, 3, 2});

  if (!center_ || (*center_ != left && *center_ != left + 1))
    canonicalize(center_ && *center_ > left ? left + 1 : left);

  auto start = Clock::now();
  const DenseTensor& a = sites_[left];
  const DenseTensor& b = sites_[left + 1];
  // theta[a, s0, s1, b], then gate: [s0', s1', a, b] -> permute to [a, s0', s1', b]
  const DenseTensor theta = contract(a, b, {{2, 0}});
  const DenseTensor updated =
      permute(contract(u, theta, {{2, 1}, {3, 2}}), std::vector<std::size_t>{2, 0, 1, 3});
  time_contract_ += seconds_since(start);

  start = Clock::now();
  SvdResult split = svd_truncated(updated, {0, 1}, trunc_budget_);
  time_svd_ += seconds_since(start);

  // Keep the norm of the kept spectrum equal to the full one.
  double kept = 0.0;
  for (double s : split.singular_values) kept += s * s;
  const double scale = std::sqrt((kept + split.discarded_weight) / kept);
  const std::size_t r = split.singular_values.size();

  DenseTensor& lhs = split.left;    // [chiL, 2, r]
  DenseTensor& rhs = split.right;   // [r, 2, chiR]
  if (absorb == Absorb::right) {
    const std::size_t stride = rhs.size() / r;
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t j = 0; j < stride; ++j) rhs[k * stride + j] *= split.singular_values[k] * scale;
    center_ = left + 1;
  } else {
    for (std::size_t row = 0; row < lhs.size() / r; ++row)
      for (std::size_t k = 0; k < r; ++k) lhs[row * r + k] *= split.singular_values[k] * scale;
    center_ = left;
  }
  sites_[left] = std::move(lhs);
  sites_[left + 1] = std::move(rhs);
  accumulated_discard_ += split.discarded_weight;
  peak_chi_ = std::max(peak_chi_, r);
  ++gates_2q_;
}

SimStats MpsState::stats() const {
  SimStats s;
  s.max_chi = peak_chi_;
  for (const auto& t : sites_) {
    s.current_chi = std::max({s.current_chi, t.dim(0), t.dim(2)});
    s.entry_count += t.size();
  }
  s.max_chi = std::max(s.max_chi, s.current_chi);
  s.memory_bytes = s.entry_count * sizeof(Complex);
  s.gate_count_1q = gates_1q_;
  s.gate_count_2q = gates_2q_;
  s.wall_time_per_phase = {{"canonicalize", time_canonicalize_},
                           {"contract", time_contract_},
                           {"svd", time_svd_}};
  return s;
}

// Layout: magic[8] | m | budget | accumulated_discard | centre (+1, 0 = none)
//         | peak_chi | gates_1q | gates_2q | per site: chiL, 2, chiR, (re, im)*
// All integers u64 and reals IEEE-754 binary64, little-endian.
std::vector<std::uint8_t> MpsState::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u64(out, sites_.size());
  put_f64(out, trunc_budget_);
  put_f64(out, accumulated_discard_);
  put_u64(out, center_ ? *center_ + 1 : 0);
  put_u64(out, peak_chi_);
  put_u64(out, gates_1q_);
  put_u64(out, gates_2q_);
  for (const auto& t : sites_) {
    for (auto d : t.shape()) put_u64(out, d);
    for (auto z : t.entries()) {
      put_f64(out, z.real());
      put_f64(out, z.imag());
    }
  }
  return out;
}

MpsState MpsState::deserialize(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(sizeof(kMagic));
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic)))
    throw IoError("not an MPS encoding (bad magic)");
  const std::uint64_t m = in.u64();
  if (m == 0) throw IoError("MPS encoding with zero qubits");
  MpsState s;
  s.trunc_budget_ = in.f64();
  s.accumulated_discard_ = in.f64();
  const std::uint64_t centre = in.u64();
  if (centre) s.center_ = centre - 1;
  s.peak_chi_ = in.u64();
  s.gates_1q_ = in.u64();
  s.gates_2q_ = in.u64();
  s.sites_.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    Shape shape{in.u64(), in.u64(), in.u64()};
    if (shape[1] != 2 || shape[0] == 0 || shape[2] == 0) throw IoError("bad site shape in MPS encoding");
    std::vector<Complex> entries(shape_volume(shape));
    for (auto& z : entries) {
      const double re = in.f64();
      z = Complex(re, in.f64());
    }
    s.sites_.emplace_back(std::move(shape), std::move(entries));
  }
  if (!in.done()) throw IoError("trailing bytes in MPS encoding");
  for (std::size_t i = 0; i + 1 < s.sites_.size(); ++i)
    if (s.sites_[i].dim(2) != s.sites_[i + 1].dim(0)) throw IoError("bond mismatch in MPS encoding");
  if (s.center_ && *s.center_ >= m) throw IoError("centre out of range in MPS encoding");
  return s;
}

namespace {

// Two-qubit unitary with index 0 on the lower qubit.
DenseTensor oriented_matrix(const Gate& gate) {
  const DenseTensor u = gate_matrix(gate);
  return gate.q0 < gate.q1 ? u : permute(u, std::vector<std::size_t>{1, 0, 3, 2});
}

// later * earlier, both viewed as 4x4 (out0 out1 | in0 in1) matrices.
DenseTensor compose(const DenseTensor& later, const DenseTensor& earlier) {
  DenseTensor out({2, 2, 2, 2});
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      Complex acc = 0.0;
      for (std::size_t k = 0; k < 4; ++k) acc += later[r * 4 + k] * earlier[k * 4 + c];
      out[r * 4 + c] = acc;
    }
  return out;
}

bool same_pair(const Gate& a, const Gate& b) {
  return a.is_two_qubit() && b.is_two_qubit() && std::min(a.q0, a.q1) == std::min(b.q0, b.q1) &&
         std::max(a.q0, a.q1) == std::max(b.q0, b.q1);
}

}  // namespace

void apply_circuit(MpsState& state, std::span<const Gate> gates,
                   const std::function<void(const MpsState&)>& after_gate) {
  // Index of the next two-qubit gate at or after each position.
  std::vector<std::size_t> next_two(gates.size() + 1, gates.size());
  for (std::size_t g = gates.size(); g-- > 0;)
    next_two[g] = gates[g].is_two_qubit() ? g : next_two[g + 1];

  for (std::size_t g = 0; g < gates.size(); ++g) {
    const Gate& gate = gates[g];
    if (!gate.is_two_qubit()) {
      state.apply(gate);
      if (after_gate) after_gate(state);
      continue;
    }
    // A run of two-qubit gates on one pair is applied as a single split.
    DenseTensor u = oriented_matrix(gate);
    std::size_t last = g;
    while (last + 1 < gates.size() && same_pair(gate, gates[last + 1])) u = compose(oriented_matrix(gates[++last]), u);

    const std::size_t here = std::min(gate.q0, gate.q1);
    Absorb absorb = Absorb::right;
    if (const std::size_t after = next_two[last + 1]; after < gates.size())
      absorb = std::min(gates[after].q0, gates[after].q1) > here ? Absorb::right : Absorb::left;
    if (last == g) state.apply(gate, absorb);
    else state.apply_two_qubit(here, std::max(gate.q0, gate.q1), u, absorb);
    if (after_gate) after_gate(state);
    g = last;
  }
}

Complex inner_product(const MpsState& bra, const MpsState& ket) {
  if (bra.num_qubits() != ket.num_qubits())
    fail_validation("inner product of states with " + std::to_string(bra.num_qubits()) + " and " +
                    std::to_string(ket.num_qubits()) + " qubits");
  using Strided = Eigen::Map<const RowMajorMatrix, 0, Eigen::OuterStride<>>;
  Eigen::MatrixXcd env = Eigen::MatrixXcd::Ones(1, 1);
  for (std::size_t i = 0; i < bra.num_qubits(); ++i) {
    const DenseTensor& a = bra.site(i);
    const DenseTensor& b = ket.site(i);
    const auto al = Eigen::Index(a.dim(0)), ar = Eigen::Index(a.dim(2));
    const auto bl = Eigen::Index(b.dim(0)), br = Eigen::Index(b.dim(2));
    Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(ar, br);
    for (Eigen::Index s = 0; s < 2; ++s) {
      Strided as(a.entries().data() + s * ar, al, ar, Eigen::OuterStride<>(2 * ar));
      Strided bs(b.entries().data() + s * br, bl, br, Eigen::OuterStride<>(2 * br));
      const Eigen::MatrixXcd half = env * bs;
      next.noalias() += as.adjoint() * half;
    }
    env = std::move(next);
  }
  return env(0, 0);
}

DenseTensor to_statevector(const MpsState& state) {
  const std::size_t m = state.num_qubits();
  if (m > kMaxStatevectorQubits)
    fail_validation("statevector of " + std::to_string(m) + " qubits exceeds the limit of " +
                    std::to_string(kMaxStatevectorQubits));
  RowMajorMatrix acc = RowMajorMatrix::Ones(1, 1);  // (2^i) x chi
  for (std::size_t i = 0; i < m; ++i) {
    const DenseTensor& t = state.site(i);
    const std::size_t chi_l = t.dim(0), chi_r = t.dim(2);
    RowMajorMatrix prod = acc * as_matrix(t, chi_l, 2 * chi_r);
    acc = Eigen::Map<RowMajorMatrix>(prod.data(), prod.rows() * 2, Eigen::Index(chi_r));
  }
  return from_matrix(acc, {std::size_t{1} << m});
}

}  // namespace qkm
