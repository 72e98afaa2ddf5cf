#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fec {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 12;

// Basis convention used everywhere: qubit 0 is the most significant bit of a
// basis index, and bitstrings are written with qubit 0 first.
inline int bit_position(int qubit, int n_qubits) { return n_qubits - 1 - qubit; }
std::string to_bitstring(std::uint64_t index, int n_bits);
std::uint64_t from_bitstring(const std::string &bits);

class StateVector {
public:
  /// Throws StructuralError on a length that is not 2^n and ValidationError
  /// when the norm differs from 1 by more than 1e-12.
  StateVector(int n_qubits, Eigen::VectorXcd amplitudes);

  static StateVector basis(int n_qubits, std::uint64_t index);
  static StateVector zero(int n_qubits) { return basis(n_qubits, 0); }
  /// Rescales to unit norm; throws ValidationError on a zero vector.
  static StateVector normalized(int n_qubits, Eigen::VectorXcd amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amps_.size()); }
  const Eigen::VectorXcd &amplitudes() const { return amps_; }
  Complex operator[](std::uint64_t index) const { return amps_[static_cast<Eigen::Index>(index)]; }

  Complex inner(const StateVector &other) const; // <this|other>
  /// |<this|other>|, the global-phase-free comparison.
  double overlap(const StateVector &other) const;
  std::vector<double> probabilities() const;

private:
  StateVector() = default;
  int n_qubits_ = 0;
  Eigen::VectorXcd amps_;
};

enum class GateKind { RY, RZ, X, H, CX, CRY };

std::string_view gate_name(GateKind kind);

struct Gate {
  GateKind kind;
  double angle = 0.0;
  std::optional<int> control;
  int target = 0;

  static Gate ry(int target, double theta) { return {GateKind::RY, theta, std::nullopt, target}; }
  static Gate rz(int target, double theta) { return {GateKind::RZ, theta, std::nullopt, target}; }
  static Gate x(int target) { return {GateKind::X, 0.0, std::nullopt, target}; }
  static Gate h(int target) { return {GateKind::H, 0.0, std::nullopt, target}; }
  static Gate cx(int control, int target) { return {GateKind::CX, 0.0, control, target}; }
  static Gate cry(int control, int target, double theta) {
    return {GateKind::CRY, theta, control, target};
  }

  bool is_two_qubit() const { return kind == GateKind::CX || kind == GateKind::CRY; }
  bool has_angle() const {
    return kind == GateKind::RY || kind == GateKind::RZ || kind == GateKind::CRY;
  }
  std::vector<int> qubits() const;
  /// Unitary on qubits() (control first for two-qubit gates).
  Eigen::MatrixXcd matrix() const;

  friend bool operator==(const Gate &, const Gate &) = default;
};

class Circuit {
public:
  explicit Circuit(int n_qubits);
  Circuit(int n_qubits, std::vector<Gate> gates);

  int n_qubits() const { return n_qubits_; }
  const std::vector<Gate> &gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  std::size_t two_qubit_count() const;

  /// Throws StructuralError when an index is out of range or control == target.
  Circuit &add(const Gate &gate);
  Circuit &append(const Circuit &other);

  friend bool operator==(const Circuit &, const Circuit &) = default;

private:
  int n_qubits_;
  std::vector<Gate> gates_;
};

class DensityMatrix {
public:
  DensityMatrix(int n_qubits, Eigen::MatrixXcd elements);

  static DensityMatrix from_pure(const StateVector &psi);
  static DensityMatrix zero_state(int n_qubits) {
    return from_pure(StateVector::zero(n_qubits));
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }
  const Eigen::MatrixXcd &elements() const { return rho_; }
  std::vector<double> probabilities() const;

  /// Hermitian within 1e-10, trace 1 within 1e-10, min eigenvalue >= -1e-8.
  /// Throws ValidationError naming the failing invariant.
  void validate() const;
  double fidelity_with(const StateVector &psi) const; // <psi|rho|psi>

private:
  int n_qubits_;
  Eigen::MatrixXcd rho_;
};

struct CountsTable {
  std::uint64_t shots = 0;
  std::map<std::string, std::uint64_t> counts;

  CountsTable() = default;
  /// Checks that the counts sum to shots and all keys share one length.
  CountsTable(std::uint64_t shots, std::map<std::string, std::uint64_t> counts);

  std::uint64_t count(const std::string &outcome) const;
  int n_bits() const;

  friend bool operator==(const CountsTable &, const CountsTable &) = default;
};

/// Operator on a subset of qubits; qubits[0] is the most significant bit of
/// the local index of `matrix`.
struct LocalOperator {
  std::vector<int> qubits;
  Eigen::MatrixXcd matrix;
};

/// m <- op * m, with the rows of m indexed by the 2^n basis.
void apply_left(Eigen::MatrixXcd &m, const LocalOperator &op, int n_qubits);
/// m <- m * op^dagger, with the columns of m indexed by the 2^n basis.
void apply_right_adjoint(Eigen::MatrixXcd &m, const LocalOperator &op, int n_qubits);
void apply_gate(Eigen::VectorXcd &amps, const Gate &gate, int n_qubits);

StateVector apply_circuit(const Circuit &circuit, const StateVector &input);

/// Draws `shots` outcomes from |amplitude|^2 using the (seed, 0, 0) stream.
CountsTable sample_counts(const StateVector &state, std::int64_t shots, std::uint64_t seed);
/// Multinomial draw from an explicit distribution; the generic path behind
/// sample_counts and the noisy tomography pipeline.
CountsTable sample_distribution(const std::vector<double> &probabilities, int n_bits,
                                std::int64_t shots, std::uint64_t seed,
                                std::uint32_t trial = 0, std::uint32_t setting = 0);

class DeviceModel;

/// Exact density-matrix evolution. When `noise` is non-null, each gate is
/// followed by the channel returned by gate_channel(*noise, gate).
DensityMatrix evolve_density(const Circuit &circuit, const DeviceModel *noise,
                             const DensityMatrix &input);

} // namespace fec
