#pragma once

#include <string>

#include "fec/statevector.hpp"

namespace fec {

enum class Encoding {
  Bosonic,  // one qubit per two-fermion geminal: |1> = orbitals (2q, 2q+1) both occupied
  Fermionic // one qubit per orbital
};

std::string_view encoding_name(Encoding e);
Encoding parse_encoding(std::string_view name);

struct Representation {
  Encoding encoding = Encoding::Bosonic;
  int n_fermions = 4;
  int n_orbitals = 8;

  static Representation bosonic(int n = 4, int r = 8) { return {Encoding::Bosonic, n, r}; }
  static Representation fermionic(int n = 4, int r = 8) { return {Encoding::Fermionic, n, r}; }

  int n_geminals() const { return n_orbitals / 2; }
  int n_pairs() const { return n_fermions / 2; }
  int n_qubits() const { return encoding == Encoding::Bosonic ? n_geminals() : n_orbitals; }
  bool is_default_size() const { return n_fermions == 4 && n_orbitals == 8; }

  /// r and N even, 2 <= N < r, and the qubit register fits the simulator.
  /// Throws ValidationError.
  void validate() const;

  friend bool operator==(const Representation &, const Representation &) = default;
};

/// (theta1, theta2), each reduced into [0, 2pi).
class FecAngles {
public:
  FecAngles(double theta1, double theta2);
  double theta1() const { return theta1_; }
  double theta2() const { return theta2_; }

private:
  double theta1_;
  double theta2_;
};

struct FecTarget {
  StateVector psi_D; // extreme fermion-pair condensate
  StateVector psi_G; // extreme exciton condensate
  double delta;      // 2 Re <psi_D|psi_G>
  StateVector psi;   // normalize(cos(t1/2) psi_G + e^{i t2} sin(t1/2) psi_D)
};

StateVector ghz_state(int n_qubits);
StateVector dicke_state(int n_qubits, int weight);

/// Basis index of the fermionic register reached by copying every geminal
/// bit q onto orbital qubits 2q and 2q+1.
std::uint64_t pair_fanout_index(std::uint64_t geminal_index, int n_geminals);
StateVector pair_fanout(const StateVector &geminal_state);

/// Layer GHZ: pairs fill the first N/2 geminals or the last N/2 geminals,
/// (|1..10..0> + |0..01..1>)/sqrt2. For the default representation this is
/// (|1100> + |0011>)/sqrt2 on geminals, i.e. all four fermions hopping
/// coherently between orbitals 0-3 and 4-7.
StateVector build_psi_G(const Representation &rep);
/// Dicke(r/2, N/2) over geminal qubits (pair fan-out applied for fermionic).
StateVector build_psi_D(const Representation &rep);
FecTarget build_fec_target(const Representation &rep, const FecAngles &angles);

/// (psi_D - sgn(Delta) psi_G) / sqrt(2 - |Delta|), with sgn(0) := +1.
StateVector entangled_condensate(const StateVector &psi_D, const StateVector &psi_G);

/// Circuit whose output on |0...0> matches build_fec_target(rep, angles).psi
/// up to global phase. The fermionic circuit is the bosonic circuit on qubits
/// 0, 2, 4, ... followed by CX(2q, 2q+1) for each geminal q.
/// Throws NumericalError (including the achieved overlap) when the
/// synthesized state misses the target by more than 1e-10.
Circuit synthesize_circuit(const Representation &rep, const FecAngles &angles);

/// Uniformly-controlled-rotation synthesis of an arbitrary state from
/// |0...0>, using only RY, RZ and CX.
Circuit synthesize_state(const StateVector &target);

/// H on qubit 0 followed by a CX chain.
Circuit ghz_circuit(int n_qubits);
/// Deterministic split-and-cyclic-shift Dicke preparation (X to load the
/// weight, then CRY/CX staircase blocks).
Circuit dicke_circuit(int n_qubits, int weight);

/// Maps a geminal-register circuit onto the orbital register (qubit q -> 2q)
/// and appends the pair fan-out CX gates.
Circuit fan_out_circuit(const Circuit &geminal_circuit);

} // namespace fec
