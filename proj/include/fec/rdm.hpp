#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "fec/state_prep.hpp"
#include "fec/statevector.hpp"

namespace fec {

inline constexpr int kMaxOrbitals = 16;

/// Occupation-number vector over r orbitals; orbital 0 is the most
/// significant bit of the index. Basis phases follow creation operators
/// ordered by increasing orbital index.
class FockVector {
public:
  FockVector(int n_orbitals, Eigen::VectorXcd amplitudes);

  int n_orbitals() const { return r_; }
  const Eigen::VectorXcd &amplitudes() const { return amps_; }
  /// Particle number when the support lies in one sector, nullopt if mixed.
  std::optional<int> particle_sector() const;

private:
  int r_;
  Eigen::VectorXcd amps_;
};

/// Density operator supported on a list of Fock basis states:
/// rho_F = sum_{t,s} rho(t, s) |basis[t]><basis[s]|.
class FockDensity {
public:
  FockDensity(int n_orbitals, std::vector<std::uint64_t> basis, Eigen::MatrixXcd rho);
  static FockDensity from_pure(const FockVector &psi);

  int n_orbitals() const { return r_; }
  const std::vector<std::uint64_t> &basis() const { return basis_; }
  const Eigen::MatrixXcd &rho() const { return rho_; }

private:
  int r_;
  std::vector<std::uint64_t> basis_;
  Eigen::MatrixXcd rho_;
};

FockVector qubit_to_fock(const StateVector &state, const Representation &rep);
FockDensity qubit_to_fock(const DensityMatrix &rho, const Representation &rep);

/// 1D(i, j) = <a+_i a_j>.
struct OneRDM {
  int n_orbitals;
  Eigen::MatrixXcd matrix;
};

/// 2D over ordered pairs i<j: row (i,j), column (k,l) holds
/// <a+_i a+_j a_l a_k>. Trace N(N-1)/2.
struct TwoRDM {
  int n_orbitals;
  std::vector<std::pair<int, int>> pairs;
  Eigen::MatrixXcd matrix;
};

/// Row (i,j) = i*r + j, column (k,l) = k*r + l holds
/// <a+_i a_j a+_l a_k> - 1D(i,j) 1D(l,k).
struct ModifiedG {
  int n_orbitals;
  Eigen::MatrixXcd matrix;
};

OneRDM compute_1rdm(const FockDensity &rho);
TwoRDM compute_2rdm(const FockDensity &rho);
ModifiedG compute_modified_g(const FockDensity &rho);
OneRDM compute_1rdm(const FockVector &psi);
TwoRDM compute_2rdm(const FockVector &psi);
ModifiedG compute_modified_g(const FockVector &psi);

/// Largest eigenvalue of (M + M^dagger)/2 by dense Householder
/// tridiagonalization. Throws ValidationError when M is not Hermitian
/// within 1e-8.
double largest_eigenvalue(const Eigen::MatrixXcd &matrix);

struct Signatures {
  double lambda_D = 0.0;
  double lambda_G = 0.0;
  std::optional<double> std_D;
  std::optional<double> std_G;
};

Signatures signatures(const FockDensity &rho);
Signatures signatures(const StateVector &state, const Representation &rep);
Signatures signatures(const DensityMatrix &rho, const Representation &rep);

/// Header "rows cols", then one line per row of "re im" pairs.
void write_matrix(std::ostream &out, const Eigen::MatrixXcd &m);
Eigen::MatrixXcd read_matrix(std::istream &in);

} // namespace fec
