#include "fec/rdm.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "fec/errors.hpp"

namespace fec {

namespace {

std::uint64_t orbital_bit(int orbital, int r) { return std::uint64_t{1} << (r - 1 - orbital); }

// Elementary fermion operator; strings are applied right to left.
struct Elementary {
  bool create;
  int orbital;
};

// Returns false when the string annihilates |state>.
bool apply_string(const std::vector<Elementary> &ops, int r, std::uint64_t &state, int &sign) {
  sign = 1;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const std::uint64_t bit = orbital_bit(it->orbital, r);
    const bool occupied = state & bit;
    if (occupied == it->create) return false;
    // Parity of occupied orbitals with smaller index (more significant bits).
    const std::uint64_t below = state & ~((bit << 1) - 1);
    if (std::popcount(below) & 1) sign = -sign;
    state ^= bit;
  }
  return true;
}

struct Image {
  std::size_t position; // index into FockDensity::basis
  std::uint64_t target;
  int sign;
};

std::vector<Image> images(const std::vector<Elementary> &ops, const FockDensity &rho) {
  std::vector<Image> out;
  const auto &basis = rho.basis();
  for (std::size_t p = 0; p < basis.size(); ++p) {
    std::uint64_t s = basis[p];
    int sign = 1;
    if (apply_string(ops, rho.n_orbitals(), s, sign)) out.push_back({p, s, sign});
  }
  return out;
}

// M(a, b) = tr(rho A_a^dagger A_b) for a family of operator strings.
Eigen::MatrixXcd gram_expectations(const std::vector<std::vector<Elementary>> &family,
                                   const FockDensity &rho) {
  const auto n = static_cast<Eigen::Index>(family.size());
  std::vector<std::vector<Image>> imgs;
  imgs.reserve(family.size());
  std::vector<std::unordered_map<std::uint64_t, Image>> lookup(family.size());
  for (std::size_t a = 0; a < family.size(); ++a) {
    imgs.push_back(images(family[a], rho));
    for (const auto &im : imgs.back()) lookup[a].emplace(im.target, im);
  }
  const auto &r = rho.rho();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto &lb = lookup[static_cast<std::size_t>(b)];
      Complex acc = 0.0;
      for (const auto &ia : imgs[static_cast<std::size_t>(a)]) {
        auto it = lb.find(ia.target);
        if (it == lb.end()) continue;
        acc += r(static_cast<Eigen::Index>(it->second.position), static_cast<Eigen::Index>(ia.position)) *
               static_cast<double>(ia.sign * it->second.sign);
      }
      m(a, b) = acc;
    }
  }
  return m;
}

void check_orbitals(int r) {
  if (r < 1 || r > kMaxOrbitals)
    throw StructuralError("orbital count " + std::to_string(r) + " outside [1, " +
                          std::to_string(kMaxOrbitals) + "]");
}

} // namespace

// ---------------------------------------------------------------------------

FockVector::FockVector(int n_orbitals, Eigen::VectorXcd amplitudes)
    : r_(n_orbitals), amps_(std::move(amplitudes)) {
  check_orbitals(r_);
  if (amps_.size() != (Eigen::Index{1} << r_)) throw StructuralError("Fock vector length is not 2^r");
  if (std::abs(amps_.norm() - 1.0) > 1e-12) throw ValidationError("Fock vector is not normalized");
}

std::optional<int> FockVector::particle_sector() const {
  std::optional<int> sector;
  for (Eigen::Index i = 0; i < amps_.size(); ++i) {
    if (std::abs(amps_[i]) < 1e-14) continue;
    const int n = std::popcount(static_cast<std::uint64_t>(i));
    if (sector && *sector != n) return std::nullopt;
    sector = n;
  }
  return sector;
}

FockDensity::FockDensity(int n_orbitals, std::vector<std::uint64_t> basis, Eigen::MatrixXcd rho)
    : r_(n_orbitals), basis_(std::move(basis)), rho_(std::move(rho)) {
  check_orbitals(r_);
  const auto n = static_cast<Eigen::Index>(basis_.size());
  if (rho_.rows() != n || rho_.cols() != n) throw StructuralError("Fock density size mismatch");
  for (auto b : basis_)
    if (b >= (std::uint64_t{1} << r_)) throw StructuralError("Fock basis index out of range");
}

FockDensity FockDensity::from_pure(const FockVector &psi) {
  std::vector<std::uint64_t> basis;
  std::vector<Complex> amps;
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) {
    if (psi.amplitudes()[i] == Complex{0.0}) continue;
    basis.push_back(static_cast<std::uint64_t>(i));
    amps.push_back(psi.amplitudes()[i]);
  }
  Eigen::Map<Eigen::VectorXcd> v(amps.data(), static_cast<Eigen::Index>(amps.size()));
  return FockDensity(psi.n_orbitals(), std::move(basis), v * v.adjoint());
}

namespace {

std::vector<std::uint64_t> fock_images(const Representation &rep, int n_qubits) {
  rep.validate();
  if (n_qubits != rep.n_qubits())
    throw StructuralError(std::string(encoding_name(rep.encoding)) + " representation expects " +
                          std::to_string(rep.n_qubits()) + " qubits, state has " +
                          std::to_string(n_qubits));
  std::vector<std::uint64_t> out(std::size_t{1} << n_qubits);
  for (std::uint64_t s = 0; s < out.size(); ++s)
    out[s] = rep.encoding == Encoding::Bosonic ? pair_fanout_index(s, n_qubits) : s;
  return out;
}

} // namespace

FockVector qubit_to_fock(const StateVector &state, const Representation &rep) {
  const auto map = fock_images(rep, state.n_qubits());
  Eigen::VectorXcd f = Eigen::VectorXcd::Zero(Eigen::Index{1} << rep.n_orbitals);
  for (std::uint64_t s = 0; s < map.size(); ++s) f[static_cast<Eigen::Index>(map[s])] = state[s];
  return FockVector(rep.n_orbitals, std::move(f));
}

FockDensity qubit_to_fock(const DensityMatrix &rho, const Representation &rep) {
  return FockDensity(rep.n_orbitals, fock_images(rep, rho.n_qubits()), rho.elements());
}

// ---------------------------------------------------------------------------

OneRDM compute_1rdm(const FockDensity &rho) {
  const int r = rho.n_orbitals();
  std::vector<std::vector<Elementary>> family;
  for (int j = 0; j < r; ++j) family.push_back({{false, j}});
  return OneRDM{r, gram_expectations(family, rho)};
}

TwoRDM compute_2rdm(const FockDensity &rho) {
  const int r = rho.n_orbitals();
  TwoRDM out{r, {}, {}};
  std::vector<std::vector<Elementary>> family;
  for (int k = 0; k < r; ++k) {
    for (int l = k + 1; l < r; ++l) {
      out.pairs.emplace_back(k, l);
      family.push_back({{false, l}, {false, k}}); // a_l a_k
    }
  }
  out.matrix = gram_expectations(family, rho);
  return out;
}

ModifiedG compute_modified_g(const FockDensity &rho) {
  const int r = rho.n_orbitals();
  std::vector<std::vector<Elementary>> family;
  for (int k = 0; k < r; ++k)
    for (int l = 0; l < r; ++l) family.push_back({{true, l}, {false, k}}); // a+_l a_k
  Eigen::MatrixXcd g = gram_expectations(family, rho);
  const Eigen::MatrixXcd d1 = compute_1rdm(rho).matrix;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) g(i * r + j, k * r + l) -= d1(i, j) * d1(l, k);
  return ModifiedG{r, std::move(g)};
}

OneRDM compute_1rdm(const FockVector &psi) { return compute_1rdm(FockDensity::from_pure(psi)); }
TwoRDM compute_2rdm(const FockVector &psi) { return compute_2rdm(FockDensity::from_pure(psi)); }
ModifiedG compute_modified_g(const FockVector &psi) {
  return compute_modified_g(FockDensity::from_pure(psi));
}

double largest_eigenvalue(const Eigen::MatrixXcd &matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
    throw StructuralError("largest_eigenvalue needs a non-empty square matrix");
  const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) throw ValidationError("matrix is not Hermitian (deviation " + std::to_string(asym) + ")");
  const Eigen::MatrixXcd herm = (matrix + matrix.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
  return es.eigenvalues().maxCoeff();
}

Signatures signatures(const FockDensity &rho) {
  Signatures s;
  s.lambda_D = largest_eigenvalue(compute_2rdm(rho).matrix);
  s.lambda_G = largest_eigenvalue(compute_modified_g(rho).matrix);
  return s;
}

Signatures signatures(const StateVector &state, const Representation &rep) {
  return signatures(FockDensity::from_pure(qubit_to_fock(state, rep)));
}

Signatures signatures(const DensityMatrix &rho, const Representation &rep) {
  return signatures(qubit_to_fock(rho, rep));
}

// ---------------------------------------------------------------------------

void write_matrix(std::ostream &out, const Eigen::MatrixXcd &m) {
  out << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j).real() << ' ' << m(i, j).imag();
    }
    out << '\n';
  }
}

Eigen::MatrixXcd read_matrix(std::istream &in) {
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) throw ParseError("matrix dump: bad header");
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re = 0, im = 0;
      if (!(in >> re >> im))
        throw ParseError("matrix dump: truncated at element (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      m(i, j) = {re, im};
    }
  }
  return m;
}

} // namespace fec
