#include "fec/statevector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fec/errors.hpp"
#include "fec/noise.hpp"
#include "fec/rng.hpp"

namespace fec {

namespace {

constexpr double kNormTol = 1e-12;

void check_qubit_count(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw StructuralError("qubit count " + std::to_string(n_qubits) +
                          " outside [1, " + std::to_string(kMaxQubits) + "]");
}

std::size_t dim_of(int n_qubits) { return std::size_t{1} << n_qubits; }

// Visits every group of basis indices that differ only on op.qubits; for each
// group, `local` receives the 2^k global indices ordered by local index.
template <typename Fn>
void for_each_block(const std::vector<int> &qubits, int n_qubits, Fn &&fn) {
  const int k = static_cast<int>(qubits.size());
  const std::size_t local_dim = std::size_t{1} << k;
  std::vector<std::uint64_t> offsets(local_dim, 0);
  std::uint64_t mask = 0;
  for (std::size_t l = 0; l < local_dim; ++l) {
    for (int j = 0; j < k; ++j) {
      if ((l >> (k - 1 - j)) & 1U)
        offsets[l] |= std::uint64_t{1} << bit_position(qubits[j], n_qubits);
    }
  }
  for (int q : qubits) mask |= std::uint64_t{1} << bit_position(q, n_qubits);

  std::vector<std::uint64_t> local(local_dim);
  const std::uint64_t dim = dim_of(n_qubits);
  for (std::uint64_t base = 0; base < dim; ++base) {
    if (base & mask) continue;
    for (std::size_t l = 0; l < local_dim; ++l) local[l] = base | offsets[l];
    fn(local);
  }
}

} // namespace

std::string to_bitstring(std::uint64_t index, int n_bits) {
  std::string s(static_cast<std::size_t>(n_bits), '0');
  for (int b = 0; b < n_bits; ++b)
    if ((index >> (n_bits - 1 - b)) & 1U) s[static_cast<std::size_t>(b)] = '1';
  return s;
}

std::uint64_t from_bitstring(const std::string &bits) {
  std::uint64_t v = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw ParseError("invalid bitstring '" + bits + "'");
    v = (v << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return v;
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(int n_qubits, Eigen::VectorXcd amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  check_qubit_count(n_qubits);
  if (static_cast<std::size_t>(amps_.size()) != dim_of(n_qubits))
    throw StructuralError("state vector length " + std::to_string(amps_.size()) +
                          " is not 2^" + std::to_string(n_qubits));
  const double norm = amps_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTol)
    throw ValidationError("state vector norm " + std::to_string(norm) + " differs from 1");
}

StateVector StateVector::basis(int n_qubits, std::uint64_t index) {
  check_qubit_count(n_qubits);
  if (index >= dim_of(n_qubits)) throw StructuralError("basis index out of range");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim_of(n_qubits)));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVector(n_qubits, std::move(v));
}

StateVector StateVector::normalized(int n_qubits, Eigen::VectorXcd amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw ValidationError("cannot normalize a zero or non-finite vector");
  amplitudes /= norm;
  return StateVector(n_qubits, std::move(amplitudes));
}

Complex StateVector::inner(const StateVector &other) const {
  if (other.n_qubits_ != n_qubits_) throw StructuralError("qubit count mismatch in inner product");
  return amps_.dot(other.amps_);
}

double StateVector::overlap(const StateVector &other) const { return std::abs(inner(other)); }

std::vector<double> StateVector::probabilities() const {
  std::vector<double> p(dimension());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(amps_[static_cast<Eigen::Index>(i)]);
  return p;
}

// ---------------------------------------------------------------------------
// Gates and circuits

std::string_view gate_name(GateKind kind) {
  switch (kind) {
  case GateKind::RY: return "ry";
  case GateKind::RZ: return "rz";
  case GateKind::X: return "x";
  case GateKind::H: return "h";
  case GateKind::CX: return "cx";
  case GateKind::CRY: return "cry";
  }
  return "?";
}

std::vector<int> Gate::qubits() const {
  if (control) return {*control, target};
  return {target};
}

Eigen::MatrixXcd Gate::matrix() const {
  const Complex i{0.0, 1.0};
  Eigen::Matrix2cd u;
  switch (kind) {
  case GateKind::RY:
  case GateKind::CRY: {
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    u << c, -s, s, c;
    break;
  }
  case GateKind::RZ:
    u << std::exp(-i * (angle / 2)), 0.0, 0.0, std::exp(i * (angle / 2));
    break;
  case GateKind::X:
  case GateKind::CX:
    u << 0.0, 1.0, 1.0, 0.0;
    break;
  case GateKind::H:
    u << M_SQRT1_2, M_SQRT1_2, M_SQRT1_2, -M_SQRT1_2;
    break;
  }
  if (!control) return u;
  Eigen::MatrixXcd cu = Eigen::MatrixXcd::Identity(4, 4);
  cu.bottomRightCorner(2, 2) = u;
  return cu;
}

Circuit::Circuit(int n_qubits) : n_qubits_(n_qubits) { check_qubit_count(n_qubits); }

Circuit::Circuit(int n_qubits, std::vector<Gate> gates) : Circuit(n_qubits) {
  for (const auto &g : gates) add(g);
}

Circuit &Circuit::add(const Gate &gate) {
  auto in_range = [&](int q) { return q >= 0 && q < n_qubits_; };
  if (!in_range(gate.target))
    throw StructuralError("gate target " + std::to_string(gate.target) + " out of range");
  const bool needs_control = gate.is_two_qubit();
  if (needs_control != gate.control.has_value())
    throw StructuralError(std::string(gate_name(gate.kind)) + " control qubit mismatch");
  if (gate.control) {
    if (!in_range(*gate.control))
      throw StructuralError("gate control " + std::to_string(*gate.control) + " out of range");
    if (*gate.control == gate.target) throw StructuralError("control equals target");
  }
  if (!std::isfinite(gate.angle)) throw ValidationError("non-finite gate angle");
  gates_.push_back(gate);
  return *this;
}

Circuit &Circuit::append(const Circuit &other) {
  if (other.n_qubits_ != n_qubits_) throw StructuralError("circuit width mismatch");
  for (const auto &g : other.gates_) add(g);
  return *this;
}

std::size_t Circuit::two_qubit_count() const {
  return static_cast<std::size_t>(
      std::count_if(gates_.begin(), gates_.end(), [](const Gate &g) { return g.is_two_qubit(); }));
}

// ---------------------------------------------------------------------------
// Kernels

void apply_left(Eigen::MatrixXcd &m, const LocalOperator &op, int n_qubits) {
  const auto local_dim = static_cast<Eigen::Index>(op.matrix.rows());
  Eigen::VectorXcd in(local_dim), out(local_dim);
  const Eigen::Index cols = m.cols();
  for_each_block(op.qubits, n_qubits, [&](const std::vector<std::uint64_t> &idx) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index l = 0; l < local_dim; ++l) in[l] = m(static_cast<Eigen::Index>(idx[l]), c);
      out.noalias() = op.matrix * in;
      for (Eigen::Index l = 0; l < local_dim; ++l) m(static_cast<Eigen::Index>(idx[l]), c) = out[l];
    }
  });
}

void apply_right_adjoint(Eigen::MatrixXcd &m, const LocalOperator &op, int n_qubits) {
  // Each row r transforms as r <- conj(op) r (as a column vector).
  const Eigen::MatrixXcd conj = op.matrix.conjugate();
  const auto local_dim = static_cast<Eigen::Index>(op.matrix.rows());
  Eigen::VectorXcd in(local_dim), out(local_dim);
  const Eigen::Index rows = m.rows();
  for_each_block(op.qubits, n_qubits, [&](const std::vector<std::uint64_t> &idx) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index l = 0; l < local_dim; ++l) in[l] = m(r, static_cast<Eigen::Index>(idx[l]));
      out.noalias() = conj * in;
      for (Eigen::Index l = 0; l < local_dim; ++l) m(r, static_cast<Eigen::Index>(idx[l])) = out[l];
    }
  });
}

void apply_gate(Eigen::VectorXcd &amps, const Gate &gate, int n_qubits) {
  Eigen::MatrixXcd col = std::move(amps);
  apply_left(col, LocalOperator{gate.qubits(), gate.matrix()}, n_qubits);
  amps = std::move(col);
}

StateVector apply_circuit(const Circuit &circuit, const StateVector &input) {
  if (input.n_qubits() != circuit.n_qubits())
    throw StructuralError("state has " + std::to_string(input.n_qubits()) +
                          " qubits, circuit has " + std::to_string(circuit.n_qubits()));
  Eigen::MatrixXcd amps = input.amplitudes();
  for (const auto &g : circuit.gates())
    apply_left(amps, LocalOperator{g.qubits(), g.matrix()}, circuit.n_qubits());
  // Renormalize away rounding so chained circuits keep the 1e-12 invariant.
  Eigen::VectorXcd v = amps.col(0);
  return StateVector::normalized(circuit.n_qubits(), std::move(v));
}

// ---------------------------------------------------------------------------
// Sampling

CountsTable sample_distribution(const std::vector<double> &probabilities, int n_bits,
                                std::int64_t shots, std::uint64_t seed, std::uint32_t trial,
                                std::uint32_t setting) {
  if (shots <= 0) throw ValidationError("shots must be positive, got " + std::to_string(shots));
  if (probabilities.size() != (std::size_t{1} << n_bits))
    throw StructuralError("distribution length does not match bit count");
  std::vector<double> cdf(probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += std::max(0.0, probabilities[i]);
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw ValidationError("distribution has zero total weight");

  std::vector<std::uint64_t> tally(probabilities.size(), 0);
  Philox4x32 rng(seed, trial, setting);
  for (std::int64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    // upper_bound never lands on a zero-weight bin; rounding can push u to acc.
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (idx == cdf.size()) {
      idx = cdf.size() - 1;
      while (idx > 0 && probabilities[idx] <= 0.0) --idx;
    }
    ++tally[idx];
  }
  std::map<std::string, std::uint64_t> counts;
  for (std::size_t i = 0; i < tally.size(); ++i)
    if (tally[i] > 0) counts.emplace(to_bitstring(i, n_bits), tally[i]);
  return CountsTable(static_cast<std::uint64_t>(shots), std::move(counts));
}

CountsTable sample_counts(const StateVector &state, std::int64_t shots, std::uint64_t seed) {
  return sample_distribution(state.probabilities(), state.n_qubits(), shots, seed);
}

// ---------------------------------------------------------------------------
// Density matrices

DensityMatrix::DensityMatrix(int n_qubits, Eigen::MatrixXcd elements)
    : n_qubits_(n_qubits), rho_(std::move(elements)) {
  check_qubit_count(n_qubits);
  const auto dim = static_cast<Eigen::Index>(dim_of(n_qubits));
  if (rho_.rows() != dim || rho_.cols() != dim)
    throw StructuralError("density matrix is not 2^n x 2^n");
}

DensityMatrix DensityMatrix::from_pure(const StateVector &psi) {
  return DensityMatrix(psi.n_qubits(), psi.amplitudes() * psi.amplitudes().adjoint());
}

std::vector<double> DensityMatrix::probabilities() const {
  std::vector<double> p(dimension());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    p[i] = std::max(0.0, rho_(k, k).real());
  }
  return p;
}

void DensityMatrix::validate() const {
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) throw ValidationError("density matrix not Hermitian (" + std::to_string(herm) + ")");
  const double tr = rho_.trace().real();
  if (std::abs(tr - 1.0) > 1e-10) throw ValidationError("density matrix trace " + std::to_string(tr));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw ValidationError("density matrix has negative eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()));
}

double DensityMatrix::fidelity_with(const StateVector &psi) const {
  if (psi.n_qubits() != n_qubits_) throw StructuralError("qubit count mismatch");
  return (psi.amplitudes().adjoint() * rho_ * psi.amplitudes())(0, 0).real();
}

DensityMatrix evolve_density(const Circuit &circuit, const DeviceModel *noise,
                             const DensityMatrix &input) {
  if (input.n_qubits() != circuit.n_qubits())
    throw StructuralError("density has " + std::to_string(input.n_qubits()) +
                          " qubits, circuit has " + std::to_string(circuit.n_qubits()));
  if (noise && noise->n_qubits < circuit.n_qubits())
    throw StructuralError("device model '" + noise->name + "' has " +
                          std::to_string(noise->n_qubits) + " qubits, circuit needs " +
                          std::to_string(circuit.n_qubits()));
  const int n = circuit.n_qubits();
  Eigen::MatrixXcd rho = input.elements();
  const bool noisy = noise && noise->has_gate_noise();
  for (const auto &g : circuit.gates()) {
    const LocalOperator u{g.qubits(), g.matrix()};
    apply_left(rho, u, n);
    apply_right_adjoint(rho, u, n);
    if (noisy) apply_channel(rho, gate_channel(*noise, g), n);
  }
  // Remove rounding asymmetry.
  Eigen::MatrixXcd herm = (rho + rho.adjoint()) / 2.0;
  return DensityMatrix(n, std::move(herm));
}

// ---------------------------------------------------------------------------

CountsTable::CountsTable(std::uint64_t shots_, std::map<std::string, std::uint64_t> counts_)
    : shots(shots_), counts(std::move(counts_)) {
  std::uint64_t total = 0;
  std::size_t width = counts.empty() ? 0 : counts.begin()->first.size();
  for (const auto &[k, v] : counts) {
    if (k.size() != width) throw StructuralError("counts keys have inconsistent lengths");
    total += v;
  }
  if (total != shots)
    throw ValidationError("counts sum to " + std::to_string(total) + " but shots = " +
                          std::to_string(shots));
}

std::uint64_t CountsTable::count(const std::string &outcome) const {
  auto it = counts.find(outcome);
  return it == counts.end() ? 0 : it->second;
}

int CountsTable::n_bits() const {
  return counts.empty() ? 0 : static_cast<int>(counts.begin()->first.size());
}

} // namespace fec
