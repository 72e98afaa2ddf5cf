#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fec/errors.hpp"
#include "fec/rdm.hpp"
#include "fec/state_prep.hpp"
#include "oracle/fock_oracle.hpp"

using namespace fec;

namespace {

constexpr double kPi = std::numbers::pi;

bool bosonic(const Representation &rep) { return rep.encoding == Encoding::Bosonic; }

// Random state inside the N-particle sector of the representation's qubit register.
StateVector random_sector_state(const Representation &rep, std::mt19937_64 &rng) {
  const int n = rep.n_qubits();
  const int weight = bosonic(rep) ? rep.n_pairs() : rep.n_fermions;
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (__builtin_popcountll(static_cast<unsigned long long>(i)) == weight) v[i] = Complex(nd(rng), nd(rng));
  return StateVector::normalized(n, v);
}

DensityMatrix random_sector_density(const Representation &rep, int rank, std::mt19937_64 &rng) {
  const int n = rep.n_qubits();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  std::uniform_real_distribution<double> w(0.1, 1);
  double total = 0;
  for (int k = 0; k < rank; ++k) {
    const StateVector psi = random_sector_state(rep, rng);
    const double wk = w(rng);
    rho += wk * psi.amplitudes() * psi.amplitudes().adjoint();
    total += wk;
  }
  return DensityMatrix(n, rho / total);
}

} // namespace

TEST_CASE("RDM elements match the dense Jordan-Wigner oracle") {
  std::mt19937_64 rng(101);
  for (const Representation &rep : {Representation::bosonic(), Representation::fermionic(),
                                    Representation::bosonic(2, 6), Representation::fermionic(2, 6)}) {
    for (int i = 0; i < 3; ++i) {
      const StateVector psi = random_sector_state(rep, rng);
      const FockVector f = qubit_to_fock(psi, rep);
      const auto ref = fec_oracle::rdms(fec_oracle::to_fock(psi.amplitudes(), bosonic(rep), rep.n_orbitals),
                                        rep.n_orbitals);
      CHECK((compute_1rdm(f).matrix - ref.d1).norm() < 1e-12);
      CHECK((compute_2rdm(f).matrix - ref.d2).norm() < 1e-12);
      CHECK((compute_modified_g(f).matrix - ref.g).norm() < 1e-12);
    }
  }
}

TEST_CASE("signatures of mixed states match the oracle") {
  std::mt19937_64 rng(202);
  for (const Representation &rep : {Representation::bosonic(), Representation::fermionic()}) {
    for (int i = 0; i < 3; ++i) {
      const DensityMatrix rho = random_sector_density(rep, 3, rng);
      const Signatures s = signatures(rho, rep);
      const auto ref = fec_oracle::lambdas_of_density(rho.elements(), bosonic(rep), rep.n_orbitals);
      CHECK(s.lambda_D == doctest::Approx(ref.lambda_D).epsilon(1e-10));
      CHECK(s.lambda_G == doctest::Approx(ref.lambda_G).epsilon(1e-10));
    }
  }
}

TEST_CASE("traces and particle number") {
  std::mt19937_64 rng(5);
  const Representation rep = Representation::fermionic();
  const FockVector f = qubit_to_fock(random_sector_state(rep, rng), rep);
  CHECK(f.particle_sector() == 4);
  CHECK(compute_1rdm(f).matrix.trace().real() == doctest::Approx(4));
  const TwoRDM d2 = compute_2rdm(f);
  CHECK(d2.pairs.size() == 28);
  CHECK(d2.matrix.trace().real() == doctest::Approx(6));

  Eigen::VectorXcd mixed = Eigen::VectorXcd::Zero(16);
  mixed[0b0011] = mixed[0b0111] = 1 / std::sqrt(2.0);
  CHECK_FALSE(FockVector(4, mixed).particle_sector().has_value());
}

TEST_CASE("extremal signatures") {
  const Representation rep = Representation::bosonic();
  SUBCASE("layer GHZ carries the exciton condensate") {
    const Signatures s = signatures(build_psi_G(rep), rep);
    CHECK(s.lambda_G == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.lambda_D < 1);
  }
  SUBCASE("Dicke state carries the pair condensate") {
    const Signatures s = signatures(build_psi_D(rep), rep);
    CHECK(s.lambda_D == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(s.lambda_G == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }
  SUBCASE("encodings agree on the same physical state") {
    for (double t1 : {0.0, 1.0, 2.0944, 3.0}) {
      const FecAngles a(t1, 0.3);
      const Signatures b = signatures(build_fec_target(rep, a).psi, rep);
      const Representation fr = Representation::fermionic();
      const Signatures f = signatures(build_fec_target(fr, a).psi, fr);
      CHECK(b.lambda_D == doctest::Approx(f.lambda_D).epsilon(1e-12));
      CHECK(b.lambda_G == doctest::Approx(f.lambda_G).epsilon(1e-12));
    }
  }
  SUBCASE("a single Slater determinant has no condensate") {
    const Signatures s = signatures(StateVector::basis(4, 0b1100), rep);
    CHECK(s.lambda_D == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.lambda_G <= 1.0 + 1e-12);
  }
}

TEST_CASE("largest eigenvalue") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int n : {1, 2, 5, 16, 40}) {
    Eigen::MatrixXcd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = Complex(nd(rng), nd(rng));
    const Eigen::MatrixXcd h = (a + a.adjoint()) / 2;
    CHECK(largest_eigenvalue(h) == doctest::Approx(fec_oracle::largest_eigenvalue(h)).epsilon(1e-10));
  }
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
  bad(0, 1) = 1;
  CHECK_THROWS_AS(largest_eigenvalue(bad), ValidationError);
}

TEST_CASE("matrix text round trip") {
  Eigen::MatrixXcd m(2, 3);
  m << Complex(1, 2), Complex(0.1, -3), Complex(1e-17, 0), Complex(kPi, 0), Complex(-1, -1), Complex(0, 0.5);
  std::stringstream ss;
  write_matrix(ss, m);
  CHECK(read_matrix(ss) == m);
  std::stringstream bad("2 2\n1 0 0 0\n");
  CHECK_THROWS_AS(read_matrix(bad), ParseError);
}

TEST_CASE("bosonic density lifts onto orbital pairs") {
  const Representation rep = Representation::bosonic();
  const DensityMatrix rho = DensityMatrix::from_pure(dicke_state(4, 2));
  const FockDensity f = qubit_to_fock(rho, rep);
  CHECK(f.n_orbitals() == 8);
  for (std::size_t t = 0; t < f.basis().size(); ++t) {
    const std::uint64_t b = f.basis()[t];
    for (int q = 0; q < 4; ++q) CHECK(((b >> (2 * q)) & 3) != 1);
    for (int q = 0; q < 4; ++q) CHECK(((b >> (2 * q)) & 3) != 2);
    const auto i = static_cast<Eigen::Index>(t);
    if (std::abs(f.rho()(i, i)) > 1e-14) CHECK(__builtin_popcountll(b) == 4);
  }
}
