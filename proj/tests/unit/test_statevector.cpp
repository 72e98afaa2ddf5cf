#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fec/errors.hpp"
#include "fec/noise.hpp"
#include "fec/statevector.hpp"

using namespace fec;

namespace {

using Mat = Eigen::MatrixXcd;

Mat kron(const Mat &a, const Mat &b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat single(const Mat &u, int q, int n) {
  Mat out = Mat::Identity(1, 1);
  for (int k = 0; k < n; ++k) out = kron(out, k == q ? u : Mat::Identity(2, 2));
  return out;
}

// |0><0|_c (x) I + |1><1|_c (x) U_t over the full register.
Mat controlled(const Mat &u, int c, int t, int n) {
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  Mat a = Mat::Identity(1, 1), b = Mat::Identity(1, 1);
  for (int k = 0; k < n; ++k) {
    a = kron(a, k == c ? p0 : Mat::Identity(2, 2));
    b = kron(b, k == c ? p1 : k == t ? u : Mat::Identity(2, 2));
  }
  return a + b;
}

Mat ry(double t) {
  Mat m(2, 2);
  m << std::cos(t / 2), -std::sin(t / 2), std::sin(t / 2), std::cos(t / 2);
  return m;
}

Mat rz(double t) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -t / 2);
  m(1, 1) = std::polar(1.0, t / 2);
  return m;
}

Mat dense_unitary(const Gate &g, int n) {
  Mat x(2, 2), h(2, 2);
  x << 0, 1, 1, 0;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  switch (g.kind) {
  case GateKind::RY: return single(ry(g.angle), g.target, n);
  case GateKind::RZ: return single(rz(g.angle), g.target, n);
  case GateKind::X: return single(x, g.target, n);
  case GateKind::H: return single(h, g.target, n);
  case GateKind::CX: return controlled(x, *g.control, g.target, n);
  case GateKind::CRY: return controlled(ry(g.angle), *g.control, g.target, n);
  }
  return {};
}

Circuit random_circuit(int n, int length, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> kind(0, 5), qubit(0, n - 1);
  std::uniform_real_distribution<double> angle(-4, 4);
  Circuit c(n);
  for (int i = 0; i < length; ++i) {
    const int t = qubit(rng);
    int ctl = qubit(rng);
    while (ctl == t) ctl = qubit(rng);
    switch (kind(rng)) {
    case 0: c.add(Gate::ry(t, angle(rng))); break;
    case 1: c.add(Gate::rz(t, angle(rng))); break;
    case 2: c.add(Gate::x(t)); break;
    case 3: c.add(Gate::h(t)); break;
    case 4: c.add(Gate::cx(ctl, t)); break;
    default: c.add(Gate::cry(ctl, t, angle(rng))); break;
    }
  }
  return c;
}

} // namespace

TEST_CASE("qubit 0 is the most significant bit") {
  CHECK(to_bitstring(2, 4) == "0010");
  CHECK(from_bitstring("1000") == 8);
  Eigen::VectorXcd amps = StateVector::zero(2).amplitudes();
  apply_gate(amps, Gate::x(0), 2);
  CHECK(std::abs(amps[2] - Complex(1.0)) < 1e-15);
  apply_gate(amps, Gate::cx(0, 1), 2);
  CHECK(std::abs(amps[3] - Complex(1.0)) < 1e-15);
}

TEST_CASE("controlled RY rotates only the controlled branch") {
  const double t = 0.7;
  Eigen::VectorXcd amps = StateVector::basis(2, 2).amplitudes(); // |10>
  apply_gate(amps, Gate::cry(0, 1, t), 2);
  CHECK(std::abs(amps[2] - Complex(std::cos(t / 2))) < 1e-15);
  CHECK(std::abs(amps[3] - Complex(std::sin(t / 2))) < 1e-15);
  Eigen::VectorXcd idle = StateVector::basis(2, 1).amplitudes(); // |01>, control off
  apply_gate(idle, Gate::cry(0, 1, t), 2);
  CHECK(std::abs(idle[1] - Complex(1.0)) < 1e-15);
}

TEST_CASE("gate application matches dense Kronecker unitaries") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    const Circuit c = random_circuit(n, 12, rng);
    Mat u = Mat::Identity(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (const auto &g : c.gates()) u = dense_unitary(g, n) * u;
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(Eigen::Index{1} << n);
    for (auto &x : v) x = Complex(nd(rng), nd(rng));
    const StateVector in = StateVector::normalized(n, v);
    const StateVector out = apply_circuit(c, in);
    CHECK((out.amplitudes() - u * in.amplitudes()).norm() < 1e-12);

    // Density evolution without noise is U rho U^dagger.
    const DensityMatrix rho = evolve_density(c, nullptr, DensityMatrix::from_pure(in));
    const Mat expected = u * in.amplitudes() * in.amplitudes().adjoint() * u.adjoint();
    CHECK((rho.elements() - expected).norm() < 1e-12);
  }
}

TEST_CASE("gate matrices are unitary") {
  for (const Gate &g : {Gate::ry(0, 0.3), Gate::rz(0, 1.1), Gate::x(0), Gate::h(0), Gate::cx(0, 1),
                        Gate::cry(0, 1, 2.2)}) {
    const Mat m = g.matrix();
    CHECK((m * m.adjoint() - Mat::Identity(m.rows(), m.cols())).norm() < 1e-14);
  }
}

TEST_CASE("structural validation") {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v[0] = 0.5;
  CHECK_THROWS_AS(StateVector(2, v), ValidationError);
  CHECK_THROWS_AS(StateVector(2, Eigen::VectorXcd::Zero(3)), StructuralError);
  Circuit c(3);
  CHECK_THROWS_AS(c.add(Gate::x(3)), StructuralError);
  CHECK_THROWS_AS(c.add(Gate::cx(1, 1)), StructuralError);
  CHECK_THROWS_AS(c.add(Gate::cry(-1, 0, 0.1)), StructuralError);
  CHECK_THROWS_AS(CountsTable(10, {{"01", 4}, {"11", 5}}), ValidationError);
  CHECK_THROWS_AS(CountsTable(9, {{"01", 4}, {"1", 5}}), StructuralError);
}

TEST_CASE("density matrix validation names the failing invariant") {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 0.5;
  CHECK_THROWS_WITH_AS(DensityMatrix(1, m).validate(), doctest::Contains("trace"), ValidationError);
  m(1, 1) = 0.5;
  m(0, 1) = 0.1;
  CHECK_THROWS_WITH_AS(DensityMatrix(1, m).validate(), doctest::Contains("Hermitian"), ValidationError);
  m(1, 0) = 0.1;
  CHECK_NOTHROW(DensityMatrix(1, m).validate());
  m(0, 1) = m(1, 0) = 0.9;
  CHECK_THROWS_WITH_AS(DensityMatrix(1, m).validate(), doctest::Contains("eigenvalue"), ValidationError);
}

TEST_CASE("sampling") {
  SUBCASE("basis state gives a single outcome") {
    const auto counts = sample_counts(StateVector::basis(3, 5), 1000, 1);
    CHECK(counts.shots == 1000);
    CHECK(counts.count("101") == 1000);
  }
  SUBCASE("deterministic per stream, different across streams") {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    CHECK(sample_distribution(p, 2, 5000, 9, 1, 2) == sample_distribution(p, 2, 5000, 9, 1, 2));
    CHECK(sample_distribution(p, 2, 5000, 9, 1, 2) != sample_distribution(p, 2, 5000, 9, 1, 3));
  }
  SUBCASE("frequencies follow the distribution") {
    const std::vector<double> p{0.1, 0.0, 0.5, 0.4};
    const std::int64_t shots = 200000;
    const auto counts = sample_distribution(p, 2, shots, 3);
    CHECK(counts.count("01") == 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double f = static_cast<double>(counts.count(to_bitstring(i, 2))) / shots;
      CHECK(std::abs(f - p[i]) < 5 * std::sqrt(p[i] * (1 - p[i]) / shots) + 1e-12);
    }
  }
}

TEST_CASE("noisy evolution keeps a valid density matrix") {
  std::mt19937_64 rng(5);
  DeviceModel m = DeviceModel::uniform("t", 4, 0.01, 0.05, 0.02);
  m.gamma_amp = 0.02;
  m.gamma_phase = 0.03;
  for (int i = 0; i < 10; ++i) {
    const Circuit c = random_circuit(4, 15, rng);
    const DensityMatrix rho = evolve_density(c, &m, DensityMatrix::zero_state(4));
    CHECK_NOTHROW(rho.validate());
  }
}
