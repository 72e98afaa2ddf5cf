#include "fec/state_prep.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fec/errors.hpp"

namespace fec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSynthesisTol = 1e-10;

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// Uniformly controlled rotation: for each assignment c of `controls`
// (controls[0] most significant) apply R(angles[c]) on `target`.
void multiplexed_rotation(Circuit &out, GateKind kind, const std::vector<int> &controls,
                          int target, const std::vector<double> &angles) {
  if (controls.empty()) {
    if (angles[0] != 0.0)
      out.add(kind == GateKind::RY ? Gate::ry(target, angles[0]) : Gate::rz(target, angles[0]));
    return;
  }
  bool all_zero = true;
  for (double a : angles) all_zero = all_zero && a == 0.0;
  if (all_zero) return;

  const std::vector<int> rest(controls.begin(), controls.end() - 1);
  const int last = controls.back();
  const std::size_t half = angles.size() / 2;
  std::vector<double> sum(half), diff(half);
  bool diff_zero = true;
  for (std::size_t c = 0; c < half; ++c) {
    sum[c] = (angles[2 * c] + angles[2 * c + 1]) / 2;
    diff[c] = (angles[2 * c] - angles[2 * c + 1]) / 2;
    diff_zero = diff_zero && diff[c] == 0.0;
  }
  multiplexed_rotation(out, kind, rest, target, sum);
  if (diff_zero) return;
  // last = 0: R(sum) R(diff); last = 1: R(sum) X R(diff) X = R(sum - diff).
  out.add(Gate::cx(last, target));
  multiplexed_rotation(out, kind, rest, target, diff);
  out.add(Gate::cx(last, target));
}

// Drops adjacent identical CX pairs left behind by the recursion.
Circuit cancel_cx_pairs(const Circuit &c) {
  std::vector<Gate> kept;
  for (const auto &g : c.gates()) {
    if (g.kind == GateKind::CX && !kept.empty() && kept.back() == g) {
      kept.pop_back();
      continue;
    }
    kept.push_back(g);
  }
  return Circuit(c.n_qubits(), std::move(kept));
}

// CCRY built from CRY and CX.
void add_ccry(Circuit &c, int c1, int c2, int target, double theta) {
  c.add(Gate::cry(c1, target, theta / 2));
  c.add(Gate::cx(c1, c2));
  c.add(Gate::cry(c2, target, -theta / 2));
  c.add(Gate::cx(c1, c2));
  c.add(Gate::cry(c2, target, theta / 2));
}

// Four-geminal FEC preparation. Writing the target as
//   alpha (|1100> + |0011>) + beta (|01>+|10>)(|01>+|10>),
// qubit 1 first holds the branch flag m, qubit 0 a uniform bit a. Then
// b0 = NOT a (m = 0) or uniform (m = 1), a1 = a XOR m and b1 = b0 XOR m.
Circuit default_geminal_circuit(const FecAngles &angles) {
  const double c = std::cos(angles.theta1() / 2), s = std::sin(angles.theta1() / 2);
  const Complex phase = std::polar(1.0, angles.theta2());
  const Complex alpha = c / std::sqrt(2.0) + phase * (s / std::sqrt(6.0));
  const Complex beta = phase * (s / std::sqrt(6.0));
  const double branch = 2.0 * std::atan2(2.0 * std::abs(beta), std::sqrt(2.0) * std::abs(alpha));
  double relative = std::arg(beta) - std::arg(alpha);
  if (std::abs(alpha) == 0.0 || std::abs(beta) == 0.0) relative = 0.0;
  relative = std::remainder(relative, kTwoPi);

  Circuit circ(4);
  circ.add(Gate::h(0));
  circ.add(Gate::ry(1, branch));
  if (relative != 0.0) circ.add(Gate::rz(1, relative));
  circ.add(Gate::cry(1, 2, std::numbers::pi / 2));
  circ.add(Gate::cx(0, 2));
  circ.add(Gate::x(2));
  circ.add(Gate::cx(1, 3));
  circ.add(Gate::cx(2, 3));
  circ.add(Gate::cx(0, 1));
  return circ;
}

} // namespace

std::string_view encoding_name(Encoding e) {
  return e == Encoding::Bosonic ? "bosonic" : "fermionic";
}

Encoding parse_encoding(std::string_view name) {
  if (name == "bosonic") return Encoding::Bosonic;
  if (name == "fermionic") return Encoding::Fermionic;
  throw ValidationError("unknown representation '" + std::string(name) +
                        "' (expected bosonic or fermionic)");
}

void Representation::validate() const {
  if (n_orbitals <= 0 || n_orbitals % 2 != 0)
    throw ValidationError("orbital count must be positive and even");
  if (n_fermions <= 0 || n_fermions % 2 != 0)
    throw ValidationError("fermion count must be positive and even");
  if (n_fermions >= n_orbitals)
    throw ValidationError("fermion count must be below the orbital count");
  if (n_qubits() > kMaxQubits)
    throw ValidationError(std::string(encoding_name(encoding)) + " representation needs " +
                          std::to_string(n_qubits()) + " qubits, limit is " +
                          std::to_string(kMaxQubits));
}

FecAngles::FecAngles(double theta1, double theta2) {
  if (!std::isfinite(theta1) || !std::isfinite(theta2))
    throw ValidationError("FEC angles must be finite");
  theta1_ = wrap_angle(theta1);
  theta2_ = wrap_angle(theta2);
}

StateVector ghz_state(int n_qubits) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
  v[0] = M_SQRT1_2;
  v[v.size() - 1] = M_SQRT1_2;
  return StateVector(n_qubits, std::move(v));
}

StateVector dicke_state(int n_qubits, int weight) {
  if (weight < 0 || weight > n_qubits) throw ValidationError("Dicke weight out of range");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::popcount(static_cast<std::uint64_t>(i)) == weight) v[i] = 1.0;
  return StateVector::normalized(n_qubits, std::move(v));
}

std::uint64_t pair_fanout_index(std::uint64_t geminal_index, int n_geminals) {
  std::uint64_t out = 0;
  for (int q = 0; q < n_geminals; ++q) {
    if ((geminal_index >> bit_position(q, n_geminals)) & 1U) {
      out |= std::uint64_t{1} << bit_position(2 * q, 2 * n_geminals);
      out |= std::uint64_t{1} << bit_position(2 * q + 1, 2 * n_geminals);
    }
  }
  return out;
}

StateVector pair_fanout(const StateVector &geminal_state) {
  const int g = geminal_state.n_qubits();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << (2 * g));
  for (std::uint64_t s = 0; s < geminal_state.dimension(); ++s)
    v[static_cast<Eigen::Index>(pair_fanout_index(s, g))] = geminal_state[s];
  return StateVector(2 * g, std::move(v));
}

namespace {

StateVector for_encoding(const Representation &rep, StateVector geminal) {
  return rep.encoding == Encoding::Bosonic ? geminal : pair_fanout(geminal);
}

} // namespace

StateVector build_psi_G(const Representation &rep) {
  rep.validate();
  const int g = rep.n_geminals(), p = rep.n_pairs();
  const std::uint64_t low = (std::uint64_t{1} << p) - 1;       // ...0011
  const std::uint64_t high = low << (g - p);                    // 1100...
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << g);
  v[static_cast<Eigen::Index>(high)] += M_SQRT1_2;
  v[static_cast<Eigen::Index>(low)] += M_SQRT1_2;
  return for_encoding(rep, StateVector::normalized(g, std::move(v)));
}

StateVector build_psi_D(const Representation &rep) {
  rep.validate();
  return for_encoding(rep, dicke_state(rep.n_geminals(), rep.n_pairs()));
}

FecTarget build_fec_target(const Representation &rep, const FecAngles &angles) {
  StateVector psi_D = build_psi_D(rep);
  StateVector psi_G = build_psi_G(rep);
  const double delta = 2.0 * psi_D.inner(psi_G).real();
  const Eigen::VectorXcd mix = std::cos(angles.theta1() / 2) * psi_G.amplitudes() +
                               std::polar(1.0, angles.theta2()) * std::sin(angles.theta1() / 2) *
                                   psi_D.amplitudes();
  StateVector psi = StateVector::normalized(psi_D.n_qubits(), mix);
  return FecTarget{std::move(psi_D), std::move(psi_G), delta, std::move(psi)};
}

StateVector entangled_condensate(const StateVector &psi_D, const StateVector &psi_G) {
  const double delta = 2.0 * psi_D.inner(psi_G).real();
  const double sign = delta < 0.0 ? -1.0 : 1.0;
  const double norm = std::sqrt(2.0 - std::abs(delta));
  if (!(norm > 0.0)) throw ValidationError("psi_D and psi_G coincide; |Delta| = 2");
  return StateVector::normalized(psi_D.n_qubits(),
                                 (psi_D.amplitudes() - sign * psi_G.amplitudes()) / norm);
}

Circuit synthesize_state(const StateVector &target) {
  const int n = target.n_qubits();
  const auto &amps = target.amplitudes();
  Circuit circ(n);

  // Magnitudes: level k splits each prefix of qubits 0..k-1 between qubit k = 0/1.
  std::vector<double> weight(target.dimension());
  for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = std::norm(amps[static_cast<Eigen::Index>(i)]);
  std::vector<std::vector<double>> prefix_weight(static_cast<std::size_t>(n + 1));
  prefix_weight[static_cast<std::size_t>(n)] = weight;
  for (int k = n - 1; k >= 0; --k) {
    const auto &finer = prefix_weight[static_cast<std::size_t>(k + 1)];
    std::vector<double> coarse(finer.size() / 2);
    for (std::size_t c = 0; c < coarse.size(); ++c) coarse[c] = finer[2 * c] + finer[2 * c + 1];
    prefix_weight[static_cast<std::size_t>(k)] = std::move(coarse);
  }
  std::vector<int> controls;
  for (int k = 0; k < n; ++k) {
    const auto &finer = prefix_weight[static_cast<std::size_t>(k + 1)];
    std::vector<double> angles(finer.size() / 2);
    for (std::size_t c = 0; c < angles.size(); ++c)
      angles[c] = 2.0 * std::atan2(std::sqrt(finer[2 * c + 1]), std::sqrt(finer[2 * c]));
    multiplexed_rotation(circ, GateKind::RY, controls, k, angles);
    controls.push_back(k);
  }

  // Phases: peel a diagonal unitary one qubit at a time (global phase dropped).
  std::vector<double> phase(target.dimension());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    const Complex a = amps[static_cast<Eigen::Index>(i)];
    phase[i] = std::abs(a) > 0.0 ? std::arg(a) : 0.0;
  }
  for (int t = n - 1; t >= 0; --t) {
    std::vector<double> mean(phase.size() / 2), diff(phase.size() / 2);
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] = (phase[2 * c] + phase[2 * c + 1]) / 2;
      diff[c] = phase[2 * c + 1] - phase[2 * c];
    }
    controls.pop_back();
    multiplexed_rotation(circ, GateKind::RZ, controls, t, diff);
    phase = std::move(mean);
  }
  return cancel_cx_pairs(circ);
}

Circuit ghz_circuit(int n_qubits) {
  Circuit c(n_qubits);
  c.add(Gate::h(0));
  for (int q = 0; q + 1 < n_qubits; ++q) c.add(Gate::cx(q, q + 1));
  return c;
}

Circuit dicke_circuit(int n_qubits, int weight) {
  if (weight < 0 || weight > n_qubits) throw ValidationError("Dicke weight out of range");
  Circuit c(n_qubits);
  const int n = n_qubits, k = weight;
  for (int q = n - k; q < n; ++q) c.add(Gate::x(q));
  if (k == 0 || k == n) return c;

  // Split & cyclic shift on the first l qubits, touching the last m+1 of them.
  // 1-based qubit j maps to index j - 1.
  auto scs = [&](int l, int m) {
    const int a = l - 2, b = l - 1;
    c.add(Gate::cx(a, b));
    c.add(Gate::cry(b, a, 2.0 * std::acos(std::sqrt(1.0 / l))));
    c.add(Gate::cx(a, b));
    for (int i = 2; i <= m; ++i) {
      const int t = l - i - 1, mid = l - i;
      c.add(Gate::cx(t, b));
      add_ccry(c, b, mid, t, 2.0 * std::acos(std::sqrt(static_cast<double>(i) / l)));
      c.add(Gate::cx(t, b));
    }
  };
  for (int l = n; l > k; --l) scs(l, k);
  for (int l = k; l >= 2; --l) scs(l, l - 1);
  return c;
}

Circuit fan_out_circuit(const Circuit &geminal_circuit) {
  const int g = geminal_circuit.n_qubits();
  Circuit out(2 * g);
  for (Gate gate : geminal_circuit.gates()) {
    gate.target *= 2;
    if (gate.control) gate.control = *gate.control * 2;
    out.add(gate);
  }
  for (int q = 0; q < g; ++q) out.add(Gate::cx(2 * q, 2 * q + 1));
  return out;
}

Circuit synthesize_circuit(const Representation &rep, const FecAngles &angles) {
  rep.validate();
  const FecTarget target = build_fec_target(rep, angles);
  const StateVector geminal_target =
      build_fec_target(Representation::bosonic(rep.n_fermions, rep.n_orbitals), angles).psi;

  const Circuit geminal = rep.is_default_size() ? default_geminal_circuit(angles)
                                                : synthesize_state(geminal_target);
  Circuit circ = rep.encoding == Encoding::Bosonic ? geminal : fan_out_circuit(geminal);

  const double achieved =
      apply_circuit(circ, StateVector::zero(circ.n_qubits())).overlap(target.psi);
  if (achieved < 1.0 - kSynthesisTol) {
    std::ostringstream msg;
    msg.precision(15);
    msg << "circuit synthesis missed target at (" << angles.theta1() << ", " << angles.theta2()
        << "): overlap " << achieved;
    throw NumericalError(msg.str());
  }
  return circ;
}

} // namespace fec
