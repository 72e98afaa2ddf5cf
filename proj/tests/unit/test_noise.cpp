#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fec/errors.hpp"
#include "fec/noise.hpp"

using namespace fec;

namespace {

using Mat = Eigen::MatrixXcd;

Mat apply(const Channel &ch, Mat rho, int n) {
  apply_channel(rho, ch, n);
  return rho;
}

Mat projector(int n, std::uint64_t index) {
  Mat m = Mat::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1;
  return m;
}

std::string calibration_json(const std::string &extra = "") {
  return R"({"name": "t", "n_qubits": 2, "quantum_volume": 4, "p1": 0.001, "p2": 0.01,
             "readout": [[[0.98, 0.02], [0.05, 0.95]], [[0.97, 0.03], [0.04, 0.96]]],
             "gamma_amp": 0.0, "gamma_phase": 0.0)" +
         extra + "}";
}

} // namespace

TEST_CASE("depolarizing channel mixes toward the maximally mixed state") {
  for (double p : {0.0, 0.1, 0.5, 1.0}) {
    const Mat out1 = apply(depolarizing_channel({0}, p), projector(1, 0), 1);
    CHECK(std::abs(out1(0, 0).real() - (1 - p / 2)) < 1e-14);
    CHECK(std::abs(out1(1, 1).real() - p / 2) < 1e-14);

    const Mat out2 = apply(depolarizing_channel({0, 1}, p), projector(2, 0), 2);
    CHECK(std::abs(out2(0, 0).real() - ((1 - p) + p / 4)) < 1e-14);
    CHECK(std::abs(out2(3, 3).real() - p / 4) < 1e-14);
    CHECK(depolarizing_channel({0, 1}, p).completeness_error() < 1e-14);
  }
  CHECK_THROWS_AS(depolarizing_channel({0}, 1.5), ValidationError);
}

TEST_CASE("damping channels") {
  const double g = 0.3;
  const Mat decayed = apply(amplitude_damping_channel(0, g), projector(1, 1), 1);
  CHECK(std::abs(decayed(0, 0).real() - g) < 1e-14);
  CHECK(std::abs(decayed(1, 1).real() - (1 - g)) < 1e-14);

  Mat plus = Mat::Constant(2, 2, 0.5);
  const Mat dephased = apply(phase_damping_channel(0, g), plus, 1);
  CHECK(std::abs(dephased(0, 1).real() - 0.5 * std::sqrt(1 - g)) < 1e-14);
  CHECK(std::abs(dephased(0, 0).real() - 0.5) < 1e-14);
}

TEST_CASE("composed gate channels stay trace preserving") {
  DeviceModel m = DeviceModel::uniform("t", 3, 0.02, 0.07);
  m.gamma_amp = 0.05;
  m.gamma_phase = 0.04;
  CHECK(gate_channel(m, Gate::cry(0, 2, 0.3)).completeness_error() < 1e-13);
  CHECK(gate_channel(m, Gate::h(1)).completeness_error() < 1e-13);
  CHECK_THROWS_AS(gate_channel(m, Gate::x(3)), StructuralError);
}

TEST_CASE("calibration parsing") {
  const DeviceModel m = parse_device_model(calibration_json());
  CHECK(m.n_qubits == 2);
  CHECK(m.p1 == std::vector<double>{0.001, 0.001});
  CHECK(m.readout[1][1][0] == doctest::Approx(0.04));
  CHECK(parse_device_model(device_model_to_json(m)).readout == m.readout);

  CHECK_THROWS_WITH_AS(parse_device_model(calibration_json(R"(, "t1": 5)")), doctest::Contains("t1"), ParseError);
  CHECK_THROWS_WITH_AS(parse_device_model(R"({"name": "x", "n_qubits": 1, "p1": 0.1, "readout": [[[1,0],[0,1]]]})"),
                       doctest::Contains("p2"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_device_model(R"({"name": "x", "n_qubits": 1, "p1": 0.1, "p2": 0.1, "readout": [[[0.9,0.2],[0,1]]]})"),
      doctest::Contains("readout"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_device_model(R"({"name": "x", "n_qubits": 2, "p1": [0.1], "p2": 0.1, "readout": [[[1,0],[0,1]],[[1,0],[0,1]]]})"),
      doctest::Contains("p1"), ParseError);
  CHECK_THROWS_AS(parse_device_model("{not json"), ParseError);
}

TEST_CASE("bundled presets") {
  auto names = preset_names();
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"melbourne-like", "montreal-like", "mumbai-like", "santiago-like"});
  const DeviceModel mel = load_preset("melbourne-like");
  CHECK(mel.quantum_volume == 8);
  CHECK(mel.n_qubits >= 8);
  const DeviceModel san = load_preset("santiago-like");
  CHECK(san.quantum_volume == 32);
  CHECK(san.n_qubits == 5);
  CHECK(load_preset("montreal-like").quantum_volume == 128);
  CHECK(load_preset("mumbai-like").quantum_volume == 128);
  for (const auto &n : names) {
    const DeviceModel d = load_preset(n);
    CHECK(d.name == n);
    CHECK(d.has_gate_noise());
    CHECK(d.has_readout_noise());
  }
  CHECK_THROWS(load_preset("no-such-device"));
}

TEST_CASE("readout error") {
  const DeviceModel m = parse_device_model(calibration_json());
  SUBCASE("distribution mode is the confusion tensor product") {
    const auto out = apply_readout_error(std::vector<double>{1, 0, 0, 0}, m);
    CHECK(out[0] == doctest::Approx(0.98 * 0.97));
    CHECK(out[1] == doctest::Approx(0.98 * 0.03));
    CHECK(out[2] == doctest::Approx(0.02 * 0.97));
    CHECK(out[3] == doctest::Approx(0.02 * 0.03));
  }
  SUBCASE("affine form agrees with the distribution") {
    for (double p1 : {0.0, 0.3, 1.0}) {
      // qubit 0 in state with P(1) = p1, qubit 1 in |0>
      const auto out = apply_readout_error(std::vector<double>{1 - p1, 0, p1, 0}, m);
      const double z_measured = out[0] + out[1] - out[2] - out[3];
      const auto a = readout_affine(m.readout[0]);
      CHECK(z_measured == doctest::Approx(a.scale * (1 - 2 * p1) + a.offset));
    }
  }
  SUBCASE("sampled mode flips bits at the confusion rates") {
    const CountsTable zeros(100000, {{"00", 100000}});
    const auto noisy = apply_readout_error(zeros, m, 17);
    const double flip0 = static_cast<double>(noisy.count("10") + noisy.count("11")) / 100000;
    CHECK(std::abs(flip0 - 0.02) < 5 * std::sqrt(0.02 * 0.98 / 100000));
    CHECK(noisy == apply_readout_error(zeros, m, 17));
  }
}

TEST_CASE("restriction keeps the leading qubits") {
  const DeviceModel m = parse_device_model(calibration_json());
  const DeviceModel r = m.restricted(1);
  CHECK(r.n_qubits == 1);
  CHECK(r.readout.size() == 1);
  CHECK(r.readout[0] == m.readout[0]);
  CHECK_THROWS(m.restricted(3));
}
