#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fec/statevector.hpp"

namespace fec {

/// Row-stochastic readout confusion for one qubit:
/// {{p(0|0), p(1|0)}, {p(0|1), p(1|1)}}.
using Confusion = std::array<std::array<double, 2>, 2>;

inline constexpr Confusion kPerfectReadout{{{1.0, 0.0}, {0.0, 1.0}}};

/// Gate and readout noise for a device. Immutable once validated.
class DeviceModel {
public:
  std::string name = "noiseless";
  int n_qubits = 0;
  int quantum_volume = 0;
  std::vector<double> p1;         // per-qubit single-qubit depolarizing probability
  double p2 = 0.0;                // two-qubit depolarizing probability (CX, CRY)
  std::vector<Confusion> readout; // per qubit
  double gamma_amp = 0.0;         // amplitude damping per gate, per acted qubit
  double gamma_phase = 0.0;       // phase damping per gate, per acted qubit

  static DeviceModel noiseless(int n_qubits);
  static DeviceModel uniform(std::string name, int n_qubits, double p1, double p2,
                             double readout_flip = 0.0);

  /// Probabilities in [0,1], confusion rows summing to 1 within 1e-12,
  /// per-qubit arrays of length n_qubits. Throws ValidationError.
  void validate() const;
  /// The same device restricted to its first n qubits.
  DeviceModel restricted(int n) const;
  bool has_gate_noise() const;
  bool has_readout_noise() const;
};

/// Kraus decomposition of a channel acting on `qubits`.
struct Channel {
  std::vector<int> qubits;
  std::vector<Eigen::MatrixXcd> kraus;

  /// max |sum K^dagger K - I|.
  double completeness_error() const;
};

Channel depolarizing_channel(const std::vector<int> &qubits, double p);
Channel amplitude_damping_channel(int qubit, double gamma);
Channel phase_damping_channel(int qubit, double gamma);
/// Kraus set of `second` after `first`, on the union of their qubits
/// (first's qubits must contain second's).
Channel compose(const Channel &first, const Channel &second);

/// Depolarizing with the arity-appropriate probability, followed by the
/// optional damping terms on every qubit the gate touches.
Channel gate_channel(const DeviceModel &model, const Gate &gate);

/// rho <- sum_k K rho K^dagger
void apply_channel(Eigen::MatrixXcd &rho, const Channel &channel, int n_qubits);

/// JSON calibration file with exactly the fields
/// name, n_qubits, quantum_volume, p1, p2, readout, gamma_amp, gamma_phase.
DeviceModel parse_device_model(const std::string &json_text,
                               const std::string &source = "<string>");
DeviceModel load_device_model(const std::filesystem::path &path);
std::string device_model_to_json(const DeviceModel &model);

/// Bundled calibration presets, e.g. "santiago-like".
std::vector<std::string> preset_names();
std::filesystem::path preset_directory();
DeviceModel load_preset(const std::string &name);

/// Sampled mode: every bit of every shot is flipped independently according
/// to its qubit's confusion row.
CountsTable apply_readout_error(const CountsTable &counts, const DeviceModel &model,
                                std::uint64_t seed);
/// Distribution mode: the exact confusion tensor product, no sampling.
std::vector<double> apply_readout_error(const std::vector<double> &distribution,
                                        const DeviceModel &model);

/// Effect of readout confusion on a measured single-qubit Pauli:
/// <s>_measured = scale * <s> + offset for s in {X, Y, Z}.
struct ReadoutAffine {
  double scale = 1.0;
  double offset = 0.0;
};
ReadoutAffine readout_affine(const Confusion &confusion);

} // namespace fec
