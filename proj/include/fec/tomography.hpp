#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fec/mitigation.hpp"
#include "fec/noise.hpp"
#include "fec/rdm.hpp"
#include "fec/state_prep.hpp"
#include "fec/statevector.hpp"

namespace fec {

enum class Basis { X, Y, Z };

/// One measurement basis per qubit, written e.g. "XZZY" (qubit 0 first).
struct MeasurementSetting {
  std::vector<Basis> bases;

  std::string label() const;
  static MeasurementSetting parse(const std::string &label);
  /// All 3^n settings in lexicographic X < Y < Z order.
  static std::vector<MeasurementSetting> all(int n_qubits);

  friend bool operator==(const MeasurementSetting &, const MeasurementSetting &) = default;
};

/// Pauli string over {I, X, Y, Z}, qubit 0 first.
struct PauliTerm {
  std::string label;
  Complex coefficient{1.0, 0.0};

  int n_qubits() const { return static_cast<int>(label.size()); }
};

struct Expectation {
  double value = 0.0;
  double std_error = 0.0;
};

/// Parity average over the non-identity positions of `term`. Throws
/// ValidationError when a non-identity position disagrees with the setting.
Expectation expectation_from_counts(const CountsTable &counts, const PauliTerm &term,
                                    const MeasurementSetting &setting);

/// Keyed by MeasurementSetting::label().
using SettingCounts = std::map<std::string, CountsTable>;

/// Pauli expectations indexed by label code: two bits per qubit
/// (I=0, X=1, Y=2, Z=3), qubit 0 most significant.
std::size_t pauli_code(const std::string &label);
std::string pauli_label(std::size_t code, int n_qubits);

/// Exact <P> for every Pauli label, as measured through the device's readout
/// confusion when `readout` is non-null.
std::vector<double> exact_pauli_expectations(const DensityMatrix &rho, const DeviceModel *readout);
/// Averages each label over every setting that measures it.
std::vector<double> pauli_expectations_from_counts(const SettingCounts &counts, int n_qubits);

/// (1/2^n) sum_P <P> P.
Eigen::MatrixXcd linear_inversion(const std::vector<double> &expectations, int n_qubits);
/// Nearest unit-trace PSD matrix in Frobenius norm: eigenvalues shifted by a
/// common offset and clipped at zero so they sum to one.
DensityMatrix project_to_physical(const Eigen::MatrixXcd &estimate, int n_qubits);

/// Linear inversion plus physical projection. Requires all 3^n settings
/// with equal shots; otherwise ValidationError listing what is absent.
DensityMatrix reconstruct_density(const SettingCounts &counts);
DensityMatrix reconstruct_from_expectations(const std::vector<double> &expectations, int n_qubits);

/// Outcome distribution when measuring rho in `setting`.
std::vector<double> setting_distribution(const DensityMatrix &rho, const MeasurementSetting &setting);

/// Counts for every setting; setting s draws from the (seed, trial, s) stream.
SettingCounts measure_all_settings(const DensityMatrix &rho, const DeviceModel *noise,
                                   std::int64_t shots, std::uint64_t seed, std::uint32_t trial);

/// "# shots=<int> setting=<bases>" then "bitstring count" lines.
std::string write_counts(const CountsTable &counts, const MeasurementSetting &setting);
std::pair<MeasurementSetting, CountsTable> parse_counts(const std::string &text);

struct TrialStatistics {
  int n_trials = 0;
  double mean_lambda_D = 0.0;
  double mean_lambda_G = 0.0;
  double std_lambda_D = 0.0; // sample (n-1) standard deviation
  double std_lambda_G = 0.0;
  std::vector<Signatures> per_trial;

  static TrialStatistics from_trials(std::vector<Signatures> trials);
  /// Mean signatures, carrying standard deviations when n_trials >= 2.
  Signatures summary() const;
};

struct TrialOptions {
  std::int64_t shots = 8192;  // per setting; 0 selects exact-expectation mode
  int n_trials = 10;
  const DeviceModel *noise = nullptr;
  std::uint64_t seed = 0;
  std::optional<SupportSet> support; // when set, projected statistics are produced
  bool allow_fermionic_sampling = false;
};

struct TrialRun {
  TrialStatistics full;
  std::optional<TrialStatistics> projected;
};

/// Noisy (or ideal) density after running the synthesized preparation.
DensityMatrix prepared_density(const Representation &rep, const FecAngles &angles,
                               const DeviceModel *noise);
/// One tomographic estimate of `rho`: exact-expectation mode when shots == 0.
DensityMatrix tomograph(const DensityMatrix &rho, const DeviceModel *noise, std::int64_t shots,
                        std::uint64_t seed, std::uint32_t trial);

/// prepare -> execute -> tomograph -> signatures, n_trials times with derived
/// streams. Needs n_trials >= 1; standard deviations are reported from 2 up.
TrialRun run_trials(const Representation &rep, const FecAngles &angles, const TrialOptions &options);

/// The n_trials >= 2 form returning only the unmitigated statistics.
TrialStatistics run_trials(const Representation &rep, const FecAngles &angles, std::int64_t shots,
                           int n_trials, const DeviceModel *noise, std::uint64_t seed);

/// Columns: trial, lambda_D, lambda_G.
std::string trials_csv(const TrialStatistics &stats);

} // namespace fec
