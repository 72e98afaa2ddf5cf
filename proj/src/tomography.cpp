#include "fec/tomography.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fec/errors.hpp"

namespace fec {

namespace {

constexpr char kBasisChars[] = {'X', 'Y', 'Z'};

int basis_digit(Basis b) { return b == Basis::X ? 1 : b == Basis::Y ? 2 : 3; }

// Bit masks of a Pauli label over the computational basis:
// P|s> = i^{n_y} (-1)^{popcount(s & phase_mask)} |s ^ flip_mask>.
struct PauliMasks {
  std::uint64_t flip = 0;
  std::uint64_t phase = 0;
  int n_y = 0;
};

PauliMasks masks_of(std::size_t code, int n) {
  PauliMasks m;
  for (int q = 0; q < n; ++q) {
    const int d = static_cast<int>((code >> (2 * (n - 1 - q))) & 3U);
    const std::uint64_t bit = std::uint64_t{1} << bit_position(q, n);
    if (d == 1 || d == 2) m.flip |= bit;
    if (d == 2 || d == 3) m.phase |= bit;
    if (d == 2) ++m.n_y;
  }
  return m;
}

Complex i_power(int k) {
  switch (k & 3) {
  case 0: return {1, 0};
  case 1: return {0, 1};
  case 2: return {-1, 0};
  default: return {0, -1};
  }
}

// In-place Walsh-Hadamard transform: out[mask] = sum_x f[x] (-1)^{popcount(x & mask)}.
void walsh_hadamard(std::vector<double> &f) {
  for (std::size_t len = 1; len < f.size(); len <<= 1)
    for (std::size_t i = 0; i < f.size(); i += len << 1)
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = f[j], b = f[j + len];
        f[j] = a + b;
        f[j + len] = a - b;
      }
}

std::uint64_t split_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

// ---------------------------------------------------------------------------

std::string MeasurementSetting::label() const {
  std::string s;
  for (auto b : bases) s.push_back(kBasisChars[static_cast<int>(b)]);
  return s;
}

MeasurementSetting MeasurementSetting::parse(const std::string &label) {
  MeasurementSetting m;
  for (char c : label) {
    switch (c) {
    case 'X': m.bases.push_back(Basis::X); break;
    case 'Y': m.bases.push_back(Basis::Y); break;
    case 'Z': m.bases.push_back(Basis::Z); break;
    default: throw ParseError("invalid measurement setting '" + label + "'");
    }
  }
  if (m.bases.empty()) throw ParseError("empty measurement setting");
  return m;
}

std::vector<MeasurementSetting> MeasurementSetting::all(int n_qubits) {
  std::size_t total = 1;
  for (int q = 0; q < n_qubits; ++q) total *= 3;
  std::vector<MeasurementSetting> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    MeasurementSetting m;
    m.bases.resize(static_cast<std::size_t>(n_qubits));
    std::size_t v = idx;
    for (int q = n_qubits - 1; q >= 0; --q) {
      m.bases[static_cast<std::size_t>(q)] = static_cast<Basis>(v % 3);
      v /= 3;
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::size_t pauli_code(const std::string &label) {
  std::size_t code = 0;
  for (char c : label) {
    int d = 0;
    switch (c) {
    case 'I': d = 0; break;
    case 'X': d = 1; break;
    case 'Y': d = 2; break;
    case 'Z': d = 3; break;
    default: throw ParseError("invalid Pauli label '" + label + "'");
    }
    code = (code << 2) | static_cast<std::size_t>(d);
  }
  return code;
}

std::string pauli_label(std::size_t code, int n_qubits) {
  std::string s(static_cast<std::size_t>(n_qubits), 'I');
  for (int q = 0; q < n_qubits; ++q) s[static_cast<std::size_t>(q)] = "IXYZ"[(code >> (2 * (n_qubits - 1 - q))) & 3U];
  return s;
}

Expectation expectation_from_counts(const CountsTable &counts, const PauliTerm &term,
                                    const MeasurementSetting &setting) {
  const int n = term.n_qubits();
  if (static_cast<int>(setting.bases.size()) != n)
    throw StructuralError("Pauli term and setting have different lengths");
  if (counts.shots == 0) throw ValidationError("counts table is empty");
  if (!counts.counts.empty() && counts.n_bits() != n)
    throw StructuralError("counts and Pauli term have different lengths");
  std::vector<std::size_t> positions;
  for (int q = 0; q < n; ++q) {
    const char c = term.label[static_cast<std::size_t>(q)];
    if (c == 'I') continue;
    if (c != kBasisChars[static_cast<int>(setting.bases[static_cast<std::size_t>(q)])])
      throw ValidationError("term " + term.label + " is not measurable in setting " + setting.label());
    positions.push_back(static_cast<std::size_t>(q));
  }
  double acc = 0.0;
  for (const auto &[outcome, c] : counts.counts) {
    int parity = 0;
    for (auto p : positions) parity ^= outcome[p] == '1';
    acc += (parity ? -1.0 : 1.0) * static_cast<double>(c);
  }
  const double v = acc / static_cast<double>(counts.shots);
  return {v, std::sqrt(std::max(0.0, 1.0 - v * v) / static_cast<double>(counts.shots))};
}

std::vector<double> exact_pauli_expectations(const DensityMatrix &rho, const DeviceModel *readout) {
  const int n = rho.n_qubits();
  const std::size_t n_labels = std::size_t{1} << (2 * n);
  const std::uint64_t dim = std::uint64_t{1} << n;
  const auto &m = rho.elements();
  std::vector<double> ev(n_labels);
  for (std::size_t code = 0; code < n_labels; ++code) {
    const auto pm = masks_of(code, n);
    Complex acc = 0.0;
    for (std::uint64_t s = 0; s < dim; ++s) {
      const double sign = (std::popcount(s & pm.phase) & 1) ? -1.0 : 1.0;
      acc += sign * m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s ^ pm.flip));
    }
    ev[code] = (i_power(pm.n_y) * acc).real();
  }
  if (readout && readout->has_readout_noise()) {
    if (readout->n_qubits < n) throw StructuralError("device model narrower than the state");
    // Measured sigma_q -> scale * sigma_q + offset, independently per qubit.
    for (int q = 0; q < n; ++q) {
      const auto aff = readout_affine(readout->readout[static_cast<std::size_t>(q)]);
      const int shift = 2 * (n - 1 - q);
      for (std::size_t code = 0; code < n_labels; ++code) {
        if (((code >> shift) & 3U) == 0) continue;
        const std::size_t identity_here = code & ~(std::size_t{3} << shift);
        ev[code] = aff.scale * ev[code] + aff.offset * ev[identity_here];
      }
    }
  }
  return ev;
}

std::vector<double> pauli_expectations_from_counts(const SettingCounts &counts, int n) {
  const std::size_t n_labels = std::size_t{1} << (2 * n);
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> sum(n_labels, 0.0);
  std::vector<int> seen(n_labels, 0);
  for (const auto &[label, table] : counts) {
    const auto setting = MeasurementSetting::parse(label);
    if (static_cast<int>(setting.bases.size()) != n) throw StructuralError("setting width mismatch");
    std::vector<double> f(dim, 0.0);
    for (const auto &[outcome, c] : table.counts)
      f[from_bitstring(outcome)] = static_cast<double>(c) / static_cast<double>(table.shots);
    walsh_hadamard(f);
    for (std::size_t mask = 0; mask < dim; ++mask) {
      std::size_t code = 0;
      for (int q = 0; q < n; ++q)
        if ((mask >> bit_position(q, n)) & 1U)
          code |= static_cast<std::size_t>(basis_digit(setting.bases[static_cast<std::size_t>(q)]))
                  << (2 * (n - 1 - q));
      sum[code] += f[mask];
      ++seen[code];
    }
  }
  std::vector<double> ev(n_labels);
  for (std::size_t code = 0; code < n_labels; ++code) {
    if (seen[code] == 0)
      throw ValidationError("no setting measures Pauli " + pauli_label(code, n));
    ev[code] = sum[code] / seen[code];
  }
  return ev;
}

Eigen::MatrixXcd linear_inversion(const std::vector<double> &expectations, int n) {
  const std::size_t n_labels = std::size_t{1} << (2 * n);
  if (expectations.size() != n_labels) throw StructuralError("expectation vector has wrong length");
  const std::uint64_t dim = std::uint64_t{1} << n;
  Eigen::MatrixXcd est = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const double scale = 1.0 / static_cast<double>(dim);
  for (std::size_t code = 0; code < n_labels; ++code) {
    if (expectations[code] == 0.0) continue;
    const auto pm = masks_of(code, n);
    const Complex base = i_power(pm.n_y) * (expectations[code] * scale);
    for (std::uint64_t s = 0; s < dim; ++s) {
      const double sign = (std::popcount(s & pm.phase) & 1) ? -1.0 : 1.0;
      est(static_cast<Eigen::Index>(s ^ pm.flip), static_cast<Eigen::Index>(s)) += sign * base;
    }
  }
  return est;
}

DensityMatrix project_to_physical(const Eigen::MatrixXcd &estimate, int n) {
  const Eigen::MatrixXcd herm = (estimate + estimate.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed in physical projection");
  // Euclidean projection of the spectrum onto the probability simplex: the
  // Frobenius-nearest unit-trace PSD matrix. Negative mass is clipped and the
  // remainder shifted uniformly rather than rescaled.
  Eigen::VectorXd w = es.eigenvalues() / herm.trace().real();
  if (!w.allFinite()) throw NumericalError("estimate has a non-finite or zero trace");
  std::vector<double> sorted(w.data(), w.data() + w.size());
  std::sort(sorted.rbegin(), sorted.rend());
  double cumulative = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0) shift = t;
  }
  w = (w.array() - shift).cwiseMax(0.0);
  w /= w.sum();
  const auto &v = es.eigenvectors();
  Eigen::MatrixXcd rho = v * w.cast<Complex>().asDiagonal() * v.adjoint();
  rho = (rho + rho.adjoint()) / 2.0;
  return DensityMatrix(n, std::move(rho));
}

DensityMatrix reconstruct_from_expectations(const std::vector<double> &expectations, int n) {
  return project_to_physical(linear_inversion(expectations, n), n);
}

DensityMatrix reconstruct_density(const SettingCounts &counts) {
  if (counts.empty()) throw ValidationError("no measurement settings supplied");
  const int n = static_cast<int>(counts.begin()->first.size());
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto &s : MeasurementSetting::all(n)) {
    if (counts.count(s.label())) continue;
    if (n_missing++ < 20) missing += (missing.empty() ? "" : ", ") + s.label();
  }
  if (n_missing)
    throw ValidationError("missing " + std::to_string(n_missing) + " measurement settings: " + missing +
                          (n_missing > 20 ? ", ..." : ""));
  const std::uint64_t shots = counts.begin()->second.shots;
  for (const auto &[label, table] : counts)
    if (table.shots != shots) throw ValidationError("setting " + label + " has unequal shot count");
  return reconstruct_from_expectations(pauli_expectations_from_counts(counts, n), n);
}

std::vector<double> setting_distribution(const DensityMatrix &rho, const MeasurementSetting &setting) {
  const int n = rho.n_qubits();
  if (static_cast<int>(setting.bases.size()) != n) throw StructuralError("setting width mismatch");
  const Complex i{0.0, 1.0};
  Eigen::MatrixXcd to_x(2, 2), to_y(2, 2);
  to_x << M_SQRT1_2, M_SQRT1_2, M_SQRT1_2, -M_SQRT1_2;      // H
  to_y << M_SQRT1_2, -i * M_SQRT1_2, M_SQRT1_2, i * M_SQRT1_2; // H S^dagger
  Eigen::MatrixXcd m = rho.elements();
  for (int q = 0; q < n; ++q) {
    const Basis b = setting.bases[static_cast<std::size_t>(q)];
    if (b == Basis::Z) continue;
    const LocalOperator op{{q}, b == Basis::X ? to_x : to_y};
    apply_left(m, op, n);
    apply_right_adjoint(m, op, n);
  }
  std::vector<double> p(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) p[static_cast<std::size_t>(k)] = std::max(0.0, m(k, k).real());
  return p;
}

SettingCounts measure_all_settings(const DensityMatrix &rho, const DeviceModel *noise,
                                   std::int64_t shots, std::uint64_t seed, std::uint32_t trial) {
  const int n = rho.n_qubits();
  std::optional<DeviceModel> readout;
  if (noise && noise->has_readout_noise()) readout = noise->restricted(n);
  SettingCounts out;
  const auto settings = MeasurementSetting::all(n);
  for (std::size_t s = 0; s < settings.size(); ++s) {
    auto dist = setting_distribution(rho, settings[s]);
    if (readout) dist = apply_readout_error(dist, *readout);
    out.emplace(settings[s].label(),
                sample_distribution(dist, n, shots, seed, trial, static_cast<std::uint32_t>(s)));
  }
  return out;
}

std::string write_counts(const CountsTable &counts, const MeasurementSetting &setting) {
  std::ostringstream out;
  out << "# shots=" << counts.shots << " setting=" << setting.label() << '\n';
  for (const auto &[outcome, c] : counts.counts) out << outcome << ' ' << c << '\n';
  return out.str();
}

std::pair<MeasurementSetting, CountsTable> parse_counts(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("counts file: empty");
  unsigned long long shots = 0;
  char setting_buf[64] = {0};
  if (std::sscanf(line.c_str(), "# shots=%llu setting=%63s", &shots, setting_buf) != 2)
    throw ParseError("counts file: bad header '" + line + "'");
  auto setting = MeasurementSetting::parse(setting_buf);
  std::map<std::string, std::uint64_t> counts;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string bits;
    long long c = -1;
    if (!(ls >> bits >> c) || c < 0 || bits.size() != setting.bases.size() ||
        bits.find_first_not_of("01") != std::string::npos)
      throw ParseError("counts file line " + std::to_string(line_no) + ": '" + line + "'");
    counts[bits] += static_cast<std::uint64_t>(c);
  }
  try {
    return {setting, CountsTable(shots, std::move(counts))};
  } catch (const std::invalid_argument &e) {
    throw ParseError(std::string("counts file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

TrialStatistics TrialStatistics::from_trials(std::vector<Signatures> trials) {
  TrialStatistics st;
  st.n_trials = static_cast<int>(trials.size());
  if (trials.empty()) throw ValidationError("no trials");
  // Welford updates: identical trials give a mean equal to them and zero spread.
  double md = 0.0, mg = 0.0, vd = 0.0, vg = 0.0;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const double w = 1.0 / static_cast<double>(k + 1);
    const double dd = trials[k].lambda_D - md, dg = trials[k].lambda_G - mg;
    md += dd * w;
    mg += dg * w;
    vd += dd * (trials[k].lambda_D - md);
    vg += dg * (trials[k].lambda_G - mg);
  }
  st.mean_lambda_D = md;
  st.mean_lambda_G = mg;
  if (trials.size() >= 2) {
    const double n1 = static_cast<double>(trials.size() - 1);
    st.std_lambda_D = std::sqrt(vd / n1);
    st.std_lambda_G = std::sqrt(vg / n1);
  }
  st.per_trial = std::move(trials);
  return st;
}

Signatures TrialStatistics::summary() const {
  Signatures s;
  s.lambda_D = mean_lambda_D;
  s.lambda_G = mean_lambda_G;
  if (n_trials >= 2) {
    s.std_D = std_lambda_D;
    s.std_G = std_lambda_G;
  }
  return s;
}

DensityMatrix prepared_density(const Representation &rep, const FecAngles &angles,
                               const DeviceModel *noise) {
  const Circuit circ = synthesize_circuit(rep, angles);
  if (!noise || !noise->has_gate_noise())
    return DensityMatrix::from_pure(apply_circuit(circ, StateVector::zero(circ.n_qubits())));
  return evolve_density(circ, noise, DensityMatrix::zero_state(circ.n_qubits()));
}

DensityMatrix tomograph(const DensityMatrix &rho, const DeviceModel *noise, std::int64_t shots,
                        std::uint64_t seed, std::uint32_t trial) {
  if (shots < 0) throw ValidationError("shots must be non-negative");
  if (shots == 0)
    return reconstruct_from_expectations(exact_pauli_expectations(rho, noise), rho.n_qubits());
  return reconstruct_density(measure_all_settings(rho, noise, shots, seed, trial));
}

TrialRun run_trials(const Representation &rep, const FecAngles &angles, const TrialOptions &options) {
  if (options.n_trials < 1) throw ValidationError("n_trials must be at least 1");
  if (options.shots < 0) throw ValidationError("shots must be non-negative");
  if (rep.encoding == Encoding::Fermionic && options.shots > 0 && !options.allow_fermionic_sampling)
    throw ValidationError("sampled tomography of the fermionic register needs 3^" +
                          std::to_string(rep.n_qubits()) +
                          " settings; enable it explicitly or use exact mode (shots = 0)");
  const DensityMatrix rho = prepared_density(rep, angles, options.noise);
  const std::uint64_t stream = split_mix(options.seed);

  std::vector<Signatures> full, projected;
  std::optional<DensityMatrix> exact_estimate;
  for (int t = 0; t < options.n_trials; ++t) {
    const DensityMatrix est =
        options.shots == 0
            ? (exact_estimate ? *exact_estimate
                              : *(exact_estimate = tomograph(rho, options.noise, 0, stream, 0)))
            : tomograph(rho, options.noise, options.shots, stream, static_cast<std::uint32_t>(t));
    full.push_back(signatures(est, rep));
    if (options.support) projected.push_back(signatures(project_density(est, *options.support), rep));
  }
  TrialRun run{TrialStatistics::from_trials(std::move(full)), std::nullopt};
  if (options.support) run.projected = TrialStatistics::from_trials(std::move(projected));
  return run;
}

TrialStatistics run_trials(const Representation &rep, const FecAngles &angles, std::int64_t shots,
                           int n_trials, const DeviceModel *noise, std::uint64_t seed) {
  if (n_trials < 2) throw ValidationError("n_trials must be at least 2 for standard deviations");
  TrialOptions opt;
  opt.shots = shots;
  opt.n_trials = n_trials;
  opt.noise = noise;
  opt.seed = seed;
  opt.allow_fermionic_sampling = true;
  return run_trials(rep, angles, opt).full;
}

std::string trials_csv(const TrialStatistics &stats) {
  std::string out = "trial,lambda_D,lambda_G\n";
  for (std::size_t t = 0; t < stats.per_trial.size(); ++t)
    out += std::to_string(t) + "," + fmt17(stats.per_trial[t].lambda_D) + "," +
           fmt17(stats.per_trial[t].lambda_G) + "\n";
  return out;
}

} // namespace fec
