#include "fec/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fec/errors.hpp"
#include "fec/rng.hpp"

#ifndef FEC_PRESET_DIR
#define FEC_PRESET_DIR "data/presets"
#endif

namespace fec {

using nlohmann::json;

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

Eigen::Matrix2cd pauli(int which) {
  Eigen::Matrix2cd m;
  const Complex i{0.0, 1.0};
  switch (which) {
  case 0: m << 1, 0, 0, 1; break;
  case 1: m << 0, 1, 1, 0; break;
  case 2: m << 0, -i, i, 0; break;
  default: m << 1, 0, 0, -1; break;
  }
  return m;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Lift an operator on `sub` into the local space of `full` (sub within full).
Eigen::MatrixXcd embed(const Eigen::MatrixXcd &op, const std::vector<int> &sub,
                       const std::vector<int> &full) {
  if (sub == full) return op;
  const int k = static_cast<int>(full.size());
  const int ks = static_cast<int>(sub.size());
  std::vector<int> pos(static_cast<std::size_t>(ks));
  for (int j = 0; j < ks; ++j) {
    auto it = std::find(full.begin(), full.end(), sub[static_cast<std::size_t>(j)]);
    if (it == full.end()) throw StructuralError("channel qubits are not nested");
    pos[static_cast<std::size_t>(j)] = static_cast<int>(it - full.begin());
  }
  const Eigen::Index dim = Eigen::Index{1} << k;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  auto sub_index = [&](Eigen::Index idx) {
    Eigen::Index s = 0;
    for (int j = 0; j < ks; ++j) s = (s << 1) | ((idx >> (k - 1 - pos[static_cast<std::size_t>(j)])) & 1);
    return s;
  };
  Eigen::Index other_mask = 0;
  for (int j = 0; j < k; ++j)
    if (std::find(pos.begin(), pos.end(), j) == pos.end()) other_mask |= Eigen::Index{1} << (k - 1 - j);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c)
      if ((r & other_mask) == (c & other_mask)) out(r, c) = op(sub_index(r), sub_index(c));
  return out;
}

double number_at(const json &j, const std::string &path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

} // namespace

// ---------------------------------------------------------------------------
// DeviceModel

DeviceModel DeviceModel::noiseless(int n_qubits) { return uniform("noiseless", n_qubits, 0.0, 0.0); }

DeviceModel DeviceModel::uniform(std::string name, int n_qubits, double p1, double p2,
                                 double readout_flip) {
  DeviceModel m;
  m.name = std::move(name);
  m.n_qubits = n_qubits;
  m.p1.assign(static_cast<std::size_t>(n_qubits), p1);
  m.p2 = p2;
  m.readout.assign(static_cast<std::size_t>(n_qubits),
                   Confusion{{{1.0 - readout_flip, readout_flip}, {readout_flip, 1.0 - readout_flip}}});
  m.validate();
  return m;
}

void DeviceModel::validate() const {
  if (n_qubits < 1) throw ValidationError("device '" + name + "': n_qubits must be positive");
  if (p1.size() != static_cast<std::size_t>(n_qubits))
    throw ValidationError("device '" + name + "': p1 must have n_qubits entries");
  if (readout.size() != static_cast<std::size_t>(n_qubits))
    throw ValidationError("device '" + name + "': readout must have n_qubits entries");
  for (std::size_t q = 0; q < p1.size(); ++q)
    if (!is_probability(p1[q]))
      throw ValidationError("device '" + name + "': p1[" + std::to_string(q) + "] not a probability");
  if (!is_probability(p2)) throw ValidationError("device '" + name + "': p2 not a probability");
  if (!is_probability(gamma_amp)) throw ValidationError("device '" + name + "': gamma_amp not a probability");
  if (!is_probability(gamma_phase))
    throw ValidationError("device '" + name + "': gamma_phase not a probability");
  for (std::size_t q = 0; q < readout.size(); ++q) {
    for (int row = 0; row < 2; ++row) {
      const auto &r = readout[q][static_cast<std::size_t>(row)];
      if (!is_probability(r[0]) || !is_probability(r[1]) || std::abs(r[0] + r[1] - 1.0) > 1e-12)
        throw ValidationError("device '" + name + "': readout[" + std::to_string(q) + "][" +
                              std::to_string(row) + "] is not a probability row summing to 1");
    }
  }
}

DeviceModel DeviceModel::restricted(int n) const {
  if (n < 1 || n > n_qubits)
    throw StructuralError("device '" + name + "' has " + std::to_string(n_qubits) +
                          " qubits, cannot restrict to " + std::to_string(n));
  DeviceModel m = *this;
  m.n_qubits = n;
  m.p1.resize(static_cast<std::size_t>(n));
  m.readout.resize(static_cast<std::size_t>(n));
  return m;
}

bool DeviceModel::has_gate_noise() const {
  return p2 > 0.0 || gamma_amp > 0.0 || gamma_phase > 0.0 ||
         std::any_of(p1.begin(), p1.end(), [](double p) { return p > 0.0; });
}

bool DeviceModel::has_readout_noise() const {
  return std::any_of(readout.begin(), readout.end(),
                     [](const Confusion &c) { return c[0][1] > 0.0 || c[1][0] > 0.0; });
}

// ---------------------------------------------------------------------------
// Channels

double Channel::completeness_error() const {
  const Eigen::Index dim = Eigen::Index{1} << qubits.size();
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto &k : kraus) sum += k.adjoint() * k;
  return (sum - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
}

Channel depolarizing_channel(const std::vector<int> &qubits, double p) {
  if (!is_probability(p)) throw ValidationError("depolarizing probability outside [0,1]");
  const int k = static_cast<int>(qubits.size());
  const Eigen::Index dim = Eigen::Index{1} << k;
  Channel ch{qubits, {}};
  if (p == 0.0) {
    ch.kraus.push_back(Eigen::MatrixXcd::Identity(dim, dim));
    return ch;
  }
  const int n_terms = 1 << (2 * k);
  const double w_identity = std::sqrt(1.0 - p * (n_terms - 1) / n_terms);
  const double w_pauli = std::sqrt(p / n_terms);
  for (int label = 0; label < n_terms; ++label) {
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
    for (int j = 0; j < k; ++j) op = kron(op, pauli((label >> (2 * (k - 1 - j))) & 3));
    ch.kraus.push_back((label == 0 ? w_identity : w_pauli) * op);
  }
  return ch;
}

Channel amplitude_damping_channel(int qubit, double gamma) {
  if (!is_probability(gamma)) throw ValidationError("damping rate outside [0,1]");
  Eigen::MatrixXcd k0(2, 2), k1(2, 2);
  k0 << 1, 0, 0, std::sqrt(1 - gamma);
  k1 << 0, std::sqrt(gamma), 0, 0;
  return Channel{{qubit}, {k0, k1}};
}

Channel phase_damping_channel(int qubit, double gamma) {
  if (!is_probability(gamma)) throw ValidationError("damping rate outside [0,1]");
  Eigen::MatrixXcd k0(2, 2), k1(2, 2);
  k0 << 1, 0, 0, std::sqrt(1 - gamma);
  k1 << 0, 0, 0, std::sqrt(gamma);
  return Channel{{qubit}, {k0, k1}};
}

Channel compose(const Channel &first, const Channel &second) {
  Channel out{first.qubits, {}};
  for (const auto &s : second.kraus) {
    const Eigen::MatrixXcd lifted = embed(s, second.qubits, first.qubits);
    for (const auto &f : first.kraus) {
      Eigen::MatrixXcd prod = lifted * f;
      if (prod.cwiseAbs().maxCoeff() > 0.0) out.kraus.push_back(std::move(prod));
    }
  }
  return out;
}

Channel gate_channel(const DeviceModel &model, const Gate &gate) {
  const auto qubits = gate.qubits();
  for (int q : qubits)
    if (q >= model.n_qubits)
      throw StructuralError("gate acts on qubit " + std::to_string(q) + " outside device '" +
                            model.name + "'");
  Channel ch = gate.is_two_qubit()
                   ? depolarizing_channel(qubits, model.p2)
                   : depolarizing_channel(qubits, model.p1[static_cast<std::size_t>(gate.target)]);
  for (int q : qubits) {
    if (model.gamma_amp > 0.0) ch = compose(ch, amplitude_damping_channel(q, model.gamma_amp));
    if (model.gamma_phase > 0.0) ch = compose(ch, phase_damping_channel(q, model.gamma_phase));
  }
  return ch;
}

void apply_channel(Eigen::MatrixXcd &rho, const Channel &channel, int n_qubits) {
  if (channel.kraus.size() == 1 && channel.kraus[0].isIdentity(0.0)) return;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
  for (const auto &k : channel.kraus) {
    Eigen::MatrixXcd term = rho;
    const LocalOperator op{channel.qubits, k};
    apply_left(term, op, n_qubits);
    apply_right_adjoint(term, op, n_qubits);
    acc += term;
  }
  rho = std::move(acc);
}

// ---------------------------------------------------------------------------
// Calibration files

DeviceModel parse_device_model(const std::string &json_text, const std::string &source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(source + ": top level must be an object");

  static const std::set<std::string> known{"name",     "n_qubits", "quantum_volume", "p1",
                                           "p2",       "readout",  "gamma_amp",      "gamma_phase"};
  for (const auto &[key, _] : j.items())
    if (!known.count(key)) throw ParseError(source + ": unknown field '" + key + "'");
  for (const char *required : {"name", "n_qubits", "p1", "p2", "readout"})
    if (!j.contains(required)) throw ParseError(source + ": missing field '" + required + "'");

  DeviceModel m;
  if (!j["name"].is_string()) throw ParseError(source + ": name: expected a string");
  m.name = j["name"].get<std::string>();
  if (!j["n_qubits"].is_number_integer()) throw ParseError(source + ": n_qubits: expected an integer");
  m.n_qubits = j["n_qubits"].get<int>();
  if (m.n_qubits < 1) throw ParseError(source + ": n_qubits: must be positive");
  if (j.contains("quantum_volume")) {
    if (!j["quantum_volume"].is_number_integer())
      throw ParseError(source + ": quantum_volume: expected an integer");
    m.quantum_volume = j["quantum_volume"].get<int>();
  }

  const auto &p1 = j["p1"];
  if (p1.is_number()) {
    m.p1.assign(static_cast<std::size_t>(m.n_qubits), p1.get<double>());
  } else if (p1.is_array()) {
    if (p1.size() != static_cast<std::size_t>(m.n_qubits))
      throw ParseError(source + ": p1: expected " + std::to_string(m.n_qubits) + " entries");
    for (std::size_t q = 0; q < p1.size(); ++q)
      m.p1.push_back(number_at(p1[q], source + ": p1[" + std::to_string(q) + "]"));
  } else {
    throw ParseError(source + ": p1: expected a number or an array");
  }
  m.p2 = number_at(j["p2"], source + ": p2");
  if (j.contains("gamma_amp")) m.gamma_amp = number_at(j["gamma_amp"], source + ": gamma_amp");
  if (j.contains("gamma_phase")) m.gamma_phase = number_at(j["gamma_phase"], source + ": gamma_phase");

  const auto &ro = j["readout"];
  if (!ro.is_array() || ro.size() != static_cast<std::size_t>(m.n_qubits))
    throw ParseError(source + ": readout: expected an array of " + std::to_string(m.n_qubits) +
                     " 2x2 matrices");
  for (std::size_t q = 0; q < ro.size(); ++q) {
    const std::string path = source + ": readout[" + std::to_string(q) + "]";
    if (!ro[q].is_array() || ro[q].size() != 2) throw ParseError(path + ": expected a 2x2 matrix");
    Confusion c{};
    for (std::size_t r = 0; r < 2; ++r) {
      const auto &row = ro[q][r];
      if (!row.is_array() || row.size() != 2)
        throw ParseError(path + "[" + std::to_string(r) + "]: expected 2 entries");
      for (std::size_t col = 0; col < 2; ++col)
        c[r][col] = number_at(row[col], path + "[" + std::to_string(r) + "][" + std::to_string(col) + "]");
    }
    m.readout.push_back(c);
  }
  try {
    m.validate();
  } catch (const ValidationError &e) {
    throw ParseError(source + ": " + e.what());
  }
  return m;
}

DeviceModel load_device_model(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open calibration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_device_model(ss.str(), path.string());
}

std::string device_model_to_json(const DeviceModel &model) {
  json j;
  j["name"] = model.name;
  j["n_qubits"] = model.n_qubits;
  j["quantum_volume"] = model.quantum_volume;
  const bool uniform_p1 = std::adjacent_find(model.p1.begin(), model.p1.end(),
                                             std::not_equal_to<>()) == model.p1.end();
  if (uniform_p1 && !model.p1.empty())
    j["p1"] = model.p1.front();
  else
    j["p1"] = model.p1;
  j["p2"] = model.p2;
  j["readout"] = json::array();
  for (const auto &c : model.readout)
    j["readout"].push_back({{c[0][0], c[0][1]}, {c[1][0], c[1][1]}});
  j["gamma_amp"] = model.gamma_amp;
  j["gamma_phase"] = model.gamma_phase;
  return j.dump(2);
}

std::vector<std::string> preset_names() {
  return {"melbourne-like", "santiago-like", "montreal-like", "mumbai-like"};
}

std::filesystem::path preset_directory() {
  if (const char *env = std::getenv("FEC_PRESET_DIR"); env && *env) return env;
  return FEC_PRESET_DIR;
}

DeviceModel load_preset(const std::string &name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ValidationError("unknown noise preset '" + name + "'");
  return load_device_model(preset_directory() / (name + ".json"));
}

// ---------------------------------------------------------------------------
// Readout

CountsTable apply_readout_error(const CountsTable &counts, const DeviceModel &model,
                                std::uint64_t seed) {
  const int n = counts.n_bits();
  if (!counts.counts.empty() && n != model.n_qubits)
    throw StructuralError("outcome length " + std::to_string(n) + " does not match device '" +
                          model.name + "' with " + std::to_string(model.n_qubits) + " qubits");
  Philox4x32 rng(seed);
  std::map<std::string, std::uint64_t> out;
  for (const auto &[outcome, c] : counts.counts) {
    for (std::uint64_t shot = 0; shot < c; ++shot) {
      std::string noisy = outcome;
      for (int q = 0; q < n; ++q) {
        const auto uq = static_cast<std::size_t>(q);
        const int bit = outcome[uq] == '1';
        const double flip = model.readout[uq][static_cast<std::size_t>(bit)][static_cast<std::size_t>(1 - bit)];
        if (flip > 0.0 && rng.uniform() < flip) noisy[uq] = bit ? '0' : '1';
      }
      ++out[noisy];
    }
  }
  return CountsTable(counts.shots, std::move(out));
}

std::vector<double> apply_readout_error(const std::vector<double> &distribution,
                                        const DeviceModel &model) {
  const int n = model.n_qubits;
  if (distribution.size() != (std::size_t{1} << n))
    throw StructuralError("distribution length does not match device '" + model.name + "'");
  std::vector<double> p = distribution;
  for (int q = 0; q < n; ++q) {
    const auto &c = model.readout[static_cast<std::size_t>(q)];
    const std::size_t bit = std::size_t{1} << bit_position(q, n);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i & bit) continue;
      const double p0 = p[i], p1 = p[i | bit];
      p[i] = p0 * c[0][0] + p1 * c[1][0];
      p[i | bit] = p0 * c[0][1] + p1 * c[1][1];
    }
  }
  return p;
}

ReadoutAffine readout_affine(const Confusion &c) {
  const double e0 = c[0][1]; // p(1|0)
  const double e1 = c[1][0]; // p(0|1)
  return {1.0 - e0 - e1, e1 - e0};
}

} // namespace fec
