#include "fec/mitigation.hpp"

#include <sstream>

namespace fec {

namespace {

void add_support_of(SupportSet &s, const StateVector &psi) {
  for (std::uint64_t i = 0; i < psi.dimension(); ++i)
    if (std::abs(psi[i]) > 1e-12) s.allowed.insert(to_bitstring(i, psi.n_qubits()));
}

} // namespace

std::string_view mitigation_name(MitigationMode mode) {
  switch (mode) {
  case MitigationMode::Off: return "off";
  case MitigationMode::Default: return "default";
  case MitigationMode::Strict6: return "strict6";
  }
  return "?";
}

MitigationMode parse_mitigation(std::string_view name) {
  if (name == "off") return MitigationMode::Off;
  if (name == "default") return MitigationMode::Default;
  if (name == "strict6") return MitigationMode::Strict6;
  throw ValidationError("unknown mitigation mode '" + std::string(name) +
                        "' (expected off, default or strict6)");
}

void SupportSet::validate() const {
  if (allowed.empty()) throw ValidationError("support set is empty");
  for (const auto &s : allowed) {
    if (static_cast<int>(s.size()) != n_qubits || s.find_first_not_of("01") != std::string::npos)
      throw ValidationError("support string '" + s + "' is not a " + std::to_string(n_qubits) +
                            "-bit string");
  }
}

SupportSet default_support(const Representation &rep, bool strict) {
  SupportSet s{rep.n_qubits(), {}};
  add_support_of(s, build_psi_D(rep));
  if (!strict) add_support_of(s, build_psi_G(rep));
  return s;
}

SupportSet support_for(const Representation &rep, MitigationMode mode) {
  if (mode == MitigationMode::Off) throw ValidationError("mitigation is off; no support set");
  return default_support(rep, mode == MitigationMode::Strict6);
}

CountsTable project_counts(const CountsTable &counts, const SupportSet &support) {
  support.validate();
  if (!counts.counts.empty() && counts.n_bits() != support.n_qubits)
    throw StructuralError("counts and support have different bit widths");
  std::map<std::string, std::uint64_t> kept;
  std::uint64_t total = 0;
  for (const auto &[outcome, c] : counts.counts) {
    if (!support.contains(outcome)) continue;
    kept.emplace(outcome, c);
    total += c;
  }
  if (total == 0)
    throw EmptySupportOverlap("none of the " + std::to_string(counts.shots) +
                              " shots fall inside the support");
  return CountsTable(total, std::move(kept));
}

DensityMatrix project_density(const DensityMatrix &rho, const SupportSet &support) {
  support.validate();
  if (support.n_qubits != rho.n_qubits())
    throw StructuralError("density and support have different qubit counts");
  std::vector<Eigen::Index> keep;
  for (const auto &s : support.allowed) keep.push_back(static_cast<Eigen::Index>(from_bitstring(s)));
  const auto &m = rho.elements();
  double weight = 0.0;
  for (auto k : keep) weight += m(k, k).real();
  if (!(weight > 1e-12))
    throw EmptySupportOverlap("support carries weight " + std::to_string(weight) +
                              " of the density matrix");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(m.rows(), m.cols());
  for (auto r : keep)
    for (auto c : keep) out(r, c) = m(r, c) / weight;
  return DensityMatrix(rho.n_qubits(), std::move(out));
}

std::string write_support(const SupportSet &support) {
  std::ostringstream out;
  out << "# n_qubits=" << support.n_qubits << '\n';
  for (const auto &s : support.allowed) out << s << '\n';
  return out.str();
}

SupportSet parse_support(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  SupportSet s;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# n_qubits=", 0) == 0) {
      try {
        s.n_qubits = std::stoi(line.substr(11));
      } catch (const std::exception &) {
        throw ParseError("support file: bad header '" + line + "'");
      }
      header = true;
      continue;
    }
    if (line[0] == '#') continue;
    s.allowed.insert(line);
  }
  if (!header) throw ParseError("support file: missing '# n_qubits=' header");
  try {
    s.validate();
  } catch (const ValidationError &e) {
    throw ParseError(std::string("support file: ") + e.what());
  }
  return s;
}

} // namespace fec
