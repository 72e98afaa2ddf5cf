#include "fec/qasm.hpp"

#include <charconv>
#include <cstdio>
#include <optional>
#include <regex>
#include <sstream>

#include "fec/errors.hpp"

namespace fec {

namespace {

std::string format_angle(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", a);
  return buf;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

std::string export_qasm(const Circuit &circuit) {
  std::ostringstream out;
  out << "OPENQASM 2.0;\n"
      << "include \"qelib1.inc\";\n"
      << "qreg q[" << circuit.n_qubits() << "];\n";
  for (const auto &g : circuit.gates()) {
    out << gate_name(g.kind);
    if (g.has_angle()) out << '(' << format_angle(g.angle) << ')';
    out << ' ';
    if (g.control) out << "q[" << *g.control << "],";
    out << "q[" << g.target << "];\n";
  }
  return out.str();
}

Circuit parse_qasm(const std::string &text) {
  static const std::regex qreg_re(R"(qreg\s+q\[(\d+)\]\s*;)");
  static const std::regex gate_re(
      R"(([a-z]+)\s*(?:\(\s*([^)]+?)\s*\))?\s+q\[(\d+)\]\s*(?:,\s*q\[(\d+)\])?\s*;)");

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::optional<Circuit> circuit;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find("//"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string &why) {
      return ParseError("qasm line " + std::to_string(line_no) + ": " + why + ": '" + line + "'");
    };
    if (line.rfind("OPENQASM", 0) == 0) {
      if (line != "OPENQASM 2.0;") throw fail("unsupported version");
      saw_header = true;
      continue;
    }
    if (line.rfind("include", 0) == 0) continue;
    std::smatch m;
    if (std::regex_match(line, m, qreg_re)) {
      if (circuit) throw fail("only one register is supported");
      circuit.emplace(std::stoi(m[1]));
      continue;
    }
    if (!std::regex_match(line, m, gate_re)) throw fail("unrecognized statement");
    if (!circuit) throw fail("gate before qreg declaration");

    const std::string name = m[1];
    const bool has_angle = m[2].matched;
    const int first = std::stoi(m[3]);
    const std::optional<int> second = m[4].matched ? std::optional<int>(std::stoi(m[4])) : std::nullopt;
    double angle = 0.0;
    if (has_angle) {
      const std::string a = m[2];
      auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), angle);
      if (ec != std::errc() || ptr != a.data() + a.size()) throw fail("bad angle");
    }
    auto expect = [&](bool angle_needed, bool two_qubit) {
      if (angle_needed != has_angle) throw fail(angle_needed ? "missing angle" : "unexpected angle");
      if (two_qubit != second.has_value()) throw fail("wrong operand count");
    };
    try {
      if (name == "ry") { expect(true, false); circuit->add(Gate::ry(first, angle)); }
      else if (name == "rz") { expect(true, false); circuit->add(Gate::rz(first, angle)); }
      else if (name == "x") { expect(false, false); circuit->add(Gate::x(first)); }
      else if (name == "h") { expect(false, false); circuit->add(Gate::h(first)); }
      else if (name == "cx") { expect(false, true); circuit->add(Gate::cx(first, *second)); }
      else if (name == "cry") { expect(true, true); circuit->add(Gate::cry(first, *second, angle)); }
      else throw fail("unsupported gate '" + name + "'");
    } catch (const StructuralError &e) {
      throw fail(e.what());
    }
  }
  if (!saw_header) throw ParseError("qasm: missing OPENQASM 2.0 header");
  if (!circuit) throw ParseError("qasm: missing qreg declaration");
  return *circuit;
}

} // namespace fec
