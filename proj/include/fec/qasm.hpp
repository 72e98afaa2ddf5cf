#pragma once

#include <string>

#include "fec/statevector.hpp"

namespace fec {

/// OpenQASM 2.0 text: header, one `qreg q[n];`, then one statement per gate.
/// Angles are printed with 17 significant digits so parse_qasm(export_qasm(c))
/// reproduces the gate list exactly.
std::string export_qasm(const Circuit &circuit);

/// Reads the subset of OpenQASM 2.0 that export_qasm emits (one qreg; gates
/// ry, rz, x, h, cx, cry). Throws ParseError with the offending line number.
Circuit parse_qasm(const std::string &text);

} // namespace fec
