#include <doctest.h>

#include <random>

#include "fec/errors.hpp"
#include "fec/qasm.hpp"
#include "fec/state_prep.hpp"

using namespace fec;

TEST_CASE("export format") {
  Circuit c(3);
  c.add(Gate::h(0)).add(Gate::cx(0, 2)).add(Gate::ry(1, 0.5)).add(Gate::cry(2, 1, -1.25)).add(Gate::rz(0, 3)).add(
      Gate::x(1));
  const std::string text = export_qasm(c);
  CHECK(text.rfind("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\n", 0) == 0);
  CHECK(text.find("h q[0];") != std::string::npos);
  CHECK(text.find("cx q[0],q[2];") != std::string::npos);
  CHECK(text.find("cry(-1.25) q[2],q[1];") != std::string::npos);
  CHECK(parse_qasm(text) == c);
}

TEST_CASE("round trip of synthesized circuits is exact") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(0, 6.283185307179586);
  for (int i = 0; i < 20; ++i) {
    const FecAngles a(angle(rng), angle(rng));
    for (const Representation &rep : {Representation::bosonic(), Representation::fermionic()}) {
      const Circuit c = synthesize_circuit(rep, a);
      CHECK(parse_qasm(export_qasm(c)) == c);
    }
  }
}

TEST_CASE("parser accepts comments and blank lines") {
  const Circuit c = parse_qasm("OPENQASM 2.0;\n// prep\ninclude \"qelib1.inc\";\n\nqreg q[2];\nry( 1.5707963267948966 ) q[1]; // quarter turn\n");
  REQUIRE(c.size() == 1);
  CHECK(c.gates()[0].angle == doctest::Approx(1.5707963267948966));
}

TEST_CASE("parse errors carry the line number") {
  const std::string head = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n";
  CHECK_THROWS_WITH_AS(parse_qasm(head + "u3(0,0,0) q[0];\n"), doctest::Contains("line 4"), ParseError);
  CHECK_THROWS_WITH_AS(parse_qasm(head + "h q[0];\ncx q[0],q[5];\n"), doctest::Contains("line 5"), ParseError);
  CHECK_THROWS_WITH_AS(parse_qasm(head + "ry(abc) q[0];\n"), doctest::Contains("line 4"), ParseError);
  CHECK_THROWS_AS(parse_qasm("OPENQASM 2.0;\nh q[0];\n"), ParseError);
  CHECK_THROWS_AS(parse_qasm(head + "qreg r[2];\n"), ParseError);
}
