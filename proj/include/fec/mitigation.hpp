#pragma once

#include <set>
#include <string>

#include "fec/errors.hpp"
#include "fec/state_prep.hpp"
#include "fec/statevector.hpp"

namespace fec {

enum class MitigationMode {
  Off,
  Default, // union of the psi_G and psi_D supports
  Strict6  // psi_D support only
};

std::string_view mitigation_name(MitigationMode mode);
MitigationMode parse_mitigation(std::string_view name);

/// Basis strings a preparation is expected to populate.
struct SupportSet {
  int n_qubits = 0;
  std::set<std::string> allowed;

  /// Nonempty, every string of length n_qubits over {0,1}. Throws ValidationError.
  void validate() const;
  bool contains(const std::string &bits) const { return allowed.count(bits) > 0; }
};

/// Thrown when nothing measured lies inside the support.
class EmptySupportOverlap : public ValidationError {
public:
  using ValidationError::ValidationError;
};

SupportSet default_support(const Representation &rep, bool strict = false);
/// Off has no support; asking for it is a ValidationError.
SupportSet support_for(const Representation &rep, MitigationMode mode);

/// Drops outcomes outside the support; shots becomes the retained total.
CountsTable project_counts(const CountsTable &counts, const SupportSet &support);
/// P rho P / tr(P rho P) with P the projector onto the support span.
/// Throws EmptySupportOverlap when tr(P rho P) <= 1e-12, reporting the weight.
DensityMatrix project_density(const DensityMatrix &rho, const SupportSet &support);

/// "# n_qubits=<int>" header followed by one bitstring per line.
std::string write_support(const SupportSet &support);
SupportSet parse_support(const std::string &text);

} // namespace fec
