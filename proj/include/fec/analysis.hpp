#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fec/mitigation.hpp"
#include "fec/noise.hpp"
#include "fec/rdm.hpp"
#include "fec/state_prep.hpp"

namespace fec {

struct ScanGrid {
  std::vector<double> theta1;
  std::vector<double> theta2;

  /// Nonempty, finite. Throws ValidationError.
  void validate() const;
  std::size_t size() const { return theta1.size() * theta2.size(); }
  /// Point `index` in theta1-major order.
  FecAngles at(std::size_t index) const;

  /// n evenly spaced theta1 values in [lo, hi] (both ends included).
  static std::vector<double> linspace(double lo, double hi, int n);
  /// Dual-condensate frontier path: theta1 over [0, pi], theta2 = 0.
  static ScanGrid frontier(int n_points);
};

struct ScanConfig {
  std::int64_t shots = 0; // per setting; 0 selects exact expectations
  int n_trials = 1;
  const DeviceModel *noise = nullptr;
  MitigationMode mitigation = MitigationMode::Default;
  std::uint64_t seed = 0;
  bool allow_fermionic_sampling = false;
  unsigned threads = 0; // 0: hardware concurrency
};

struct ScanRecord {
  FecAngles angles;
  Signatures full;
  std::optional<Signatures> projected;
  std::int64_t shots = 0;
  std::string noise_name;
  int n_trials = 1;
};

/// Seed used for grid point `index` under master seed `seed`.
std::uint64_t point_seed(std::uint64_t seed, std::size_t index);

ScanRecord evaluate_point(const Representation &rep, const FecAngles &angles, const ScanConfig &config,
                          std::uint64_t seed);

/// One record per grid point, in grid order; bit-identical for identical inputs.
std::vector<ScanRecord> scan(const Representation &rep, const ScanGrid &grid, const ScanConfig &config);

/// The four preparations used for device comparison tables, ordered by
/// increasing ideal lambda_G.
std::array<FecAngles, 4> anchor_angles();
std::vector<ScanRecord> scan_anchors(const Representation &rep, const ScanConfig &config);

// ---------------------------------------------------------------------------

/// A x^2 + B xy + C y^2 + D x + E y + F = 0 with x = lambda_G, y = lambda_D.
struct EllipseFit {
  double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0;
  std::array<double, 2> center{};
  std::array<double, 2> axes{}; // semi-axes, major first
  double angle = 0.0;           // major-axis direction, radians in (-pi/2, pi/2]
  double rms = 0.0;             // rms orthogonal distance of the fitted points

  double discriminant() const { return B * B - 4 * A * C; }
};

/// Direct least-squares ellipse fit (ellipse constraint 4AC - B^2 = 1 via the
/// reduced generalized eigenproblem). Throws ValidationError for fewer than 6
/// points or a rank-deficient design.
EllipseFit fit_ellipse(const std::vector<std::pair<double, double>> &points);

/// Orthogonal distance from `point` to the fitted ellipse.
double distance_to_ellipse(std::pair<double, double> point, const EllipseFit &fit);

nlohmann::json ellipse_to_json(const EllipseFit &fit);
EllipseFit ellipse_from_json(const nlohmann::json &j);

// ---------------------------------------------------------------------------

enum class Phase { FEC, FermionCondensate, ExcitonCondensate, None };
std::string_view phase_name(Phase phase);

struct PhaseLabel {
  Phase phase = Phase::None;
  double significance_k = 0.0;
};

/// Strict inequalities lambda - k sigma > 1. k > 0 needs both stds.
PhaseLabel classify(const Signatures &sig, double k);

// ---------------------------------------------------------------------------

struct OptimizeConfig {
  ScanConfig evaluation;
  double theta1_lo = 0.0;
  double theta1_hi = 3.14159265358979323846;
  int n_theta1 = 32;
  int n_theta2 = 8;
  double tolerance = 1e-7;
};

struct OptimizeResult {
  FecAngles angles;
  Signatures signatures;
  double objective = 0.0;
  std::vector<ScanRecord> coarse; // the 32 x 8 grid
};

/// Maximizes min(lambda_D, lambda_G) of the unmitigated signatures.
OptimizeResult optimize_dual(const Representation &rep, const OptimizeConfig &config);

// ---------------------------------------------------------------------------

/// theta1, theta2, lambda_G_full, lambda_D_full, std_G_full, std_D_full,
/// lambda_G_proj, lambda_D_proj, std_G_proj, std_D_proj. Absent values are empty.
std::string scan_csv(const std::vector<ScanRecord> &records);
std::vector<ScanRecord> parse_scan_csv(const std::string &text);

// ---------------------------------------------------------------------------

/// Reference device signatures at the four anchors for one
/// device/encoding block, as [lambda_G, lambda_D] pairs.
struct ReferenceBlock {
  std::string device;
  Encoding encoding = Encoding::Bosonic;
  std::array<std::array<double, 2>, 4> full{};
  std::array<std::array<double, 2>, 4> projected{};
};

/// Bundled data/reference/table_rows.json unless overridden by FEC_DATA_DIR.
std::filesystem::path reference_rows_path();
std::vector<ReferenceBlock> load_reference_rows(const std::filesystem::path &path);

} // namespace fec
