#include "fec/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "fec/errors.hpp"
#include "fec/tomography.hpp"

namespace fec {

namespace {

constexpr double kPi = std::numbers::pi;

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

std::string opt_field(const std::optional<double> &v) { return v ? fmt17(*v) : std::string(); }

} // namespace

// ---------------------------------------------------------------------------

void ScanGrid::validate() const {
  if (theta1.empty() || theta2.empty()) throw ValidationError("scan grid has an empty axis");
  for (double v : theta1)
    if (!std::isfinite(v)) throw ValidationError("scan grid theta1 value is not finite");
  for (double v : theta2)
    if (!std::isfinite(v)) throw ValidationError("scan grid theta2 value is not finite");
}

FecAngles ScanGrid::at(std::size_t index) const {
  return FecAngles(theta1[index / theta2.size()], theta2[index % theta2.size()]);
}

std::vector<double> ScanGrid::linspace(double lo, double hi, int n) {
  if (n < 1) throw ValidationError("linspace needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return out;
}

ScanGrid ScanGrid::frontier(int n_points) { return {linspace(0.0, kPi, n_points), {0.0}}; }

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  return split_mix(split_mix(seed) ^ (0xD1B54A32D192ED03ULL * (index + 1)));
}

ScanRecord evaluate_point(const Representation &rep, const FecAngles &angles, const ScanConfig &config,
                          std::uint64_t seed) {
  TrialOptions opt;
  opt.shots = config.shots;
  opt.n_trials = config.n_trials;
  opt.noise = config.noise;
  opt.seed = seed;
  opt.allow_fermionic_sampling = config.allow_fermionic_sampling;
  if (config.mitigation != MitigationMode::Off) opt.support = support_for(rep, config.mitigation);
  const TrialRun run = run_trials(rep, angles, opt);
  ScanRecord rec{angles, run.full.summary(), std::nullopt, config.shots,
                 config.noise ? config.noise->name : std::string("noiseless"), config.n_trials};
  if (run.projected) rec.projected = run.projected->summary();
  return rec;
}

std::vector<ScanRecord> scan(const Representation &rep, const ScanGrid &grid, const ScanConfig &config) {
  grid.validate();
  rep.validate();
  const std::size_t n = grid.size();
  std::vector<std::optional<ScanRecord>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i] = evaluate_point(rep, grid.at(i), config, point_seed(config.seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  unsigned n_threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ScanRecord> out;
  out.reserve(n);
  for (auto &s : slots) out.push_back(std::move(*s));
  return out;
}

std::array<FecAngles, 4> anchor_angles() {
  return {FecAngles(7 * kPi / 10, 0.0), FecAngles(3 * kPi / 5, 0.0), FecAngles(11 * kPi / 20, 0.0),
          FecAngles(kPi / 2, 0.0)};
}

std::vector<ScanRecord> scan_anchors(const Representation &rep, const ScanConfig &config) {
  const auto anchors = anchor_angles();
  std::vector<ScanRecord> out;
  for (std::size_t i = 0; i < anchors.size(); ++i)
    out.push_back(evaluate_point(rep, anchors[i], config, point_seed(config.seed, i)));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Fills center, axes and angle from the conic coefficients.
void geometric_parameters(EllipseFit &fit) {
  Eigen::Matrix2d q;
  q << fit.A, fit.B / 2, fit.B / 2, fit.C;
  const Eigen::Vector2d c = (2 * q).fullPivLu().solve(Eigen::Vector2d(-fit.D, -fit.E));
  const double f0 = fit.A * c.x() * c.x() + fit.B * c.x() * c.y() + fit.C * c.y() * c.y() + fit.D * c.x() +
                    fit.E * c.y() + fit.F;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(q);
  const Eigen::Vector2d w = es.eigenvalues();
  const double s0 = -f0 / w[0], s1 = -f0 / w[1];
  if (!(s0 > 0) || !(s1 > 0)) throw NumericalError("fitted conic is not a real ellipse");
  // Smaller eigenvalue of q belongs to the major axis.
  const double a0 = std::sqrt(s0), a1 = std::sqrt(s1);
  const int major = a0 >= a1 ? 0 : 1;
  const Eigen::Vector2d dir = es.eigenvectors().col(major);
  double angle = std::atan2(dir.y(), dir.x());
  if (angle <= -kPi / 2) angle += kPi;
  if (angle > kPi / 2) angle -= kPi;
  fit.center = {c.x(), c.y()};
  fit.axes = {std::max(a0, a1), std::min(a0, a1)};
  fit.angle = angle;
}

// Eberly's bisection for the closest point on an axis-aligned ellipse with
// semi-axes e0 >= e1 > 0, query point in the first quadrant. Solves for
// t = s + 1 rather than s so points near the center keep full precision.
double get_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double t0 = z1;
  double t1 = g < 0 ? 1 : std::hypot(n0, z1);
  double t = 0;
  for (int i = 0; i < 2100; ++i) {
    t = (t0 + t1) / 2;
    if (t == t0 || t == t1) break;
    const double ratio0 = n0 / (t - 1 + r0), ratio1 = z1 / t;
    g = ratio0 * ratio0 + ratio1 * ratio1 - 1;
    if (g > 0)
      t0 = t;
    else if (g < 0)
      t1 = t;
    else
      break;
  }
  return t;
}

double distance_axis_aligned(double e0, double e1, double y0, double y1) {
  if (y1 > 0) {
    if (y0 > 0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1;
      if (g == 0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double t = get_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (t - 1 + r0), x1 = y1 / t;
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0, x1 = e1 * std::sqrt(1 - xde0 * xde0);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

} // namespace

EllipseFit fit_ellipse(const std::vector<std::pair<double, double>> &points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 6)
    throw ValidationError("ellipse fit needs at least 6 points, got " + std::to_string(points.size()));
  for (const auto &[x, y] : points)
    if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("ellipse fit input is not finite");

  // Center and scale for conditioning; undone on the coefficients below.
  double mx = 0, my = 0;
  for (const auto &[x, y] : points) {
    mx += x / static_cast<double>(n);
    my += y / static_cast<double>(n);
  }
  double scale = 0;
  for (const auto &[x, y] : points) scale += ((x - mx) * (x - mx) + (y - my) * (y - my)) / static_cast<double>(n);
  scale = std::sqrt(scale);
  if (!(scale > 0)) throw ValidationError("ellipse fit input points are all identical (rank 1 design)");

  Eigen::MatrixXd d1(n, 3), d2(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (points[static_cast<std::size_t>(i)].first - mx) / scale;
    const double v = (points[static_cast<std::size_t>(i)].second - my) / scale;
    d1.row(i) << u * u, u * v, v * v;
    d2.row(i) << u, v, 1.0;
  }
  Eigen::MatrixXd design(n, 6);
  design << d1, d2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const auto sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * sv[0]) ++rank;
  // An exact conic leaves one null direction (rank 5); anything lower is degenerate.
  if (rank < 5)
    throw ValidationError("ellipse fit design matrix has rank " + std::to_string(rank) +
                          " (< 5): points are collinear or otherwise degenerate");

  const Eigen::Matrix3d s1 = d1.transpose() * d1;
  const Eigen::Matrix3d s2 = d1.transpose() * d2;
  const Eigen::Matrix3d s3 = d2.transpose() * d2;
  const Eigen::FullPivLU<Eigen::Matrix3d> s3_lu(s3);
  if (!s3_lu.isInvertible()) throw ValidationError("ellipse fit: linear design block is singular (collinear points)");
  const Eigen::Matrix3d t = -s3_lu.inverse() * s2.transpose();
  const Eigen::Matrix3d m = s1 + s2 * t;
  Eigen::Matrix3d reduced;
  reduced.row(0) = m.row(2) / 2;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2;

  Eigen::EigenSolver<Eigen::Matrix3d> es(reduced);
  if (es.info() != Eigen::Success) throw NumericalError("ellipse fit eigensolver failed");
  int best = -1;
  double best_cond = 0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d a = es.eigenvectors().col(k).real();
    const double cond = 4 * a[0] * a[2] - a[1] * a[1];
    if (cond > best_cond) {
      best_cond = cond;
      best = k;
    }
  }
  if (best < 0) throw NumericalError("ellipse fit found no elliptical solution");
  const Eigen::Vector3d a1 = es.eigenvectors().col(best).real();
  const Eigen::Vector3d a2 = t * a1;

  const double a = a1[0], b = a1[1], c = a1[2], d = a2[0], e = a2[1], f = a2[2];
  const double s = scale, s_2 = scale * scale;
  EllipseFit fit;
  fit.A = a / s_2;
  fit.B = b / s_2;
  fit.C = c / s_2;
  fit.D = (-2 * a * mx - b * my) / s_2 + d / s;
  fit.E = (-2 * c * my - b * mx) / s_2 + e / s;
  fit.F = (a * mx * mx + b * mx * my + c * my * my) / s_2 - (d * mx + e * my) / s + f;
  double norm = std::sqrt(fit.A * fit.A + fit.B * fit.B + fit.C * fit.C + fit.D * fit.D + fit.E * fit.E +
                          fit.F * fit.F);
  if (fit.A + fit.C < 0) norm = -norm;
  for (double *coef : {&fit.A, &fit.B, &fit.C, &fit.D, &fit.E, &fit.F}) *coef /= norm;
  if (!(fit.discriminant() < 0)) throw NumericalError("ellipse fit returned a non-elliptic conic");
  geometric_parameters(fit);

  double sum = 0;
  for (const auto &p : points) {
    const double dist = distance_to_ellipse(p, fit);
    sum += dist * dist;
  }
  fit.rms = std::sqrt(sum / static_cast<double>(n));
  return fit;
}

double distance_to_ellipse(std::pair<double, double> point, const EllipseFit &fit) {
  const double dx = point.first - fit.center[0], dy = point.second - fit.center[1];
  const double ca = std::cos(fit.angle), sa = std::sin(fit.angle);
  const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
  return distance_axis_aligned(fit.axes[0], fit.axes[1], std::abs(u), std::abs(v));
}

nlohmann::json ellipse_to_json(const EllipseFit &fit) {
  return {{"A", fit.A},          {"B", fit.B},
          {"C", fit.C},          {"D", fit.D},
          {"E", fit.E},          {"F", fit.F},
          {"center", fit.center}, {"axes", fit.axes},
          {"angle", fit.angle},  {"rms", fit.rms}};
}

EllipseFit ellipse_from_json(const nlohmann::json &j) {
  EllipseFit fit;
  try {
    fit.A = j.at("A");
    fit.B = j.at("B");
    fit.C = j.at("C");
    fit.D = j.at("D");
    fit.E = j.at("E");
    fit.F = j.at("F");
    fit.rms = j.value("rms", 0.0);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("ellipse JSON: ") + e.what());
  }
  if (!(fit.discriminant() < 0)) throw ValidationError("ellipse JSON describes a non-elliptic conic");
  geometric_parameters(fit);
  return fit;
}

// ---------------------------------------------------------------------------

std::string_view phase_name(Phase phase) {
  switch (phase) {
  case Phase::FEC: return "FEC";
  case Phase::FermionCondensate: return "fermion_condensate";
  case Phase::ExcitonCondensate: return "exciton_condensate";
  case Phase::None: return "none";
  }
  return "?";
}

PhaseLabel classify(const Signatures &sig, double k) {
  if (!std::isfinite(k) || k < 0) throw ValidationError("significance k must be finite and non-negative");
  double sd = 0, sg = 0;
  if (k > 0) {
    if (!sig.std_D || !sig.std_G)
      throw ValidationError("classification at k > 0 needs standard deviations for both signatures");
    sd = *sig.std_D;
    sg = *sig.std_G;
  }
  const bool d = sig.lambda_D - k * sd > 1.0;
  const bool g = sig.lambda_G - k * sg > 1.0;
  Phase p = d && g ? Phase::FEC : d ? Phase::FermionCondensate : g ? Phase::ExcitonCondensate : Phase::None;
  return {p, k};
}

// ---------------------------------------------------------------------------

OptimizeResult optimize_dual(const Representation &rep, const OptimizeConfig &config) {
  if (config.n_theta1 < 1 || config.n_theta2 < 1) throw ValidationError("optimizer grid is empty");
  if (!(config.theta1_lo <= config.theta1_hi)) throw ValidationError("optimizer theta1 range is empty");
  ScanGrid grid;
  grid.theta1 = config.theta1_lo == config.theta1_hi
                    ? std::vector<double>{config.theta1_lo}
                    : ScanGrid::linspace(config.theta1_lo, config.theta1_hi, config.n_theta1);
  for (int j = 0; j < config.n_theta2; ++j) grid.theta2.push_back(2 * kPi * j / config.n_theta2);

  OptimizeResult out{FecAngles(0, 0), {}, -1.0, scan(rep, grid, config.evaluation)};
  auto objective = [](const Signatures &s) { return std::min(s.lambda_D, s.lambda_G); };
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.coarse.size(); ++i)
    if (objective(out.coarse[i].full) > objective(out.coarse[best].full)) best = i;
  out.angles = out.coarse[best].angles;
  out.signatures = out.coarse[best].full;
  out.objective = objective(out.signatures);
  if (grid.theta1.size() < 2) return out;

  // Golden-section on theta1 around the coarse winner, theta2 held fixed.
  // Every evaluation reuses the same seed so the objective is a fixed function.
  const double step = grid.theta1[1] - grid.theta1[0];
  const double theta2 = grid.theta2[best % grid.theta2.size()];
  const double center = grid.theta1[best / grid.theta2.size()];
  double lo = std::max(config.theta1_lo, center - step), hi = std::min(config.theta1_hi, center + step);
  const std::uint64_t seed = point_seed(config.evaluation.seed, out.coarse.size());
  auto eval = [&](double t1) { return evaluate_point(rep, FecAngles(t1, theta2), config.evaluation, seed); };
  const double invphi = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  ScanRecord r1 = eval(x1), r2 = eval(x2);
  while (hi - lo > config.tolerance) {
    if (objective(r1.full) >= objective(r2.full)) {
      hi = x2;
      x2 = x1;
      r2 = r1;
      x1 = hi - invphi * (hi - lo);
      r1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      r1 = r2;
      x2 = lo + invphi * (hi - lo);
      r2 = eval(x2);
    }
  }
  const ScanRecord &refined = objective(r1.full) >= objective(r2.full) ? r1 : r2;
  if (objective(refined.full) > out.objective) {
    out.angles = refined.angles;
    out.signatures = refined.full;
    out.objective = objective(refined.full);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string scan_csv(const std::vector<ScanRecord> &records) {
  std::string out = "theta1,theta2,lambda_G_full,lambda_D_full,std_G_full,std_D_full,"
                    "lambda_G_proj,lambda_D_proj,std_G_proj,std_D_proj\n";
  for (const auto &r : records) {
    out += fmt17(r.angles.theta1()) + "," + fmt17(r.angles.theta2()) + "," + fmt17(r.full.lambda_G) + "," +
           fmt17(r.full.lambda_D) + "," + opt_field(r.full.std_G) + "," + opt_field(r.full.std_D) + ",";
    if (r.projected)
      out += fmt17(r.projected->lambda_G) + "," + fmt17(r.projected->lambda_D) + "," +
             opt_field(r.projected->std_G) + "," + opt_field(r.projected->std_D);
    else
      out += ",,,";
    out += "\n";
  }
  return out;
}

std::vector<ScanRecord> parse_scan_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("theta1,theta2,lambda_G_full", 0) != 0)
    throw ParseError("scan CSV: missing header");
  std::vector<ScanRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw ParseError("scan CSV line " + std::to_string(line_no) + ": expected 10 fields");
    auto num = [&](const std::string &s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception &) {
        throw ParseError("scan CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
      }
    };
    auto req = [&](const std::string &s) {
      auto v = num(s);
      if (!v) throw ParseError("scan CSV line " + std::to_string(line_no) + ": missing value");
      return *v;
    };
    ScanRecord r{FecAngles(req(f[0]), req(f[1])), {}, std::nullopt, 0, "", 1};
    r.full.lambda_G = req(f[2]);
    r.full.lambda_D = req(f[3]);
    r.full.std_G = num(f[4]);
    r.full.std_D = num(f[5]);
    if (!f[6].empty() || !f[7].empty()) {
      Signatures p;
      p.lambda_G = req(f[6]);
      p.lambda_D = req(f[7]);
      p.std_G = num(f[8]);
      p.std_D = num(f[9]);
      r.projected = p;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::filesystem::path reference_rows_path() {
  if (const char *env = std::getenv("FEC_DATA_DIR"); env && *env)
    return std::filesystem::path(env) / "reference" / "table_rows.json";
  return std::filesystem::path(FEC_DATA_DIR) / "reference" / "table_rows.json";
}

std::vector<ReferenceBlock> load_reference_rows(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open reference rows " + path.string());
  std::vector<ReferenceBlock> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto &b : j.at("blocks")) {
      ReferenceBlock block;
      block.device = b.at("device").get<std::string>();
      block.encoding = parse_encoding(b.at("encoding").get<std::string>());
      block.full = b.at("full").get<std::array<std::array<double, 2>, 4>>();
      block.projected = b.at("projected").get<std::array<std::array<double, 2>, 4>>();
      out.push_back(std::move(block));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

} // namespace fec
