#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <set>

#include "fec/analysis.hpp"
#include "fec/errors.hpp"
#include "oracle/fock_oracle.hpp"

using namespace fec;

namespace {

constexpr double kPi = std::numbers::pi;

struct Ellipse {
  double cx, cy, a, b, phi;

  std::pair<double, double> at(double t) const {
    const double u = a * std::cos(t), v = b * std::sin(t);
    return {cx + u * std::cos(phi) - v * std::sin(phi), cy + u * std::sin(phi) + v * std::cos(phi)};
  }

  // Brute-force orthogonal distance by dense sampling plus local refinement.
  double distance(std::pair<double, double> p) const {
    auto d = [&](double t) { return std::hypot(at(t).first - p.first, at(t).second - p.second); };
    double best_t = 0, best = d(0);
    for (int i = 1; i < 20000; ++i) {
      const double t = 2 * kPi * i / 20000;
      if (d(t) < best) best = d(best_t = t);
    }
    double lo = best_t - 2 * kPi / 20000, hi = best_t + 2 * kPi / 20000;
    for (int it = 0; it < 100; ++it) {
      const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (d(m1) < d(m2))
        hi = m2;
      else
        lo = m1;
    }
    return d((lo + hi) / 2);
  }
};

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

fec_oracle::Lambdas oracle_lambdas(const Representation &rep, const FecAngles &a) {
  return fec_oracle::lambdas_of_state(build_fec_target(rep, a).psi.amplitudes(), rep.encoding == Encoding::Bosonic,
                                      rep.n_orbitals);
}

} // namespace

TEST_CASE("scan grids") {
  const auto v = ScanGrid::linspace(0, 1, 5);
  CHECK(v == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(ScanGrid::linspace(2, 3, 1) == std::vector<double>{2});
  const ScanGrid g{{0.1, 0.2, 0.3}, {1.0, 2.0}};
  CHECK(g.size() == 6);
  CHECK(g.at(1).theta1() == doctest::Approx(0.1));
  CHECK(g.at(1).theta2() == doctest::Approx(2.0));
  CHECK(g.at(2).theta1() == doctest::Approx(0.2));
  const ScanGrid f = ScanGrid::frontier(64);
  CHECK(f.theta1.size() == 64);
  CHECK(f.theta1.back() == doctest::Approx(kPi));
  CHECK(f.theta2 == std::vector<double>{0.0});
  CHECK_THROWS_AS((ScanGrid{{}, {0.0}}.validate()), ValidationError);
  CHECK_THROWS_AS((ScanGrid{{NAN}, {0.0}}.validate()), ValidationError);
}

TEST_CASE("point seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 1000; ++i) seen.insert(point_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(point_seed(42, 3) == point_seed(42, 3));
  CHECK(point_seed(42, 3) != point_seed(43, 3));
}

TEST_CASE("ellipse fit recovers exact ellipses") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const Ellipse e{u(rng) * 4 - 2, u(rng) * 4 - 2, 0.5 + u(rng), 0.1 + 0.3 * u(rng), (u(rng) - 0.5) * kPi};
    const double t0 = 2 * kPi * u(rng), span = kPi / 2 + 1.5 * kPi * u(rng);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(e.at(t0 + span * i / 39));
    const EllipseFit fit = fit_ellipse(pts);
    CHECK(fit.center[0] == doctest::Approx(e.cx).epsilon(1e-6));
    CHECK(fit.center[1] == doctest::Approx(e.cy).epsilon(1e-6));
    CHECK(fit.axes[0] == doctest::Approx(e.a).epsilon(1e-6));
    CHECK(fit.axes[1] == doctest::Approx(e.b).epsilon(1e-6));
    CHECK(angle_gap(fit.angle, e.phi) < 1e-6);
    CHECK(fit.rms < 1e-8);
    CHECK(fit.discriminant() < 0);
  }
}

TEST_CASE("ellipse distance matches brute force") {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> u(-1, 1);
  const Ellipse e{1.0, 0.75, 1.05, 0.67, -0.43};
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 24; ++i) pts.push_back(e.at(2 * kPi * i / 24));
  const EllipseFit fit = fit_ellipse(pts);
  for (int i = 0; i < 50; ++i) {
    const std::pair<double, double> p{1 + 2 * u(rng), 0.75 + 2 * u(rng)};
    CHECK(distance_to_ellipse(p, fit) == doctest::Approx(e.distance(p)).epsilon(1e-6));
    const std::pair<double, double> inside{1 + 0.3 * u(rng), 0.75 + 0.3 * u(rng)};
    CHECK(distance_to_ellipse(inside, fit) == doctest::Approx(e.distance(inside)).epsilon(1e-6));
  }
  CHECK(distance_to_ellipse({1.0, 0.75}, fit) == doctest::Approx(0.67).epsilon(1e-6));
}

TEST_CASE("ellipse fit rejects degenerate input") {
  CHECK_THROWS_AS(fit_ellipse({{0, 0}, {1, 1}, {2, 0}, {1, -1}, {0.5, 0.5}}), ValidationError);
  std::vector<std::pair<double, double>> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 2 * i + 1);
  CHECK_THROWS_AS(fit_ellipse(line), ValidationError);
  CHECK_THROWS_AS(fit_ellipse(std::vector<std::pair<double, double>>(8, {1.0, 1.0})), ValidationError);
}

TEST_CASE("ellipse JSON round trip") {
  std::vector<std::pair<double, double>> pts;
  const Ellipse e{0.2, -0.1, 2, 1, 0.3};
  for (int i = 0; i < 12; ++i) pts.push_back(e.at(2 * kPi * i / 12));
  const EllipseFit fit = fit_ellipse(pts);
  const EllipseFit back = ellipse_from_json(ellipse_to_json(fit));
  CHECK(back.A == fit.A);
  CHECK(back.F == fit.F);
  CHECK(back.axes == fit.axes);
  CHECK_THROWS_AS(ellipse_from_json(nlohmann::json::parse(R"({"A": 1})")), ParseError);
}

TEST_CASE("phase classification uses strict inequalities") {
  CHECK(classify({1.2, 1.3, {}, {}}, 0).phase == Phase::FEC);
  CHECK(classify({1.2, 0.9, {}, {}}, 0).phase == Phase::FermionCondensate);
  CHECK(classify({0.9, 1.2, {}, {}}, 0).phase == Phase::ExcitonCondensate);
  CHECK(classify({1.0, 1.0, {}, {}}, 0).phase == Phase::None);
  CHECK(classify({1.2, 1.3, 0.1, 0.1}, 2).phase == Phase::ExcitonCondensate);
  CHECK(classify({1.2, 1.3, 0.1, 0.1}, 1.9).phase == Phase::FEC);
  CHECK_THROWS_AS(classify({1.2, 1.3, {}, {}}, 1), ValidationError);
  CHECK_THROWS_AS(classify({1.2, 1.3, {}, {}}, -1), ValidationError);
  CHECK(phase_name(Phase::FEC) == "FEC");
}

TEST_CASE("noiseless scan agrees with the oracle") {
  const ScanGrid g{ScanGrid::linspace(0, kPi, 5), {0.0, 1.0}};
  for (const Representation &rep : {Representation::bosonic(), Representation::fermionic()}) {
    ScanConfig cfg;
    cfg.mitigation = MitigationMode::Off;
    const auto records = scan(rep, g, cfg);
    REQUIRE(records.size() == g.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto ref = oracle_lambdas(rep, g.at(i));
      CHECK(records[i].full.lambda_D == doctest::Approx(ref.lambda_D).epsilon(1e-8));
      CHECK(records[i].full.lambda_G == doctest::Approx(ref.lambda_G).epsilon(1e-8));
      CHECK_FALSE(records[i].projected.has_value());
      CHECK(records[i].noise_name == "noiseless");
    }
  }
}

TEST_CASE("sampled scans do not depend on the thread count") {
  const DeviceModel noise = load_preset("santiago-like");
  ScanConfig cfg;
  cfg.shots = 512;
  cfg.n_trials = 2;
  cfg.noise = &noise;
  cfg.seed = 5;
  const ScanGrid g{ScanGrid::linspace(1.5, 2.5, 3), {0.0}};
  cfg.threads = 1;
  const std::string one = scan_csv(scan(Representation::bosonic(), g, cfg));
  cfg.threads = 3;
  const std::string three = scan_csv(scan(Representation::bosonic(), g, cfg));
  CHECK(one == three);
  cfg.seed = 6;
  CHECK(one != scan_csv(scan(Representation::bosonic(), g, cfg)));
}

TEST_CASE("noiseless frontier is an ellipse") {
  ScanConfig cfg;
  cfg.mitigation = MitigationMode::Off;
  std::vector<std::pair<double, double>> pts;
  for (const auto &r : scan(Representation::bosonic(), ScanGrid::frontier(32), cfg))
    pts.emplace_back(r.full.lambda_G, r.full.lambda_D);
  const EllipseFit fit = fit_ellipse(pts);
  CHECK(fit.rms < 1e-9);
  CHECK(fit.center[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.center[1] == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("anchors") {
  const auto a = anchor_angles();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].theta2() == 0.0);
  ScanConfig cfg;
  const auto recs = scan_anchors(Representation::bosonic(), cfg);
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    CHECK(recs[i].full.lambda_G < recs[i + 1].full.lambda_G);
    CHECK(recs[i].full.lambda_D > recs[i + 1].full.lambda_D);
  }
  for (const auto &r : recs) {
    CHECK(classify(r.full, 0).phase == Phase::FEC);
    REQUIRE(r.projected.has_value());
    // Noiseless states lie inside the support, so projection changes nothing.
    CHECK(r.projected->lambda_G == doctest::Approx(r.full.lambda_G).epsilon(1e-10));
  }
}

TEST_CASE("dual optimizer finds the balanced point") {
  OptimizeConfig cfg;
  cfg.evaluation.mitigation = MitigationMode::Off;
  const OptimizeResult r = optimize_dual(Representation::bosonic(), cfg);
  CHECK(r.coarse.size() == 256);
  const auto ref = oracle_lambdas(Representation::bosonic(), r.angles);
  CHECK(r.signatures.lambda_G == doctest::Approx(ref.lambda_G).epsilon(1e-8));
  CHECK(r.signatures.lambda_D == doctest::Approx(ref.lambda_D).epsilon(1e-8));
  CHECK(r.objective == doctest::Approx(4.0 / 3).epsilon(1e-6));
  CHECK(r.angles.theta1() == doctest::Approx(2 * kPi / 3).epsilon(1e-5));
  for (const auto &c : r.coarse) CHECK(std::min(c.full.lambda_D, c.full.lambda_G) <= r.objective + 1e-12);
}

TEST_CASE("scan CSV round trip") {
  ScanRecord with{FecAngles(0.5, 0.25), {1.1, 1.2, 0.01, 0.02}, Signatures{1.3, 1.4, {}, {}}, 8192, "x", 10};
  ScanRecord without{FecAngles(1.0 / 3, 0), {1.0 / 7, 2.0, {}, {}}, std::nullopt, 0, "noiseless", 1};
  const std::string text = scan_csv({with, without});
  CHECK(text.rfind("theta1,theta2,lambda_G_full,lambda_D_full,std_G_full,std_D_full,"
                   "lambda_G_proj,lambda_D_proj,std_G_proj,std_D_proj\n",
                   0) == 0);
  const auto back = parse_scan_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].full.std_D == 0.01);
  CHECK(back[0].projected->lambda_D == 1.3);
  CHECK_FALSE(back[0].projected->std_D.has_value());
  CHECK(back[1].angles.theta1() == 1.0 / 3);
  CHECK(back[1].full.lambda_D == 1.0 / 7);
  CHECK_FALSE(back[1].projected.has_value());
  CHECK(scan_csv(back) == text);
  CHECK_THROWS_AS(parse_scan_csv("theta1\n"), ParseError);
}

TEST_CASE("reference rows") {
  const auto blocks = load_reference_rows(reference_rows_path());
  CHECK(blocks.size() == 7);
  int fermionic = 0;
  for (const auto &b : blocks) {
    fermionic += b.encoding == Encoding::Fermionic;
    for (const auto &row : b.projected) CHECK(row[0] > 1);
  }
  CHECK(fermionic == 3);
  CHECK_THROWS_AS(load_reference_rows("/nonexistent/rows.json"), ParseError);
}
