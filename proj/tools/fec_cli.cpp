// fec: prepare, scan, report and oracle commands.
//
// Exit codes: 0 success, 2 usage, 3 missing input, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fec/analysis.hpp"
#include "fec/errors.hpp"
#include "fec/qasm.hpp"
#include "fec/tomography.hpp"
#include "oracle/fock_oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fec;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kMissingInput = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes are collected and committed together: every file goes to a temp name
// first and is renamed into place, and nothing is written when any target
// exists without --force.
class OutputDir {
public:
  OutputDir(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

  void add(const std::string &name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void commit() const {
    if (!force_) {
      std::vector<std::string> clash;
      for (const auto &[name, _] : files_)
        if (fs::exists(dir_ / name)) clash.push_back((dir_ / name).string());
      if (!clash.empty()) {
        std::string msg = "refusing to overwrite existing output (use --force):";
        for (const auto &c : clash) msg += "\n  " + c;
        throw UsageError(msg);
      }
    }
    fs::create_directories(dir_);
    for (const auto &[name, content] : files_) {
      const fs::path target = dir_ / name;
      const fs::path tmp = dir_ / (name + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw UsageError("write failed for " + tmp.string());
      }
      fs::rename(tmp, target);
    }
  }

private:
  fs::path dir_;
  bool force_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string command;
  std::string representation = "bosonic";
  int n_fermions = 4;
  int n_orbitals = 8;
  double theta1 = 0.0, theta2 = 0.0;    // prepare
  std::vector<double> grid_theta1;      // scan
  std::vector<double> grid_theta2{0.0}; // scan
  std::int64_t shots = 0;
  int trials = 1;
  std::string preset;
  std::string calibration;
  std::optional<json> device; // resolved model, stored for exact replay
  std::string mitigation = "default";
  std::uint64_t seed = 0;
  bool allow_fermionic_sampling = false;
  std::string output;

  Representation rep() const {
    Representation r{parse_encoding(representation), n_fermions, n_orbitals};
    r.validate();
    return r;
  }

  json to_json() const {
    json j{{"command", command},
           {"representation", representation},
           {"n_fermions", n_fermions},
           {"n_orbitals", n_orbitals},
           {"mitigation", mitigation},
           {"seed", seed},
           {"output", output}};
    if (command == "prepare") {
      j["theta1"] = theta1;
      j["theta2"] = theta2;
    } else {
      j["grid"] = {{"theta1", grid_theta1}, {"theta2", grid_theta2}};
      j["shots"] = shots;
      j["trials"] = trials;
      j["allow_fermionic_sampling"] = allow_fermionic_sampling;
      json noise = nullptr;
      if (device) {
        noise = json{{"model", *device}};
        if (!preset.empty()) noise["preset"] = preset;
        if (!calibration.empty()) noise["calibration"] = calibration;
      }
      j["noise"] = noise;
    }
    return j;
  }

  static RunConfig from_json(const json &j) {
    RunConfig c;
    try {
      c.command = j.at("command").get<std::string>();
      c.representation = j.at("representation").get<std::string>();
      c.n_fermions = j.at("n_fermions").get<int>();
      c.n_orbitals = j.at("n_orbitals").get<int>();
      c.mitigation = j.at("mitigation").get<std::string>();
      c.seed = j.at("seed").get<std::uint64_t>();
      c.output = j.value("output", std::string());
      if (c.command == "prepare") {
        c.theta1 = j.at("theta1").get<double>();
        c.theta2 = j.at("theta2").get<double>();
      } else {
        c.grid_theta1 = j.at("grid").at("theta1").get<std::vector<double>>();
        c.grid_theta2 = j.at("grid").at("theta2").get<std::vector<double>>();
        c.shots = j.at("shots").get<std::int64_t>();
        c.trials = j.at("trials").get<int>();
        c.allow_fermionic_sampling = j.value("allow_fermionic_sampling", false);
        const auto &noise = j.at("noise");
        if (!noise.is_null()) {
          c.preset = noise.value("preset", std::string());
          c.calibration = noise.value("calibration", std::string());
          c.device = noise.at("model");
        }
      }
    } catch (const json::exception &e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    return c;
  }
};

std::optional<DeviceModel> resolve_device(RunConfig &cfg) {
  if (!cfg.preset.empty() && !cfg.calibration.empty())
    throw UsageError("--preset and --calibration are mutually exclusive");
  if (cfg.device) return parse_device_model(cfg.device->dump(), "config noise.model");
  std::optional<DeviceModel> model;
  if (!cfg.preset.empty()) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), cfg.preset) == names.end()) {
      std::string msg = "unknown preset '" + cfg.preset + "'; available:";
      for (const auto &n : names) msg += " " + n;
      throw UsageError(msg);
    }
    model = load_preset(cfg.preset);
  } else if (!cfg.calibration.empty()) {
    if (!fs::exists(cfg.calibration)) throw MissingInput("calibration file not found: " + cfg.calibration);
    model = load_device_model(cfg.calibration);
  }
  if (model) cfg.device = json::parse(device_model_to_json(*model));
  return model;
}

std::string fmt(double v, int digits = 17) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string cell(double v, const std::optional<double> &sd) {
  char buf[48];
  if (sd)
    std::snprintf(buf, sizeof buf, "%.3f +- %.3f", v, *sd);
  else
    std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// prepare

int run_prepare(RunConfig cfg, bool force) {
  const Representation rep = cfg.rep();
  const FecAngles angles(cfg.theta1, cfg.theta2);
  const FecTarget target = build_fec_target(rep, angles);
  const Circuit circuit = synthesize_circuit(rep, angles);
  const Signatures sig = signatures(target.psi, rep);

  std::string amps = "index,bitstring,re,im\n";
  for (std::uint64_t i = 0; i < target.psi.dimension(); ++i) {
    if (target.psi[i] == Complex{0.0}) continue;
    amps += std::to_string(i) + "," + to_bitstring(i, target.psi.n_qubits()) + "," + fmt(target.psi[i].real()) +
            "," + fmt(target.psi[i].imag()) + "\n";
  }
  const json sj{{"representation", cfg.representation},
                {"theta1", angles.theta1()},
                {"theta2", angles.theta2()},
                {"lambda_D", sig.lambda_D},
                {"lambda_G", sig.lambda_G},
                {"phase", phase_name(classify(sig, 0).phase)},
                {"n_qubits", circuit.n_qubits()},
                {"gates", circuit.gates().size()},
                {"two_qubit_gates", circuit.two_qubit_count()}};

  OutputDir out(cfg.output, force);
  out.add("circuit.qasm", export_qasm(circuit));
  out.add("target_amplitudes.csv", amps);
  out.add("signatures.json", sj.dump(2) + "\n");
  out.add("config.json", cfg.to_json().dump(2) + "\n");
  out.commit();
  std::printf("lambda_G = %.12f  lambda_D = %.12f  (%s)\n", sig.lambda_G, sig.lambda_D,
              std::string(phase_name(classify(sig, 0).phase)).c_str());
  std::printf("wrote %s\n", cfg.output.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------
// scan

std::string table_block(const std::string &device, int quantum_volume, const std::string &encoding,
                         const std::vector<ScanRecord> &anchors) {
  std::ostringstream s;
  char line[256];
  std::snprintf(line, sizeof line, "%s preparation | %s (QV %d)\n", encoding.c_str(), device.c_str(), quantum_volume);
  s << line;
  std::snprintf(line, sizeof line, "  %-8s %-8s | %-18s %-18s | %-18s %-18s\n", "theta1", "theta2", "full lambda_G",
                "full lambda_D", "proj lambda_G", "proj lambda_D");
  s << line;
  for (const auto &r : anchors) {
    const std::string pg = r.projected ? cell(r.projected->lambda_G, r.projected->std_G) : "-";
    const std::string pd = r.projected ? cell(r.projected->lambda_D, r.projected->std_D) : "-";
    std::snprintf(line, sizeof line, "  %-8.4f %-8.4f | %-18s %-18s | %-18s %-18s\n", r.angles.theta1(),
                  r.angles.theta2(), cell(r.full.lambda_G, r.full.std_G).c_str(),
                  cell(r.full.lambda_D, r.full.std_D).c_str(), pg.c_str(), pd.c_str());
    s << line;
  }
  return s.str();
}

int run_scan(RunConfig cfg, bool force, unsigned threads) {
  const Representation rep = cfg.rep();
  const std::optional<DeviceModel> device = resolve_device(cfg);
  if (cfg.trials < 1) throw UsageError("--trials must be at least 1");
  if (cfg.shots < 0) throw UsageError("--shots must be non-negative");
  ScanGrid grid{cfg.grid_theta1, cfg.grid_theta2};
  grid.validate();

  ScanConfig sc;
  sc.shots = cfg.shots;
  sc.n_trials = cfg.trials;
  sc.noise = device ? &*device : nullptr;
  sc.mitigation = parse_mitigation(cfg.mitigation);
  sc.seed = cfg.seed;
  sc.allow_fermionic_sampling = cfg.allow_fermionic_sampling;
  sc.threads = threads;

  const auto records = scan(rep, grid, sc);
  const auto anchors = scan_anchors(rep, sc);

  OutputDir out(cfg.output, force);
  out.add("scan.csv", scan_csv(records));
  out.add("anchors.csv", scan_csv(anchors));
  if (records.size() >= 6) {
    std::vector<std::pair<double, double>> pts;
    for (const auto &r : records) pts.emplace_back(r.full.lambda_G, r.full.lambda_D);
    const EllipseFit fit = fit_ellipse(pts);
    out.add("ellipse.json", ellipse_to_json(fit).dump(2) + "\n");
    std::printf("ellipse: center (%.4f, %.4f) axes (%.4f, %.4f) rms %.3g\n", fit.center[0], fit.center[1],
                fit.axes[0], fit.axes[1], fit.rms);
  } else {
    std::fprintf(stderr, "note: %zu grid points; ellipse fit needs at least 6, skipped\n", records.size());
  }
  const std::string device_name = device ? device->name : "noiseless";
  const std::string table =
      table_block(device_name, device ? device->quantum_volume : 0, cfg.representation, anchors);
  out.add("report.txt", table);
  out.add("config.json", cfg.to_json().dump(2) + "\n");
  out.commit();
  std::printf("%zu grid points\n%s", records.size(), table.c_str());
  std::printf("wrote %s\n", cfg.output.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------
// report

struct ScanInput {
  fs::path dir;
  RunConfig config;
  std::vector<ScanRecord> anchors;
  std::vector<ScanRecord> scan;
  std::optional<EllipseFit> ellipse;
};

int run_report(const std::vector<std::string> &inputs, const std::string &output, bool force) {
  if (inputs.empty()) throw MissingInput("report needs at least one scan directory (--inputs)");
  std::vector<std::string> missing;
  for (const auto &in : inputs)
    for (const char *f : {"config.json", "anchors.csv", "scan.csv"})
      if (!fs::exists(fs::path(in) / f)) missing.push_back((fs::path(in) / f).string());
  if (!missing.empty()) {
    std::string msg = "missing report inputs:";
    for (const auto &m : missing) msg += "\n  " + m;
    throw MissingInput(msg);
  }

  std::vector<ScanInput> scans;
  for (const auto &in : inputs) {
    ScanInput s;
    s.dir = in;
    try {
      s.config = RunConfig::from_json(json::parse(read_file(s.dir / "config.json")));
    } catch (const json::parse_error &e) {
      throw UsageError((s.dir / "config.json").string() + ": " + e.what());
    }
    if (s.config.command != "scan") throw UsageError(s.dir.string() + " is not a scan output");
    s.anchors = parse_scan_csv(read_file(s.dir / "anchors.csv"));
    s.scan = parse_scan_csv(read_file(s.dir / "scan.csv"));
    if (fs::exists(s.dir / "ellipse.json")) s.ellipse = ellipse_from_json(json::parse(read_file(s.dir / "ellipse.json")));
    scans.push_back(std::move(s));
  }

  // Fermionic sections first, then bosonic; device order as given.
  std::string table;
  std::string csv = "device,quantum_volume,preparation,row,theta1,theta2,lambda_G_full,lambda_D_full,std_G_full,"
                    "std_D_full,lambda_G_proj,lambda_D_proj,std_G_proj,std_D_proj\n";
  int sections = 0;
  for (const char *enc : {"fermionic", "bosonic"}) {
    for (const auto &s : scans) {
      if (s.config.representation != enc) continue;
      const std::string dev = s.config.device ? s.config.device->value("name", std::string("?")) : "noiseless";
      const int qv = s.config.device ? s.config.device->value("quantum_volume", 0) : 0;
      table += table_block(dev, qv, enc, s.anchors) + "\n";
      ++sections;
      for (std::size_t i = 0; i < s.anchors.size(); ++i) {
        const auto &r = s.anchors[i];
        auto opt = [](const std::optional<double> &v) { return v ? fmt(*v) : std::string(); };
        csv += dev + "," + std::to_string(qv) + "," + enc + "," + std::to_string(i) + "," + fmt(r.angles.theta1()) +
               "," + fmt(r.angles.theta2()) + "," + fmt(r.full.lambda_G) + "," + fmt(r.full.lambda_D) + "," +
               opt(r.full.std_G) + "," + opt(r.full.std_D) + ",";
        if (r.projected)
          csv += fmt(r.projected->lambda_G) + "," + fmt(r.projected->lambda_D) + "," + opt(r.projected->std_G) + "," +
                 opt(r.projected->std_D);
        else
          csv += ",,,";
        csv += "\n";
      }
    }
  }

  // Plot data: one gnuplot index per scan, plus the first available ellipse.
  std::string data;
  std::string plot = "set xlabel 'lambda_G'\nset ylabel 'lambda_D'\nset key outside\n"
                     "set arrow from 1, graph 0 to 1, graph 1 nohead dt 2\n"
                     "set arrow from graph 0, first 1 to graph 1, first 1 nohead dt 2\nplot \\\n";
  std::vector<std::string> series;
  for (std::size_t k = 0; k < scans.size(); ++k) {
    const auto &s = scans[k];
    const std::string dev = s.config.device ? s.config.device->value("name", std::string("?")) : "noiseless";
    data += "# index " + std::to_string(k) + ": " + dev + " " + s.config.representation +
            "\n# lambda_G_full lambda_D_full lambda_G_proj lambda_D_proj\n";
    for (const auto &r : s.scan) {
      data += fmt(r.full.lambda_G, 10) + " " + fmt(r.full.lambda_D, 10) + " ";
      data += r.projected ? fmt(r.projected->lambda_G, 10) + " " + fmt(r.projected->lambda_D, 10) : "NaN NaN";
      data += "\n";
    }
    data += "\n\n";
    const std::string title = dev + " " + s.config.representation;
    series.push_back("  'fig_data.dat' index " + std::to_string(k) + " using 1:2 with points pt 2 title '" + title +
                     " full'");
    series.push_back("  'fig_data.dat' index " + std::to_string(k) + " using 3:4 with points pt 6 title '" + title +
                     " projected'");
  }
  std::optional<EllipseFit> fit;
  for (const auto &s : scans)
    if (s.ellipse && !s.config.device) fit = s.ellipse;
  if (!fit)
    for (const auto &s : scans)
      if (s.ellipse) fit = s.ellipse;
  std::string ellipse_data;
  if (fit) {
    const double ca = std::cos(fit->angle), sa = std::sin(fit->angle);
    for (int i = 0; i <= 360; ++i) {
      const double t = 2 * std::numbers::pi * i / 360;
      const double u = fit->axes[0] * std::cos(t), v = fit->axes[1] * std::sin(t);
      ellipse_data += fmt(fit->center[0] + ca * u - sa * v, 10) + " " + fmt(fit->center[1] + sa * u + ca * v, 10) + "\n";
    }
    series.push_back("  'ellipse.dat' using 1:2 with lines title 'elliptical fit'");
  }
  for (std::size_t i = 0; i < series.size(); ++i) plot += series[i] + (i + 1 < series.size() ? ", \\\n" : "\n");

  OutputDir out(output, force);
  out.add("table.txt", table);
  out.add("table.csv", csv);
  out.add("fig_data.dat", data);
  if (fit) out.add("ellipse.dat", ellipse_data);
  out.add("plot.gp", plot);
  out.commit();
  std::printf("%d sections\n\n%s", sections, table.c_str());
  std::printf("wrote %s\n", output.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------
// oracle

int run_oracle() {
  int failures = 0;
  auto check = [&](const std::string &name, double got, double want, double tol) {
    const bool ok = std::abs(got - want) <= tol;
    failures += !ok;
    std::printf("%-4s %-48s library %.12f oracle %.12f\n", ok ? "ok" : "FAIL", name.c_str(), got, want);
  };
  const auto bos = Representation::bosonic();
  const auto fer = Representation::fermionic();
  struct Case {
    std::string name;
    StateVector state;
    Representation rep;
  };
  std::vector<Case> cases{{"GHZ4 (bosonic)", ghz_state(4), bos},
                          {"layer GHZ (bosonic)", build_psi_G(bos), bos},
                          {"Dicke(4,2) (bosonic)", build_psi_D(bos), bos},
                          {"Dicke fan-out (fermionic)", build_psi_D(fer), fer}};
  for (const auto &a : anchor_angles()) {
    cases.push_back({"anchor theta1=" + fmt(a.theta1(), 6) + " (bosonic)", build_fec_target(bos, a).psi, bos});
    cases.push_back({"anchor theta1=" + fmt(a.theta1(), 6) + " (fermionic)", build_fec_target(fer, a).psi, fer});
  }
  for (const auto &c : cases) {
    const Signatures lib = signatures(c.state, c.rep);
    const auto ref = fec_oracle::lambdas_of_state(c.state.amplitudes(), c.rep.encoding == Encoding::Bosonic,
                                                  c.rep.n_orbitals);
    check(c.name + " lambda_D", lib.lambda_D, ref.lambda_D, 1e-8);
    check(c.name + " lambda_G", lib.lambda_G, ref.lambda_G, 1e-8);
  }
  std::printf("%s: %d failure(s)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? kNumerical : kOk;
}

} // namespace

// ---------------------------------------------------------------------------

int main(int argc, char **argv) {
  CLI::App app{"Fermion-exciton condensate preparation, simulation and analysis"};
  app.require_subcommand(1);
  bool force = false;

  RunConfig pc;
  pc.command = "prepare";
  pc.output = "fec_prepare";
  std::string prepare_config;
  auto *prepare = app.add_subcommand("prepare", "Write circuit, target amplitudes and signatures for one angle pair");
  auto *p_rep = prepare->add_option("--rep", pc.representation, "bosonic or fermionic");
  auto *p_t1 = prepare->add_option("--theta1", pc.theta1, "Mixing angle (radians)");
  auto *p_t2 = prepare->add_option("--theta2", pc.theta2, "Relative phase (radians)");
  auto *p_n = prepare->add_option("--n-fermions", pc.n_fermions, "Fermion count N");
  auto *p_r = prepare->add_option("--n-orbitals", pc.n_orbitals, "Orbital count r");
  auto *p_out = prepare->add_option("--out", pc.output, "Output directory");
  prepare->add_option("--config", prepare_config, "Replay a config.json");
  prepare->add_flag("--force", force, "Overwrite existing outputs");

  RunConfig sc;
  sc.command = "scan";
  sc.output = "fec_scan";
  std::string scan_config;
  int theta1_points = 64;
  unsigned threads = 0;
  auto *scan_cmd = app.add_subcommand("scan", "Scan the angle grid and write CSV, ellipse fit and anchor report");
  auto *s_rep = scan_cmd->add_option("--rep", sc.representation, "bosonic or fermionic");
  auto *s_n = scan_cmd->add_option("--n-fermions", sc.n_fermions, "Fermion count N");
  auto *s_r = scan_cmd->add_option("--n-orbitals", sc.n_orbitals, "Orbital count r");
  auto *s_pts = scan_cmd->add_option("--theta1-points", theta1_points, "Evenly spaced theta1 values over [0, pi]");
  auto *s_t1 = scan_cmd->add_option("--theta1", sc.grid_theta1, "Explicit theta1 values")->delimiter(',');
  auto *s_t2 = scan_cmd->add_option("--theta2", sc.grid_theta2, "theta2 values (default 0)")->delimiter(',');
  auto *s_shots = scan_cmd->add_option("--shots", sc.shots, "Shots per setting; 0 for exact expectations (default 0, or 8192 with --trials > 1)");
  auto *s_trials = scan_cmd->add_option("--trials", sc.trials, "Trials per point");
  auto *s_preset = scan_cmd->add_option("--preset", sc.preset, "Bundled noise preset");
  auto *s_cal = scan_cmd->add_option("--calibration", sc.calibration, "Calibration JSON");
  auto *s_mit = scan_cmd->add_option("--mitigation", sc.mitigation, "off, default or strict6");
  auto *s_seed = scan_cmd->add_option("--seed", sc.seed, "Master seed");
  auto *s_allow = scan_cmd->add_flag("--allow-fermionic-sampling", sc.allow_fermionic_sampling,
                                     "Permit sampled tomography on the 8-qubit register");
  auto *s_out = scan_cmd->add_option("--out", sc.output, "Output directory");
  scan_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
  scan_cmd->add_option("--config", scan_config, "Replay a config.json");
  scan_cmd->add_flag("--force", force, "Overwrite existing outputs");
  s_t1->excludes(s_pts);
  s_preset->excludes(s_cal);

  std::vector<std::string> report_inputs;
  std::string report_out = "fec_report";
  auto *report = app.add_subcommand("report", "Aggregate scan outputs into a comparison table and plot data");
  report->add_option("--inputs", report_inputs, "Scan output directories");
  report->add_option("--out", report_out, "Output directory");
  report->add_flag("--force", force, "Overwrite existing outputs");

  auto *oracle = app.add_subcommand("oracle", "Check library signatures against the brute-force Fock-space oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  // Explicit flags override a replayed config.
  auto overlay = [](RunConfig &base, const RunConfig &flags, const std::vector<std::pair<CLI::Option *, int>> &opts) {
    for (const auto &[opt, field] : opts) {
      if (!opt->count()) continue;
      switch (field) {
      case 0: base.representation = flags.representation; break;
      case 1: base.theta1 = flags.theta1; break;
      case 2: base.theta2 = flags.theta2; break;
      case 3: base.n_fermions = flags.n_fermions; break;
      case 4: base.n_orbitals = flags.n_orbitals; break;
      case 5: base.output = flags.output; break;
      case 6: base.grid_theta1 = flags.grid_theta1; break;
      case 7: base.grid_theta2 = flags.grid_theta2; break;
      case 8: base.shots = flags.shots; break;
      case 9: base.trials = flags.trials; break;
      case 10: base.preset = flags.preset; base.calibration.clear(); base.device.reset(); break;
      case 11: base.calibration = flags.calibration; base.preset.clear(); base.device.reset(); break;
      case 12: base.mitigation = flags.mitigation; break;
      case 13: base.seed = flags.seed; break;
      case 14: base.allow_fermionic_sampling = flags.allow_fermionic_sampling; break;
      }
    }
  };

  try {
    std::optional<std::uint64_t> env_seed;
    if (const char *e = std::getenv("FEC_SEED"); e && *e) {
      try {
        std::size_t used = 0;
        env_seed = std::stoull(e, &used);
        if (used != std::string(e).size()) throw std::invalid_argument(e);
      } catch (const std::exception &) {
        throw UsageError(std::string("FEC_SEED is not an unsigned integer: '") + e + "'");
      }
    }

    if (*prepare) {
      RunConfig cfg = pc;
      if (!prepare_config.empty()) {
        cfg = RunConfig::from_json(json::parse(read_file(prepare_config)));
        if (cfg.command != "prepare") throw UsageError(prepare_config + " is not a prepare config");
        overlay(cfg, pc, {{p_rep, 0}, {p_t1, 1}, {p_t2, 2}, {p_n, 3}, {p_r, 4}, {p_out, 5}});
      } else {
        for (auto *opt : {p_rep, p_t1, p_t2})
          if (!opt->count()) throw UsageError(opt->get_name() + " is required");
      }
      if (env_seed) cfg.seed = *env_seed;
      return run_prepare(cfg, force);
    }
    if (*scan_cmd) {
      RunConfig cfg = sc;
      if (!scan_config.empty()) {
        cfg = RunConfig::from_json(json::parse(read_file(scan_config)));
        if (cfg.command != "scan") throw UsageError(scan_config + " is not a scan config");
        if (s_pts->count()) sc.grid_theta1 = ScanGrid::linspace(0.0, std::numbers::pi, theta1_points);
        overlay(cfg, sc,
                {{s_rep, 0}, {s_n, 3}, {s_r, 4}, {s_out, 5}, {s_pts, 6}, {s_t1, 6}, {s_t2, 7}, {s_shots, 8},
                 {s_trials, 9}, {s_preset, 10}, {s_cal, 11}, {s_mit, 12}, {s_seed, 13}, {s_allow, 14}});
      } else {
        if (!s_rep->count()) throw UsageError("--rep is required");
        if (!s_t1->count()) cfg.grid_theta1 = ScanGrid::linspace(0.0, std::numbers::pi, theta1_points);
        // Several trials only make sense with sampling.
        if (!s_shots->count() && cfg.trials > 1) cfg.shots = 8192;
      }
      if (env_seed) cfg.seed = *env_seed;
      return run_scan(cfg, force, threads);
    }
    if (*report) return run_report(report_inputs, report_out, force);
    if (*oracle) return run_oracle();
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const MissingInput &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingInput;
  } catch (const NumericalError &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
