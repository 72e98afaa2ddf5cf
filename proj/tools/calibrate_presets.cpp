// Fits a uniform device model to the reference signature rows of one device
// by coordinate search, then writes it as a preset file.
//
//   fec-calibrate --device santiago-like --qubits 5 --quantum-volume 32 --out data/presets/santiago-like.json

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fec/analysis.hpp"

using namespace fec;

namespace {

struct Params {
  double p2 = 0.02, e0 = 0.02, e1 = 0.04, gamma_amp = 0.0;
};

DeviceModel make_model(const std::string &name, int n_qubits, int qv, const Params &p) {
  DeviceModel m = DeviceModel::uniform(name, n_qubits, p.p2 / 10, p.p2);
  m.quantum_volume = qv;
  m.gamma_amp = p.gamma_amp;
  for (auto &c : m.readout) c = {{{1 - p.e0, p.e0}, {p.e1, 1 - p.e1}}};
  m.validate();
  return m;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

struct Evaluation {
  double loss = 0;
  std::vector<std::pair<const ReferenceBlock *, std::vector<ScanRecord>>> rows;
};

// Encoding whose projected rows must all pass the FEC test while some full
// row fails it, with the given margin around 1.
struct SplitRequirement {
  std::optional<Encoding> encoding;
  double margin = 0.02;
};

double split_penalty(const ReferenceBlock &b, const std::vector<ScanRecord> &recs, const SplitRequirement &req) {
  if (!req.encoding || *req.encoding != b.encoding) return 0.0;
  double penalty = 0.0, lowest_full = 1e9;
  for (const auto &r : recs) {
    const double proj_min = std::min(r.projected->lambda_G, r.projected->lambda_D);
    penalty += std::pow(std::max(0.0, 1 + req.margin - proj_min), 2);
    lowest_full = std::min(lowest_full, std::min(r.full.lambda_G, r.full.lambda_D));
  }
  penalty += std::pow(std::max(0.0, lowest_full - (1 - req.margin)), 2);
  return 100 * penalty;
}

Evaluation evaluate(const std::vector<const ReferenceBlock *> &blocks, const DeviceModel &model,
                    const SplitRequirement &req) {
  Evaluation ev;
  ScanConfig cfg;
  cfg.noise = &model;
  for (const auto *b : blocks) {
    const auto rep = b->encoding == Encoding::Bosonic ? Representation::bosonic() : Representation::fermionic();
    auto recs = scan_anchors(rep, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto &f = recs[i].full;
      const auto &p = *recs[i].projected;
      ev.loss += std::pow(f.lambda_G - b->full[i][0], 2) + std::pow(f.lambda_D - b->full[i][1], 2) +
                 std::pow(p.lambda_G - b->projected[i][0], 2) + std::pow(p.lambda_D - b->projected[i][1], 2);
    }
    ev.loss += split_penalty(*b, recs, req);
    ev.rows.emplace_back(b, std::move(recs));
  }
  return ev;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Calibrate a device preset against reference signature rows"};
  std::string device, out_path, reference = reference_rows_path().string();
  int n_qubits = 0, qv = 0, max_iter = 30;
  Params start;
  double p2_min = 0.005, readout_min = 0.005;
  SplitRequirement split;
  std::string split_name;
  app.add_option("--device", device, "Device name as used in the reference file")->required();
  app.add_option("--qubits", n_qubits, "Qubit count written to the preset")->required();
  app.add_option("--quantum-volume", qv, "Quantum volume written to the preset")->required();
  app.add_option("--out", out_path, "Preset file to write");
  app.add_option("--reference", reference, "Reference rows JSON");
  app.add_option("--iterations", max_iter, "Coordinate-search iterations");
  app.add_option("--p2", start.p2, "Starting two-qubit depolarizing probability");
  app.add_option("--e0", start.e0, "Starting readout p(1|0)");
  app.add_option("--e1", start.e1, "Starting readout p(0|1)");
  app.add_option("--gamma-amp", start.gamma_amp, "Starting amplitude damping");
  app.add_option("--p2-min", p2_min, "Lower bound on p2 (keeps gate noise in the model)");
  app.add_option("--readout-min", readout_min, "Lower bound on e0 and e1");
  app.add_option("--require-split", split_name,
                 "Encoding whose projected rows must pass the FEC test while a full row fails it");
  app.add_option("--split-margin", split.margin, "Margin around 1 for --require-split");
  CLI11_PARSE(app, argc, argv);
  if (!split_name.empty()) split.encoding = parse_encoding(split_name);

  const auto all = load_reference_rows(reference);
  std::vector<const ReferenceBlock *> blocks;
  for (const auto &b : all)
    if (b.device == device) blocks.push_back(&b);
  if (blocks.empty()) {
    std::cerr << "no reference rows for device '" << device << "'\n";
    return 3;
  }
  Params best = start;
  double best_loss = evaluate(blocks, make_model(device, n_qubits, qv, best), split).loss;
  double steps[4] = {0.01, 0.01, 0.02, 0.01};
  for (int it = 0; it < max_iter; ++it) {
    bool improved = false;
    for (int k = 0; k < 4; ++k) {
      for (double sign : {1.0, -1.0}) {
        Params trial = best;
        double *field[4] = {&trial.p2, &trial.e0, &trial.e1, &trial.gamma_amp};
        const double lower[4] = {p2_min, readout_min, readout_min, 0.0};
        *field[k] = std::clamp(*field[k] + sign * steps[k], lower[k], 0.3);
        const double loss = evaluate(blocks, make_model(device, n_qubits, qv, trial), split).loss;
        if (loss < best_loss - 1e-12) {
          best_loss = loss;
          best = trial;
          improved = true;
          break;
        }
      }
    }
    std::printf("iter %2d loss %.5f  p2 %.4f e0 %.4f e1 %.4f gamma_amp %.4f\n", it, best_loss, best.p2, best.e0,
                best.e1, best.gamma_amp);
    if (!improved) {
      for (double &s : steps) s /= 2;
      if (steps[0] < 5e-4) break;
    }
  }

  best = {round4(best.p2), round4(best.e0), round4(best.e1), round4(best.gamma_amp)};
  const DeviceModel model = make_model(device, n_qubits, qv, best);
  const auto ev = evaluate(blocks, model, split);
  for (const auto &[b, recs] : ev.rows) {
    std::printf("%s %s\n", b->device.c_str(), std::string(encoding_name(b->encoding)).c_str());
    for (std::size_t i = 0; i < 4; ++i)
      std::printf("  full (%.3f, %.3f) ref (%.3f, %.3f)   proj (%.3f, %.3f) ref (%.3f, %.3f)\n",
                  recs[i].full.lambda_G, recs[i].full.lambda_D, b->full[i][0], b->full[i][1],
                  recs[i].projected->lambda_G, recs[i].projected->lambda_D, b->projected[i][0],
                  b->projected[i][1]);
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << device_model_to_json(model) << '\n';
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}
