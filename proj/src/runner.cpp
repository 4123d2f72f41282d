#include "oatdcc/runner.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#ifndef OATDCC_VERSION
#define OATDCC_VERSION "unknown"
#endif

namespace oatdcc {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string code_version() { return OATDCC_VERSION; }

Model build_model(const RunConfig& c) { return make_model(c.half_width, c.n_grid, c.model_params(), c.rank); }

PreparedState prepare_state(const RunConfig& c, const Model& model) {
  PreparedState p;
  p.ground = ground_state_mctdhf(model, c.n_particles, c.n_orbitals, c.seed, c.relax_options());
  McState s = p.ground.state;
  if (c.attach_wavepacket) s = attach_wavepacket(s, wavepacket(model.grid, c.wavepacket_params()), c.wp_spin);
  s.t = 0.0;
  p.brueckner = brueckner_rotate(s);
  p.mc = p.brueckner.state;
  p.mc_energy = evaluate(p.mc, model.full(), model.lr).energy.real();
  p.extraction = extract_cc_initial(p.mc);
  p.cc = p.extraction.state;
  p.cc_energy = cc_energy(p.cc, model.full(), model.lr);
  return p;
}

namespace {

void write_relax_history(const std::string& path, const RelaxResult& r, double ds) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fprintf(f, "s,E\n");
  for (std::size_t k = 0; k < r.history.size(); ++k) std::fprintf(f, "%.17g,%.17g\n", k * ds, r.history[k]);
  std::fclose(f);
}

json config_json(const RunConfig& c) {
  json j;
  for (const auto& [k, v] : config_entries(c)) j[k] = v;
  return j;
}

json monitor_json(const StepMonitor& m) {
  return {{"steps", m.steps},
          {"max_biorth_drift", m.max_biorth_drift},
          {"max_eta_residual", m.max_eta_residual},
          {"max_eta_condition", m.max_eta_condition},
          {"max_rho_ov", m.max_rho_ov},
          {"max_trace_error", m.max_trace_error},
          {"least_squares_steps", m.least_squares_steps}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path);
  o << j.dump(2) << "\n";
}

// Converts any checkpoint into the state type the method propagates.
CCState to_cc(const Checkpoint& cp) {
  if (const auto* cc = std::get_if<CCState>(&cp)) return *cc;
  const McState& mc = std::get<McState>(cp);
  return extract_cc_initial(brueckner_rotate(mc).state).state;
}

}  // namespace

int run(const RunConfig& c, Workflow w, std::ostream& log) {
  validate(c);
  const MethodKind method = parse_method(c.method);
  fs::create_directories(c.output);
  const fs::path out(c.output);
  const Model model = build_model(c);

  json manifest;
  manifest["config"] = config_json(c);
  manifest["seed"] = c.seed;
  manifest["code_version"] = code_version();
  manifest["workflow"] = w == Workflow::relax ? "relax" : w == Workflow::prepare ? "prepare" : "propagate";
  manifest["interaction_rank"] = model.lr.rank();
  manifest["n_basis"] = model.grid.n_basis();
  manifest["dx"] = model.grid.dx;

  Checkpoint start;
  if (!c.initial_checkpoint.empty()) {
    start = read_checkpoint(c.initial_checkpoint);
    manifest["initial_checkpoint"] = c.initial_checkpoint;
    if (w != Workflow::propagate) throw std::invalid_argument("relax/prepare do not take an initial checkpoint");
  } else if (w == Workflow::relax) {
    const RelaxResult r = ground_state_mctdhf(model, c.n_particles, c.n_orbitals, c.seed, c.relax_options());
    write_relax_history((out / "relax.csv").string(), r, c.relax_ds);
    write_checkpoint((out / "ground.chk").string(), r.state);
    manifest["ground"] = {{"energy", r.energy}, {"steps", r.steps}, {"converged", r.converged}, {"monotone", r.monotone}};
    write_json((out / "manifest.json").string(), manifest);
    log << "ground state energy " << r.energy << " after " << r.steps << " steps"
        << (r.converged ? "" : " (NOT converged)") << "\n";
    return 0;
  } else {
    const PreparedState p = prepare_state(c, model);
    write_relax_history((out / "relax.csv").string(), p.ground, c.relax_ds);
    write_checkpoint((out / "initial_mctdhf.chk").string(), p.mc);
    write_checkpoint((out / "initial_cc.chk").string(), p.cc);
    manifest["prepare"] = {{"ground_energy", p.ground.energy},
                           {"ground_converged", p.ground.converged},
                           {"ground_steps", p.ground.steps},
                           {"mctdhf_energy", p.mc_energy},
                           {"oatdccd_energy_re", p.cc_energy.real()},
                           {"oatdccd_energy_im", p.cc_energy.imag()},
                           {"brueckner_iterations", p.brueckner.iterations},
                           {"brueckner_max_singles", p.brueckner.max_singles},
                           {"reference_overlap_before", p.brueckner.reference_overlap_before},
                           {"reference_overlap_after", p.brueckner.reference_overlap_after},
                           {"truncation_remainder", p.extraction.truncation_remainder}};
    log << "prepared: E_MCTDHF(0) = " << p.mc_energy << ", E_OATDCCD(0) = " << p.cc_energy.real() << "\n";
    if (!p.ground.converged) log << "warning: ground-state relaxation did not converge\n";
    if (w == Workflow::prepare) {
      write_json((out / "manifest.json").string(), manifest);
      return 0;
    }
    if (method == MethodKind::mctdhf)
      start = p.mc;
    else
      start = p.cc;
  }

  const PropagationOptions opt = c.propagation_options();
  Trajectory tr;
  if (method == MethodKind::mctdhf) {
    if (!std::holds_alternative<McState>(start)) throw std::invalid_argument("mctdhf needs an MCTDHF checkpoint");
    McState s = std::get<McState>(start);
    tr = propagate(s, model, opt);
    write_checkpoint((out / "final.chk").string(), s);
  } else {
    CCState s = to_cc(start);
    if (method == MethodKind::tdhf && s.orbitals.n_vir() != 0)
      throw std::invalid_argument("tdhf needs a state without virtual orbitals");
    tr = propagate(s, model, method, opt);
    write_checkpoint((out / "final.chk").string(), s);
    manifest["monitor"] = monitor_json(tr.monitor);
  }
  write_energy_csv((out / "energy.csv").string(), tr.records);
  write_density_bin((out / "density.bin").string(), c.n_grid, tr.densities);

  manifest["n_records"] = tr.records.size();
  manifest["n_density_snapshots"] = tr.densities.size();
  manifest["aborted"] = tr.aborted;
  if (tr.aborted) manifest["error"] = tr.error;
  if (!tr.records.empty()) {
    const auto& r0 = tr.records.front();
    double drift = 0.0, fmax = 0.0, im_max = 0.0;
    for (const auto& r : tr.records) {
      drift = std::max(drift, std::abs(r.energy - r0.energy));
      fmax = std::max(fmax, r.f);
      im_max = std::max(im_max, std::abs(r.energy.imag()));
    }
    manifest["summary"] = {{"E0_re", r0.energy.real()}, {"E0_im", r0.energy.imag()}, {"max_energy_drift", drift},
                           {"max_f", fmax}, {"max_abs_imag_energy", im_max}, {"t_end", tr.records.back().t}};
    log << c.method << ": t = " << tr.records.back().t << ", max |E(t) - E(0)| = " << drift << ", max f = " << fmax
        << "\n";
  }
  write_json((out / "manifest.json").string(), manifest);
  if (tr.aborted) {
    log << "propagation aborted: " << tr.error << "\n";
    return 2;
  }
  return 0;
}

CompareReport compare(const std::string& dir_a, const std::string& dir_b) {
  const DensityFile a = read_density_bin((fs::path(dir_a) / "density.bin").string());
  const DensityFile b = read_density_bin((fs::path(dir_b) / "density.bin").string());
  if (a.n_grid != b.n_grid || a.n_basis != b.n_basis) throw std::runtime_error("density grids do not match");
  if (a.snapshots.size() != b.snapshots.size()) throw std::runtime_error("snapshot counts differ");

  auto read_dx = [](const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) return -1.0;
    const json j = json::parse(f);
    return j.value("dx", -1.0);
  };
  const double dxa = read_dx(dir_a), dxb = read_dx(dir_b);
  if (dxa > 0 && dxb > 0 && std::abs(dxa - dxb) > 1e-12 * dxa) throw std::runtime_error("grid spacings differ");
  const double dx = dxa > 0 ? dxa : 1.0;

  CompareReport r;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const auto& sa = a.snapshots[k];
    const auto& sb = b.snapshots[k];
    if (std::abs(sa.t - sb.t) > 1e-9 * std::max(1.0, std::abs(sa.t)))
      throw std::runtime_error("snapshot times differ");
    const Eigen::VectorXd d = (sa.n - sb.n).cwiseAbs();
    r.t.push_back(sa.t);
    r.max_abs.push_back(d.size() ? d.maxCoeff() : 0.0);
    r.integrated.push_back(d.sum() * dx);
    r.overall_max = std::max(r.overall_max, r.max_abs.back());
  }
  return r;
}

void write_compare_report(const CompareReport& r, const std::string& csv_path, const std::string& json_path) {
  std::FILE* f = std::fopen(csv_path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + csv_path);
  std::fprintf(f, "t,max_abs,integrated\n");
  for (std::size_t k = 0; k < r.t.size(); ++k)
    std::fprintf(f, "%.17g,%.17g,%.17g\n", r.t[k], r.max_abs[k], r.integrated[k]);
  std::fclose(f);
  double int_max = 0.0;
  for (double v : r.integrated) int_max = std::max(int_max, v);
  write_json(json_path, {{"n_snapshots", r.t.size()}, {"max_abs", r.overall_max}, {"max_integrated", int_max}});
}

}  // namespace oatdcc
