#pragma once

// Run configuration and the on-disk formats: energy.csv, density.bin,
// state checkpoints.

#include "oatdcc/propagator.hpp"
#include "oatdcc/state_prep.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace oatdcc {

struct RunConfig {
  std::string method = "oatdccd";
  // grid
  double half_width = 15.0;
  int n_grid = 64;
  // model
  double well_depth = 7.0;
  double well_width = 1.5;
  double interaction_strength = 1.0;
  double softening = 0.2;
  bool squared_distance = false;
  int rank = -1;  // -1: automatic
  // counts of the bound system (the wavepacket adds one particle and one orbital)
  int n_particles = 4;
  int n_orbitals = 8;
  // integrator
  double dt = 0.005;
  double t_final = 30.0;
  int stride = 1;
  int density_stride = 20;
  int potential_substeps = 1;
  std::string integrator = "strang";
  double eps = 1e-8;
  // imaginary-time relaxation
  double relax_ds = 0.01;
  double relax_tol = 1e-9;
  int relax_max_steps = 200000;
  // wavepacket
  bool attach_wavepacket = true;
  double wp_x0 = 10.0;
  double wp_k0 = 1.2;
  double wp_sigma = 1.25;
  int wp_spin = 0;
  // bookkeeping
  std::uint64_t seed = 1;
  std::string output = "run";
  std::string initial_checkpoint;  // start from a saved state instead of preparing one

  ModelParams model_params() const;
  WavepacketParams wavepacket_params() const;
  PropagationOptions propagation_options() const;
  RelaxOptions relax_options() const;
};

/// Sets one field from its textual value. Throws std::invalid_argument for
/// unknown keys or malformed values.
void set_config_value(RunConfig& c, const std::string& key, const std::string& value);
/// key=value lines, '#' comments, blank lines ignored.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
/// All fields as key -> textual value (round-trips through set_config_value).
std::map<std::string, std::string> config_entries(const RunConfig& c);
/// Throws std::invalid_argument describing the first violated constraint.
void validate(const RunConfig& c);

void write_energy_csv(const std::string& path, const std::vector<ObservableRecord>& records);
std::vector<ObservableRecord> read_energy_csv(const std::string& path);

struct DensityFile {
  std::uint32_t version = 1;
  std::uint32_t n_basis = 0;
  std::uint32_t n_grid = 0;
  std::vector<DensitySnapshot> snapshots;
};

void write_density_bin(const std::string& path, int n_grid, const std::vector<DensitySnapshot>& snaps);
/// Throws std::runtime_error on a bad magic, version or truncated file.
DensityFile read_density_bin(const std::string& path);

using Checkpoint = std::variant<McState, CCState>;
void write_checkpoint(const std::string& path, const McState& s);
void write_checkpoint(const std::string& path, const CCState& s);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace oatdcc
