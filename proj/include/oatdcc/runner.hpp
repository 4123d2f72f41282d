#pragma once

// Orchestration of the relax / prepare / propagate / compare workflows.

#include "oatdcc/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace oatdcc {

struct PreparedState {
  RelaxResult ground;  // bound system
  McState mc;          // packet attached, Brueckner orbitals
  CCState cc;
  double mc_energy = 0.0;
  cplx cc_energy{};
  BruecknerResult brueckner;
  Extraction extraction;
};

Model build_model(const RunConfig& c);

/// Ground state, packet attachment (if enabled), Brueckner rotation and CC
/// extraction. Non-convergence of the relaxation is reported through
/// ground.converged, not thrown.
PreparedState prepare_state(const RunConfig& c, const Model& model);

enum class Workflow { propagate, relax, prepare };

/// Runs one workflow and writes its outputs into c.output. Returns 0 on
/// success, 2 if propagation aborted (partial results are still written).
/// Validation errors throw std::invalid_argument before anything is written.
int run(const RunConfig& c, Workflow w, std::ostream& log);

struct CompareReport {
  std::vector<double> t;
  std::vector<double> max_abs;     // max_x |n_A - n_B|
  std::vector<double> integrated;  // sum_s int |n_A - n_B| dx
  double overall_max = 0.0;
};

/// Compares density.bin of two run directories. Throws std::runtime_error
/// on mismatched grids or snapshot times. Writes nothing.
CompareReport compare(const std::string& dir_a, const std::string& dir_b);
/// compare.csv plus a JSON summary.
void write_compare_report(const CompareReport& r, const std::string& csv_path, const std::string& json_path);

std::string code_version();

}  // namespace oatdcc
