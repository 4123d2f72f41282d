#pragma once

// Real-time propagation by variational splitting: exact kinetic half steps
// around an RK4 step of the remaining generator, with observable recording.

#include "oatdcc/fci.hpp"
#include "oatdcc/oatdcc_eom.hpp"

#include <functional>
#include <string>
#include <vector>

namespace oatdcc {

/// Grid, potentials and the factorized interaction of one run.
struct Model {
  GridSpec grid;
  ModelParams params;
  InteractionLowRank lr;

  OneBodyOperator full() const { return full_hamiltonian(grid, params); }
  OneBodyOperator potential_part() const { return potential_only(grid, params); }
};

/// rank < 0 selects the rank automatically (select_rank).
Model make_model(double half_width, int n_grid, const ModelParams& params, int rank = -1);

enum class Integrator { strang, rk4 };

struct PropagationOptions {
  double dt = 0.005;
  double t_final = 30.0;
  int stride = 1;            // observable records every `stride` steps
  int density_stride = 20;   // density snapshots every `density_stride` steps
  Integrator integrator = Integrator::strang;
  int potential_substeps = 1;  // RK4 substeps inside the potential stage
  double eps = 1e-8;
};

struct ObservableRecord {
  double t = 0.0;
  cplx energy{};
  cplx norm{};
  double f = 0.0;  // sum over spin of the integral of |Im n(x)|
};

struct DensitySnapshot {
  double t = 0.0;
  VectorXc n;  // length n_basis, spin-up block first
};

/// Worst values seen during a run.
struct StepMonitor {
  double max_biorth_drift = 0.0;  // max |Phi~ Phi dx - I| before correction
  double max_eta_residual = 0.0;
  double max_eta_condition = 0.0;
  double max_rho_ov = 0.0;
  double max_trace_error = 0.0;
  int least_squares_steps = 0;
  int steps = 0;
};

struct Trajectory {
  std::vector<ObservableRecord> records;
  std::vector<DensitySnapshot> densities;
  StepMonitor monitor;
  bool aborted = false;
  std::string error;
};

// Kinetic flow: Phi <- exp(-i T dt/2) Phi, Phi~ <- Phi~ exp(+i T dt/2).
void kinetic_half_step(CCState& s, const GridSpec& grid, double dt);
void kinetic_half_step(McState& s, const GridSpec& grid, double dt);

/// One RK4 step of the OATDCCD flow under `op` (plus the interaction),
/// followed by rebiorthonormalization. For tdccd-fixed only the amplitudes
/// move, with the integrals of the frozen orbitals. Throws
/// std::runtime_error on non-finite values; the state is then untouched.
void potential_full_step(CCState& s, const Model& model, const OneBodyOperator& op, double dt,
                         MethodKind method, double eps = 1e-8, StepMonitor* mon = nullptr);
/// MCTDHF counterpart, followed by Loewdin re-orthonormalization.
void potential_full_step(McState& s, const Model& model, const OneBodyOperator& op, double dt,
                         double eps = 1e-8);

/// One composite step (Strang or unsplit RK4 with the full h).
void step(CCState& s, const Model& model, MethodKind method, const PropagationOptions& opt,
          StepMonitor* mon = nullptr);
void step(McState& s, const Model& model, const PropagationOptions& opt);

/// n(x) = sum rho1(p,q) phi~_p(x) phi_q(x).
VectorXc cc_density(const CCState& s);
VectorXc mc_density(const McState& s);
double imaginary_density_integral(const VectorXc& n, double dx);

/// <Psi~|Psi> evaluated through determinant overlaps of the actual orbital
/// sets (equal to one when they are exactly biorthonormal).
cplx cc_norm(const CCState& s);
cplx mc_norm(const McState& s);

ObservableRecord observe(const CCState& s, const Model& model);
ObservableRecord observe(const McState& s, const Model& model);

using RecordCallback = std::function<void(const ObservableRecord&)>;

/// Iterates `step` from s.t to opt.t_final. Records are taken at t = 0 and
/// every `stride` steps; density snapshots every `density_stride` steps plus
/// the final state. On a numerical failure the trajectory up to the last
/// good step is returned with aborted = true.
Trajectory propagate(CCState& s, const Model& model, MethodKind method, const PropagationOptions& opt,
                     const RecordCallback& on_record = {});
Trajectory propagate(McState& s, const Model& model, const PropagationOptions& opt,
                     const RecordCallback& on_record = {});

}  // namespace oatdcc
