#pragma once

// Closed-form CCD expressions: energy functional, amplitude right-hand
// sides, and reduced density matrices.
//
// Index conventions (orbitals 0..N-1 occupied, N..L-1 virtual):
//   h(p,q)        = h^p_q
//   u(p,r,q,s)    = u^{pr}_{qs}, antisymmetrized
//   tau(i,j,a,b)  = tau^{ab}_{ij}   (a, b counted from 0 within the virtuals)
//   lambda(a,b,i,j) = lambda^{ij}_{ab}
//   rho1(p,q)     = rho^q_p   = <c+_p c~_q>
//   rho2(p,r,q,s) = rho^{qs}_{pr} = <c+_p c+_r c~_s c~_q>
// so that E = sum rho1(p,q) h(p,q) + 1/4 sum rho2(p,r,q,s) u(p,r,q,s).

#include "oatdcc/types.hpp"

namespace oatdcc {

struct Amplitudes {
  Tensor4c tau;     // N x N x V x V
  Tensor4c lambda;  // V x V x N x N

  static Amplitudes zero(int n_occ, int n_vir) {
    return {Tensor4c(n_occ, n_occ, n_vir, n_vir), Tensor4c(n_vir, n_vir, n_occ, n_occ)};
  }
  int n_occ() const { return static_cast<int>(tau.dim(0)); }
  int n_vir() const { return static_cast<int>(tau.dim(2)); }
};

struct DensityMatrices {
  MatrixXc rho1;
  Tensor4c rho2;
};

/// out(p,q,r,s) = [f(p,q,r,s) - f(q,p,r,s) - f(p,q,s,r) + f(q,p,s,r)] / 4
Tensor4c antisymmetrize(const Tensor4c& f);

/// <phi~|H e^T|phi>
cplx reference_expectation(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);

cplx ccd_energy(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);
/// dE/dlambda^{ij}_{ab} = <phi~^{ab}_{ij}| e^{-T} H e^T |phi>, layout (i,j,a,b).
Tensor4c tau_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);
/// dE/dtau^{ab}_{ij}, layout (a,b,i,j).
Tensor4c lambda_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);

MatrixXc density_1b(const Amplitudes& amp);
Tensor4c density_2b(const Amplitudes& amp);
DensityMatrices densities(const Amplitudes& amp);

cplx expectation(const MatrixXc& h, const Tensor4c& u, const MatrixXc& rho1, const Tensor4c& rho2);

// Term-by-term transcription with no intermediates, kept for cross-checking
// the factored versions above.
namespace naive {
cplx ccd_energy(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);
Tensor4c tau_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);
Tensor4c lambda_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);
MatrixXc density_1b(const Amplitudes& amp);
Tensor4c density_2b(const Amplitudes& amp);
}  // namespace naive

/// Contribution of a one-body operator d (e.g. the orbital time-derivative
/// operator D0) to the amplitude equations. Only the occ-occ and vir-vir
/// blocks of d can contribute, so for D0 with the zero gauge these vanish.
Tensor4c one_body_tau_rhs(const MatrixXc& d, const Amplitudes& amp);
Tensor4c one_body_lambda_rhs(const MatrixXc& d, const Amplitudes& amp);

struct GroundSolveOptions {
  int max_iter = 500;
  double tol = 1e-10;
  double damping = 0.0;  // tau <- tau - (1 - damping) R / D
  int diis_size = 6;
};

struct GroundSolveResult {
  Amplitudes amp;
  cplx energy{};
  int iterations = 0;
  double tau_residual = 0.0;
  double lambda_residual = 0.0;
  bool converged = false;
};

/// Stationary CCD amplitudes in a fixed basis: tau_rhs = 0 by quasi-Newton
/// iteration with Fock denominators and DIIS, then lambda_rhs = 0 the same way.
GroundSolveResult ccd_ground_solve(const MatrixXc& h, const Tensor4c& u, int n_occ,
                                   const GroundSolveOptions& opt = {});

}  // namespace oatdcc
