#pragma once

// Time derivative of the orbital-adaptive CCD state: amplitude equations,
// the P-space linear systems for the orbital rotation generator, and the
// Q-space orbital equations.

#include "oatdcc/basis.hpp"
#include "oatdcc/ccd_algebra.hpp"

namespace oatdcc {

struct CCState {
  OrbitalPair orbitals;
  Amplitudes amp;
  double t = 0.0;

  int n_occ() const { return orbitals.n_occ; }
  int n_orb() const { return orbitals.n_orb(); }
};

struct CCDerivative {
  MatrixXc dket;
  MatrixXc dbra;
  Tensor4c dtau;
  Tensor4c dlambda;
};

/// eta(p,q) = <phi~_p|dphi_q/dt>. Only the occ-vir and vir-occ blocks are
/// populated; the occ-occ and vir-vir blocks are the gauge and stay zero.
struct EtaMatrix {
  MatrixXc eta;
  double residual = 0.0;   // max relative residual of the two linear systems
  double condition = 1.0;  // max condition number of the two coefficient matrices
  bool least_squares = false;
};

/// A((i,a),(j,b)) = delta_ab rho^i_j - delta_ij rho^b_a, rows i*V+a and
/// columns j*V+b, acting on the unknowns eta(j, N+b).
MatrixXc build_pspace_matrix(const MatrixXc& rho1, int n_occ);
/// Partner system for eta(N+b, j): B((a,i),(b,j)) = delta_ij rho^a_b - delta_ab rho^j_i,
/// rows a*N+i and columns b*N+j.
MatrixXc build_pspace_matrix_partner(const MatrixXc& rho1, int n_occ);

/// C(x,y) = <Psi~|[H, c+_x c~_y]|Psi> from the density matrices.
MatrixXc commutator_expectation(const MatrixXc& h, const Tensor4c& u, const MatrixXc& rho1,
                                const Tensor4c& rho2);

/// Dense LU solve of both P-space systems. Falls back to a least-squares
/// solve (with a warning on stderr) when the condition number exceeds 1e12.
EtaMatrix solve_eta(const MatrixXc& rho1, const Tensor4c& rho2, const MatrixXc& h, const Tensor4c& u,
                    int n_occ);

/// Regularized inverse applied separately to the occ-occ and vir-vir blocks.
MatrixXc blockwise_regularized_inverse(const MatrixXc& rho1, int n_occ, double eps);

/// Q dPhi/dt = -i Q [h Phi + M rho1^{-T}].
MatrixXc qspace_rhs_ket(const OrbitalPair& pair, const MatrixXc& rho1, const Tensor4c& rho2,
                        const OneBodyOperator& op, const MatrixXc& W, double eps = 1e-8);
/// dPhi~/dt Q = i [Phi~ h + rho1^{-T} M~] Q.
MatrixXc qspace_rhs_bra(const OrbitalPair& pair, const MatrixXc& rho1, const Tensor4c& rho2,
                        const OneBodyOperator& op, const MatrixXc& W, double eps = 1e-8);

struct EomDiagnostics {
  EtaMatrix eta;
  cplx energy{};
  double max_rho_ov = 0.0;  // max |rho1| over the occ-vir and vir-occ blocks
};

/// Full derivative. The orbital-derivative operator D0 drops out of the
/// amplitude equations for doubles-only clusters (it only enters through
/// the occ-vir blocks, which have no singles partner). A triples extension
/// would bring back the rho^a_i time-derivative term in the partner system.
CCDerivative assemble_derivative(const CCState& s, const OneBodyOperator& op, const InteractionLowRank& lr,
                                 double eps = 1e-8, EomDiagnostics* diag = nullptr);

struct AmplitudeDerivative {
  Tensor4c dtau;
  Tensor4c dlambda;
};

/// Fixed orbitals: i dtau = tau_rhs, -i dlambda = lambda_rhs.
AmplitudeDerivative tdcc_fixed_basis_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp);

cplx cc_energy(const CCState& s, const OneBodyOperator& op, const InteractionLowRank& lr);

}  // namespace oatdcc
