#pragma once

// Determinant-space engine: CI vectors over bitmask determinants, operator
// action, CC wavefunction vectors, densities, and the MCTDHF equations of
// motion.

#include "oatdcc/basis.hpp"
#include "oatdcc/ccd_algebra.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace oatdcc {

/// N-particle determinants in L orbitals as bitmasks (bit p = orbital p),
/// sorted ascending. The reference (orbitals 0..N-1) is the smallest mask,
/// hence index 0 whenever it belongs to the space.
struct DeterminantSpace {
  int n_particles = 0;
  int n_orbitals = 0;
  std::vector<int> spins;  // per-orbital spin label (0 up, 1 down); empty if unrestricted
  int n_up = -1;
  std::vector<std::uint64_t> dets;

  int size() const { return static_cast<int>(dets.size()); }
  /// Index of mask, or -1.
  int find(std::uint64_t mask) const;
  std::uint64_t reference_mask() const { return (std::uint64_t{1} << n_particles) - 1; }
};

DeterminantSpace build_space(int n_particles, int n_orbitals);
/// Only determinants with exactly n_up orbitals of spin 0.
DeterminantSpace build_space(int n_particles, int n_orbitals, const std::vector<int>& spins, int n_up);

/// Spin label per ket column from its block weights: 0 (up), 1 (down), or
/// -1 if the column has weight in both blocks above tol.
std::vector<int> orbital_spins(const MatrixXc& ket, double tol = 1e-12);

/// c_p |mask>: updates mask and multiplies sign by the fermionic phase;
/// false if p is empty.
bool annihilate(std::uint64_t& mask, int p, int& sign);
/// c+_p |mask>, same conventions; false if p is occupied.
bool create(std::uint64_t& mask, int p, int& sign);

/// sum_pq h(p,q) c+_p c_q A
VectorXc apply_one_body(const DeterminantSpace& space, const MatrixXc& h, const VectorXc& A);
/// 1/4 sum g(p,r,q,s) c+_p c+_r c_s c_q A for antisymmetric g
VectorXc apply_two_body(const DeterminantSpace& space, const Tensor4c& g, const VectorXc& A);
VectorXc apply_hamiltonian(const DeterminantSpace& space, const MatrixXc& h, const Tensor4c& u,
                           const VectorXc& A);
MatrixXc hamiltonian_matrix(const DeterminantSpace& space, const MatrixXc& h, const Tensor4c& u);

/// Coefficient tensors of T, T^T, Lambda, Lambda^T as general two-body
/// operators over all L orbitals.
Tensor4c excitation_operator(const Tensor4c& tau);
Tensor4c excitation_operator_transpose(const Tensor4c& tau);
Tensor4c deexcitation_operator(const Tensor4c& lambda);
Tensor4c deexcitation_operator_transpose(const Tensor4c& lambda);

/// exp(G) A for a nilpotent two-body operator G (series until it terminates).
VectorXc exp_nilpotent_apply(const DeterminantSpace& space, const Tensor4c& g, const VectorXc& A);

/// e^{T2} |phi>
VectorXc exp_T_apply(const DeterminantSpace& space, const Tensor4c& tau);
/// Components of <phi~|(1 + Lambda) e^{-T}
VectorXc dual_cc_vector(const DeterminantSpace& space, const Tensor4c& tau, const Tensor4c& lambda);

/// rho1(p,q) = <Psi~|c+_p c_q|Psi>, rho2(p,r,q,s) = <Psi~|c+_p c+_r c_s c_q|Psi>
/// with <Psi~| given by the components dual (not conjugated).
DensityMatrices fci_densities(const DeterminantSpace& space, const VectorXc& dual, const VectorXc& A);
cplx fci_expectation(const DeterminantSpace& space, const VectorXc& dual, const VectorXc& A,
                     const MatrixXc& h, const Tensor4c& u);

/// If the orbitals are re-expressed as Phi = Phi' M, returns the coefficients
/// over determinants of Phi' representing the same state.
VectorXc transform_coefficients(const DeterminantSpace& space, const MatrixXc& M, const VectorXc& A);

// ---------------------------------------------------------------------------
// MCTDHF

struct McState {
  DeterminantSpace space;
  MatrixXc ket;  // orthonormal with weight dx
  VectorXc coeff;
  double dx = 1.0;
  double t = 0.0;

  int n_particles() const { return space.n_particles; }
  int n_orb() const { return static_cast<int>(ket.cols()); }
};

struct McDerivative {
  MatrixXc dket;
  VectorXc dcoeff;
};

struct McEvaluation {
  IntegralTables ints;
  DensityMatrices dens;
  cplx energy{};
};

/// Integrals, densities (with dual = conj(coeff)), and energy.
McEvaluation evaluate(const McState& s, const OneBodyOperator& op, const InteractionLowRank& lr);

/// i dA/dt = H A and i Q dPhi/dt rho1^T = Q [h Phi rho1^T + M], with the
/// gauge <phi_p|dphi_q/dt> = 0 and a regularized rho1 inverse.
McDerivative mctdhf_rhs(const McState& s, const OneBodyOperator& op, const InteractionLowRank& lr,
                        double eps = 1e-8);

/// Loewdin re-orthonormalization with the matching coefficient transform,
/// followed by optional coefficient normalization.
void reorthonormalize(McState& s, bool normalize_coeff);

struct RelaxOptions {
  double ds = 0.01;
  double tol = 1e-9;        // |E(s+ds) - E(s)| / ds
  int max_steps = 200000;
  double eps = 1e-8;
  bool check_monotone = true;
};

struct RelaxResult {
  McState state;
  double energy = 0.0;
  int steps = 0;
  bool converged = false;
  bool monotone = true;
  std::vector<double> history;
};

enum class MethodKind { mctdhf, oatdccd, tdhf, tdccd_fixed };
std::string method_name(MethodKind m);
MethodKind parse_method(const std::string& name);

/// Imaginary-time relaxation by RK4 on the Wick-rotated MCTDHF flow. Only
/// the MCTDHF method is accepted; anything else throws std::invalid_argument.
RelaxResult relax_imaginary_time(const McState& start, const OneBodyOperator& op,
                                 const InteractionLowRank& lr, const RelaxOptions& opt,
                                 MethodKind method = MethodKind::mctdhf);

}  // namespace oatdcc
