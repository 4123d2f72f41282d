#pragma once

// Biorthogonal orbital sets and matrix elements in the moving basis.
// Orbitals are sampled on the grid; every inner product carries the
// quadrature weight dx, so biorthogonality reads bra * ket * dx = I.

#include "oatdcc/grid1d.hpp"

namespace oatdcc {

struct OrbitalPair {
  MatrixXc ket;  // n_basis x L, columns |phi_p>
  MatrixXc bra;  // L x n_basis, rows <phi~_p|
  int n_occ = 0;
  double dx = 1.0;

  int n_orb() const { return static_cast<int>(ket.cols()); }
  int n_vir() const { return n_orb() - n_occ; }
  int n_basis() const { return static_cast<int>(ket.rows()); }
  /// bra * ket * dx
  MatrixXc overlap() const { return bra * ket * dx; }
};

/// Pair with bra = ket^H (the ket must already be orthonormal).
OrbitalPair hermitian_pair(const MatrixXc& ket, int n_occ, double dx);

/// h = T + V acting on grid functions, block-diagonal in spin. The potential
/// has length n_grid (spin independent) or n_basis.
struct OneBodyOperator {
  const GridSpec* grid = nullptr;
  bool kinetic = true;
  Eigen::VectorXd potential;

  /// op * psi column-wise.
  MatrixXc apply(const MatrixXc& psi) const;
  /// bra * op row-wise.
  MatrixXc apply_rows(const MatrixXc& bra) const;
};

OneBodyOperator full_hamiltonian(const GridSpec& grid, const ModelParams& p);
/// Potential part only (the generator of the split step after the kinetic half steps).
OneBodyOperator potential_only(const GridSpec& grid, const ModelParams& p);

/// h(p,q) = <phi~_p| op |phi_q>.
MatrixXc one_body_integrals(const OrbitalPair& pair, const OneBodyOperator& op);

/// Mean fields W^r_s(x), n_grid x (L*L), column r*L + s. Spin is summed in
/// the pair density, so the result is a spatial function acting on both
/// spin blocks.
MatrixXc mean_fields(const OrbitalPair& pair, const InteractionLowRank& lr);

/// Pair densities rho_pq(x) = sum_spin phi~_p(x) phi_q(x), n_grid x (L*L).
MatrixXc pair_densities(const OrbitalPair& pair);

/// Non-antisymmetrized <phi~_p phi~_r|u|phi_q phi_s> stored at (p,r,q,s).
Tensor4c coulomb_integrals(const OrbitalPair& pair, const MatrixXc& W);

/// u(p,r,q,s) = v(p,r,q,s) - v(p,r,s,q).
Tensor4c two_body_integrals(const OrbitalPair& pair, const MatrixXc& W);

struct IntegralTables {
  MatrixXc h;
  Tensor4c u;
  MatrixXc W;
};

IntegralTables compute_integrals(const OrbitalPair& pair, const OneBodyOperator& op,
                                 const InteractionLowRank& lr);

/// W^r_s(x) * psi(x) on both spin blocks.
VectorXc apply_mean_field(const MatrixXc& W, int L, int r, int s, const VectorXc& psi);

/// M[:,p] = sum_{qrs} rho2(p,r,q,s) W^r_s phi_q
MatrixXc mean_field_ket(const MatrixXc& ket, const MatrixXc& W, const Tensor4c& rho2);
/// M~[q,:] = sum_{prs} rho2(p,r,q,s) phi~_p W^r_s
MatrixXc mean_field_bra(const MatrixXc& bra, const MatrixXc& W, const Tensor4c& rho2);

/// v - ket * (bra * v * dx), column-wise.
MatrixXc project_out(const OrbitalPair& pair, const MatrixXc& v);
/// row-wise: w - (w * ket * dx) * bra
MatrixXc project_out_rows(const OrbitalPair& pair, const MatrixXc& w);

/// bra <- (bra ket dx)^{-1} bra. Throws std::runtime_error if the overlap is
/// numerically singular.
void rebiorthonormalize(OrbitalPair& pair);

/// Loewdin orthonormalization of the ket columns: ket <- ket S^{-1/2} with
/// S = ket^H ket dx. Returns S^{1/2}, i.e. the matrix M with old = new * M.
MatrixXc lowdin_orthonormalize(MatrixXc& ket, double dx);

/// Regularized inverse of a (near-singular) density matrix: singular values
/// s are replaced by s + eps exp(-s / eps) before inversion.
MatrixXc regularized_inverse(const MatrixXc& rho, double eps);

}  // namespace oatdcc
