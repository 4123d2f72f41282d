#pragma once

// Discretized single-particle space: a periodic Fourier grid on [-R, R)
// carrying two spin channels. Spin orbitals are vectors of length
// 2 * n_grid, spin-up block first.

#include "oatdcc/types.hpp"

namespace oatdcc {

struct GridSpec {
  double half_width = 0.0;  // R
  int n_grid = 0;
  double dx = 0.0;
  Eigen::VectorXd x;  // x_k = -R + k dx
  Eigen::VectorXd k;  // DFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1 (times 2pi/2R)

  int n_basis() const { return 2 * n_grid; }
};

/// Throws std::invalid_argument unless R > 0 and n_grid >= 4 is a power of two.
GridSpec build_grid(double half_width, int n_grid);

/// -1/2 d^2/dx^2 applied spectrally to every n_grid block of psi (so it acts
/// identically on each spin channel). Length must be a multiple of n_grid.
VectorXc apply_kinetic(const GridSpec& grid, const VectorXc& psi);
/// Column-wise version.
MatrixXc apply_kinetic(const GridSpec& grid, const MatrixXc& psi);

/// psi <- exp(-i T t) psi column-wise (t may be negative). Exact for the
/// discretized kinetic operator.
void kinetic_propagate(const GridSpec& grid, MatrixXc& psi, double t);

/// Model parameters. Defaults are the collision experiment values.
struct ModelParams {
  double well_depth = 7.0;      // V0
  double well_width = 1.5;      // a
  double interaction_strength = 1.0;  // lambda
  double softening = 0.2;       // delta
  bool squared_distance = false;  // use (x1-x2)^2 instead of |x1-x2| under the root
};

/// V(x) = -V0 exp(-x^2 / 2a^2)
double gaussian_well(const ModelParams& p, double x);

/// u(x1, x2) = lambda / sqrt(|x1 - x2| + delta^2), or with the squared
/// distance when p.squared_distance is set.
double soft_coulomb(const ModelParams& p, double x1, double x2);

/// Potential sampled on the grid (length n_grid).
Eigen::VectorXd sample_potential(const GridSpec& grid, const ModelParams& p);

/// Interaction kernel v(x_k, x_k') sampled on the grid (n_grid x n_grid).
Eigen::MatrixXd sample_interaction(const GridSpec& grid, const ModelParams& p);

/// Truncated symmetric eigendecomposition v ~ sum_m lambda_m f_m f_m^T.
/// Eigenvalues are ordered by decreasing magnitude, eigenvectors are unit
/// vectors in the plain Euclidean inner product.
struct InteractionLowRank {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd vectors;  // n_grid x rank

  int rank() const { return static_cast<int>(eigenvalues.size()); }
  Eigen::MatrixXd reconstruct() const;
};

/// Full eigendecomposition truncated to `rank` terms (1 <= rank <= n).
/// Throws std::runtime_error if the eigensolver fails.
InteractionLowRank decompose_interaction(const Eigen::MatrixXd& kernel, int rank);

/// Smallest rank M with |lambda_{M+1}| / |lambda_1| < rel_tol (full rank if
/// none qualifies; 0 for a zero kernel).
int select_rank(const Eigen::MatrixXd& kernel, double rel_tol = 1e-10);

}  // namespace oatdcc
