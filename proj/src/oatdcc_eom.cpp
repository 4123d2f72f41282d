#include "oatdcc/oatdcc_eom.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace oatdcc {

MatrixXc build_pspace_matrix(const MatrixXc& rho1, int n_occ) {
  const int N = n_occ, V = static_cast<int>(rho1.rows()) - n_occ;
  MatrixXc A = MatrixXc::Zero(N * V, N * V);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < V; ++a) {
      for (int j = 0; j < N; ++j) A(i * V + a, j * V + a) += rho1(j, i);
      for (int b = 0; b < V; ++b) A(i * V + a, i * V + b) -= rho1(N + a, N + b);
    }
  return A;
}

MatrixXc build_pspace_matrix_partner(const MatrixXc& rho1, int n_occ) {
  const int N = n_occ, V = static_cast<int>(rho1.rows()) - n_occ;
  MatrixXc B = MatrixXc::Zero(N * V, N * V);
  for (int a = 0; a < V; ++a)
    for (int i = 0; i < N; ++i) {
      for (int b = 0; b < V; ++b) B(a * N + i, b * N + i) += rho1(N + b, N + a);
      for (int j = 0; j < N; ++j) B(a * N + i, a * N + j) -= rho1(i, j);
    }
  return B;
}

MatrixXc commutator_expectation(const MatrixXc& h, const Tensor4c& u, const MatrixXc& rho1,
                                const Tensor4c& rho2) {
  const int L = static_cast<int>(h.rows());
  MatrixXc C = h.transpose() * rho1 - rho1 * h.transpose();
  for (int x = 0; x < L; ++x)
    for (int y = 0; y < L; ++y) {
      cplx acc = 0.0;
      for (int r = 0; r < L; ++r)
        for (int s = 0; s < L; ++s)
          for (int p = 0; p < L; ++p) {
            acc += u(p, r, x, s) * rho2(p, r, y, s);
            acc -= u(y, r, p, s) * rho2(x, r, p, s);
          }
      C(x, y) += 0.5 * acc;
    }
  return C;
}

namespace {

struct LinearSolve {
  VectorXc x;
  double residual = 0.0;
  double condition = 1.0;
  bool least_squares = false;
};

LinearSolve solve_dense(const MatrixXc& A, const VectorXc& b) {
  LinearSolve out;
  if (A.rows() == 0) return out;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<MatrixXc>(A).singularValues();
  out.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  if (out.condition > 1e12) {
    out.least_squares = true;
    std::cerr << "warning: P-space matrix ill-conditioned (cond = " << out.condition
              << "), using least squares\n";
    out.x = A.completeOrthogonalDecomposition().solve(b);
  } else {
    out.x = A.partialPivLu().solve(b);
  }
  const double bn = b.norm();
  const double r = (A * out.x - b).norm();
  out.residual = bn > 0.0 ? r / bn : r;
  return out;
}

}  // namespace

EtaMatrix solve_eta(const MatrixXc& rho1, const Tensor4c& rho2, const MatrixXc& h, const Tensor4c& u,
                    int n_occ) {
  const int L = static_cast<int>(rho1.rows()), N = n_occ, V = L - N;
  EtaMatrix out;
  out.eta = MatrixXc::Zero(L, L);
  if (N == 0 || V == 0) return out;
  const MatrixXc C = commutator_expectation(h, u, rho1, rho2);

  VectorXc b1(N * V), b2(N * V);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < V; ++a) {
      b1[i * V + a] = -I * C(N + a, i);
      b2[a * N + i] = -I * C(i, N + a);
    }
  const LinearSolve s1 = solve_dense(build_pspace_matrix(rho1, N), b1);
  const LinearSolve s2 = solve_dense(build_pspace_matrix_partner(rho1, N), b2);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < V; ++a) {
      out.eta(i, N + a) = s1.x[i * V + a];
      out.eta(N + a, i) = s2.x[a * N + i];
    }
  out.residual = std::max(s1.residual, s2.residual);
  out.condition = std::max(s1.condition, s2.condition);
  out.least_squares = s1.least_squares || s2.least_squares;
  return out;
}

MatrixXc blockwise_regularized_inverse(const MatrixXc& rho1, int n_occ, double eps) {
  const Eigen::Index L = rho1.rows(), V = L - n_occ;
  MatrixXc inv = MatrixXc::Zero(L, L);
  inv.topLeftCorner(n_occ, n_occ) = regularized_inverse(rho1.topLeftCorner(n_occ, n_occ), eps);
  inv.bottomRightCorner(V, V) = regularized_inverse(rho1.bottomRightCorner(V, V), eps);
  return inv;
}

MatrixXc qspace_rhs_ket(const OrbitalPair& pair, const MatrixXc& rho1, const Tensor4c& rho2,
                        const OneBodyOperator& op, const MatrixXc& W, double eps) {
  const MatrixXc inv_t = blockwise_regularized_inverse(rho1, pair.n_occ, eps).transpose();
  const MatrixXc M = mean_field_ket(pair.ket, W, rho2);
  return -I * project_out(pair, op.apply(pair.ket) + M * inv_t);
}

MatrixXc qspace_rhs_bra(const OrbitalPair& pair, const MatrixXc& rho1, const Tensor4c& rho2,
                        const OneBodyOperator& op, const MatrixXc& W, double eps) {
  const MatrixXc inv_t = blockwise_regularized_inverse(rho1, pair.n_occ, eps).transpose();
  const MatrixXc M = mean_field_bra(pair.bra, W, rho2);
  return I * project_out_rows(pair, op.apply_rows(pair.bra) + inv_t * M);
}

CCDerivative assemble_derivative(const CCState& s, const OneBodyOperator& op, const InteractionLowRank& lr,
                                 double eps, EomDiagnostics* diag) {
  const OrbitalPair& pair = s.orbitals;
  const int N = pair.n_occ;
  if (s.amp.n_occ() != N || s.amp.n_vir() != pair.n_vir())
    throw std::invalid_argument("amplitude shape does not match orbital partition");
  const IntegralTables ints = compute_integrals(pair, op, lr);
  const DensityMatrices dens = densities(s.amp);

  CCDerivative d;
  d.dtau = tau_rhs(ints.h, ints.u, s.amp);
  d.dtau *= -I;
  d.dlambda = lambda_rhs(ints.h, ints.u, s.amp);
  d.dlambda *= I;

  const EtaMatrix eta = solve_eta(dens.rho1, dens.rho2, ints.h, ints.u, N);
  d.dket = pair.ket * eta.eta + qspace_rhs_ket(pair, dens.rho1, dens.rho2, op, ints.W, eps);
  d.dbra = -eta.eta * pair.bra + qspace_rhs_bra(pair, dens.rho1, dens.rho2, op, ints.W, eps);

  if (diag) {
    diag->eta = eta;
    diag->energy = expectation(ints.h, ints.u, dens.rho1, dens.rho2);
    const int V = pair.n_vir();
    diag->max_rho_ov = 0.0;
    if (N > 0 && V > 0)
      diag->max_rho_ov = std::max(dens.rho1.topRightCorner(N, V).cwiseAbs().maxCoeff(),
                                  dens.rho1.bottomLeftCorner(V, N).cwiseAbs().maxCoeff());
  }
  return d;
}

AmplitudeDerivative tdcc_fixed_basis_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  AmplitudeDerivative d{tau_rhs(h, u, amp), lambda_rhs(h, u, amp)};
  d.dtau *= -I;
  d.dlambda *= I;
  return d;
}

cplx cc_energy(const CCState& s, const OneBodyOperator& op, const InteractionLowRank& lr) {
  const IntegralTables ints = compute_integrals(s.orbitals, op, lr);
  return ccd_energy(ints.h, ints.u, s.amp);
}

}  // namespace oatdcc
