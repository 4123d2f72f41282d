#include "oatdcc/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace oatdcc {

OrbitalPair hermitian_pair(const MatrixXc& ket, int n_occ, double dx) {
  if (n_occ < 0 || n_occ > ket.cols()) throw std::invalid_argument("occupied count out of range");
  return {ket, ket.adjoint(), n_occ, dx};
}

namespace {

Eigen::VectorXd full_potential(const OneBodyOperator& op, Eigen::Index rows) {
  if (op.potential.size() == 0) return Eigen::VectorXd::Zero(rows);
  if (op.potential.size() == rows) return op.potential;
  const Eigen::Index n = op.potential.size();
  if (rows % n != 0) throw std::invalid_argument("potential length mismatch");
  Eigen::VectorXd v(rows);
  for (Eigen::Index b = 0; b < rows / n; ++b) v.segment(b * n, n) = op.potential;
  return v;
}

}  // namespace

MatrixXc OneBodyOperator::apply(const MatrixXc& psi) const {
  MatrixXc out = kinetic ? apply_kinetic(*grid, psi) : MatrixXc::Zero(psi.rows(), psi.cols());
  out += full_potential(*this, psi.rows()).asDiagonal() * psi;
  return out;
}

MatrixXc OneBodyOperator::apply_rows(const MatrixXc& bra) const {
  // The spectral kinetic matrix is real symmetric, so bra T = (T bra^T)^T.
  MatrixXc bt = bra.transpose();
  return apply(bt).transpose();
}

OneBodyOperator full_hamiltonian(const GridSpec& grid, const ModelParams& p) {
  return {&grid, true, sample_potential(grid, p)};
}

OneBodyOperator potential_only(const GridSpec& grid, const ModelParams& p) {
  return {&grid, false, sample_potential(grid, p)};
}

MatrixXc one_body_integrals(const OrbitalPair& pair, const OneBodyOperator& op) {
  if (pair.bra.cols() != pair.ket.rows() || pair.bra.rows() != pair.ket.cols())
    throw std::invalid_argument("orbital pair dimension mismatch");
  return pair.bra * op.apply(pair.ket) * pair.dx;
}

MatrixXc pair_densities(const OrbitalPair& pair) {
  const int L = pair.n_orb();
  const int nb = pair.n_basis();
  const int ng = nb / 2;
  MatrixXc rho(ng, L * L);
  for (int p = 0; p < L; ++p)
    for (int q = 0; q < L; ++q)
      for (int x = 0; x < ng; ++x)
        rho(x, p * L + q) = pair.bra(p, x) * pair.ket(x, q) + pair.bra(p, x + ng) * pair.ket(x + ng, q);
  return rho;
}

MatrixXc mean_fields(const OrbitalPair& pair, const InteractionLowRank& lr) {
  const MatrixXc rho = pair_densities(pair);
  if (lr.rank() == 0) return MatrixXc::Zero(rho.rows(), rho.cols());
  if (lr.vectors.rows() != rho.rows()) throw std::invalid_argument("interaction grid mismatch");
  const MatrixXc proj = lr.vectors.transpose().cast<cplx>() * rho * pair.dx;  // M x L^2
  return lr.vectors.cast<cplx>() * (lr.eigenvalues.cast<cplx>().asDiagonal() * proj);
}

Tensor4c coulomb_integrals(const OrbitalPair& pair, const MatrixXc& W) {
  const int L = pair.n_orb();
  const MatrixXc rho = pair_densities(pair);
  if (W.rows() != rho.rows() || W.cols() != rho.cols())
    throw std::invalid_argument("mean-field table shape mismatch");
  const MatrixXc v = rho.transpose() * W * pair.dx;  // [pq][rs]
  Tensor4c out(L, L, L, L);
  for (int p = 0; p < L; ++p)
    for (int r = 0; r < L; ++r)
      for (int q = 0; q < L; ++q)
        for (int s = 0; s < L; ++s) out(p, r, q, s) = v(p * L + q, r * L + s);
  return out;
}

Tensor4c two_body_integrals(const OrbitalPair& pair, const MatrixXc& W) {
  const Tensor4c v = coulomb_integrals(pair, W);
  const int L = pair.n_orb();
  Tensor4c u(L, L, L, L);
  for (int p = 0; p < L; ++p)
    for (int r = 0; r < L; ++r)
      for (int q = 0; q < L; ++q)
        for (int s = 0; s < L; ++s)
          u(p, r, q, s) = 0.5 * ((v(p, r, q, s) - v(p, r, s, q)) - (v(r, p, q, s) - v(r, p, s, q)));
  return u;
}

IntegralTables compute_integrals(const OrbitalPair& pair, const OneBodyOperator& op,
                                 const InteractionLowRank& lr) {
  IntegralTables t;
  t.h = one_body_integrals(pair, op);
  t.W = mean_fields(pair, lr);
  t.u = two_body_integrals(pair, t.W);
  return t;
}

VectorXc apply_mean_field(const MatrixXc& W, int L, int r, int s, const VectorXc& psi) {
  const Eigen::Index ng = W.rows();
  VectorXc out(psi.size());
  for (Eigen::Index b = 0; b < psi.size() / ng; ++b)
    out.segment(b * ng, ng) = W.col(r * L + s).cwiseProduct(psi.segment(b * ng, ng));
  return out;
}

MatrixXc mean_field_ket(const MatrixXc& ket, const MatrixXc& W, const Tensor4c& rho2) {
  const int L = static_cast<int>(ket.cols());
  const Eigen::Index ng = W.rows();
  MatrixXc out = MatrixXc::Zero(ket.rows(), L);
  MatrixXc R(L, L), Wphi(ket.rows(), L);
  for (int r = 0; r < L; ++r)
    for (int s = 0; s < L; ++s) {
      double mag = 0.0;
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          R(q, p) = rho2(p, r, q, s);
          mag += std::abs(R(q, p));
        }
      if (mag == 0.0) continue;
      for (Eigen::Index b = 0; b < ket.rows() / ng; ++b)
        Wphi.middleRows(b * ng, ng) = W.col(r * L + s).asDiagonal() * ket.middleRows(b * ng, ng);
      out.noalias() += Wphi * R;
    }
  return out;
}

MatrixXc mean_field_bra(const MatrixXc& bra, const MatrixXc& W, const Tensor4c& rho2) {
  const int L = static_cast<int>(bra.rows());
  const Eigen::Index ng = W.rows();
  MatrixXc out = MatrixXc::Zero(L, bra.cols());
  MatrixXc R(L, L), phiW(L, bra.cols());
  for (int r = 0; r < L; ++r)
    for (int s = 0; s < L; ++s) {
      double mag = 0.0;
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          R(q, p) = rho2(p, r, q, s);
          mag += std::abs(R(q, p));
        }
      if (mag == 0.0) continue;
      for (Eigen::Index b = 0; b < bra.cols() / ng; ++b)
        phiW.middleCols(b * ng, ng) = bra.middleCols(b * ng, ng) * W.col(r * L + s).asDiagonal();
      out.noalias() += R * phiW;
    }
  return out;
}

MatrixXc project_out(const OrbitalPair& pair, const MatrixXc& v) {
  return v - pair.ket * (pair.bra * v * pair.dx);
}

MatrixXc project_out_rows(const OrbitalPair& pair, const MatrixXc& w) {
  return w - (w * pair.ket * pair.dx) * pair.bra;
}

void rebiorthonormalize(OrbitalPair& pair) {
  const MatrixXc S = pair.overlap();
  Eigen::PartialPivLU<MatrixXc> lu(S);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) throw std::runtime_error("biorthogonal overlap is singular");
  pair.bra = lu.solve(pair.bra);
}

MatrixXc lowdin_orthonormalize(MatrixXc& ket, double dx) {
  const MatrixXc S = ket.adjoint() * ket * dx;
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(S);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() <= 1e-14 * std::max(1.0, ev.maxCoeff()))
    throw std::runtime_error("orbitals are linearly dependent");
  const MatrixXc& U = es.eigenvectors();
  ket = ket * (U * ev.cwiseInverse().cwiseSqrt().cast<cplx>().asDiagonal() * U.adjoint());
  return U * ev.cwiseSqrt().cast<cplx>().asDiagonal() * U.adjoint();
}

MatrixXc regularized_inverse(const MatrixXc& rho, double eps) {
  if (rho.size() == 0) return rho;
  Eigen::JacobiSVD<MatrixXc> svd(rho, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd inv = svd.singularValues();
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    const double s = inv[k];
    inv[k] = 1.0 / (s + eps * std::exp(-s / eps));
  }
  return svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace oatdcc
