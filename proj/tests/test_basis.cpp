#include "doctest.h"

#include "oatdcc/basis.hpp"
#include "support/random_instances.hpp"

using namespace oatdcc;
using testing_support::random_cplx;

namespace {

double max_abs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

// Smooth random spin orbitals, orthonormal with weight dx.
MatrixXc smooth_orbitals(const GridSpec& g, int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MatrixXc ket(g.n_basis(), L);
  for (int p = 0; p < L; ++p) {
    const cplx a = random_cplx(rng, 1.0), b = random_cplx(rng, 1.0);
    const double c = 0.5 * std::real(random_cplx(rng, 1.0));
    for (int x = 0; x < g.n_basis(); ++x) {
      const double xx = g.x[x % g.n_grid] - c;
      ket(x, p) = std::exp(-xx * xx / 3.0) * (x < g.n_grid ? a : b) * (1.0 + 0.3 * p * xx);
    }
  }
  lowdin_orthonormalize(ket, g.dx);
  return ket;
}

OrbitalPair perturbed_pair(const GridSpec& g, int N, int L, std::uint64_t seed) {
  OrbitalPair pair = hermitian_pair(smooth_orbitals(g, L, seed), N, g.dx);
  std::mt19937_64 rng(seed + 99);
  pair.bra += testing_support::random_matrix(rng, L, g.n_basis(), 0.05);
  rebiorthonormalize(pair);
  return pair;
}

}  // namespace

TEST_CASE("hermitian pair and biorthonormalization") {
  const GridSpec g = build_grid(8.0, 32);
  const MatrixXc ket = smooth_orbitals(g, 5, 1);
  const OrbitalPair h = hermitian_pair(ket, 2, g.dx);
  CHECK(max_abs(h.overlap() - MatrixXc::Identity(5, 5)) < 1e-12);
  CHECK(h.n_vir() == 3);
  CHECK(max_abs(h.bra - ket.adjoint()) == 0.0);
  CHECK_THROWS(hermitian_pair(ket, 6, g.dx));

  const OrbitalPair p = perturbed_pair(g, 2, 5, 2);
  CHECK(max_abs(p.overlap() - MatrixXc::Identity(5, 5)) < 1e-12);

  OrbitalPair bad = p;
  bad.bra.setZero();
  CHECK_THROWS_AS(rebiorthonormalize(bad), std::runtime_error);
}

TEST_CASE("Loewdin orthonormalization returns the back-transform") {
  const GridSpec g = build_grid(8.0, 32);
  std::mt19937_64 rng(4);
  MatrixXc ket = smooth_orbitals(g, 4, 3) + testing_support::random_matrix(rng, g.n_basis(), 4, 0.05);
  const MatrixXc old = ket;
  const MatrixXc M = lowdin_orthonormalize(ket, g.dx);
  CHECK(max_abs(ket.adjoint() * ket * g.dx - MatrixXc::Identity(4, 4)) < 1e-12);
  CHECK(max_abs(ket * M - old) < 1e-12);
  CHECK(max_abs(M - M.adjoint()) < 1e-12);

  MatrixXc dep(g.n_basis(), 2);
  dep.col(0) = old.col(0);
  dep.col(1) = old.col(0);
  CHECK_THROWS_AS(lowdin_orthonormalize(dep, g.dx), std::runtime_error);
}

TEST_CASE("one-body integrals and row action") {
  const GridSpec g = build_grid(8.0, 32);
  const ModelParams mp;
  const OrbitalPair p = perturbed_pair(g, 2, 4, 5);
  const OneBodyOperator op = full_hamiltonian(g, mp);
  const MatrixXc h = one_body_integrals(p, op);
  CHECK(max_abs(h - p.bra * op.apply(p.ket) * g.dx) < 1e-12);
  // bra * (op ket) = (bra op) * ket for the symmetric grid operator.
  CHECK(max_abs(op.apply_rows(p.bra) * p.ket - p.bra * op.apply(p.ket)) < 1e-10);

  const OrbitalPair herm = hermitian_pair(smooth_orbitals(g, 4, 6), 2, g.dx);
  const MatrixXc hh = one_body_integrals(herm, op);
  CHECK(max_abs(hh - hh.adjoint()) < 1e-10);

  const OneBodyOperator vop = potential_only(g, mp);
  CHECK(!vop.kinetic);
  const MatrixXc psi = herm.ket;
  MatrixXc direct(psi.rows(), psi.cols());
  for (int x = 0; x < psi.rows(); ++x) direct.row(x) = gaussian_well(mp, g.x[x % g.n_grid]) * psi.row(x);
  CHECK(max_abs(vop.apply(psi) - direct) < 1e-12);
}

TEST_CASE("two-body integrals against direct quadrature") {
  const GridSpec g = build_grid(6.0, 16);
  const ModelParams mp;
  const Eigen::MatrixXd K = sample_interaction(g, mp);
  const InteractionLowRank lr = decompose_interaction(K, 16);
  const OrbitalPair p = perturbed_pair(g, 2, 4, 7);
  const int L = 4;
  const MatrixXc W = mean_fields(p, lr);
  const Tensor4c v = coulomb_integrals(p, W);
  const Tensor4c u = two_body_integrals(p, W);
  const MatrixXc rho = pair_densities(p);

  double err = 0.0, anti = 0.0, exch = 0.0;
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b)
      for (int c = 0; c < L; ++c)
        for (int d = 0; d < L; ++d) {
          cplx ref = 0.0;
          for (int x1 = 0; x1 < g.n_grid; ++x1)
            for (int x2 = 0; x2 < g.n_grid; ++x2)
              ref += rho(x1, a * L + c) * K(x1, x2) * rho(x2, b * L + d) * g.dx * g.dx;
          err = std::max(err, std::abs(v(a, b, c, d) - ref));
          anti = std::max({anti, std::abs(u(a, b, c, d) + u(b, a, c, d)), std::abs(u(a, b, c, d) + u(a, b, d, c))});
          exch = std::max(exch, std::abs(u(a, b, c, d) - u(b, a, d, c)));
        }
  CHECK(err < 1e-12);
  CHECK(anti < 1e-14);
  CHECK(exch < 1e-12);

  const IntegralTables t = compute_integrals(p, full_hamiltonian(g, mp), lr);
  CHECK((t.u - u).max_abs() < 1e-14);

  InteractionLowRank none;
  CHECK(max_abs(mean_fields(p, none)) == 0.0);
}

TEST_CASE("mean-field actions match explicit sums") {
  const GridSpec g = build_grid(6.0, 16);
  const InteractionLowRank lr = decompose_interaction(sample_interaction(g, ModelParams{}), 16);
  const OrbitalPair p = perturbed_pair(g, 2, 4, 8);
  const int L = 4;
  const MatrixXc W = mean_fields(p, lr);
  std::mt19937_64 rng(11);
  const Tensor4c rho2 = testing_support::random_tensor(rng, L, L, L, L, 1.0);

  MatrixXc mk = MatrixXc::Zero(g.n_basis(), L);
  MatrixXc mb = MatrixXc::Zero(L, g.n_basis());
  for (int a = 0; a < L; ++a)
    for (int r = 0; r < L; ++r)
      for (int q = 0; q < L; ++q)
        for (int s = 0; s < L; ++s) {
          mk.col(a) += rho2(a, r, q, s) * apply_mean_field(W, L, r, s, p.ket.col(q));
          mb.row(q) += rho2(a, r, q, s) * apply_mean_field(W, L, r, s, p.bra.row(a).transpose()).transpose();
        }
  CHECK(max_abs(mean_field_ket(p.ket, W, rho2) - mk) < 1e-11);
  CHECK(max_abs(mean_field_bra(p.bra, W, rho2) - mb) < 1e-11);
}

TEST_CASE("projectors remove the orbital span") {
  const GridSpec g = build_grid(8.0, 32);
  const OrbitalPair p = perturbed_pair(g, 2, 4, 9);
  std::mt19937_64 rng(12);
  const MatrixXc v = testing_support::random_matrix(rng, g.n_basis(), 3, 1.0);
  const MatrixXc w = testing_support::random_matrix(rng, 3, g.n_basis(), 1.0);
  const MatrixXc qv = project_out(p, v);
  const MatrixXc wq = project_out_rows(p, w);
  CHECK(max_abs(p.bra * qv) < 1e-10);
  CHECK(max_abs(wq * p.ket) < 1e-10);
  CHECK(max_abs(project_out(p, qv) - qv) < 1e-10);
  CHECK(max_abs(project_out(p, p.ket)) < 1e-10);
}

TEST_CASE("regularized inverse") {
  std::mt19937_64 rng(13);
  const MatrixXc a = testing_support::random_matrix(rng, 4, 4, 1.0) + 3.0 * MatrixXc::Identity(4, 4);
  CHECK(max_abs(regularized_inverse(a, 1e-8) - a.inverse()) < 1e-10);

  MatrixXc sing = MatrixXc::Zero(3, 3);
  sing(0, 0) = 1.0;
  sing(1, 1) = 0.5;
  const MatrixXc inv = regularized_inverse(sing, 1e-8);
  CHECK(inv.allFinite());
  CHECK(std::abs(inv(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(inv(1, 1) - 2.0) < 1e-12);
  CHECK(std::abs(inv(2, 2) - 1e8) < 1e-4 * 1e8);
}
