#include "doctest.h"

#include "oatdcc/fci.hpp"
#include "oatdcc/oatdcc_eom.hpp"
#include "support/random_instances.hpp"
#include "support/wick_oracle.hpp"

using namespace oatdcc;
using testing_support::random_instance;

namespace {

double max_abs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

MatrixXc hermitian(const MatrixXc& a) { return 0.5 * (a + a.adjoint()); }

struct GridCase {
  GridSpec grid;
  OneBodyOperator op;
  InteractionLowRank lr;
  CCState s;
};

// Smooth orbitals with a perturbed (non-Hermitian) bra and random amplitudes.
GridCase grid_case(int N, int L, std::uint64_t seed, double amp_scale = 0.1, int n_grid = 32,
                   double half_width = 8.0) {
  GridCase c;
  c.grid = build_grid(half_width, n_grid);
  const ModelParams mp;
  c.op = full_hamiltonian(c.grid, mp);
  const Eigen::MatrixXd K = sample_interaction(c.grid, mp);
  c.lr = decompose_interaction(K, select_rank(K));
  std::mt19937_64 rng(seed);
  MatrixXc ket(c.grid.n_basis(), L);
  for (int p = 0; p < L; ++p)
    for (int x = 0; x < c.grid.n_basis(); ++x) {
      const double xx = c.grid.x[x % c.grid.n_grid];
      ket(x, p) = std::exp(-xx * xx / 4.0) * testing_support::random_cplx(rng, 1.0);
    }
  lowdin_orthonormalize(ket, c.grid.dx);
  c.s.orbitals = hermitian_pair(ket, N, c.grid.dx);
  c.s.orbitals.bra += testing_support::random_matrix(rng, L, c.grid.n_basis(), 0.05);
  rebiorthonormalize(c.s.orbitals);
  c.s.amp = random_instance(seed + 1000, N, L, amp_scale).amp;
  return c;
}

CCState displaced(const CCState& s, const CCDerivative& d, double e) {
  CCState o = s;
  o.orbitals.ket += e * d.dket;
  o.orbitals.bra += e * d.dbra;
  o.amp.tau += e * d.dtau;
  o.amp.lambda += e * d.dlambda;
  return o;
}

}  // namespace

TEST_CASE("P-space matrices reduce to plus and minus the identity at the reference") {
  for (auto [N, L] : {std::pair{2, 4}, std::pair{3, 7}}) {
    const Amplitudes zero = Amplitudes::zero(N, L - N);
    const MatrixXc rho1 = density_1b(zero);
    const int n = N * (L - N);
    CHECK(max_abs(build_pspace_matrix(rho1, N) - MatrixXc::Identity(n, n)) < 1e-15);
    CHECK(max_abs(build_pspace_matrix_partner(rho1, N) + MatrixXc::Identity(n, n)) < 1e-15);
  }
}

TEST_CASE("P-space matrix entries follow the stated layout") {
  const int N = 2, L = 5, V = 3;
  std::mt19937_64 rng(2);
  const MatrixXc rho = testing_support::random_matrix(rng, L, L, 1.0);
  const MatrixXc A = build_pspace_matrix(rho, N);
  const MatrixXc B = build_pspace_matrix_partner(rho, N);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < V; ++a)
      for (int j = 0; j < N; ++j)
        for (int b = 0; b < V; ++b) {
          const cplx ea = (a == b ? rho(j, i) : 0.0) - (i == j ? rho(N + a, N + b) : 0.0);
          const cplx eb = (i == j ? rho(N + b, N + a) : 0.0) - (a == b ? rho(i, j) : 0.0);
          CHECK(A(i * V + a, j * V + b) == ea);
          CHECK(B(a * N + i, b * N + j) == eb);
        }
}

TEST_CASE("commutator expectation agrees with the Fock-space oracle") {
  for (auto [N, L] : {std::pair{2, 4}, std::pair{2, 5}, std::pair{3, 6}}) {
    const auto in = random_instance(100 + L, N, L);
    const oracle::CcOracle ref(N, in.h, in.u, in.amp.tau, in.amp.lambda);
    const DensityMatrices d = densities(in.amp);
    const MatrixXc C = commutator_expectation(in.h, in.u, d.rho1, d.rho2);
    double err = 0.0;
    for (int x = 0; x < L; ++x)
      for (int y = 0; y < L; ++y) {
        const MatrixXc X = ref.fock.cdag(x) * ref.fock.c(y);
        err = std::max(err, std::abs(C(x, y) - ref.expectation(ref.H * X - X * ref.H)));
      }
    CAPTURE(N);
    CAPTURE(L);
    CHECK(err < 1e-10);
  }
}

TEST_CASE("eta solves both P-space systems") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const int N = 2, L = 6, V = 4;
    const auto in = random_instance(seed, N, L, 0.2);
    const DensityMatrices d = densities(in.amp);
    const EtaMatrix e = solve_eta(d.rho1, d.rho2, in.h, in.u, N);
    const MatrixXc C = commutator_expectation(in.h, in.u, d.rho1, d.rho2);
    const MatrixXc A = build_pspace_matrix(d.rho1, N);
    const MatrixXc B = build_pspace_matrix_partner(d.rho1, N);
    VectorXc xa(N * V), ra(N * V), xb(N * V), rb(N * V);
    for (int i = 0; i < N; ++i)
      for (int a = 0; a < V; ++a) {
        xa[i * V + a] = e.eta(i, N + a);
        ra[i * V + a] = -I * C(N + a, i);
        xb[a * N + i] = e.eta(N + a, i);
        rb[a * N + i] = -I * C(i, N + a);
      }
    CAPTURE(seed);
    CHECK((A * xa - ra).norm() <= 1e-12 * std::max(1.0, ra.norm()));
    CHECK((B * xb - rb).norm() <= 1e-12 * std::max(1.0, rb.norm()));
    CHECK(e.residual <= 1e-12);
    CHECK(!e.least_squares);
    CHECK(max_abs(e.eta.topLeftCorner(N, N)) == 0.0);
    CHECK(max_abs(e.eta.bottomRightCorner(V, V)) == 0.0);
  }
}

TEST_CASE("eta vanishes without interaction and occ-vir coupling") {
  const int N = 2, L = 5;
  auto in = random_instance(9, N, L, 0.3);
  in.h.topRightCorner(N, L - N).setZero();
  in.h.bottomLeftCorner(L - N, N).setZero();
  const Tensor4c u0(L, L, L, L);
  const DensityMatrices d = densities(in.amp);
  const EtaMatrix e = solve_eta(d.rho1, d.rho2, in.h, u0, N);
  CHECK(max_abs(e.eta) < 1e-13);
}

TEST_CASE("blockwise regularized inverse") {
  const int N = 2, L = 5;
  const auto in = random_instance(12, N, L, 0.2);
  const MatrixXc rho = density_1b(in.amp);
  const MatrixXc inv = blockwise_regularized_inverse(rho, N, 1e-8);
  CHECK(max_abs(inv.topRightCorner(N, L - N)) == 0.0);
  CHECK(max_abs(inv.bottomLeftCorner(L - N, N)) == 0.0);
  CHECK(max_abs(inv.topLeftCorner(N, N) * rho.topLeftCorner(N, N) - MatrixXc::Identity(N, N)) < 1e-8);
  // The virtual block of a two-particle CCD state is rank deficient.
  const MatrixXc vv = rho.bottomRightCorner(L - N, L - N);
  CHECK(max_abs(inv.bottomRightCorner(L - N, L - N) - regularized_inverse(vv, 1e-8)) == 0.0);
  CHECK(max_abs(vv * inv.bottomRightCorner(L - N, L - N) * vv - vv) < 1e-8);
}

TEST_CASE("Q-space right-hand sides are orthogonal to the orbital span") {
  GridCase c = grid_case(2, 5, 21);
  const IntegralTables t = compute_integrals(c.s.orbitals, c.op, c.lr);
  const DensityMatrices d = densities(c.s.amp);
  const MatrixXc qk = qspace_rhs_ket(c.s.orbitals, d.rho1, d.rho2, c.op, t.W);
  const MatrixXc qb = qspace_rhs_bra(c.s.orbitals, d.rho1, d.rho2, c.op, t.W);
  CHECK(max_abs(c.s.orbitals.bra * qk) < 1e-10);
  CHECK(max_abs(qb * c.s.orbitals.ket) < 1e-10);
  CHECK(max_abs(qk) > 1e-3);

  // A complete orbital set leaves no Q space.
  GridCase full = grid_case(2, 8, 22, 0.1, 4, 2.0);
  const IntegralTables tf = compute_integrals(full.s.orbitals, full.op, full.lr);
  const DensityMatrices df = densities(full.s.amp);
  CHECK(max_abs(qspace_rhs_ket(full.s.orbitals, df.rho1, df.rho2, full.op, tf.W)) < 1e-10);
  CHECK(max_abs(qspace_rhs_bra(full.s.orbitals, df.rho1, df.rho2, full.op, tf.W)) < 1e-10);
}

TEST_CASE("assembled derivative conserves energy and biorthogonality") {
  for (auto [N, L, seed] : {std::tuple{2, 5, 3}, std::tuple{3, 6, 4}, std::tuple{2, 4, 5}}) {
    GridCase c = grid_case(N, L, seed);
    EomDiagnostics diag;
    const CCDerivative d = assemble_derivative(c.s, c.op, c.lr, 1e-8, &diag);
    CAPTURE(N);
    CAPTURE(L);

    const MatrixXc dS = (d.dbra * c.s.orbitals.ket + c.s.orbitals.bra * d.dket) * c.grid.dx;
    CHECK(max_abs(dS) < 1e-12);
    CHECK(diag.eta.residual < 1e-12);
    CHECK(diag.max_rho_ov == 0.0);
    CHECK(std::abs(diag.energy - cc_energy(c.s, c.op, c.lr)) < 1e-12);

    auto E = [&](double e) { return cc_energy(displaced(c.s, d, e), c.op, c.lr); };
    const double d3 = std::abs((E(1e-3) - E(-1e-3)) / 2e-3);
    const double d4 = std::abs((E(1e-4) - E(-1e-4)) / 2e-4);
    CHECK(d4 < 1e-6);
    CHECK(d3 / d4 > 50.0);

    // Amplitude equations in the moving basis (zero gauge).
    const IntegralTables t = compute_integrals(c.s.orbitals, c.op, c.lr);
    const Tensor4c rt = tau_rhs(t.h, t.u, c.s.amp);
    const Tensor4c rl = lambda_rhs(t.h, t.u, c.s.amp);
    CHECK((d.dtau - (-I) * rt).max_abs() < 1e-12);
    CHECK((d.dlambda - I * rl).max_abs() < 1e-12);
  }
}

TEST_CASE("amplitude flow in a fixed basis is stationary at the ground state") {
  const int N = 2, L = 6;
  auto in = random_instance(77, N, L, 0.0);
  in.h = hermitian(in.h);
  for (int p = 0; p < L; ++p) in.h(p, p) += 3.0 * p;
  // u with the Hermitian pair symmetry u(p,r,q,s) = conj(u(q,s,p,r)).
  Tensor4c u(L, L, L, L);
  for (int p = 0; p < L; ++p)
    for (int r = 0; r < L; ++r)
      for (int q = 0; q < L; ++q)
        for (int s = 0; s < L; ++s) u(p, r, q, s) = 0.5 * (in.u(p, r, q, s) + std::conj(in.u(q, s, p, r)));
  u *= 0.3;
  const GroundSolveResult g = ccd_ground_solve(in.h, u, N);
  REQUIRE(g.converged);
  const AmplitudeDerivative d = tdcc_fixed_basis_rhs(in.h, u, g.amp);
  CHECK(d.dtau.max_abs() < 1e-9);
  CHECK(d.dlambda.max_abs() < 1e-9);

  const AmplitudeDerivative r = tdcc_fixed_basis_rhs(in.h, u, random_instance(5, N, L, 0.2).amp);
  CHECK(r.dtau.max_abs() > 1e-3);
}
