#include "doctest.h"

#include "oatdcc/state_prep.hpp"
#include "support/random_instances.hpp"

#include <Eigen/Eigenvalues>

using namespace oatdcc;

namespace {

double max_abs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

Model small_model(double interaction = 1.0) {
  ModelParams p;
  p.interaction_strength = interaction;
  return make_model(8.0, 32, p, interaction == 0.0 ? 0 : -1);
}

Eigen::VectorXd one_body_levels(const Model& m) {
  const OneBodyOperator op = m.full();
  MatrixXc hm(m.grid.n_grid, m.grid.n_grid);
  for (int c = 0; c < m.grid.n_grid; ++c) {
    MatrixXc e = MatrixXc::Zero(m.grid.n_basis(), 1);
    e(c, 0) = 1.0;
    hm.col(c) = op.apply(e).col(0).head(m.grid.n_grid);
  }
  return Eigen::SelfAdjointEigenSolver<MatrixXc>(hm).eigenvalues();
}

cplx mc_energy(const McState& s, const Model& m) { return evaluate(s, m.full(), m.lr).energy / s.coeff.squaredNorm(); }

McState kicked(McState s, const GridSpec& g, double k) {
  for (int r = 0; r < g.n_basis(); ++r) s.ket.row(r) *= std::exp(I * k * g.x[r % g.n_grid]);
  return s;
}

// Correlated N=2 state in 4 orbitals with sizeable singles.
McState correlated_pair(const Model& m) {
  McState s = random_initial_state(m.grid, 2, 4, alternating_spins(4), 5);
  std::mt19937_64 rng(6);
  for (int mu = 1; mu < s.space.size(); ++mu) s.coeff[mu] = testing_support::random_cplx(rng, 0.1);
  s.coeff.normalize();
  return s;
}

}  // namespace

TEST_CASE("wavepacket") {
  const GridSpec g = build_grid(20.0, 256);
  WavepacketParams wp;
  const VectorXc up = wavepacket(g, wp);
  CHECK(std::abs(up.squaredNorm() * g.dx - 1.0) < 1e-12);
  CHECK(up.tail(g.n_grid).norm() == 0.0);
  // <k> = k0 and <x> = x0
  const VectorXc tk = apply_kinetic(g, up);
  CHECK(std::abs(up.dot(tk) * g.dx - 0.5 * (wp.k0 * wp.k0 + 0.25 / (wp.sigma * wp.sigma))) < 1e-10);
  double xm = 0.0;
  for (int x = 0; x < g.n_grid; ++x) xm += std::norm(up[x]) * g.x[x] * g.dx;
  CHECK(xm == doctest::Approx(wp.x0).epsilon(1e-10));

  wp.spin = 1;
  const VectorXc dn = wavepacket(g, wp);
  CHECK(dn.head(g.n_grid).norm() == 0.0);
  CHECK(max_abs(dn.tail(g.n_grid) - up.head(g.n_grid)) == 0.0);
  wp.sigma = 0.0;
  CHECK_THROWS_AS(wavepacket(g, wp), std::invalid_argument);
}

TEST_CASE("random initial states are deterministic, orthonormal and spin pure") {
  const GridSpec g = build_grid(8.0, 32);
  const auto spins = alternating_spins(5);
  CHECK(spins == std::vector<int>{0, 1, 0, 1, 0});
  const McState a = random_initial_state(g, 3, 5, spins, 42);
  const McState b = random_initial_state(g, 3, 5, spins, 42);
  const McState c = random_initial_state(g, 3, 5, spins, 43);
  CHECK(max_abs(a.ket - b.ket) == 0.0);
  CHECK(max_abs(a.coeff - b.coeff) == 0.0);
  CHECK(max_abs(a.ket - c.ket) > 1e-3);
  CHECK(max_abs(a.ket.adjoint() * a.ket * g.dx - MatrixXc::Identity(5, 5)) < 1e-12);
  CHECK(orbital_spins(a.ket) == spins);
  CHECK(std::abs(a.coeff.norm() - 1.0) < 1e-12);
  CHECK(a.space.n_up == 2);
  CHECK(std::abs(a.coeff[0]) > 0.5);
  CHECK_THROWS(random_initial_state(g, 6, 5, alternating_spins(5), 1));
  CHECK_THROWS(random_initial_state(g, 2, 5, alternating_spins(4), 1));
}

TEST_CASE("without interaction the relaxed ground state fills the lowest levels") {
  const Model m = small_model(0.0);
  const Eigen::VectorXd e = one_body_levels(m);
  RelaxOptions opt;
  opt.ds = 0.02;
  opt.tol = 1e-10;
  const RelaxResult r = ground_state_mctdhf(m, 4, 6, 3, opt);
  CHECK(r.converged);
  CHECK(r.monotone);
  CHECK(r.energy == doctest::Approx(2 * e[0] + 2 * e[1]).epsilon(1e-8));
}

TEST_CASE("attaching a particle") {
  const Model m = small_model(0.0);
  const McState s = random_initial_state(m.grid, 2, 4, alternating_spins(4), 7);
  WavepacketParams wp;
  wp.x0 = 3.0;
  wp.k0 = 0.7;
  const VectorXc g = wavepacket(m.grid, wp);
  const McState a = attach_wavepacket(s, g, 0);
  CHECK(a.n_particles() == 3);
  CHECK(a.n_orb() == 5);
  CHECK(max_abs(a.ket.adjoint() * a.ket * m.grid.dx - MatrixXc::Identity(5, 5)) < 1e-12);
  CHECK(std::abs(a.coeff.norm() - 1.0) < 1e-12);
  CHECK(orbital_spins(a.ket)[2] == 0);

  const McEvaluation ev = evaluate(a, m.full(), m.lr);
  CHECK(std::abs(ev.dens.rho1.trace() - 3.0) < 1e-12);

  // Without interaction the energy is additive in the orthogonalized orbital.
  VectorXc w = a.ket.col(2);
  const cplx eg = (w.adjoint() * m.full().apply(MatrixXc(w)) * m.grid.dx)(0, 0);
  CHECK(std::abs(ev.energy - (mc_energy(s, m) + eg)) < 1e-10);

  // Density gains |w|^2.
  const VectorXc dn = mc_density(a) - mc_density(s);
  CHECK(max_abs(dn - w.cwiseAbs2().cast<cplx>()) < 1e-10);

  // Attachment to the vacuum.
  McState vac;
  vac.space = build_space(0, 2);
  vac.ket = s.ket.leftCols(2);
  vac.coeff = VectorXc::Ones(1);
  vac.dx = m.grid.dx;
  const McState one = attach_wavepacket(vac, g, 0);
  CHECK(one.n_particles() == 1);
  CHECK(std::abs(evaluate(one, m.full(), m.lr).dens.rho1.trace() - 1.0) < 1e-12);

  CHECK_THROWS_AS(attach_wavepacket(s, s.ket.col(1), 0), std::runtime_error);
}

TEST_CASE("Brueckner rotation removes singles and preserves the state") {
  const Model m = small_model();
  const McState s = correlated_pair(m);
  CHECK(singles_amplitudes(s).cwiseAbs().maxCoeff() > 1e-3);
  const BruecknerResult br = brueckner_rotate(s);
  CHECK(br.converged);
  CHECK(br.max_singles < 1e-10);
  CHECK(singles_amplitudes(br.state).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(max_abs(br.state.ket.adjoint() * br.state.ket * m.grid.dx - MatrixXc::Identity(4, 4)) < 1e-12);
  CHECK(std::abs(mc_energy(br.state, m) - mc_energy(s, m)) < 1e-10);
  CHECK(max_abs(mc_density(br.state) - mc_density(s)) < 1e-10);
  CHECK(br.reference_overlap_after >= br.reference_overlap_before - 1e-12);

  const BruecknerResult again = brueckner_rotate(br.state);
  CHECK(again.iterations <= 1);
  CHECK(max_abs(again.state.ket - br.state.ket) < 1e-9);

  CHECK_THROWS_AS(extract_cc_initial(s), std::invalid_argument);
}

TEST_CASE("two-particle extraction is exact") {
  const Model m = small_model();
  const McState s = brueckner_rotate(kicked(correlated_pair(m), m.grid, 0.5)).state;
  const Extraction ex = extract_cc_initial(s);
  // Only the residual singles (below the Brueckner tolerance) remain.
  CHECK(ex.truncation_remainder < 1e-9);
  CHECK(ex.reference_weight > 0.5);
  const CCState& cc = ex.state;
  CHECK(std::abs(cc_energy(cc, m.full(), m.lr) - mc_energy(s, m)) < 1e-10);
  CHECK(max_abs(cc_density(cc) - mc_density(s)) < 1e-10);
  CHECK(std::abs(cc_norm(cc) - 1.0) < 1e-12);

  // CI round trip of the amplitudes.
  const VectorXc ci = exp_T_apply(s.space, cc.amp.tau);
  CHECK((doubles_from_ci(s.space, ci) - cc.amp.tau).max_abs() < 1e-14);
}

TEST_CASE("amplitude read-off inverts the CC vectors") {
  const DeterminantSpace space = build_space(3, 6);
  const auto in = testing_support::random_instance(3, 3, 6, 0.2);
  const VectorXc A = exp_T_apply(space, in.amp.tau);
  CHECK((doubles_from_ci(space, 2.5 * A) - in.amp.tau).max_abs() < 1e-13);
  const VectorXc D = dual_cc_vector(space, Tensor4c(3, 3, 3, 3), in.amp.lambda);
  CHECK((deexcitation_from_ci(space, 0.5 * D) - in.amp.lambda).max_abs() < 1e-13);
}

TEST_CASE("correlated ground state lies below Hartree-Fock") {
  const Model m = small_model();
  RelaxOptions opt;
  opt.ds = 0.02;
  opt.tol = 1e-8;
  const RelaxResult hf = ground_state_mctdhf(m, 4, 4, 11, opt);
  const RelaxResult mc = ground_state_mctdhf(m, 4, 6, 11, opt);
  REQUIRE(hf.converged);
  REQUIRE(mc.converged);
  CHECK(mc.energy < hf.energy - 1e-4);

  const Extraction ex = extract_cc_initial(brueckner_rotate(mc.state).state);
  const double ecc = std::real(cc_energy(ex.state, m.full(), m.lr));
  CHECK(ecc < hf.energy - 1e-4);
  CHECK(std::abs(ecc - mc.energy) < 1e-2);
}
