#include "oatdcc/fci.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace oatdcc {

int DeterminantSpace::find(std::uint64_t mask) const {
  auto it = std::lower_bound(dets.begin(), dets.end(), mask);
  if (it == dets.end() || *it != mask) return -1;
  return static_cast<int>(it - dets.begin());
}

namespace {

void check_counts(int n_particles, int n_orbitals) {
  if (n_particles < 0 || n_orbitals < n_particles || n_orbitals > 63)
    throw std::invalid_argument("invalid particle/orbital counts");
}

void enumerate(int n_particles, int n_orbitals, std::vector<std::uint64_t>& out) {
  // Gosper's hack walks the N-subsets in increasing order.
  if (n_particles == 0) {
    out.push_back(0);
    return;
  }
  std::uint64_t m = (std::uint64_t{1} << n_particles) - 1;
  const std::uint64_t limit = std::uint64_t{1} << n_orbitals;
  while (m < limit) {
    out.push_back(m);
    const std::uint64_t c = m & (~m + 1);
    const std::uint64_t r = m + c;
    m = (((r ^ m) >> 2) / c) | r;
  }
}

}  // namespace

DeterminantSpace build_space(int n_particles, int n_orbitals) {
  check_counts(n_particles, n_orbitals);
  DeterminantSpace s;
  s.n_particles = n_particles;
  s.n_orbitals = n_orbitals;
  enumerate(n_particles, n_orbitals, s.dets);
  return s;
}

DeterminantSpace build_space(int n_particles, int n_orbitals, const std::vector<int>& spins, int n_up) {
  check_counts(n_particles, n_orbitals);
  if (static_cast<int>(spins.size()) != n_orbitals) throw std::invalid_argument("spin label count mismatch");
  std::uint64_t up_mask = 0;
  for (int p = 0; p < n_orbitals; ++p) {
    if (spins[p] != 0 && spins[p] != 1) throw std::invalid_argument("orbital spin must be 0 or 1");
    if (spins[p] == 0) up_mask |= std::uint64_t{1} << p;
  }
  DeterminantSpace s;
  s.n_particles = n_particles;
  s.n_orbitals = n_orbitals;
  s.spins = spins;
  s.n_up = n_up;
  std::vector<std::uint64_t> all;
  enumerate(n_particles, n_orbitals, all);
  for (auto m : all)
    if (std::popcount(m & up_mask) == n_up) s.dets.push_back(m);
  if (s.dets.empty()) throw std::invalid_argument("empty determinant space for requested spin sector");
  return s;
}

std::vector<int> orbital_spins(const MatrixXc& ket, double tol) {
  const Eigen::Index ng = ket.rows() / 2;
  std::vector<int> out(ket.cols());
  for (Eigen::Index p = 0; p < ket.cols(); ++p) {
    const double up = ket.col(p).head(ng).norm(), dn = ket.col(p).tail(ng).norm();
    const double scale = std::max(up, dn);
    if (dn <= tol * scale)
      out[p] = 0;
    else if (up <= tol * scale)
      out[p] = 1;
    else
      out[p] = -1;
  }
  return out;
}

bool annihilate(std::uint64_t& mask, int p, int& sign) {
  const std::uint64_t bit = std::uint64_t{1} << p;
  if (!(mask & bit)) return false;
  if (std::popcount(mask & (bit - 1)) & 1) sign = -sign;
  mask ^= bit;
  return true;
}

bool create(std::uint64_t& mask, int p, int& sign) {
  const std::uint64_t bit = std::uint64_t{1} << p;
  if (mask & bit) return false;
  if (std::popcount(mask & (bit - 1)) & 1) sign = -sign;
  mask |= bit;
  return true;
}

namespace {

std::vector<int> occupied(std::uint64_t m, int L) {
  std::vector<int> occ;
  for (int p = 0; p < L; ++p)
    if (m >> p & 1) occ.push_back(p);
  return occ;
}

// Visits every nonzero <mu| c+_p c_q |nu> as f(mu, nu, p, q, sign).
template <typename F>
void for_each_one_body(const DeterminantSpace& space, F&& f) {
  const int L = space.n_orbitals;
  for (int nu = 0; nu < space.size(); ++nu) {
    const std::uint64_t m0 = space.dets[nu];
    for (int q = 0; q < L; ++q) {
      std::uint64_t m1 = m0;
      int s1 = 1;
      if (!annihilate(m1, q, s1)) continue;
      for (int p = 0; p < L; ++p) {
        std::uint64_t m2 = m1;
        int s2 = s1;
        if (!create(m2, p, s2)) continue;
        const int mu = space.find(m2);
        if (mu >= 0) f(mu, nu, p, q, s2);
      }
    }
  }
}

// Visits every nonzero <mu| c+_p c+_r c_s c_q |nu> with p < r, q < s.
template <typename F>
void for_each_two_body(const DeterminantSpace& space, F&& f) {
  const int L = space.n_orbitals;
  for (int nu = 0; nu < space.size(); ++nu) {
    const std::uint64_t m0 = space.dets[nu];
    const auto occ = occupied(m0, L);
    for (std::size_t a = 0; a < occ.size(); ++a)
      for (std::size_t b = a + 1; b < occ.size(); ++b) {
        const int q = occ[a], s = occ[b];
        std::uint64_t m1 = m0;
        int s1 = 1;
        annihilate(m1, q, s1);
        annihilate(m1, s, s1);
        for (int p = 0; p < L; ++p) {
          if (m1 >> p & 1) continue;
          for (int r = p + 1; r < L; ++r) {
            if (m1 >> r & 1) continue;
            std::uint64_t m2 = m1;
            int s2 = s1;
            create(m2, r, s2);
            create(m2, p, s2);
            const int mu = space.find(m2);
            if (mu >= 0) f(mu, nu, p, r, q, s, s2);
          }
        }
      }
  }
}

}  // namespace

VectorXc apply_one_body(const DeterminantSpace& space, const MatrixXc& h, const VectorXc& A) {
  VectorXc out = VectorXc::Zero(space.size());
  for_each_one_body(space, [&](int mu, int nu, int p, int q, int sign) {
    out[mu] += static_cast<double>(sign) * h(p, q) * A[nu];
  });
  return out;
}

VectorXc apply_two_body(const DeterminantSpace& space, const Tensor4c& g, const VectorXc& A) {
  VectorXc out = VectorXc::Zero(space.size());
  for_each_two_body(space, [&](int mu, int nu, int p, int r, int q, int s, int sign) {
    out[mu] += static_cast<double>(sign) * g(p, r, q, s) * A[nu];
  });
  return out;
}

VectorXc apply_hamiltonian(const DeterminantSpace& space, const MatrixXc& h, const Tensor4c& u,
                           const VectorXc& A) {
  return apply_one_body(space, h, A) + apply_two_body(space, u, A);
}

MatrixXc hamiltonian_matrix(const DeterminantSpace& space, const MatrixXc& h, const Tensor4c& u) {
  const int n = space.size();
  MatrixXc H = MatrixXc::Zero(n, n);
  for_each_one_body(space, [&](int mu, int nu, int p, int q, int sign) {
    H(mu, nu) += static_cast<double>(sign) * h(p, q);
  });
  for_each_two_body(space, [&](int mu, int nu, int p, int r, int q, int s, int sign) {
    H(mu, nu) += static_cast<double>(sign) * u(p, r, q, s);
  });
  return H;
}

namespace {

enum class Layout { tau, tau_t, lambda, lambda_t };

Tensor4c embed(const Tensor4c& x, Layout layout) {
  const bool tau_like = layout == Layout::tau || layout == Layout::tau_t;
  const int N = static_cast<int>(tau_like ? x.dim(0) : x.dim(2));
  const int V = static_cast<int>(tau_like ? x.dim(2) : x.dim(0));
  const int L = N + V;
  Tensor4c g(L, L, L, L);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) switch (layout) {
            case Layout::tau: g(N + a, N + b, i, j) = x(i, j, a, b); break;
            case Layout::tau_t: g(i, j, N + a, N + b) = x(i, j, a, b); break;
            case Layout::lambda: g(i, j, N + a, N + b) = x(a, b, i, j); break;
            case Layout::lambda_t: g(N + a, N + b, i, j) = x(a, b, i, j); break;
          }
  return g;
}

VectorXc reference_vector(const DeterminantSpace& space) {
  const int ref = space.find(space.reference_mask());
  if (ref < 0) throw std::invalid_argument("reference determinant not in space");
  VectorXc e = VectorXc::Zero(space.size());
  e[ref] = 1.0;
  return e;
}

}  // namespace

Tensor4c excitation_operator(const Tensor4c& tau) { return embed(tau, Layout::tau); }
Tensor4c excitation_operator_transpose(const Tensor4c& tau) { return embed(tau, Layout::tau_t); }
Tensor4c deexcitation_operator(const Tensor4c& lambda) { return embed(lambda, Layout::lambda); }
Tensor4c deexcitation_operator_transpose(const Tensor4c& lambda) { return embed(lambda, Layout::lambda_t); }

VectorXc exp_nilpotent_apply(const DeterminantSpace& space, const Tensor4c& g, const VectorXc& A) {
  VectorXc sum = A, term = A;
  for (int k = 1; k <= space.n_particles + 1; ++k) {
    term = apply_two_body(space, g, term) / static_cast<double>(k);
    if (term.squaredNorm() == 0.0) break;
    sum += term;
  }
  return sum;
}

VectorXc exp_T_apply(const DeterminantSpace& space, const Tensor4c& tau) {
  return exp_nilpotent_apply(space, excitation_operator(tau), reference_vector(space));
}

VectorXc dual_cc_vector(const DeterminantSpace& space, const Tensor4c& tau, const Tensor4c& lambda) {
  const VectorXc e0 = reference_vector(space);
  const VectorXc v = e0 + apply_two_body(space, deexcitation_operator_transpose(lambda), e0);
  Tensor4c minus_tt = excitation_operator_transpose(tau);
  minus_tt *= -1.0;
  return exp_nilpotent_apply(space, minus_tt, v);
}

DensityMatrices fci_densities(const DeterminantSpace& space, const VectorXc& dual, const VectorXc& A) {
  const int L = space.n_orbitals;
  DensityMatrices d{MatrixXc::Zero(L, L), Tensor4c(L, L, L, L)};
  for_each_one_body(space, [&](int mu, int nu, int p, int q, int sign) {
    d.rho1(p, q) += static_cast<double>(sign) * dual[mu] * A[nu];
  });
  for_each_two_body(space, [&](int mu, int nu, int p, int r, int q, int s, int sign) {
    const cplx v = static_cast<double>(sign) * dual[mu] * A[nu];
    d.rho2(p, r, q, s) += v;
    d.rho2(r, p, q, s) -= v;
    d.rho2(p, r, s, q) -= v;
    d.rho2(r, p, s, q) += v;
  });
  return d;
}

cplx fci_expectation(const DeterminantSpace& space, const VectorXc& dual, const VectorXc& A,
                     const MatrixXc& h, const Tensor4c& u) {
  return (dual.transpose() * apply_hamiltonian(space, h, u, A))(0, 0);
}

VectorXc transform_coefficients(const DeterminantSpace& space, const MatrixXc& M, const VectorXc& A) {
  const int N = space.n_particles, L = space.n_orbitals;
  if (M.rows() != L || M.cols() != L) throw std::invalid_argument("transform matrix must be L x L");
  std::vector<std::vector<int>> occ(space.size());
  for (int mu = 0; mu < space.size(); ++mu) occ[mu] = occupied(space.dets[mu], L);
  VectorXc out = VectorXc::Zero(space.size());
  MatrixXc sub(N, N);
  for (int nu = 0; nu < space.size(); ++nu) {
    if (A[nu] == 0.0) continue;
    for (int mu = 0; mu < space.size(); ++mu) {
      for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) sub(r, c) = M(occ[mu][r], occ[nu][c]);
      out[mu] += (N == 0 ? cplx(1.0) : sub.determinant()) * A[nu];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

McEvaluation evaluate(const McState& s, const OneBodyOperator& op, const InteractionLowRank& lr) {
  McEvaluation ev;
  const OrbitalPair pair = hermitian_pair(s.ket, s.n_particles(), s.dx);
  ev.ints = compute_integrals(pair, op, lr);
  ev.dens = fci_densities(s.space, s.coeff.conjugate(), s.coeff);
  ev.energy = expectation(ev.ints.h, ev.ints.u, ev.dens.rho1, ev.dens.rho2);
  return ev;
}


McDerivative mctdhf_rhs(const McState& s, const OneBodyOperator& op, const InteractionLowRank& lr,
                        double eps) {
  const McEvaluation ev = evaluate(s, op, lr);
  McDerivative d;
  d.dcoeff = -I * apply_hamiltonian(s.space, ev.ints.h, ev.ints.u, s.coeff);
  const OrbitalPair pair = hermitian_pair(s.ket, s.n_particles(), s.dx);
  const MatrixXc rho_inv_t = regularized_inverse(ev.dens.rho1, eps).transpose();
  const MatrixXc M = mean_field_ket(s.ket, ev.ints.W, ev.dens.rho2);
  d.dket = -I * project_out(pair, op.apply(s.ket) + M * rho_inv_t);
  return d;
}

void reorthonormalize(McState& s, bool normalize_coeff) {
  const MatrixXc M = lowdin_orthonormalize(s.ket, s.dx);
  s.coeff = transform_coefficients(s.space, M, s.coeff);
  if (normalize_coeff) s.coeff.normalize();
}

std::string method_name(MethodKind m) {
  switch (m) {
    case MethodKind::mctdhf: return "mctdhf";
    case MethodKind::oatdccd: return "oatdccd";
    case MethodKind::tdhf: return "tdhf";
    case MethodKind::tdccd_fixed: return "tdccd-fixed";
  }
  return "unknown";
}

MethodKind parse_method(const std::string& name) {
  if (name == "mctdhf") return MethodKind::mctdhf;
  if (name == "oatdccd") return MethodKind::oatdccd;
  if (name == "tdhf") return MethodKind::tdhf;
  if (name == "tdccd-fixed") return MethodKind::tdccd_fixed;
  throw std::invalid_argument("unknown method '" + name + "'");
}

RelaxResult relax_imaginary_time(const McState& start, const OneBodyOperator& op,
                                 const InteractionLowRank& lr, const RelaxOptions& opt,
                                 MethodKind method) {
  if (method != MethodKind::mctdhf)
    throw std::invalid_argument("imaginary-time relaxation is only supported for the MCTDHF method");
  RelaxResult res;
  res.state = start;
  reorthonormalize(res.state, true);
  double e_prev = evaluate(res.state, op, lr).energy.real();
  res.history.push_back(e_prev);

  auto flow = [&](const McState& s) {
    McDerivative d = mctdhf_rhs(s, op, lr, opt.eps);
    d.dket *= -I;
    d.dcoeff *= -I;
    return d;
  };
  auto shifted = [](const McState& s, const McDerivative& d, double h) {
    McState o = s;
    o.ket += h * d.dket;
    o.coeff += h * d.dcoeff;
    return o;
  };

  const double ds = opt.ds;
  for (int step = 1; step <= opt.max_steps; ++step) {
    McState& s = res.state;
    const McDerivative k1 = flow(s);
    const McDerivative k2 = flow(shifted(s, k1, 0.5 * ds));
    const McDerivative k3 = flow(shifted(s, k2, 0.5 * ds));
    const McDerivative k4 = flow(shifted(s, k3, ds));
    s.ket += (ds / 6.0) * (k1.dket + 2.0 * k2.dket + 2.0 * k3.dket + k4.dket);
    s.coeff += (ds / 6.0) * (k1.dcoeff + 2.0 * k2.dcoeff + 2.0 * k3.dcoeff + k4.dcoeff);
    reorthonormalize(s, true);
    const double e = evaluate(s, op, lr).energy.real();
    res.history.push_back(e);
    res.steps = step;
    if (opt.check_monotone && e > e_prev + 1e-12 * std::max(1.0, std::abs(e_prev))) res.monotone = false;
    const bool done = std::abs(e - e_prev) / ds < opt.tol;
    e_prev = e;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.energy = e_prev;
  return res;
}

}  // namespace oatdcc
