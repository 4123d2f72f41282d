#include "oatdcc/state_prep.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <stdexcept>

namespace oatdcc {

VectorXc wavepacket(const GridSpec& grid, const WavepacketParams& wp) {
  if (!(wp.sigma > 0.0)) throw std::invalid_argument("wavepacket width must be positive");
  if (wp.spin != 0 && wp.spin != 1) throw std::invalid_argument("wavepacket spin must be 0 or 1");
  const int n = grid.n_grid;
  VectorXc g = VectorXc::Zero(grid.n_basis());
  for (int k = 0; k < n; ++k) {
    const double x = grid.x[k];
    const double d = x - wp.x0;
    g[wp.spin * n + k] = std::exp(cplx(-d * d / (4.0 * wp.sigma * wp.sigma), wp.k0 * x));
  }
  return g / std::sqrt(g.squaredNorm() * grid.dx);
}

std::vector<int> alternating_spins(int n_orb) {
  std::vector<int> s(n_orb);
  for (int p = 0; p < n_orb; ++p) s[p] = p % 2;
  return s;
}

namespace {

// Oscillator functions H_m(x/s) exp(-x^2/2s^2) via the normalized recurrence.
Eigen::MatrixXd oscillator_functions(const GridSpec& grid, int count, double scale) {
  const int n = grid.n_grid;
  Eigen::MatrixXd f(n, count);
  for (int k = 0; k < n; ++k) {
    const double y = grid.x[k] / scale;
    double prev = 0.0, cur = std::exp(-0.5 * y * y);
    for (int m = 0; m < count; ++m) {
      f(k, m) = cur;
      const double next = std::sqrt(2.0 / (m + 1)) * y * cur - std::sqrt(static_cast<double>(m) / (m + 1)) * prev;
      prev = cur;
      cur = next;
    }
  }
  return f;
}

int count_up(const std::vector<int>& spins, int n) {
  int c = 0;
  for (int p = 0; p < n; ++p) c += spins[p] == 0;
  return c;
}

}  // namespace

McState random_initial_state(const GridSpec& grid, int n_particles, int n_orb, const std::vector<int>& spins,
                             std::uint64_t seed) {
  if (static_cast<int>(spins.size()) != n_orb) throw std::invalid_argument("spin label count mismatch");
  if (n_particles > n_orb) throw std::invalid_argument("more particles than orbitals");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = grid.n_grid;
  const int n_spatial = std::max(1, (n_orb + 1) / 2 + 2);
  const Eigen::MatrixXd osc = oscillator_functions(grid, n_spatial + 2, 1.5);

  McState s;
  s.dx = grid.dx;
  s.ket = MatrixXc::Zero(grid.n_basis(), n_orb);
  for (int p = 0; p < n_orb; ++p) {
    VectorXc f = osc.col(p / 2).cast<cplx>();
    for (int m = 0; m < osc.cols(); ++m) f += 0.1 * cplx(gauss(rng), gauss(rng)) * osc.col(m);
    s.ket.col(p).segment(spins[p] * n, n) = f;
  }
  // Orthonormalize within each spin block; the blocks are already orthogonal.
  for (int sp = 0; sp < 2; ++sp) {
    std::vector<int> cols;
    for (int p = 0; p < n_orb; ++p)
      if (spins[p] == sp) cols.push_back(p);
    if (cols.empty()) continue;
    MatrixXc block(grid.n_basis(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) block.col(c) = s.ket.col(cols[c]);
    lowdin_orthonormalize(block, grid.dx);
    for (std::size_t c = 0; c < cols.size(); ++c) s.ket.col(cols[c]) = block.col(c);
  }

  s.space = build_space(n_particles, n_orb, spins, count_up(spins, n_particles));
  s.coeff = VectorXc::Zero(s.space.size());
  for (auto& c : s.coeff) c = 0.05 * cplx(gauss(rng), gauss(rng));
  s.coeff[0] += 1.0;
  s.coeff.normalize();
  return s;
}

RelaxResult ground_state_mctdhf(const Model& model, int n_particles, int n_orb, std::uint64_t seed,
                                const RelaxOptions& opt) {
  const McState start = random_initial_state(model.grid, n_particles, n_orb, alternating_spins(n_orb), seed);
  return relax_imaginary_time(start, model.full(), model.lr, opt, MethodKind::mctdhf);
}

McState attach_wavepacket(const McState& s, const VectorXc& g, int spin) {
  const int N = s.n_particles(), L = s.n_orb();
  if (g.size() != s.ket.rows()) throw std::invalid_argument("wavepacket length mismatch");
  VectorXc w = g;
  for (int pass = 0; pass < 2; ++pass) w -= s.ket * (s.ket.adjoint() * w * s.dx);
  const double norm = std::sqrt(w.squaredNorm() * s.dx);
  if (norm < 1e-8) throw std::runtime_error("wavepacket lies in the span of the orbitals");
  w /= norm;

  McState out;
  out.dx = s.dx;
  out.t = s.t;
  out.ket.resize(s.ket.rows(), L + 1);
  out.ket << s.ket.leftCols(N), w, s.ket.rightCols(L - N);

  if (s.space.spins.empty()) {
    out.space = build_space(N + 1, L + 1);
  } else {
    std::vector<int> spins = s.space.spins;
    spins.insert(spins.begin() + N, spin);
    out.space = build_space(N + 1, L + 1, spins, s.space.n_up + (spin == 0 ? 1 : 0));
  }
  out.coeff = VectorXc::Zero(out.space.size());
  const std::uint64_t low_mask = (std::uint64_t{1} << N) - 1;
  for (int mu = 0; mu < s.space.size(); ++mu) {
    const std::uint64_t m = s.space.dets[mu];
    std::uint64_t widened = (m & low_mask) | ((m & ~low_mask) << 1);
    int sign = 1;
    create(widened, N, sign);
    const int nu = out.space.find(widened);
    if (nu < 0) throw std::logic_error("attached determinant missing from target space");
    out.coeff[nu] = static_cast<double>(sign) * s.coeff[mu];
  }
  return out;
}

MatrixXc singles_amplitudes(const McState& s) {
  const int N = s.n_particles(), V = s.n_orb() - N;
  const DeterminantSpace& space = s.space;
  const int ref = space.find(space.reference_mask());
  if (ref < 0) throw std::runtime_error("reference determinant not in space");
  const cplx a0 = s.coeff[ref];
  MatrixXc t = MatrixXc::Zero(N, V);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < V; ++a) {
      std::uint64_t m = space.reference_mask();
      int sign = 1;
      annihilate(m, i, sign);
      create(m, N + a, sign);
      const int mu = space.find(m);
      if (mu >= 0) t(i, a) = static_cast<double>(sign) * s.coeff[mu] / a0;
    }
  return t;
}

namespace {

double reference_overlap(const McState& s) {
  const int ref = s.space.find(s.space.reference_mask());
  return ref < 0 ? 0.0 : std::abs(s.coeff[ref]) / s.coeff.norm();
}

}  // namespace

BruecknerResult brueckner_rotate(const McState& s, int max_iter, double tol) {
  BruecknerResult r;
  r.state = s;
  r.reference_overlap_before = reference_overlap(s);
  const int N = s.n_particles(), L = s.n_orb();
  for (;;) {
    const MatrixXc t = singles_amplitudes(r.state);
    r.max_singles = t.size() ? t.cwiseAbs().maxCoeff() : 0.0;
    if (r.max_singles < tol) {
      r.converged = true;
      break;
    }
    if (r.iterations >= max_iter) break;
    MatrixXc X = MatrixXc::Zero(L, L);
    X.bottomLeftCorner(L - N, N) = t.transpose();
    X.topRightCorner(N, L - N) = -t.conjugate();
    const MatrixXc U = X.exp();
    r.state.ket = r.state.ket * U;
    r.state.coeff = transform_coefficients(r.state.space, U.adjoint(), r.state.coeff);
    ++r.iterations;
  }
  r.reference_overlap_after = reference_overlap(r.state);
  return r;
}

namespace {

template <typename Store>
void read_doubles(const DeterminantSpace& space, const VectorXc& C, Store&& store) {
  const int N = space.n_particles, V = space.n_orbitals - N;
  const int ref = space.find(space.reference_mask());
  if (ref < 0) throw std::runtime_error("reference determinant not in space");
  const cplx c0 = C[ref];
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = a + 1; b < V; ++b) {
          std::uint64_t m = space.reference_mask();
          int sign = 1;
          annihilate(m, i, sign);
          annihilate(m, j, sign);
          create(m, N + b, sign);
          create(m, N + a, sign);
          const int mu = space.find(m);
          if (mu < 0) continue;
          const cplx v = static_cast<double>(sign) * C[mu] / c0;
          store(i, j, a, b, v);
          store(j, i, a, b, -v);
          store(i, j, b, a, -v);
          store(j, i, b, a, v);
        }
}

}  // namespace

Tensor4c doubles_from_ci(const DeterminantSpace& space, const VectorXc& C) {
  const int N = space.n_particles, V = space.n_orbitals - N;
  Tensor4c tau(N, N, V, V);
  read_doubles(space, C, [&](int i, int j, int a, int b, cplx v) { tau(i, j, a, b) = v; });
  return tau;
}

Tensor4c deexcitation_from_ci(const DeterminantSpace& space, const VectorXc& b) {
  const int N = space.n_particles, V = space.n_orbitals - N;
  Tensor4c lambda(V, V, N, N);
  read_doubles(space, b, [&](int i, int j, int a, int bb, cplx v) { lambda(a, bb, i, j) = v; });
  return lambda;
}

Extraction extract_cc_initial(const McState& s) {
  const DeterminantSpace& space = s.space;
  const int ref = space.find(space.reference_mask());
  if (ref < 0) throw std::runtime_error("reference determinant not in space");
  Extraction ex;
  ex.reference_weight = std::abs(s.coeff[ref]) / s.coeff.norm();
  if (ex.reference_weight < 1e-8)
    throw std::runtime_error("reference weight below 1e-8: state is not single-reference");
  const MatrixXc t1 = singles_amplitudes(s);
  if (t1.size() && t1.cwiseAbs().maxCoeff() > 1e-6)
    throw std::invalid_argument("singles do not vanish; rotate to Brueckner orbitals first");

  const Tensor4c tau = doubles_from_ci(space, s.coeff);
  const VectorXc dual = s.coeff.conjugate() / s.coeff.squaredNorm();
  const VectorXc b = exp_nilpotent_apply(space, excitation_operator_transpose(tau), dual);
  const Tensor4c lambda = deexcitation_from_ci(space, b);

  const VectorXc cc = exp_T_apply(space, tau);
  ex.truncation_remainder = (s.coeff / s.coeff[ref] - cc).norm();

  ex.state.orbitals = hermitian_pair(s.ket, s.n_particles(), s.dx);
  ex.state.amp = {tau, lambda};
  ex.state.t = s.t;
  return ex;
}

}  // namespace oatdcc
