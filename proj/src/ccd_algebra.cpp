#include "oatdcc/ccd_algebra.hpp"

#include <deque>
#include <stdexcept>

namespace oatdcc {

namespace {

// out = r0 + P(01) r01 + P(23) r23 + P(01) P(23) r0123, where P(01) swaps the
// first index pair and P(23) the second, f P = f - f(swapped).
Tensor4c combine(const Tensor4c& r0, const Tensor4c& r01, const Tensor4c& r23, const Tensor4c& r0123) {
  const auto [n0, n1, n2, n3] = r0.dims();
  Tensor4c out(n0, n1, n2, n3);
  for (std::size_t p = 0; p < n0; ++p)
    for (std::size_t q = 0; q < n1; ++q)
      for (std::size_t r = 0; r < n2; ++r)
        for (std::size_t s = 0; s < n3; ++s)
          out(p, q, r, s) = r0(p, q, r, s) + r01(p, q, r, s) - r01(q, p, r, s) + r23(p, q, r, s) -
                            r23(p, q, s, r) + r0123(p, q, r, s) - r0123(q, p, r, s) -
                            r0123(p, q, s, r) + r0123(q, p, s, r);
  // Bitwise antisymmetric in both index pairs.
  return antisymmetrize(out);
}

void check_shapes(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  const auto L = static_cast<std::size_t>(amp.n_occ() + amp.n_vir());
  if (h.rows() != static_cast<Eigen::Index>(L) || h.cols() != static_cast<Eigen::Index>(L) ||
      u.dims() != std::array<std::size_t, 4>{L, L, L, L})
    throw std::invalid_argument("integral tables do not match amplitude dimensions");
}

}  // namespace

Tensor4c antisymmetrize(const Tensor4c& f) {
  const auto [n0, n1, n2, n3] = f.dims();
  Tensor4c out(n0, n1, n2, n3);
  for (std::size_t p = 0; p < n0; ++p)
    for (std::size_t q = 0; q < n1; ++q)
      for (std::size_t r = 0; r < n2; ++r)
        for (std::size_t s = 0; s < n3; ++s)
          out(p, q, r, s) = 0.25 * ((f(p, q, r, s) - f(q, p, r, s)) - (f(p, q, s, r) - f(q, p, s, r)));
  return out;
}

cplx reference_expectation(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir();
  const auto& t = amp.tau;
  cplx e = 0.0;
  for (int i = 0; i < N; ++i) {
    e += h(i, i);
    for (int j = 0; j < N; ++j) e += 0.5 * u(i, j, i, j);
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) e += 0.25 * t(i, j, a, b) * u(i, j, N + a, N + b);
  return e;
}

cplx ccd_energy(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  const Tensor4c r = tau_rhs(h, u, amp);
  const auto& l = amp.lambda;
  const int N = amp.n_occ(), V = amp.n_vir();
  cplx e = reference_expectation(h, u, amp);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) e += 0.25 * l(a, b, i, j) * r(i, j, a, b);
  return e;
}

Tensor4c tau_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  check_shapes(h, u, amp);
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;

  MatrixXc Fo = MatrixXc::Zero(N, N), Fv = MatrixXc::Zero(V, V);
  MatrixXc Xo = MatrixXc::Zero(N, N), Xv = MatrixXc::Zero(V, V);
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) Fo(k, j) += u(k, l, j, l);
  for (int b = 0; b < V; ++b)
    for (int c = 0; c < V; ++c)
      for (int k = 0; k < N; ++k) Fv(b, c) += u(o + b, k, o + c, k);
  for (int k = 0; k < N; ++k)
    for (int l = 0; l < N; ++l)
      for (int d = 0; d < V; ++d)
        for (int c = 0; c < V; ++c) {
          const cplx ukl = u(k, l, o + d, o + c);
          for (int b = 0; b < V; ++b) Xv(b, c) += t(k, l, b, d) * ukl;
          for (int j = 0; j < N; ++j) Xo(l, j) += t(j, k, d, c) * ukl;
        }
  const MatrixXc Gv = Fv + 0.5 * Xv;
  const MatrixXc Go = Fo - 0.5 * Xo;

  // Mt(k,c,j,b) = u^{bk}_{jc} - 1/2 t^{bd}_{jl} u^{kl}_{dc}
  MatrixXc Mt(N * V, N * V);
  for (int k = 0; k < N; ++k)
    for (int c = 0; c < V; ++c)
      for (int j = 0; j < N; ++j)
        for (int b = 0; b < V; ++b) {
          cplx s = u(o + b, k, j, o + c);
          for (int l = 0; l < N; ++l)
            for (int d = 0; d < V; ++d) s -= 0.5 * u(k, l, o + d, o + c) * t(j, l, b, d);
          Mt(k * V + c, j * V + b) = s;
        }
  // T(ia,kc) = t(i,k,a,c)
  MatrixXc T(N * V, N * V);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < V; ++a)
      for (int k = 0; k < N; ++k)
        for (int c = 0; c < V; ++c) T(i * V + a, k * V + c) = t(i, k, a, c);
  const MatrixXc TM = T * Mt;  // (ia, jb)

  Tensor4c Y(N, N, N, N);
  for (int k = 0; k < N; ++k)
    for (int l = 0; l < N; ++l)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          cplx s = u(k, l, i, j);
          for (int d = 0; d < V; ++d)
            for (int c = 0; c < V; ++c) s += 0.5 * t(i, j, d, c) * u(k, l, o + d, o + c);
          Y(k, l, i, j) = s;
        }

  Tensor4c r0(N, N, V, V), rij(N, N, V, V), rab(N, N, V, V), rboth(N, N, V, V);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          cplx s0 = u(o + a, o + b, i, j), sab = 0.0, sij = 0.0;
          for (int c = 0; c < V; ++c) {
            sab += -h(o + a, o + c) * t(i, j, b, c) + t(i, j, a, c) * Gv(b, c);
            for (int d = 0; d < V; ++d) s0 += 0.5 * t(i, j, d, c) * u(o + a, o + b, o + d, o + c);
          }
          for (int k = 0; k < N; ++k) {
            sij += h(k, i) * t(j, k, a, b) - t(i, k, a, b) * Go(k, j);
            for (int l = 0; l < N; ++l) s0 += 0.5 * Y(k, l, i, j) * t(k, l, a, b);
          }
          r0(i, j, a, b) = s0;
          rab(i, j, a, b) = sab;
          rij(i, j, a, b) = sij;
          rboth(i, j, a, b) = TM(i * V + a, j * V + b);
        }
  // first index pair is (i,j), second is (a,b)
  return combine(r0, rij, rab, rboth);
}

Tensor4c lambda_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  check_shapes(h, u, amp);
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;
  const auto& l = amp.lambda;

  MatrixXc Ho = h.topLeftCorner(N, N), Hv = h.bottomRightCorner(V, V);  // Hv(c,a) = h^c_a + ...
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k)
      for (int m = 0; m < N; ++m) Ho(i, k) += u(i, m, k, m);
  for (int c = 0; c < V; ++c)
    for (int a = 0; a < V; ++a)
      for (int k = 0; k < N; ++k) Hv(c, a) += u(o + c, k, o + a, k);
  for (int k = 0; k < N; ++k)
    for (int m = 0; m < N; ++m)
      for (int d = 0; d < V; ++d)
        for (int c = 0; c < V; ++c) {
          const cplx tk = t(k, m, d, c);
          for (int a = 0; a < V; ++a) Hv(c, a) += 0.5 * tk * u(k, m, o + a, o + d);
          for (int i = 0; i < N; ++i) Ho(i, k) += 0.5 * tk * u(i, m, o + d, o + c);
        }

  MatrixXc rv = MatrixXc::Zero(V, V);  // rv(b,d) = 1/2 l(b,c,k,m) t(k,m,d,c)
  MatrixXc Bo = MatrixXc::Zero(N, N);  // Bo(j,m) = l(d,c,j,k) t(k,m,d,c)
  Tensor4c C(N, N, N, N);              // C(k,m,i,j) = l(d,c,i,j) t(k,m,d,c)
  for (int k = 0; k < N; ++k)
    for (int m = 0; m < N; ++m)
      for (int d = 0; d < V; ++d)
        for (int c = 0; c < V; ++c) {
          const cplx tk = t(k, m, d, c);
          for (int b = 0; b < V; ++b) rv(b, d) += 0.5 * l(b, c, k, m) * tk;
          for (int j = 0; j < N; ++j) Bo(j, m) += l(d, c, j, k) * tk;
          for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) C(k, m, i, j) += l(d, c, i, j) * tk;
        }

  Tensor4c Y(N, N, N, N);  // Y(i,j,k,m) = u^{ij}_{km} + 1/2 t^{dc}_{km} u^{ij}_{dc}
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int m = 0; m < N; ++m) {
          cplx s = u(i, j, k, m);
          for (int d = 0; d < V; ++d)
            for (int c = 0; c < V; ++c) s += 0.5 * t(k, m, d, c) * u(i, j, o + d, o + c);
          Y(i, j, k, m) = s;
        }

  // Ml(kc, ia) = u^{ic}_{ak} - t^{dc}_{km} u^{im}_{ad};  Lm(bj, kc) = l(b,c,j,k)
  MatrixXc Ml(N * V, N * V), Lm(V * N, N * V);
  for (int k = 0; k < N; ++k)
    for (int c = 0; c < V; ++c) {
      for (int i = 0; i < N; ++i)
        for (int a = 0; a < V; ++a) {
          cplx s = u(i, o + c, o + a, k);
          for (int m = 0; m < N; ++m)
            for (int d = 0; d < V; ++d) s -= t(k, m, d, c) * u(i, m, o + a, o + d);
          Ml(k * V + c, i * V + a) = s;
        }
      for (int b = 0; b < V; ++b)
        for (int j = 0; j < N; ++j) Lm(b * N + j, k * V + c) = l(b, c, j, k);
    }
  const MatrixXc LM = Lm * Ml;  // (bj, ia)

  Tensor4c r0(V, V, N, N), rab(V, V, N, N), rij(V, V, N, N), rboth(V, V, N, N);
  for (int a = 0; a < V; ++a)
    for (int b = 0; b < V; ++b)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          cplx s0 = u(i, j, o + a, o + b), sab = 0.0, sij = 0.0;
          for (int c = 0; c < V; ++c) {
            sab += -Hv(c, a) * l(b, c, i, j) - rv(b, c) * u(i, j, o + a, o + c);
            for (int d = 0; d < V; ++d) s0 += 0.5 * l(d, c, i, j) * u(o + d, o + c, o + a, o + b);
          }
          for (int k = 0; k < N; ++k) {
            sij += Ho(i, k) * l(a, b, j, k) + 0.5 * Bo(j, k) * u(i, k, o + a, o + b);
            for (int m = 0; m < N; ++m)
              s0 += 0.25 * C(k, m, i, j) * u(k, m, o + a, o + b) + 0.5 * l(a, b, k, m) * Y(i, j, k, m);
          }
          r0(a, b, i, j) = s0;
          rab(a, b, i, j) = sab;
          rij(a, b, i, j) = sij;
          rboth(a, b, i, j) = LM(b * N + j, i * V + a);
        }
  // first index pair is (a,b), second is (i,j)
  return combine(r0, rab, rij, rboth);
}

MatrixXc density_1b(const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;
  const auto& l = amp.lambda;
  MatrixXc rho = MatrixXc::Zero(N + V, N + V);
  for (int i = 0; i < N; ++i) rho(i, i) = 1.0;
  for (int k = 0; k < N; ++k)
    for (int m = 0; m < N; ++m)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          // occ: rho(i,j) -= 1/2 l(a,b,k,j) t(k,i,a,b);  vir: rho(a,c) += 1/2 l(a,b,k,m) t(k,m,c,b)
          for (int i = 0; i < N; ++i) rho(i, m) -= 0.5 * l(a, b, k, m) * t(k, i, a, b);
          for (int c = 0; c < V; ++c) rho(o + a, o + c) += 0.5 * l(a, b, k, m) * t(k, m, c, b);
        }
  return rho;
}

Tensor4c density_2b(const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir(), L = N + V, o = N;
  const auto& t = amp.tau;
  const auto& l = amp.lambda;
  const MatrixXc rho1 = density_1b(amp);
  const MatrixXc rv = rho1.bottomRightCorner(V, V);
  Tensor4c rho(L, L, L, L);

  // Dm(m,j) = l(c,d,m,n) t(j,n,c,d);   Cc(i,j,k,m) = l(c,d,k,m) t(i,j,c,d)
  MatrixXc Dm = MatrixXc::Zero(N, N);
  Tensor4c Cc(N, N, N, N);
  for (int m = 0; m < N; ++m)
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < V; ++c)
        for (int d = 0; d < V; ++d) {
          const cplx lv = l(c, d, m, n);
          for (int j = 0; j < N; ++j) Dm(m, j) += lv * t(j, n, c, d);
          for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) Cc(i, j, m, n) += lv * t(i, j, c, d);
        }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int m = 0; m < N; ++m) {
          auto f = [&](int p, int q, int r, int s) { return p == r ? 0.5 * Dm(s, q) : cplx(0.0); };
          cplx v = (i == k && j == m ? 1.0 : 0.0) - (j == k && i == m ? 1.0 : 0.0);
          v -= f(i, j, k, m) - f(j, i, k, m) - f(i, j, m, k) + f(j, i, m, k);
          v += 0.5 * Cc(i, j, k, m);
          rho(i, j, k, m) = v;
        }

  // oovv
  // Q(kc, jb) = l(c,d,k,m) t(j,m,b,d);  T(ia, kc) = t(i,k,a,c)
  MatrixXc Q = MatrixXc::Zero(N * V, N * V), T(N * V, N * V);
  for (int k = 0; k < N; ++k)
    for (int c = 0; c < V; ++c) {
      for (int j = 0; j < N; ++j)
        for (int b = 0; b < V; ++b) {
          cplx s = 0.0;
          for (int m = 0; m < N; ++m)
            for (int d = 0; d < V; ++d) s += l(c, d, k, m) * t(j, m, b, d);
          Q(k * V + c, j * V + b) = s;
        }
      for (int i = 0; i < N; ++i)
        for (int a = 0; a < V; ++a) T(i * V + a, k * V + c) = t(i, k, a, c);
    }
  const MatrixXc TQ = T * Q;
  Tensor4c r0(N, N, V, V), rij(N, N, V, V), rab(N, N, V, V), rboth(N, N, V, V);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          cplx s0 = t(i, j, a, b), sab = 0.0, sij = TQ(i * V + a, j * V + b);
          for (int c = 0; c < V; ++c) sab -= t(i, j, a, c) * rv(c, b);
          for (int m = 0; m < N; ++m) {
            sij -= 0.5 * t(i, m, a, b) * Dm(m, j);
            for (int k = 0; k < N; ++k) s0 += 0.25 * t(k, m, a, b) * Cc(i, j, k, m);
          }
          r0(i, j, a, b) = s0;
          rij(i, j, a, b) = sij;
          rab(i, j, a, b) = sab;
        }
  const Tensor4c oovv = combine(r0, rij, rab, rboth);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          rho(i, j, o + a, o + b) = oovv(i, j, a, b);
          rho(o + a, o + b, i, j) = l(a, b, i, j);
        }

  // ovov and aliases
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          cplx v = i == j ? rv(a, b) : cplx(0.0);
          for (int k = 0; k < N; ++k)
            for (int c = 0; c < V; ++c) v -= l(a, c, j, k) * t(i, k, b, c);
          rho(i, o + a, j, o + b) = v;
          rho(i, o + a, o + b, j) = -v;
          rho(o + a, i, j, o + b) = -v;
          rho(o + a, i, o + b, j) = v;
        }

  // vvvv
  for (int a = 0; a < V; ++a)
    for (int b = 0; b < V; ++b)
      for (int c = 0; c < V; ++c)
        for (int d = 0; d < V; ++d) {
          cplx v = 0.0;
          for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) v += 0.5 * l(a, b, i, j) * t(i, j, c, d);
          rho(o + a, o + b, o + c, o + d) = v;
        }
  return rho;
}

DensityMatrices densities(const Amplitudes& amp) { return {density_1b(amp), density_2b(amp)}; }

cplx expectation(const MatrixXc& h, const Tensor4c& u, const MatrixXc& rho1, const Tensor4c& rho2) {
  cplx e = (rho1.array() * h.array()).sum();
  e += 0.25 * (rho2.flat().array() * u.flat().array()).sum();
  return e;
}

Tensor4c one_body_tau_rhs(const MatrixXc& d, const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir();
  Tensor4c zero_u(N + V, N + V, N + V, N + V);
  return tau_rhs(d, zero_u, amp);
}

Tensor4c one_body_lambda_rhs(const MatrixXc& d, const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir();
  Tensor4c zero_u(N + V, N + V, N + V, N + V);
  return lambda_rhs(d, zero_u, amp);
}

// ---------------------------------------------------------------------------

namespace naive {

cplx ccd_energy(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  check_shapes(h, u, amp);
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;
  const auto& lm = amp.lambda;
  cplx e = 0.0;
  for (int i = 0; i < N; ++i) {
    e += h(i, i);
    for (int j = 0; j < N; ++j) e += 0.5 * u(i, j, i, j);
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          const cplx L = lm(a, b, i, j);
          e += 0.25 * t(i, j, a, b) * u(i, j, o + a, o + b) + 0.25 * L * u(o + a, o + b, i, j);
          for (int c = 0; c < V; ++c) {
            // 1/2 h^a_b l^{ij}_{ac} t^{bc}_{ij}
            e += 0.5 * h(o + a, o + b) * lm(a, c, i, j) * t(i, j, b, c);
            for (int k = 0; k < N; ++k) {
              e += 0.5 * L * t(i, j, a, c) * u(o + b, k, o + c, k);
              e += L * t(k, i, a, c) * u(o + b, k, o + c, j);
            }
            for (int d = 0; d < V; ++d) {
              e += 0.125 * L * t(i, j, d, c) * u(o + a, o + b, o + d, o + c);
              for (int k = 0; k < N; ++k)
                for (int m = 0; m < N; ++m) {
                  const cplx ukm = u(k, m, o + d, o + c);
                  e += 0.125 * L * t(k, j, a, b) * t(m, i, d, c) * ukm;
                  e += 0.0625 * L * t(k, m, a, b) * t(i, j, d, c) * ukm;
                  e += 0.125 * L * t(m, i, a, b) * t(k, j, d, c) * ukm;
                  e -= 0.5 * L * t(k, j, a, c) * t(m, i, d, b) * ukm;
                  e -= 0.25 * L * t(k, m, a, c) * t(i, j, d, b) * ukm;
                }
            }
          }
          for (int k = 0; k < N; ++k) {
            // -1/2 h^j_i l^{ki}_{ab} t^{ab}_{kj}
            e -= 0.5 * h(j, i) * lm(a, b, k, i) * t(k, j, a, b);
            for (int m = 0; m < N; ++m) {
              e -= 0.5 * L * t(k, i, a, b) * u(k, m, m, j);
              e += 0.125 * L * t(k, m, a, b) * u(k, m, i, j);
            }
          }
        }
  return e;
}

Tensor4c tau_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  check_shapes(h, u, amp);
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;
  Tensor4c r0(N, N, V, V), rij(N, N, V, V), rab(N, N, V, V), rboth(N, N, V, V);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          cplx s0 = u(o + a, o + b, i, j), sab = 0.0, sij = 0.0, sboth = 0.0;
          for (int c = 0; c < V; ++c) {
            sab -= h(o + a, o + c) * t(i, j, b, c);
            for (int k = 0; k < N; ++k) {
              sab += t(i, j, a, c) * u(o + b, k, o + c, k);
              sboth += t(i, k, a, c) * u(o + b, k, j, o + c);
            }
            for (int d = 0; d < V; ++d) {
              s0 += 0.5 * t(i, j, d, c) * u(o + a, o + b, o + d, o + c);
              for (int k = 0; k < N; ++k)
                for (int m = 0; m < N; ++m) {
                  const cplx ukm = u(k, m, o + d, o + c);
                  sab += 0.5 * t(i, j, a, c) * t(k, m, b, d) * ukm;
                  sab -= t(i, k, a, c) * t(j, m, b, d) * ukm;
                  sij += 0.5 * t(i, m, a, b) * t(j, k, d, c) * ukm;
                  s0 += 0.25 * t(k, m, a, b) * t(i, j, d, c) * ukm;
                }
            }
          }
          for (int k = 0; k < N; ++k) {
            sij += h(k, i) * t(j, k, a, b);
            for (int m = 0; m < N; ++m) {
              sij -= t(i, k, a, b) * u(k, m, j, m);
              s0 += 0.5 * t(k, m, a, b) * u(k, m, i, j);
            }
          }
          r0(i, j, a, b) = s0;
          rij(i, j, a, b) = sij;
          rab(i, j, a, b) = sab;
          rboth(i, j, a, b) = sboth;
        }
  return combine(r0, rij, rab, rboth);
}

Tensor4c lambda_rhs(const MatrixXc& h, const Tensor4c& u, const Amplitudes& amp) {
  check_shapes(h, u, amp);
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;
  const auto& l = amp.lambda;
  Tensor4c r0(V, V, N, N), rab(V, V, N, N), rij(V, V, N, N), rboth(V, V, N, N);
  for (int a = 0; a < V; ++a)
    for (int b = 0; b < V; ++b)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          cplx s0 = u(i, j, o + a, o + b), sab = 0.0, sij = 0.0, sboth = 0.0;
          for (int k = 0; k < N; ++k) {
            sij += h(i, k) * l(a, b, j, k);
            for (int m = 0; m < N; ++m) {
              sij += l(a, b, j, k) * u(i, m, k, m);
              s0 += 0.5 * l(a, b, k, m) * u(i, j, k, m);
            }
          }
          for (int c = 0; c < V; ++c) {
            sab -= h(o + c, o + a) * l(b, c, i, j);
            for (int k = 0; k < N; ++k) {
              sab -= l(b, c, i, j) * u(o + c, k, o + a, k);
              sboth += l(b, c, j, k) * u(i, o + c, o + a, k);
            }
            for (int d = 0; d < V; ++d) {
              s0 += 0.5 * l(d, c, i, j) * u(o + d, o + c, o + a, o + b);
              for (int k = 0; k < N; ++k)
                for (int m = 0; m < N; ++m) {
                  const cplx tkm = t(k, m, d, c);
                  sab -= 0.5 * l(b, c, i, j) * tkm * u(k, m, o + a, o + d);
                  sab -= 0.5 * l(b, c, k, m) * tkm * u(i, j, o + a, o + d);
                  s0 += 0.25 * l(d, c, i, j) * tkm * u(k, m, o + a, o + b);
                  s0 += 0.25 * l(a, b, k, m) * tkm * u(i, j, o + d, o + c);
                  sij += 0.5 * l(a, b, j, k) * tkm * u(i, m, o + d, o + c);
                  sij += 0.5 * l(d, c, j, k) * tkm * u(i, m, o + a, o + b);
                  sboth -= l(b, c, j, k) * tkm * u(i, m, o + a, o + d);
                }
            }
          }
          r0(a, b, i, j) = s0;
          rab(a, b, i, j) = sab;
          rij(a, b, i, j) = sij;
          rboth(a, b, i, j) = sboth;
        }
  return combine(r0, rab, rij, rboth);
}

MatrixXc density_1b(const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir(), o = N;
  const auto& t = amp.tau;
  const auto& l = amp.lambda;
  MatrixXc rho = MatrixXc::Zero(N + V, N + V);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx s = i == j ? 1.0 : 0.0;
      for (int k = 0; k < N; ++k)
        for (int a = 0; a < V; ++a)
          for (int b = 0; b < V; ++b) s -= 0.5 * l(a, b, k, j) * t(k, i, a, b);
      rho(i, j) = s;
    }
  for (int a = 0; a < V; ++a)
    for (int b = 0; b < V; ++b) {
      cplx s = 0.0;
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          for (int c = 0; c < V; ++c) s += 0.5 * l(a, c, i, j) * t(i, j, b, c);
      rho(o + a, o + b) = s;
    }
  return rho;
}

Tensor4c density_2b(const Amplitudes& amp) {
  const int N = amp.n_occ(), V = amp.n_vir(), L = N + V, o = N;
  const auto& t = amp.tau;
  const auto& l = amp.lambda;
  Tensor4c rho(L, L, L, L);
  auto delta = [](int p, int q) { return p == q ? 1.0 : 0.0; };

  // rho^{kl}_{ij}
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int m = 0; m < N; ++m) {
          auto f = [&](int p, int q, int r, int s) {
            cplx v = 0.0;
            if (p != r) return v;
            for (int n = 0; n < N; ++n)
              for (int c = 0; c < V; ++c)
                for (int d = 0; d < V; ++d) v += 0.5 * l(c, d, s, n) * t(q, n, c, d);
            return v;
          };
          cplx v = delta(i, k) * delta(j, m) - delta(j, k) * delta(i, m);
          v -= f(i, j, k, m) - f(j, i, k, m) - f(i, j, m, k) + f(j, i, m, k);
          for (int c = 0; c < V; ++c)
            for (int d = 0; d < V; ++d) v += 0.5 * l(c, d, k, m) * t(i, j, c, d);
          rho(i, j, k, m) = v;
        }

  // rho^{ab}_{ij}
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          auto g1 = [&](int p, int q, int x, int y) {  // 1/2 l t^{xc}_{pq} t^{yd}_{kl}
            cplx v = 0.0;
            for (int k = 0; k < N; ++k)
              for (int m = 0; m < N; ++m)
                for (int c = 0; c < V; ++c)
                  for (int d = 0; d < V; ++d) v += 0.5 * l(c, d, k, m) * t(p, q, x, c) * t(k, m, y, d);
            return v;
          };
          auto g2 = [&](int p, int q, int x, int y) {
            cplx v = 0.0;
            for (int k = 0; k < N; ++k)
              for (int m = 0; m < N; ++m)
                for (int c = 0; c < V; ++c)
                  for (int d = 0; d < V; ++d)
                    v += l(c, d, k, m) * t(p, k, x, c) * t(q, m, y, d) +
                         0.5 * l(c, d, k, m) * t(p, m, x, y) * t(q, k, c, d);
            return v;
          };
          cplx v = t(i, j, a, b);
          v -= g1(i, j, a, b) - g1(i, j, b, a);
          v += g2(i, j, a, b) - g2(j, i, a, b);
          for (int k = 0; k < N; ++k)
            for (int m = 0; m < N; ++m)
              for (int c = 0; c < V; ++c)
                for (int d = 0; d < V; ++d) v += 0.25 * l(c, d, k, m) * t(k, m, a, b) * t(i, j, c, d);
          rho(i, j, o + a, o + b) = v;
          rho(o + a, o + b, i, j) = l(a, b, i, j);
        }

  // rho^{jb}_{ia} and aliases
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          cplx v = 0.0;
          for (int c = 0; c < V; ++c) {
            for (int k = 0; k < N; ++k) {
              v -= l(a, c, j, k) * t(i, k, b, c);
              for (int m = 0; m < N; ++m) v += 0.5 * delta(i, j) * l(a, c, k, m) * t(k, m, b, c);
            }
          }
          rho(i, o + a, j, o + b) = v;
          rho(i, o + a, o + b, j) = -v;
          rho(o + a, i, j, o + b) = -v;
          rho(o + a, i, o + b, j) = v;
        }

  for (int a = 0; a < V; ++a)
    for (int b = 0; b < V; ++b)
      for (int c = 0; c < V; ++c)
        for (int d = 0; d < V; ++d) {
          cplx v = 0.0;
          for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) v += 0.5 * l(a, b, i, j) * t(i, j, c, d);
          rho(o + a, o + b, o + c, o + d) = v;
        }
  return rho;
}

}  // namespace naive

// ---------------------------------------------------------------------------

namespace {

// Pulay extrapolation over flattened (amplitude, residual) histories.
class Diis {
 public:
  explicit Diis(int size) : size_(size) {}

  Eigen::VectorXcd extrapolate(const Eigen::VectorXcd& x, const Eigen::VectorXcd& r) {
    if (size_ < 2) return x;
    xs_.push_back(x);
    rs_.push_back(r);
    if (static_cast<int>(xs_.size()) > size_) {
      xs_.pop_front();
      rs_.pop_front();
    }
    const int m = static_cast<int>(xs_.size());
    if (m < 2) return x;
    MatrixXc B = MatrixXc::Zero(m + 1, m + 1);
    VectorXc rhs = VectorXc::Zero(m + 1);
    for (int p = 0; p < m; ++p) {
      for (int q = 0; q < m; ++q) B(p, q) = rs_[p].dot(rs_[q]);
      B(p, m) = B(m, p) = -1.0;
    }
    rhs[m] = -1.0;
    Eigen::ColPivHouseholderQR<MatrixXc> qr(B);
    if (qr.rank() < m + 1) {
      xs_.clear();
      rs_.clear();
      return x;
    }
    const VectorXc c = qr.solve(rhs);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(x.size());
    for (int p = 0; p < m; ++p) out += c[p] * xs_[p];
    return out;
  }

 private:
  int size_;
  std::deque<Eigen::VectorXcd> xs_, rs_;
};

}  // namespace

GroundSolveResult ccd_ground_solve(const MatrixXc& h, const Tensor4c& u, int n_occ,
                                   const GroundSolveOptions& opt) {
  const int L = static_cast<int>(h.rows());
  const int N = n_occ, V = L - n_occ, o = N;
  if (N < 1 || V < 1) throw std::invalid_argument("ground solve needs occupied and virtual orbitals");
  GroundSolveResult res;
  res.amp = Amplitudes::zero(N, V);
  check_shapes(h, u, res.amp);

  Eigen::VectorXcd f = h.diagonal();
  for (int p = 0; p < L; ++p)
    for (int k = 0; k < N; ++k) f[p] += u(p, k, p, k);
  Tensor4c D(N, N, V, V);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
          cplx d = f[o + a] + f[o + b] - f[i] - f[j];
          if (std::abs(d) < 1e-8) d = 1e-8;
          D(i, j, a, b) = d;
        }

  const double step = 1.0 - opt.damping;
  Diis diis(opt.diis_size);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    Tensor4c R = tau_rhs(h, u, res.amp);
    res.tau_residual = R.max_abs();
    if (res.tau_residual < opt.tol) break;
    Tensor4c next = res.amp.tau;
    next.flat() -= step * R.flat().cwiseQuotient(D.flat());
    next.flat() = diis.extrapolate(next.flat(), R.flat());
    res.amp.tau = antisymmetrize(next);
  }
  const bool tau_ok = res.tau_residual < opt.tol;

  Diis diis_l(opt.diis_size);
  Tensor4c Dl(V, V, N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) Dl(a, b, i, j) = D(i, j, a, b);
  int itl = 0;
  for (; itl < opt.max_iter; ++itl) {
    Tensor4c R = lambda_rhs(h, u, res.amp);
    res.lambda_residual = R.max_abs();
    if (res.lambda_residual < opt.tol) break;
    Tensor4c next = res.amp.lambda;
    next.flat() -= step * R.flat().cwiseQuotient(Dl.flat());
    next.flat() = diis_l.extrapolate(next.flat(), R.flat());
    res.amp.lambda = antisymmetrize(next);
  }
  res.iterations = it + itl;
  res.converged = tau_ok && res.lambda_residual < opt.tol;
  res.energy = ccd_energy(h, u, res.amp);
  return res;
}

}  // namespace oatdcc
