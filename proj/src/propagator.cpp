#include "oatdcc/propagator.hpp"

#include <cmath>
#include <stdexcept>

namespace oatdcc {

Model make_model(double half_width, int n_grid, const ModelParams& params, int rank) {
  Model m;
  m.grid = build_grid(half_width, n_grid);
  m.params = params;
  const Eigen::MatrixXd kernel = sample_interaction(m.grid, params);
  const int r = rank < 0 ? select_rank(kernel) : std::min(rank, n_grid);
  if (r > 0) m.lr = decompose_interaction(kernel, r);
  return m;
}

void kinetic_half_step(CCState& s, const GridSpec& grid, double dt) {
  kinetic_propagate(grid, s.orbitals.ket, 0.5 * dt);
  MatrixXc bt = s.orbitals.bra.transpose();
  kinetic_propagate(grid, bt, -0.5 * dt);
  s.orbitals.bra = bt.transpose();
}

void kinetic_half_step(McState& s, const GridSpec& grid, double dt) {
  kinetic_propagate(grid, s.ket, 0.5 * dt);
}

namespace {

bool finite(const MatrixXc& m) { return m.allFinite(); }
bool finite(const VectorXc& v) { return v.allFinite(); }
bool finite(const Tensor4c& t) { return t.flat().allFinite(); }

CCState shifted(const CCState& s, const CCDerivative& d, double h) {
  CCState o = s;
  o.orbitals.ket += h * d.dket;
  o.orbitals.bra += h * d.dbra;
  o.amp.tau += cplx(h) * d.dtau;
  o.amp.lambda += cplx(h) * d.dlambda;
  return o;
}

void fixed_basis_rk4(CCState& s, const Model& model, const OneBodyOperator& op, double dt) {
  const IntegralTables ints = compute_integrals(s.orbitals, op, model.lr);
  auto f = [&](const Amplitudes& a) { return tdcc_fixed_basis_rhs(ints.h, ints.u, a); };
  auto add = [](const Amplitudes& a, const AmplitudeDerivative& d, double h) {
    Amplitudes o = a;
    o.tau += cplx(h) * d.dtau;
    o.lambda += cplx(h) * d.dlambda;
    return o;
  };
  const auto k1 = f(s.amp);
  const auto k2 = f(add(s.amp, k1, 0.5 * dt));
  const auto k3 = f(add(s.amp, k2, 0.5 * dt));
  const auto k4 = f(add(s.amp, k3, dt));
  Amplitudes next = s.amp;
  next.tau += cplx(dt / 6.0) * (k1.dtau + 2.0 * k2.dtau + 2.0 * k3.dtau + k4.dtau);
  next.lambda += cplx(dt / 6.0) * (k1.dlambda + 2.0 * k2.dlambda + 2.0 * k3.dlambda + k4.dlambda);
  if (!finite(next.tau) || !finite(next.lambda))
    throw std::runtime_error("non-finite amplitudes at t = " + std::to_string(s.t));
  s.amp = std::move(next);
}

}  // namespace

void potential_full_step(CCState& s, const Model& model, const OneBodyOperator& op, double dt,
                         MethodKind method, double eps, StepMonitor* mon) {
  if (method == MethodKind::mctdhf) throw std::invalid_argument("MCTDHF uses McState");
  if (method == MethodKind::tdccd_fixed) {
    fixed_basis_rk4(s, model, op, dt);
    return;
  }
  EomDiagnostics diag;
  auto f = [&](const CCState& x, bool record) {
    CCDerivative d = assemble_derivative(x, op, model.lr, eps, record ? &diag : nullptr);
    return d;
  };
  const CCDerivative k1 = f(s, true);
  const CCDerivative k2 = f(shifted(s, k1, 0.5 * dt), false);
  const CCDerivative k3 = f(shifted(s, k2, 0.5 * dt), false);
  const CCDerivative k4 = f(shifted(s, k3, dt), false);

  CCState next = s;
  next.orbitals.ket += (dt / 6.0) * (k1.dket + 2.0 * k2.dket + 2.0 * k3.dket + k4.dket);
  next.orbitals.bra += (dt / 6.0) * (k1.dbra + 2.0 * k2.dbra + 2.0 * k3.dbra + k4.dbra);
  next.amp.tau += cplx(dt / 6.0) * (k1.dtau + 2.0 * k2.dtau + 2.0 * k3.dtau + k4.dtau);
  next.amp.lambda += cplx(dt / 6.0) * (k1.dlambda + 2.0 * k2.dlambda + 2.0 * k3.dlambda + k4.dlambda);
  if (!finite(next.orbitals.ket) || !finite(next.orbitals.bra) || !finite(next.amp.tau) ||
      !finite(next.amp.lambda))
    throw std::runtime_error("non-finite state at t = " + std::to_string(s.t));

  const int L = next.n_orb();
  const double drift = (next.orbitals.overlap() - MatrixXc::Identity(L, L)).cwiseAbs().maxCoeff();
  rebiorthonormalize(next.orbitals);
  s = std::move(next);

  if (mon) {
    mon->max_biorth_drift = std::max(mon->max_biorth_drift, drift);
    mon->max_eta_residual = std::max(mon->max_eta_residual, diag.eta.residual);
    mon->max_eta_condition = std::max(mon->max_eta_condition, diag.eta.condition);
    mon->max_rho_ov = std::max(mon->max_rho_ov, diag.max_rho_ov);
    if (diag.eta.least_squares) ++mon->least_squares_steps;
  }
}

void potential_full_step(McState& s, const Model& model, const OneBodyOperator& op, double dt, double eps) {
  auto f = [&](const McState& x) { return mctdhf_rhs(x, op, model.lr, eps); };
  auto add = [](const McState& x, const McDerivative& d, double h) {
    McState o = x;
    o.ket += h * d.dket;
    o.coeff += h * d.dcoeff;
    return o;
  };
  const McDerivative k1 = f(s);
  const McDerivative k2 = f(add(s, k1, 0.5 * dt));
  const McDerivative k3 = f(add(s, k2, 0.5 * dt));
  const McDerivative k4 = f(add(s, k3, dt));
  McState next = s;
  next.ket += (dt / 6.0) * (k1.dket + 2.0 * k2.dket + 2.0 * k3.dket + k4.dket);
  next.coeff += (dt / 6.0) * (k1.dcoeff + 2.0 * k2.dcoeff + 2.0 * k3.dcoeff + k4.dcoeff);
  if (!finite(next.ket) || !finite(next.coeff))
    throw std::runtime_error("non-finite state at t = " + std::to_string(s.t));
  reorthonormalize(next, false);
  s = std::move(next);
}

void step(CCState& s, const Model& model, MethodKind method, const PropagationOptions& opt,
          StepMonitor* mon) {
  const double dt = opt.dt;
  const int m = std::max(1, opt.potential_substeps);
  CCState work = s;
  if (opt.integrator == Integrator::rk4 || method == MethodKind::tdccd_fixed) {
    const OneBodyOperator op = model.full();
    for (int k = 0; k < m; ++k) potential_full_step(work, model, op, dt / m, method, opt.eps, mon);
  } else {
    const OneBodyOperator op = model.potential_part();
    kinetic_half_step(work, model.grid, dt);
    for (int k = 0; k < m; ++k) potential_full_step(work, model, op, dt / m, method, opt.eps, mon);
    kinetic_half_step(work, model.grid, dt);
  }
  s = std::move(work);
  s.t += dt;
  if (mon) {
    ++mon->steps;
    const int N = s.n_occ();
    const double tr = std::abs(density_1b(s.amp).trace() - cplx(N));
    mon->max_trace_error = std::max(mon->max_trace_error, tr);
  }
}

void step(McState& s, const Model& model, const PropagationOptions& opt) {
  const double dt = opt.dt;
  const int m = std::max(1, opt.potential_substeps);
  McState work = s;
  if (opt.integrator == Integrator::rk4) {
    const OneBodyOperator op = model.full();
    for (int k = 0; k < m; ++k) potential_full_step(work, model, op, dt / m, opt.eps);
  } else {
    const OneBodyOperator op = model.potential_part();
    kinetic_half_step(work, model.grid, dt);
    for (int k = 0; k < m; ++k) potential_full_step(work, model, op, dt / m, opt.eps);
    kinetic_half_step(work, model.grid, dt);
  }
  s = std::move(work);
  s.t += dt;
}

namespace {

VectorXc contract_density(const MatrixXc& rho1, const MatrixXc& bra, const MatrixXc& ket) {
  const MatrixXc kr = ket * rho1.transpose();  // (x,p) = sum_q ket(x,q) rho1(p,q)
  return kr.cwiseProduct(bra.transpose()).rowwise().sum();
}

}  // namespace

VectorXc cc_density(const CCState& s) {
  return contract_density(density_1b(s.amp), s.orbitals.bra, s.orbitals.ket);
}

VectorXc mc_density(const McState& s) {
  const DensityMatrices d = fci_densities(s.space, s.coeff.conjugate(), s.coeff);
  return contract_density(d.rho1, s.ket.adjoint(), s.ket);
}

double imaginary_density_integral(const VectorXc& n, double dx) { return n.imag().cwiseAbs().sum() * dx; }

cplx cc_norm(const CCState& s) {
  const DeterminantSpace space = build_space(s.n_occ(), s.n_orb());
  const VectorXc A = exp_T_apply(space, s.amp.tau);
  const VectorXc dual = dual_cc_vector(space, s.amp.tau, s.amp.lambda);
  return (dual.transpose() * transform_coefficients(space, s.orbitals.overlap(), A))(0, 0);
}

cplx mc_norm(const McState& s) {
  const MatrixXc S = s.ket.adjoint() * s.ket * s.dx;
  return s.coeff.dot(transform_coefficients(s.space, S, s.coeff));
}

ObservableRecord observe(const CCState& s, const Model& model) {
  ObservableRecord r;
  r.t = s.t;
  r.energy = cc_energy(s, model.full(), model.lr);
  r.norm = cc_norm(s);
  r.f = imaginary_density_integral(cc_density(s), model.grid.dx);
  return r;
}

ObservableRecord observe(const McState& s, const Model& model) {
  ObservableRecord r;
  r.t = s.t;
  r.energy = evaluate(s, model.full(), model.lr).energy;
  r.norm = mc_norm(s);
  r.f = imaginary_density_integral(mc_density(s), model.grid.dx);
  return r;
}

namespace {

template <typename State, typename StepFn, typename DensityFn>
Trajectory run_loop(State& s, const Model& model, const PropagationOptions& opt, const RecordCallback& cb,
                    StepFn&& do_step, DensityFn&& density) {
  if (!(opt.dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (opt.stride < 1 || opt.density_stride < 1) throw std::invalid_argument("strides must be >= 1");
  Trajectory tr;
  auto record = [&](const State& x) {
    tr.records.push_back(observe(x, model));
    if (cb) cb(tr.records.back());
  };
  record(s);
  tr.densities.push_back({s.t, density(s)});
  const long n_steps = std::lround((opt.t_final - s.t) / opt.dt);
  long k = 1;
  try {
    for (; k <= n_steps; ++k) {
      do_step(s, tr.monitor);
      if (k % opt.stride == 0) record(s);
      if (k % opt.density_stride == 0) tr.densities.push_back({s.t, density(s)});
    }
  } catch (const std::exception& e) {
    tr.aborted = true;
    tr.error = e.what();
  }
  if (tr.densities.back().t != s.t) tr.densities.push_back({s.t, density(s)});
  if (tr.records.back().t != s.t) record(s);
  return tr;
}

}  // namespace

Trajectory propagate(CCState& s, const Model& model, MethodKind method, const PropagationOptions& opt,
                     const RecordCallback& on_record) {
  return run_loop(
      s, model, opt, on_record, [&](CCState& x, StepMonitor& mon) { step(x, model, method, opt, &mon); },
      [](const CCState& x) { return cc_density(x); });
}

Trajectory propagate(McState& s, const Model& model, const PropagationOptions& opt,
                     const RecordCallback& on_record) {
  return run_loop(
      s, model, opt, on_record,
      [&](McState& x, StepMonitor& mon) {
        step(x, model, opt);
        ++mon.steps;
      },
      [](const McState& x) { return mc_density(x); });
}

}  // namespace oatdcc
