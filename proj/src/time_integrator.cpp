#include "netheat/time_integrator.hpp"

#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "netheat/error.hpp"
#include "parallel.hpp"

namespace netheat {

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorKind::invalid_argument, "solver.dt must be positive");
  if (!(t_end >= dt)) throw Error(ErrorKind::invalid_argument, "solver.t_end must be >= dt");
  if (!(theta >= 0.5 && theta <= 1.0))
    throw Error(ErrorKind::invalid_argument, "solver.theta must lie in [0.5, 1]");
  if (!(linear_tol > 0.0)) throw Error(ErrorKind::invalid_argument, "solver.linear_tol must be positive");
  if (output_stride < 1) throw Error(ErrorKind::invalid_argument, "solver.output_stride must be >= 1");
}

ThetaStepper::ThetaStepper(const AssembledSystem& system, SolverConfig config, SourceFunction source)
    : system_(system),
      config_(config),
      source_(std::move(source)),
      autonomous_(system.coefficients().time_independent()) {
  config_.validate();
  if (autonomous_) {
    mb_const_ = assemble_weighted_mass(system_.mesh(), system_.coefficients(), 0.0, config_.lumped).sparse();
    k_const_ = system_.stiffness(0.0).sparse();
  }
}

void ThetaStepper::factorize(Factor& f, const SparseMatrix& a) {
  f.a = a;
  if (!pattern_ready_ || &f != &scratch_) {
    f.ldlt.analyzePattern(f.a);
    if (&f == &scratch_) pattern_ready_ = true;
  }
  f.ldlt.factorize(f.a);
  f.ok = f.ldlt.info() == Eigen::Success && (f.ldlt.vectorD().array() > 0.0).all();
}

Vector ThetaStepper::solve(const Factor& f, const Vector& rhs, StepDiagnostics& diag) const {
  const double scale = rhs.norm();
  if (scale == 0.0) {
    diag.residual = 0.0;
    return Vector::Zero(rhs.size());
  }
  Vector x = Vector::Zero(rhs.size());
  double rel = 1.0;
  if (f.ok) {
    x = f.ldlt.solve(rhs);
    Vector r = rhs - f.a * x;
    rel = r.norm() / scale;
    for (std::size_t i = 0; i < 3 && rel > config_.linear_tol; ++i) {
      x += f.ldlt.solve(r);
      r = rhs - f.a * x;
      rel = r.norm() / scale;
      ++diag.refinements;
    }
  }
  if (!f.ok || !(rel <= config_.linear_tol)) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(config_.linear_tol);
    cg.setMaxIterations(10 * rhs.size() + 100);
    cg.compute(f.a);
    x = cg.solveWithGuess(rhs, x);
    diag.cg_iterations = static_cast<std::size_t>(cg.iterations());
    rel = (rhs - f.a * x).norm() / scale;
    if (cg.info() != Eigen::Success && !(rel <= 10.0 * config_.linear_tol))
      throw Error(ErrorKind::solve_failure,
                  "step: SPD solve failed (relative residual " + std::to_string(rel) + ")");
  }
  diag.residual = rel;
  return x;
}

Vector ThetaStepper::advance(const Vector& u, double t, double dt, StepDiagnostics* diag_out) {
  const double theta = config_.theta;
  const double t1 = t + dt;
  StepDiagnostics diag;
  diag.t = t1;

  // Solve for x = u+ - c 1 with c = min(u); K 1 = 0 makes this exact.
  const double shift = u.minCoeff();
  const Vector v = u.array() - shift;

  SparseMatrix mb;
  const Factor* factor = nullptr;
  if (autonomous_) {
    mb = *mb_const_;
    auto [it, inserted] = cache_.try_emplace(dt);
    if (inserted) factorize(it->second, *mb_const_ + (theta * dt) * *k_const_);
    factor = &it->second;
  } else {
    mb = assemble_weighted_mass(system_.mesh(), system_.coefficients(), t1, config_.lumped).sparse();
    factorize(scratch_, mb + (theta * dt) * system_.stiffness(t1).sparse());
    factor = &scratch_;
  }

  Vector rhs = mb * v;
  if (theta < 1.0) rhs -= ((1.0 - theta) * dt) * system_.apply_stiffness(t, v);
  if (source_) {
    Vector f = theta * system_.load(source_, t1);
    if (theta < 1.0) f += (1.0 - theta) * system_.load(source_, t);
    rhs += dt * f;
  }

  Vector next = solve(*factor, rhs, diag);
  next.array() += shift;
  if (!next.allFinite())
    throw Error(ErrorKind::non_finite, "step: non-finite state at t=" + std::to_string(t1));
  if (diag_out) *diag_out = diag;
  return next;
}

Vector step(const Vector& u_n, double t_n, const SolverConfig& config, const AssembledSystem& system,
            const SourceFunction& source) {
  if (static_cast<std::size_t>(u_n.size()) != system.dimension())
    throw Error(ErrorKind::invalid_argument, "step: state has wrong dimension");
  SolverConfig cfg = config;
  cfg.t_end = std::max(cfg.t_end, cfg.dt);
  ThetaStepper stepper(system, cfg, source);
  return stepper.advance(u_n, t_n, config.dt);
}

Trajectory simulate(const Vector& u0, const SourceFunction& source, const SolverConfig& config,
                    const AssembledSystem& system) {
  config.validate();
  if (static_cast<std::size_t>(u0.size()) != system.dimension())
    throw Error(ErrorKind::invalid_argument, "simulate: initial state has wrong dimension");
  if (!u0.allFinite()) throw Error(ErrorKind::non_finite, "simulate: initial state is not finite");

  ThetaStepper stepper(system, config, source);
  const auto steps = static_cast<std::size_t>(std::ceil(config.t_end / config.dt - 1e-9));

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(u0);
  traj.diagnostics.reserve(steps);

  Vector u = u0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * config.dt;
    const double t1 = n + 1 == steps ? config.t_end : static_cast<double>(n + 1) * config.dt;
    StepDiagnostics diag;
    u = stepper.advance(u, t, t1 - t, &diag);
    diag.t = t1;
    traj.diagnostics.push_back(diag);
    if ((n + 1) % config.output_stride == 0 || n + 1 == steps) {
      traj.times.push_back(t1);
      traj.states.push_back(u);
    }
  }
  return traj;
}

TemporalConvergence convergence_study(const Vector& u0, const SourceFunction& source,
                                      const AssembledSystem& system, const SolverConfig& base,
                                      std::span<const double> dts, double t_end,
                                      const std::optional<Vector>& exact) {
  if (dts.size() < 3) throw Error(ErrorKind::insufficient_data, "convergence_study: need at least 3 step sizes");
  for (std::size_t i = 0; i + 1 < dts.size(); ++i)
    if (std::abs(dts[i] / dts[i + 1] - 2.0) > 1e-9)
      throw Error(ErrorKind::invalid_argument, "convergence_study: step sizes must halve");

  std::vector<Vector> finals(dts.size());
  detail::parallel_for(dts.size(), [&](std::size_t i) {
    SolverConfig cfg = base;
    cfg.dt = dts[i];
    cfg.t_end = t_end;
    cfg.output_stride = static_cast<std::size_t>(1) << 30;
    finals[i] = simulate(u0, source, cfg, system).states.back();
  });

  const SparseMatrix& m = system.mass().sparse();
  auto mnorm = [&](const Vector& v) { return std::sqrt(v.dot(m * v)); };

  TemporalConvergence out;
  out.dts.assign(dts.begin(), dts.end());
  out.exact_reference = exact.has_value();
  if (exact) {
    for (const auto& f : finals) out.errors.push_back(mnorm(f - *exact));
  } else {
    for (std::size_t i = 0; i + 1 < finals.size(); ++i) out.errors.push_back(mnorm(finals[i] - finals[i + 1]));
  }
  for (std::size_t i = 0; i + 1 < out.errors.size(); ++i)
    out.orders.push_back(std::log2(out.errors[i] / out.errors[i + 1]));
  out.observed_order = out.orders.back();
  return out;
}

}  // namespace netheat
