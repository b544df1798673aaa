#include "netheat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netheat/error.hpp"

namespace netheat {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double mnorm(const SparseMatrix& m, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(m * v))); }

// <u, e1>_M with e1 = 1/sqrt(m): (1/sqrt(m)) 1^T M u, using M 1 once.
struct MassPairing {
  Vector m_one;
  double inv_sqrt_m;

  explicit MassPairing(const SymmetricMatrix& M)
      : m_one(M.sparse() * Vector::Ones(static_cast<Eigen::Index>(M.dimension()))),
        inv_sqrt_m(1.0 / std::sqrt(m_one.sum())) {}

  double operator()(const Vector& u) const { return inv_sqrt_m * m_one.dot(u); }
};

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return out;
}

GronwallReport compare(const Decomposition& dec, std::vector<double> bound, double rate, double eps) {
  GronwallReport rep;
  rep.rate = rate;
  rep.epsilon = eps;
  const double slack = 1e3 * kEps * (dec.total_norm.empty() ? 0.0 : dec.total_norm.front());
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dec.times.size(); ++i) {
    const double n = dec.utilde_norm[i];
    const double margin = bound[i] + slack - n;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (bound[i] > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, n / bound[i]);
    if (margin < 0.0) {
      ++rep.violations;
      if (!rep.first_violation) rep.first_violation = dec.times[i];
    }
  }
  rep.satisfied = rep.violations == 0;
  rep.bound = std::move(bound);
  return rep;
}

}  // namespace

double MassSeries::relative_drift() const {
  if (values.empty()) return 0.0;
  double worst = 0.0;
  for (double v : values) worst = std::max(worst, std::abs(v - values.front()));
  const double ref = std::abs(values.front());
  return ref > 0.0 ? worst / ref : worst;
}

double MassSeries::oscillation(double a, double b) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < a || times[i] > b) continue;
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  if (hi < lo) throw Error(ErrorKind::insufficient_data, "oscillation: no samples in window");
  return hi - lo;
}

MassSeries mass_series(const Trajectory& traj, const SymmetricMatrix& M) {
  const MassPairing pair(M);
  MassSeries s;
  s.times = traj.times;
  s.values.reserve(traj.states.size());
  for (const auto& u : traj.states) s.values.push_back(pair(u));
  return s;
}

Decomposition decompose(const Trajectory& traj, const SymmetricMatrix& M) {
  const MassPairing pair(M);
  const auto n = static_cast<Eigen::Index>(M.dimension());
  Decomposition d;
  d.times = traj.times;
  for (const auto& u : traj.states) {
    const double mass = pair(u);
    Vector u1 = Vector::Constant(n, mass * pair.inv_sqrt_m);
    Vector ut = u - u1;
    // A constant state splits exactly.
    if ((u.array() == u[0]).all()) {
      u1 = u;
      ut.setZero();
    }
    d.mass.push_back(mass);
    d.utilde_norm.push_back(mnorm(M.sparse(), ut));
    d.total_norm.push_back(mnorm(M.sparse(), u));
    d.u1.push_back(std::move(u1));
    d.utilde.push_back(std::move(ut));
  }
  return d;
}

DecayReport fit_decay_rate(const Decomposition& dec, const RegimeClass& regime, double lambda2_lower,
                           double beta, std::optional<FitWindow> window) {
  if (dec.times.empty()) throw Error(ErrorKind::insufficient_data, "fit_decay_rate: empty decomposition");
  const double floor = 1e3 * kEps * dec.total_norm.front();

  std::vector<std::size_t> idx;
  if (window) {
    if (!(window->t_a < window->t_b) || window->t_a < dec.times.front() || window->t_b > dec.times.back())
      throw Error(ErrorKind::invalid_argument, "fit_decay_rate: window outside the trajectory");
    for (std::size_t i = 0; i < dec.times.size(); ++i)
      if (dec.times[i] >= window->t_a && dec.times[i] <= window->t_b && dec.utilde_norm[i] > floor)
        idx.push_back(i);
  } else {
    std::size_t above = 0;
    while (above < dec.times.size() && dec.utilde_norm[above] > floor) ++above;
    for (std::size_t i = above / 2; i < above; ++i) idx.push_back(i);
  }
  if (idx.size() < 10)
    throw Error(ErrorKind::insufficient_data,
                "fit_decay_rate: fewer than 10 samples above the noise floor (norms below floor)");

  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i : idx) {
    const double t = dec.times[i];
    const double y = std::log(dec.utilde_norm[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = static_cast<double>(idx.size());
  const double slope = (n * sty - st * sy) / (n * stt - st * st);

  DecayReport rep;
  rep.fitted_rate = -slope;
  rep.epsilon = 0.01 * lambda2_lower;
  switch (regime.regime) {
    case Regime::b_identity: rep.predicted_rate = lambda2_lower - rep.epsilon; break;
    case Regime::b_nonincreasing: rep.predicted_rate = (lambda2_lower - rep.epsilon) * beta; break;
    case Regime::b_growth:
      rep.predicted_rate = (lambda2_lower - regime.growth_rate - rep.epsilon) * beta;
      break;
    case Regime::general: rep.predicted_rate = 0.0; break;
  }
  rep.bound_satisfied = rep.fitted_rate >= rep.predicted_rate * (1.0 - rep.fit_tolerance);
  rep.window = {dec.times[idx.front()], dec.times[idx.back()]};
  rep.samples = idx.size();
  return rep;
}

GronwallReport check_gronwall_bound(const Decomposition& dec, const RegimeClass& regime,
                                    const BoundsCertificate& cert, const SpectralTrack& track,
                                    std::span<const double> f_norms) {
  const double lambda2 = track.lambda2_lower;
  const double eps = 0.01 * lambda2;
  if (regime.regime == Regime::general) {
    GronwallReport rep;
    rep.applicable = false;
    rep.epsilon = eps;
    return rep;
  }
  if (dec.times.empty()) throw Error(ErrorKind::insufficient_data, "check_gronwall_bound: empty decomposition");
  if (!f_norms.empty() && f_norms.size() != dec.times.size())
    throw Error(ErrorKind::invalid_argument, "check_gronwall_bound: F norms and samples differ in length");

  std::vector<double> f2(dec.times.size(), 0.0);
  for (std::size_t i = 0; i < f_norms.size(); ++i) f2[i] = f_norms[i] * f_norms[i];
  const auto integral = cumulative_trapezoid(dec.times, f2);

  const double beta = cert.beta;
  const double u0 = dec.total_norm.front();
  const double ut0 = dec.utilde_norm.front();
  double rate = 0.0;
  std::vector<double> bound(dec.times.size());
  for (std::size_t i = 0; i < dec.times.size(); ++i) {
    const double t = dec.times[i];
    double pre = 0.0;
    switch (regime.regime) {
      case Regime::b_identity:
        rate = lambda2 - eps;
        pre = ut0 * ut0 + integral[i] / (2.0 * eps);
        break;
      case Regime::b_nonincreasing:
        rate = (lambda2 - eps) / beta;
        pre = u0 * u0 / (beta * beta) + integral[i] / (2.0 * eps * beta);
        break;
      case Regime::b_growth:
        rate = (lambda2 - regime.growth_rate - eps) * beta;
        pre = u0 * u0 / (beta * beta) + integral[i] / (2.0 * eps * beta);
        break;
      case Regime::general: break;
    }
    bound[i] = std::sqrt(pre) * std::exp(-t * rate);
  }
  return compare(dec, std::move(bound), rate, eps);
}

GronwallReport check_weighted_energy_bound(const Decomposition& dec, const RegimeClass& regime,
                                           const BoundsCertificate& cert, const SpectralTrack& track,
                                           const SymmetricMatrix& weighted_mass0) {
  const double lambda2 = track.lambda2_lower;
  const double eps = 0.01 * lambda2;
  if (dec.times.empty())
    throw Error(ErrorKind::insufficient_data, "check_weighted_energy_bound: empty decomposition");
  const SparseMatrix& mb = weighted_mass0.sparse();
  const Vector u0 = dec.u1.front() + dec.utilde.front();
  const Vector mb_one = mb * Vector::Ones(u0.size());
  const Vector w = u0.array() - mb_one.dot(u0) / mb_one.sum();
  const double energy = std::max(0.0, w.dot(mb * w));

  const double beta = cert.beta;
  const double c = regime.regime == Regime::general ? std::numeric_limits<double>::infinity()
                                                    : std::max(0.0, regime.growth_rate);
  const double rate = beta * beta * (lambda2 - eps) - c;
  std::vector<double> bound(dec.times.size());
  for (std::size_t i = 0; i < dec.times.size(); ++i)
    bound[i] = std::sqrt(energy) / beta * std::exp(-dec.times[i] * rate);
  GronwallReport rep = compare(dec, std::move(bound), rate, eps);
  rep.applicable = regime.regime != Regime::general;
  return rep;
}

std::vector<double> weighted_norm_series(const Trajectory& traj, const AssembledSystem& system,
                                         bool lumped) {
  std::vector<double> out;
  out.reserve(traj.states.size());
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto mb = assemble_weighted_mass(system.mesh(), system.coefficients(), traj.times[i], lumped);
    out.push_back(traj.states[i].dot(mb.sparse() * traj.states[i]));
  }
  return out;
}

PositivityReport positivity_monitor(const Trajectory& traj, double ptol) {
  PositivityReport rep{std::numeric_limits<double>::infinity(), 0.0, 0, false};
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    Eigen::Index at = 0;
    const double v = traj.states[i].minCoeff(&at);
    if (v < rep.min_value) {
      rep.min_value = v;
      rep.time_at_min = traj.times[i];
      rep.dof_at_min = static_cast<std::size_t>(at);
    }
  }
  rep.negative = rep.min_value < -ptol;
  return rep;
}

EquilibriumReport equilibrium_limit(const Trajectory& traj, const AssembledSystem& system,
                                    const SourceFunction& source, double tail_tol) {
  if (traj.states.empty()) throw Error(ErrorKind::insufficient_data, "equilibrium_limit: empty trajectory");
  const MassPairing pair(system.mass());
  std::vector<double> g(traj.times.size(), 0.0);
  if (source) {
    const double inv_sqrt_m = pair.inv_sqrt_m;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      g[i] = inv_sqrt_m * system.load(source, traj.times[i]).sum();
  }
  const auto cumulative = cumulative_trapezoid(traj.times, g);
  const double f_inf = cumulative.back();

  const double t_end = traj.times.back();
  std::size_t q = 0;
  while (q + 1 < traj.times.size() && traj.times[q] < 0.75 * t_end) ++q;
  const double tail = std::abs(cumulative.back() - cumulative[q]);
  if (tail > tail_tol * std::max(1.0, std::abs(f_inf)))
    throw Error(ErrorKind::no_convergence,
                "equilibrium_limit: forcing integral has not converged on the horizon");

  EquilibriumReport rep;
  rep.initial_mass = pair(traj.states.front());
  rep.f_infinity = f_inf;
  rep.predicted = rep.initial_mass + f_inf;
  rep.final_mass = pair(traj.states.back());
  rep.mass_residual = std::abs(rep.final_mass - rep.predicted);
  const Vector target = Vector::Constant(traj.states.back().size(), rep.predicted * pair.inv_sqrt_m);
  rep.state_residual = mnorm(system.mass().sparse(), traj.states.back() - target);
  return rep;
}

}  // namespace netheat
