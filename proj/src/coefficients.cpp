#include "netheat/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netheat/error.hpp"

namespace netheat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A profile restricted to [0, horizon] is a sequence of pieces on each of
// which it is either linear or a single exponential, hence monotone.
struct LinearPiece {
  double t0, t1;
  double v0;  // value at t0
  double slope;

  double at(double t) const {
    if (slope == 0.0) return v0;
    if (std::isinf(t)) return slope > 0 ? kInf : -kInf;
    return v0 + slope * (t - t0);
  }
};

struct ExpPiece {
  double t0, t1;
  double a, b, rate;

  double at(double t) const { return std::isinf(t) ? a : a + b * std::exp(-rate * t); }
};

using Piece = std::variant<LinearPiece, ExpPiece>;

double piece_start(const Piece& p) {
  return std::visit([](const auto& q) { return q.t0; }, p);
}
double piece_end(const Piece& p) {
  return std::visit([](const auto& q) { return q.t1; }, p);
}
double piece_at(const Piece& p, double t) {
  return std::visit([t](const auto& q) { return q.at(t); }, p);
}

void push_linear(std::vector<Piece>& out, double t0, double t1, double v0, double slope,
                 double horizon) {
  t0 = std::max(t0, 0.0);
  t1 = std::min(t1, horizon);
  if (!(t1 > t0) && !(t0 == 0.0 && t1 == 0.0 && out.empty())) return;
  out.push_back(LinearPiece{t0, t1, v0, slope});
}

struct PieceBuilder {
  double horizon;
  std::vector<Piece> out;

  void operator()(const CoefficientProfile::Constant& k) {
    push_linear(out, 0.0, horizon, k.value, 0.0, horizon);
  }

  void operator()(const CoefficientProfile::Affine& k) {
    if (k.slope == 0.0) {
      push_linear(out, 0.0, horizon, std::clamp(k.v0, k.lo, k.hi), 0.0, horizon);
      return;
    }
    // Times at which the unclamped line reaches lo and hi.
    const double t_lo = std::isinf(k.lo) ? (k.slope > 0 ? -kInf : kInf) : (k.lo - k.v0) / k.slope;
    const double t_hi = std::isinf(k.hi) ? (k.slope > 0 ? kInf : -kInf) : (k.hi - k.v0) / k.slope;
    const double enter = std::min(t_lo, t_hi);
    const double leave = std::max(t_lo, t_hi);
    const double before = k.slope > 0 ? k.lo : k.hi;
    const double after = k.slope > 0 ? k.hi : k.lo;
    if (enter > 0.0) push_linear(out, 0.0, enter, before, 0.0, horizon);
    if (leave > 0.0) {
      const double s = std::max(enter, 0.0);
      push_linear(out, s, leave, k.v0 + k.slope * s, k.slope, horizon);
    }
    if (!std::isinf(leave)) push_linear(out, std::max(leave, 0.0), horizon, after, 0.0, horizon);
  }

  void operator()(const CoefficientProfile::PiecewiseLinear& k) {
    const auto& t = k.times;
    const auto& v = k.values;
    if (t.front() > 0.0) push_linear(out, 0.0, t.front(), v.front(), 0.0, horizon);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if (t[i + 1] <= 0.0) continue;
      const double slope = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
      const double s = std::max(t[i], 0.0);
      push_linear(out, s, t[i + 1], v[i] + slope * (s - t[i]), slope, horizon);
    }
    push_linear(out, std::max(t.back(), 0.0), horizon, v.back(), 0.0, horizon);
  }

  void operator()(const CoefficientProfile::ExpApproach& k) {
    out.push_back(ExpPiece{0.0, horizon, k.a, k.b, k.rate});
  }
};

std::vector<Piece> pieces(const CoefficientProfile& p, double horizon) {
  if (!(horizon >= 0.0)) throw Error(ErrorKind::invalid_argument, "horizon must be >= 0");
  PieceBuilder builder{horizon, {}};
  std::visit(builder, p.kind());
  return std::move(builder.out);
}

// p'/p on a piece is monotone, so its extremes sit at the piece ends.
double log_derivative_at(const Piece& piece, double t) {
  if (const auto* lin = std::get_if<LinearPiece>(&piece)) {
    if (lin->slope == 0.0 || std::isinf(t)) return 0.0;
    return lin->slope / lin->at(t);
  }
  const auto& e = std::get<ExpPiece>(piece);
  if (e.b == 0.0) return 0.0;
  if (e.a == 0.0) return -e.rate;
  if (std::isinf(t)) return 0.0;
  const double s = std::exp(-e.rate * t);
  return -e.b * e.rate * s / (e.a + e.b * s);
}

// First time in the piece at which the value leaves [lo, hi].
std::optional<double> piece_exit(const Piece& piece, double lo, double hi) {
  const double t0 = piece_start(piece);
  const double t1 = piece_end(piece);
  const double v0 = piece_at(piece, t0);
  const double v1 = piece_at(piece, t1);
  if (v0 < lo || v0 > hi) return t0;
  if (v1 >= lo && v1 <= hi) return std::nullopt;
  const double target = v1 < lo ? lo : hi;
  if (const auto* lin = std::get_if<LinearPiece>(&piece)) {
    return lin->t0 + (target - lin->v0) / lin->slope;
  }
  const auto& e = std::get<ExpPiece>(piece);
  return -std::log((target - e.a) / e.b) / e.rate;
}

}  // namespace

CoefficientProfile::CoefficientProfile(Kind kind) : kind_(std::move(kind)) {
  if (const auto* a = std::get_if<Affine>(&kind_)) {
    if (!(a->lo <= a->hi)) throw Error(ErrorKind::invalid_argument, "affine profile: lo > hi");
    if (!std::isfinite(a->v0) || !std::isfinite(a->slope))
      throw Error(ErrorKind::invalid_argument, "affine profile: non-finite parameters");
  } else if (const auto* p = std::get_if<PiecewiseLinear>(&kind_)) {
    if (p->times.empty() || p->times.size() != p->values.size())
      throw Error(ErrorKind::invalid_argument,
                  "piecewise_linear profile: need matching nonempty times and values");
    for (std::size_t i = 0; i + 1 < p->times.size(); ++i)
      if (!(p->times[i] < p->times[i + 1]))
        throw Error(ErrorKind::invalid_argument,
                    "piecewise_linear profile: sample times must be strictly increasing");
  } else if (const auto* e = std::get_if<ExpApproach>(&kind_)) {
    if (!(e->rate > 0.0))
      throw Error(ErrorKind::invalid_argument, "exp_approach profile: rate must be positive");
  }
}

CoefficientProfile CoefficientProfile::affine(double v0, double slope, double lo, double hi) {
  return CoefficientProfile(Affine{v0, slope, lo, hi});
}

CoefficientProfile CoefficientProfile::piecewise_linear(std::vector<double> times,
                                                        std::vector<double> values) {
  return CoefficientProfile(PiecewiseLinear{std::move(times), std::move(values)});
}

CoefficientProfile CoefficientProfile::exp_approach(double a, double b, double rate) {
  return CoefficientProfile(ExpApproach{a, b, rate});
}

double CoefficientProfile::eval(double t) const {
  if (!(t >= 0.0)) throw Error(ErrorKind::invalid_argument, "profile evaluated at negative time");
  struct Visitor {
    double t;
    double operator()(const Constant& k) const { return k.value; }
    double operator()(const Affine& k) const { return std::clamp(k.v0 + k.slope * t, k.lo, k.hi); }
    double operator()(const PiecewiseLinear& k) const {
      if (t <= k.times.front()) return k.values.front();
      if (t >= k.times.back()) return k.values.back();
      const auto it = std::upper_bound(k.times.begin(), k.times.end(), t);
      const auto i = static_cast<std::size_t>(it - k.times.begin()) - 1;
      const double w = (t - k.times[i]) / (k.times[i + 1] - k.times[i]);
      return (1.0 - w) * k.values[i] + w * k.values[i + 1];
    }
    double operator()(const ExpApproach& k) const { return k.a + k.b * std::exp(-k.rate * t); }
  };
  return std::visit(Visitor{t}, kind_);
}

double CoefficientProfile::lipschitz() const {
  struct Visitor {
    double operator()(const Constant&) const { return 0.0; }
    double operator()(const Affine& k) const { return std::abs(k.slope); }
    double operator()(const PiecewiseLinear& k) const {
      double l = 0.0;
      for (std::size_t i = 0; i + 1 < k.times.size(); ++i)
        l = std::max(l, std::abs((k.values[i + 1] - k.values[i]) / (k.times[i + 1] - k.times[i])));
      return l;
    }
    double operator()(const ExpApproach& k) const { return std::abs(k.b) * k.rate; }
  };
  return std::visit(Visitor{}, kind_);
}

Range CoefficientProfile::range(double horizon) const {
  Range r{kInf, -kInf};
  for (const auto& p : pieces(*this, horizon)) {
    for (double t : {piece_start(p), piece_end(p)}) {
      const double v = piece_at(p, t);
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  return r;
}

Range CoefficientProfile::log_derivative_range(double horizon) const {
  const Range values = range(horizon);
  if (!(values.lo > 0.0))
    throw Error(ErrorKind::invalid_argument, "log-derivative of a profile that is not positive");
  Range r{kInf, -kInf};
  for (const auto& p : pieces(*this, horizon)) {
    for (double t : {piece_start(p), piece_end(p)}) {
      const double g = log_derivative_at(p, t);
      r.lo = std::min(r.lo, g);
      r.hi = std::max(r.hi, g);
    }
  }
  return r;
}

std::optional<double> CoefficientProfile::limit() const {
  struct Visitor {
    std::optional<double> operator()(const Constant& k) const { return k.value; }
    std::optional<double> operator()(const Affine& k) const {
      if (k.slope == 0.0) return std::clamp(k.v0, k.lo, k.hi);
      const double bound = k.slope > 0 ? k.hi : k.lo;
      if (std::isinf(bound)) return std::nullopt;
      return bound;
    }
    std::optional<double> operator()(const PiecewiseLinear& k) const { return k.values.back(); }
    std::optional<double> operator()(const ExpApproach& k) const { return k.a; }
  };
  return std::visit(Visitor{}, kind_);
}

std::optional<double> CoefficientProfile::settle_time(double tol) const {
  if (!limit()) return std::nullopt;
  struct Visitor {
    double tol;
    double operator()(const Constant&) const { return 0.0; }
    double operator()(const Affine& k) const {
      if (k.slope == 0.0) return 0.0;
      const double bound = k.slope > 0 ? k.hi : k.lo;
      return std::max(0.0, (bound - k.v0) / k.slope - tol / std::abs(k.slope));
    }
    double operator()(const PiecewiseLinear& k) const {
      const double last = k.values.back();
      for (std::size_t i = k.times.size() - 1; i-- > 0;) {
        const double ei = k.values[i] - last;
        if (std::abs(ei) <= tol) continue;
        const double ej = k.values[i + 1] - last;
        const double s = (std::abs(ei) - tol) / (std::abs(ei) - std::copysign(1.0, ei) * ej);
        return std::max(0.0, k.times[i] + s * (k.times[i + 1] - k.times[i]));
      }
      return 0.0;
    }
    double operator()(const ExpApproach& k) const {
      if (std::abs(k.b) <= tol) return 0.0;
      return std::log(std::abs(k.b) / tol) / k.rate;
    }
  };
  return std::visit(Visitor{tol}, kind_);
}

std::optional<double> CoefficientProfile::first_exit(double lo, double hi, double horizon) const {
  for (const auto& p : pieces(*this, horizon))
    if (auto t = piece_exit(p, lo, hi)) return t;
  return std::nullopt;
}

void CoefficientSet::check_size(std::size_t edge_count) const {
  if (mu.size() != edge_count || c.size() != edge_count) {
    std::ostringstream os;
    os << "coefficients.length: expected " << edge_count << " edge entries, got mu=" << mu.size()
       << " c=" << c.size();
    throw Error(ErrorKind::invalid_argument, os.str());
  }
}

bool CoefficientSet::time_independent() const {
  auto is_const = [](const CoefficientProfile& p) {
    return std::holds_alternative<CoefficientProfile::Constant>(p.kind());
  };
  return std::all_of(mu.begin(), mu.end(), is_const) && std::all_of(c.begin(), c.end(), is_const);
}

double CoefficientSet::eval_b(EdgeId j, double t) const {
  if (j >= mu.size()) throw Error(ErrorKind::invalid_argument, "eval_b: edge out of range");
  return mu[j].eval(t) / c[j].eval(t);
}

std::optional<CoefficientSet> CoefficientSet::limit_set() const {
  CoefficientSet out;
  for (const auto* src : {&mu, &c}) {
    auto& dst = src == &mu ? out.mu : out.c;
    for (const auto& p : *src) {
      const auto l = p.limit();
      if (!l) return std::nullopt;
      dst.push_back(CoefficientProfile::constant(*l));
    }
  }
  return out;
}

std::optional<double> CoefficientSet::settle_time(double tol) const {
  double t = 0.0;
  for (const auto* src : {&mu, &c}) {
    for (const auto& p : *src) {
      const auto s = p.settle_time(tol);
      if (!s) return std::nullopt;
      t = std::max(t, *s);
    }
  }
  return t;
}

CoefficientSet CoefficientSet::uniform(std::size_t edge_count, double mu, double c) {
  return {std::vector(edge_count, CoefficientProfile::constant(mu)),
          std::vector(edge_count, CoefficientProfile::constant(c))};
}

double BoundsCertificate::max_lipschitz_mu() const {
  double l = 0.0;
  for (double v : lipschitz_mu) l = std::max(l, v);
  return l;
}

BoundsCertificate certify_bounds(const CoefficientSet& set, double epsilon, double horizon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw Error(ErrorKind::invalid_argument, "certify_bounds: epsilon must lie in (0,1)");
  if (set.mu.size() != set.c.size())
    throw Error(ErrorKind::invalid_argument, "certify_bounds: mu and c differ in length");

  const double lo = epsilon;
  const double hi = 1.0 / epsilon;
  BoundsCertificate cert{epsilon, horizon, {}, {}, {}, 1.0};
  double b_min = kInf;
  double b_max = 0.0;
  for (std::size_t j = 0; j < set.mu.size(); ++j) {
    const Range rmu = set.mu[j].range(horizon);
    const Range rc = set.c[j].range(horizon);
    for (const auto& [name, profile, r] :
         {std::tuple{"mu", &set.mu[j], rmu}, std::tuple{"c", &set.c[j], rc}}) {
      if (r.lo >= lo && r.hi <= hi) continue;
      const double t_exit = profile->first_exit(lo, hi, horizon).value_or(0.0);
      const double worst = r.lo < lo ? r.lo : r.hi;
      std::ostringstream os;
      os.precision(17);
      os << "bounds: edge " << j << " " << name << " leaves [" << lo << ", " << hi << "] at t="
         << t_exit << " (extreme value " << worst << " on [0, " << horizon << "])";
      throw Error(ErrorKind::bounds_violation, os.str());
    }
    cert.lipschitz_mu.push_back(set.mu[j].lipschitz());
    cert.lipschitz_b.push_back(set.mu[j].lipschitz() / rc.lo +
                               rmu.hi * set.c[j].lipschitz() / (rc.lo * rc.lo));
    const Range rb = set.mu[j] == set.c[j] ? Range{1.0, 1.0} : Range{rmu.lo / rc.hi, rmu.hi / rc.lo};
    cert.b_range.push_back(rb);
    b_min = std::min(b_min, rb.lo);
    b_max = std::max(b_max, rb.hi);
  }
  cert.beta = std::min({std::sqrt(b_min), 1.0 / std::sqrt(b_max), 1.0 - 1e-9});
  return cert;
}

std::string RegimeClass::name() const {
  switch (regime) {
    case Regime::b_identity: return "b_identity";
    case Regime::b_nonincreasing: return "b_nonincreasing";
    case Regime::b_growth: return "b_growth";
    case Regime::general: return "general";
  }
  return "general";
}

RegimeClass classify_regime(const CoefficientSet& set, double lambda2_lower, double horizon) {
  bool identity = true;
  for (std::size_t j = 0; j < set.mu.size(); ++j) identity = identity && set.mu[j] == set.c[j];
  if (identity) return {Regime::b_identity, 0.0};

  // b'/b = mu'/mu - c'/c, bounded above per edge by sup(mu'/mu) - inf(c'/c).
  double growth = -kInf;
  for (std::size_t j = 0; j < set.mu.size(); ++j) {
    const Range gm = set.mu[j].log_derivative_range(horizon);
    const Range gc = set.c[j].log_derivative_range(horizon);
    growth = std::max(growth, gm.hi - gc.lo);
  }
  const double c = growth / 2.0;
  if (growth <= 0.0) return {Regime::b_nonincreasing, c};
  if (c < lambda2_lower) return {Regime::b_growth, c};
  return {Regime::general, c};
}

}  // namespace netheat
