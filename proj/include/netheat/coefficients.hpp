#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "netheat/metric_graph.hpp"

namespace netheat {

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();

/// Closed interval of reals; either end may be infinite.
struct Range {
  double lo;
  double hi;
};

/// Time profile of a single coefficient. Only forms whose extrema,
/// Lipschitz constants and logarithmic derivatives are computable in closed
/// form are supported, so every certificate derived from them is exact.
class CoefficientProfile {
 public:
  struct Constant {
    double value;
    bool operator==(const Constant&) const = default;
  };
  /// v0 + slope * t, clamped into [lo, hi] (either bound may be infinite).
  struct Affine {
    double v0;
    double slope;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool operator==(const Affine&) const = default;
  };
  /// Linear interpolation of (t, v) samples with strictly increasing t,
  /// constant extension on both sides.
  struct PiecewiseLinear {
    std::vector<double> times;
    std::vector<double> values;
    bool operator==(const PiecewiseLinear&) const = default;
  };
  /// a + b * exp(-rate * t) with rate > 0.
  struct ExpApproach {
    double a;
    double b;
    double rate;
    bool operator==(const ExpApproach&) const = default;
  };

  using Kind = std::variant<Constant, Affine, PiecewiseLinear, ExpApproach>;

  static CoefficientProfile constant(double value) { return CoefficientProfile(Constant{value}); }
  static CoefficientProfile affine(double v0, double slope,
                                   double lo = -std::numeric_limits<double>::infinity(),
                                   double hi = std::numeric_limits<double>::infinity());
  static CoefficientProfile piecewise_linear(std::vector<double> times, std::vector<double> values);
  static CoefficientProfile exp_approach(double a, double b, double rate);

  explicit CoefficientProfile(Kind kind);

  const Kind& kind() const noexcept { return kind_; }
  bool operator==(const CoefficientProfile&) const = default;

  /// Throws Error(invalid_argument) for t < 0.
  double eval(double t) const;

  /// Lipschitz constant over [0, inf): 0, |slope|, max segment |slope|, |b|*rate.
  double lipschitz() const;

  /// Exact range of values over [0, horizon].
  Range range(double horizon) const;

  /// Exact inf/sup of p'(t)/p(t) over [0, horizon]. Requires the profile to
  /// stay positive on the horizon.
  Range log_derivative_range(double horizon) const;

  /// lim_{t->inf} p(t) if it exists.
  std::optional<double> limit() const;

  /// Earliest time after which |p(t) - limit| <= tol, if the limit exists.
  std::optional<double> settle_time(double tol) const;

  /// First time in [0, horizon] at which the profile leaves [lo, hi].
  std::optional<double> first_exit(double lo, double hi, double horizon) const;

 private:
  Kind kind_;
};

/// Per-edge conductivity factors mu_j(t) and diffusion coefficients c_j(t).
struct CoefficientSet {
  std::vector<CoefficientProfile> mu;
  std::vector<CoefficientProfile> c;

  std::size_t edge_count() const noexcept { return mu.size(); }

  /// Throws unless mu and c both have `edge_count` entries.
  void check_size(std::size_t edge_count) const;

  /// True when every profile is a Constant.
  bool time_independent() const;

  /// b_j(t) = mu_j(t) / c_j(t).
  double eval_b(EdgeId j, double t) const;

  /// Constant profiles holding each coefficient's limit, if all limits exist.
  std::optional<CoefficientSet> limit_set() const;

  /// Latest settle time over all profiles, if all limits exist.
  std::optional<double> settle_time(double tol) const;

  /// Set with every mu_j and c_j constant equal to one.
  static CoefficientSet uniform(std::size_t edge_count, double mu = 1.0, double c = 1.0);
};

/// Certified bounds for a coefficient set over [0, horizon].
struct BoundsCertificate {
  double epsilon;
  double horizon;
  std::vector<double> lipschitz_mu;
  std::vector<double> lipschitz_b;  // upper bound on the Lipschitz constant of b_j
  std::vector<Range> b_range;       // certified enclosure of b_j on the horizon
  double beta;                      // beta^2 <= b_j(t) <= beta^-2, beta in (0,1)

  double max_lipschitz_mu() const;
};

/// Checks eps <= mu_j, c_j <= 1/eps on [0, horizon] and derives the
/// certificate. Throws Error(bounds_violation) naming the edge, coefficient,
/// exit time and extreme value on failure.
BoundsCertificate certify_bounds(const CoefficientSet& set, double epsilon, double horizon);

enum class Regime { b_identity, b_nonincreasing, b_growth, general };

struct RegimeClass {
  Regime regime;
  /// Certified upper bound on sup_t max_j b_j'(t) / (2 b_j(t)); the
  /// growth constant c for Regime::b_growth.
  double growth_rate;

  std::string name() const;
};

/// Strongest regime whose defining inequality holds for every edge over the
/// horizon: b == 1; all b_j nonincreasing; b_j' <= 2 c b_j with
/// c < lambda2_lower; otherwise general.
RegimeClass classify_regime(const CoefficientSet& set, double lambda2_lower, double horizon);

}  // namespace netheat
