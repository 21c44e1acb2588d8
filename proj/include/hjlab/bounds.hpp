/// @file bounds.hpp
/// @brief Evaluate the sharp decay estimates against solver trajectories and
///        emit pass/fail audit records with margins.
///
/// Every bound is audited in "magnitude" normal form: `observed` is a
/// nonnegative quantity, `bound_value` is its ceiling, and
///     pass  <=>  margin = bound_value - observed >= -slack * |bound_value|.
/// Lower bounds (time-derivative floors) are folded into this form by
/// reporting the magnitude of the negative part against the floor's
/// magnitude.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjlab/evolve.hpp"
#include "hjlab/field.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

/// Closed-form constants derived from a certificate and growth envelope.
struct DerivedConstants {
  double p = 2.0;
  double a = 1.0;
  double b = 1.0;
  double gamma = 2.0;
  double lambda_p = 1.0;   ///< 1 for p > 1, (2/p)^{1/p} for p < 1
  double mu_p = 0.5;       ///< (p-1) a^{-1/p} / p   (steep regime)
  double g_h = 1.0;
  double kappa_zero = 2.0;
  double kappa_inf = 2.0;
  double sup_phi = 1.0;
  int dim = 1;
  double l_const = 4.0;    ///< prefactor of the t^{-mu} decrease floor
  double dudt_coeff = 2.8284271247461903;  ///< 2^{(p+1)/p} N lambda_p sup_phi^{1/p} a^{-1/p}

  /// Exponent of the decrease floor t^{-mu(t)}: kappa_zero/p for t <= 1,
  /// kappa_inf/p beyond.
  double mu_exponent(double t) const;

  /// Sharpened gradient constant for the smoothed flow; k_eta(0) recovers
  /// mu_p^2 in the steep regime.
  double k_eta(double eta) const;
};

/// All constants of the sup-norm decay theory from (cert, envelope, data).
DerivedConstants derive_constants(const PCertificate& cert,
                                  const GrowthEnvelope& envelope,
                                  double sup_phi, int dim);

/// One audited inequality at one time.
struct BoundReport {
  std::string bound_id;  ///< gradx | gradxind | vdt_upper | dudtpl | dudtmn |
                         ///< t_minus_one | holder_t | ball_mass
  double time = 0.0;
  double observed = 0.0;
  double bound_value = 0.0;
  double margin = 0.0;   ///< bound_value - observed
  bool pass = false;
  std::optional<double> fitted_constant;
};

/// Normal-form constructor: fills margin and pass from the slack rule.
BoundReport make_report(std::string bound_id, double time, double observed,
                        double bound_value, double slack,
                        std::optional<double> fitted = std::nullopt);

/// Default audit slacks: 5% for gradient bounds, 10% for time-derivative
/// bounds (noisier discretization).
inline constexpr double kGradSlack = 0.05;
inline constexpr double kTimeSlack = 0.10;

// ---------------------------------------------------------------------------
// Gradient decay
// ---------------------------------------------------------------------------

/// Per snapshot with time >= t_min:
///  - gradx:    sup |grad v|  vs  lambda_p sup_phi^{1/p} (a t)^{-1/p};
///  - gradxind (steep regime only): sup |grad(v^{(p-1)/p})| vs
///    k_eta(eta)^{1/2} t^{-1/p} — a ceiling with no data-dependent factor
///    (eta = 0 gives mu_p t^{-1/p}); rows beyond the smoothed bound's time
///    horizon are skipped when eta > 0.
/// Node values below 1e-14 contribute zero to the fractional-power field;
/// values below -1e-12 mean the maximum principle was violated upstream and
/// raise std::invalid_argument.
std::vector<BoundReport> check_grad_decay(const Trajectory& traj,
                                          const DerivedConstants& consts,
                                          double slack = kGradSlack,
                                          double t_min = 0.0);

// ---------------------------------------------------------------------------
// Time-derivative envelopes
// ---------------------------------------------------------------------------

/// Forward-differences consecutive snapshots at their midpoint times within
/// [t_min, t_max].  For viscous runs emits per midpoint:
///  - dudtpl: sup (dv/dt)_+        vs  dudt_coeff sqrt(eps) t^{-(p+2)/(2p)};
///  - dudtmn: sup (-dv/dt)_+       vs  l_const t^{-mu(t)} + the same eps term.
/// For inviscid runs the eps term vanishes and the upper row becomes
///  - vdt_upper: sup (dv/dt)_+     vs  1e-10 (pointwise decrease, exact for
///    the monotone scheme up to rounding).
/// Fewer than two snapshots in the window raise std::invalid_argument.
std::vector<BoundReport> check_dt_bounds(const Trajectory& traj,
                                         const DerivedConstants& consts,
                                         double slack = kTimeSlack,
                                         double t_min = 0.0,
                                         double t_max = 1e300);

/// Scaling form of the t^{-1} decrease envelope for single powers: samples
/// the product t * sup |dv/dt| across the branch window (midpoints in
/// [rho, t_end] when p <= 2, in (0, rho] when p >= 2) and requires the
/// max/min ratio of the product to stay below 2.
struct HomogeneityReport {
  std::vector<std::pair<double, double>> samples;  ///< (midpoint t, product)
  double ratio = 0.0;
  BoundReport report;  ///< bound_id t_minus_one, observed = ratio, bound 2
};

HomogeneityReport check_dt_homogeneous(const Trajectory& traj, double rho,
                                       int max_samples = 8);

/// Time modulus at a base time: for each h, observed = sup |v(t+h) - v(t)|
/// against the form h^{1/2} (sqrt(eps) sup_phi^{1/p} t^{-1/p} + H(r_t)) with
/// r_t the gradient-decay radius; the per-h fitted constants must stay within
/// a factor 3 of each other and the log-log slope of observed vs h must reach
/// 1/2.  Snapshots at t and every t+h must exist; h outside (0,1) raises
/// std::domain_error.
struct HolderReport {
  std::vector<double> h_values;
  std::vector<double> observed;
  std::vector<double> fitted_c1;
  double slope = 0.0;
  double c1_ratio = 0.0;
  BoundReport report;  ///< bound_id holder_t, observed = c1 ratio, bound 3
};

HolderReport check_time_holder(const Trajectory& traj,
                               const DerivedConstants& consts, double base_t,
                               const std::vector<double>& h_list);

/// Local mass growth between times s < t: per ball of radius R,
///   observed integral difference  int_{B_R} v(t) - int_{B_{2R}} v(s)
/// is compared to the scaling form (t-s) R^dim (1 + R^{-p/(p-1)}); one fitted
/// constant (the max ratio) must cover every ball below `ceiling`.  Steep
/// regime only.
struct BallMassReport {
  std::vector<BoundReport> rows;  ///< one per ball, fitted_constant shared
  double fitted_c = 0.0;
};

BallMassReport check_ball_mass(const Trajectory& traj,
                               const std::vector<BallSpec>& balls, double s,
                               double t, double ceiling = 10.0);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// CSV columns: bound_id,time,observed,bound_value,margin,pass,fitted_constant.
std::string reports_to_csv(const std::vector<BoundReport>& reports);

/// {n_checks, n_pass, worst_margin}.
nlohmann::json reports_summary(const std::vector<BoundReport>& reports);

}  // namespace hjlab
