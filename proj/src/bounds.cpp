#include "hjlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hjlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Index of the snapshot whose time matches `t` up to a relative tolerance,
/// or -1 when absent.
int find_snapshot(const Trajectory& traj, double t) {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (std::abs(traj.times[i] - t) <= tol) return static_cast<int>(i);
  }
  return -1;
}

/// sup over nodes of the positive part of (g - f) / dt.
double sup_positive_rate(const Field& f, const Field& g, double dt) {
  double sup = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    sup = std::max(sup, (g.values[k] - f.values[k]) / dt);
  }
  return sup;
}

double governing_p_or_throw(const Trajectory& traj) {
  return governing_exponent(traj.spec);  // throws for the null Hamiltonian
}

}  // namespace

double DerivedConstants::mu_exponent(double t) const {
  return (t <= 1.0 ? kappa_zero : kappa_inf) / p;
}

double DerivedConstants::k_eta(double eta) const {
  if (eta < 0.0) throw std::domain_error("k_eta: eta must be >= 0");
  if (p > 1.0) {
    const double base = 1.0 / a + (p / (2.0 * a)) * std::pow(eta, gamma / 4.0);
    const double ratio = (p - 1.0) / p;
    return std::pow(base, 2.0 / p) * ratio * ratio;
  }
  const double numer = 2.0 + b * p * std::pow(eta, gamma / 4.0);
  const double denom = std::pow(2.0, p / 2.0) * a * p;
  const double data = 2.0 * std::pow(eta, gamma / 2.0) + sup_phi;
  return std::pow(numer / denom, 2.0 / p) *
         std::pow(data, (2.0 - p) / p);
}

DerivedConstants derive_constants(const PCertificate& cert,
                                  const GrowthEnvelope& envelope,
                                  double sup_phi, int dim) {
  if (sup_phi < 0.0) throw std::invalid_argument("sup_phi must be >= 0");
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  DerivedConstants c;
  c.p = cert.p;
  c.a = cert.a;
  c.b = cert.b;
  c.gamma = cert.gamma;
  c.lambda_p = cert.p > 1.0 ? 1.0 : std::pow(2.0 / cert.p, 1.0 / cert.p);
  c.mu_p = cert.p > 1.0
               ? (cert.p - 1.0) * std::pow(cert.a, -1.0 / cert.p) / cert.p
               : 0.0;
  c.g_h = envelope.g_h;
  c.kappa_zero = envelope.kappa_zero;
  c.kappa_inf = envelope.kappa_inf;
  c.sup_phi = sup_phi;
  c.dim = dim;
  const double mass =
      2.0 * std::pow(c.lambda_p, cert.p) * sup_phi / cert.a;
  c.l_const = envelope.g_h * (std::pow(mass, envelope.kappa_zero / cert.p) +
                              std::pow(mass, envelope.kappa_inf / cert.p));
  c.dudt_coeff = std::pow(2.0, (cert.p + 1.0) / cert.p) * dim * c.lambda_p *
                 std::pow(sup_phi, 1.0 / cert.p) *
                 std::pow(cert.a, -1.0 / cert.p);
  return c;
}

BoundReport make_report(std::string bound_id, double time, double observed,
                        double bound_value, double slack,
                        std::optional<double> fitted) {
  BoundReport r;
  r.bound_id = std::move(bound_id);
  r.time = time;
  r.observed = observed;
  r.bound_value = bound_value;
  r.margin = bound_value - observed;
  r.pass = r.margin >= -slack * std::abs(bound_value);
  r.fitted_constant = fitted;
  return r;
}

std::vector<BoundReport> check_grad_decay(const Trajectory& traj,
                                          const DerivedConstants& consts,
                                          double slack, double t_min) {
  const double p = consts.p;
  const double inv_p = 1.0 / p;
  const double eta = traj.config.eta;
  const double horizon =
      (p > 1.0 && eta > 0.0) ? std::pow(eta, -consts.gamma / 4.0) : kInf;
  const double sqrt_k = p > 1.0 ? std::sqrt(consts.k_eta(eta)) : 0.0;
  const double power = (p - 1.0) / p;

  std::vector<BoundReport> out;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t <= 0.0 || t < t_min) continue;
    const Field& v = traj.snapshots[i];

    const double observed = field_max(grad_mag_central(v));
    const double bound = consts.lambda_p * std::pow(consts.sup_phi, inv_p) *
                         std::pow(consts.a * t, -inv_p);
    out.push_back(make_report("gradx", t, observed, bound, slack));

    if (p > 1.0 && t < horizon) {
      Field w = v;
      for (double& x : w.values) {
        if (x < -1e-12) {
          throw std::invalid_argument(
              "check_grad_decay: negative node value; solution must stay "
              "nonnegative for the fractional-power bound");
        }
        x = x < 1e-14 ? 0.0 : std::pow(x, power);
      }
      const double obs_ind = field_max(grad_mag_central(w));
      const double bound_ind = sqrt_k * std::pow(t, -inv_p);
      out.push_back(make_report("gradxind", t, obs_ind, bound_ind, slack));
    }
  }
  return out;
}

std::vector<BoundReport> check_dt_bounds(const Trajectory& traj,
                                         const DerivedConstants& consts,
                                         double slack, double t_min,
                                         double t_max) {
  const double eps = traj.config.epsilon;
  const double p = consts.p;
  const double eps_exponent = -(p + 2.0) / (2.0 * p);

  std::vector<BoundReport> out;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double t0 = traj.times[i];
    const double t1 = traj.times[i + 1];
    const double tm = 0.5 * (t0 + t1);
    if (tm < t_min || tm > t_max) continue;
    const double dt = t1 - t0;
    const Field& f0 = traj.snapshots[i];
    const Field& f1 = traj.snapshots[i + 1];

    const double pos = sup_positive_rate(f0, f1, dt);
    const double neg = sup_positive_rate(f1, f0, dt);
    const double eps_term =
        eps > 0.0
            ? consts.dudt_coeff * std::sqrt(eps) * std::pow(tm, eps_exponent)
            : 0.0;

    if (eps > 0.0) {
      out.push_back(make_report("dudtpl", tm, pos, eps_term, slack));
    } else {
      out.push_back(make_report("vdt_upper", tm, pos, 1e-10, slack));
    }
    const double floor_mag =
        consts.l_const * std::pow(tm, -consts.mu_exponent(tm)) + eps_term;
    out.push_back(make_report("dudtmn", tm, neg, floor_mag, slack));
  }
  if (out.empty()) {
    throw std::invalid_argument(
        "check_dt_bounds: need at least two snapshots inside the window");
  }
  return out;
}

HomogeneityReport check_dt_homogeneous(const Trajectory& traj, double rho,
                                       int max_samples) {
  if (rho <= 0.0) throw std::invalid_argument("rho must be > 0");
  if (spec_kind(traj.spec) != "pure_power") {
    throw std::invalid_argument(
        "check_dt_homogeneous: defined for single-power Hamiltonians only");
  }
  const double p = governing_p_or_throw(traj);

  std::vector<std::size_t> pairs;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double tm = 0.5 * (traj.times[i] + traj.times[i + 1]);
    const bool late = tm >= rho;   // branch for p <= 2
    const bool early = tm <= rho;  // branch for p >= 2
    if ((p <= 2.0 && late) || (p >= 2.0 && early)) pairs.push_back(i);
  }
  if (pairs.size() < 2) {
    throw std::invalid_argument(
        "check_dt_homogeneous: need at least two midpoints in the branch "
        "window");
  }
  if (max_samples >= 2 && static_cast<std::size_t>(max_samples) < pairs.size()) {
    std::vector<std::size_t> strided;
    for (int k = 0; k < max_samples; ++k) {
      const std::size_t idx =
          static_cast<std::size_t>(std::llround(static_cast<double>(k) *
                                                (pairs.size() - 1) /
                                                (max_samples - 1)));
      if (strided.empty() || strided.back() != pairs[idx]) {
        strided.push_back(pairs[idx]);
      }
    }
    pairs = std::move(strided);
  }

  HomogeneityReport rep;
  double lo = kInf, hi = 0.0;
  for (const std::size_t i : pairs) {
    const double t0 = traj.times[i];
    const double t1 = traj.times[i + 1];
    const double tm = 0.5 * (t0 + t1);
    const double dt = t1 - t0;
    double sup_abs = 0.0;
    const Field& f0 = traj.snapshots[i];
    const Field& f1 = traj.snapshots[i + 1];
    for (std::size_t k = 0; k < f0.values.size(); ++k) {
      sup_abs = std::max(sup_abs,
                         std::abs(f1.values[k] - f0.values[k]) / dt);
    }
    const double product = tm * sup_abs;
    rep.samples.emplace_back(tm, product);
    lo = std::min(lo, product);
    hi = std::max(hi, product);
  }
  rep.ratio = hi == 0.0 ? 1.0 : (lo > 0.0 ? hi / lo : kInf);
  rep.report = make_report("t_minus_one", rho, rep.ratio, 2.0, 0.0, hi);
  return rep;
}

HolderReport check_time_holder(const Trajectory& traj,
                               const DerivedConstants& consts, double base_t,
                               const std::vector<double>& h_list) {
  if (base_t <= 0.0) throw std::invalid_argument("base_t must be > 0");
  if (h_list.empty()) throw std::invalid_argument("h_list must be non-empty");
  for (const double h : h_list) {
    if (!(h > 0.0 && h < 1.0)) {
      throw std::domain_error(
          "check_time_holder: increments must lie in (0, 1)");
    }
  }
  const int i0 = find_snapshot(traj, base_t);
  if (i0 < 0) {
    throw std::invalid_argument("check_time_holder: no snapshot at base time");
  }
  const double p = consts.p;
  const double inv_p = 1.0 / p;
  const double eps = traj.config.epsilon;
  const double radius = consts.lambda_p * std::pow(consts.sup_phi, inv_p) *
                        std::pow(consts.a * base_t, -inv_p);
  const double rate = std::sqrt(eps) * std::pow(consts.sup_phi, inv_p) *
                          std::pow(base_t, -inv_p) +
                      eval_h(traj.spec, radius);

  HolderReport rep;
  for (const double h : h_list) {
    const int i1 = find_snapshot(traj, base_t + h);
    if (i1 < 0) {
      throw std::invalid_argument(
          "check_time_holder: no snapshot at shifted time");
    }
    const double obs =
        sup_metrics(traj.snapshots[i0], &traj.snapshots[i1])
            .sup_distance.value();
    const double denom = std::sqrt(h) * rate;
    rep.h_values.push_back(h);
    rep.observed.push_back(obs);
    rep.fitted_c1.push_back(denom > 0.0 ? obs / denom : 0.0);
  }

  double lo = kInf, hi = 0.0;
  bool any_positive = false;
  for (const double c : rep.fitted_c1) {
    if (c > 0.0) {
      any_positive = true;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  }
  if (!any_positive) {
    // Snapshots coincide (constant-in-time data): trivially within modulus.
    rep.slope = 0.5;
    rep.c1_ratio = 1.0;
  } else {
    bool all_positive = true;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < rep.h_values.size(); ++k) {
      if (rep.observed[k] <= 0.0) {
        all_positive = false;
        continue;
      }
      const double x = std::log(rep.h_values[k]);
      const double y = std::log(rep.observed[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    rep.slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    rep.c1_ratio = all_positive ? hi / lo : kInf;
  }
  rep.report = make_report("holder_t", base_t, rep.c1_ratio, 3.0, 0.0, hi);
  rep.report.pass = rep.report.pass && rep.slope >= 0.5;
  return rep;
}

BallMassReport check_ball_mass(const Trajectory& traj,
                               const std::vector<BallSpec>& balls, double s,
                               double t, double ceiling) {
  const double p = governing_p_or_throw(traj);
  if (p <= 1.0) {
    throw std::invalid_argument(
        "check_ball_mass: requires a super-linear governing power");
  }
  if (!(s >= 0.0 && t > s)) {
    throw std::invalid_argument("check_ball_mass: need 0 <= s < t");
  }
  if (balls.empty()) throw std::invalid_argument("no balls given");
  const int is = find_snapshot(traj, s);
  const int it = find_snapshot(traj, t);
  if (is < 0 || it < 0) {
    throw std::invalid_argument("check_ball_mass: missing snapshot at s or t");
  }
  const int dim = traj.snapshots[0].box.dim;

  BallMassReport rep;
  std::vector<double> ratios;
  for (const BallSpec& ball : balls) {
    // The BallSpec invariant (doubled companion fits) is checked on the base
    // ball; the companion integral itself only needs the ball to be
    // unambiguous under periodicity.
    const double obs =
        ball_integral(traj.snapshots[it], ball) -
        integral_within_radius(traj.snapshots[is], ball.center,
                               2.0 * ball.radius);
    const double form = (t - s) * std::pow(ball.radius, dim) *
                        (1.0 + std::pow(ball.radius, -p / (p - 1.0)));
    ratios.push_back(obs / form);
  }
  rep.fitted_c = *std::max_element(ratios.begin(), ratios.end());
  for (std::size_t k = 0; k < balls.size(); ++k) {
    BoundReport row = make_report("ball_mass", t, ratios[k], ceiling, 0.0,
                                  rep.fitted_c);
    row.pass = rep.fitted_c <= ceiling;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string reports_to_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "bound_id,time,observed,bound_value,margin,pass,fitted_constant\n";
  for (const BoundReport& r : reports) {
    os << r.bound_id << ',' << r.time << ',' << r.observed << ','
       << r.bound_value << ',' << r.margin << ','
       << (r.pass ? "true" : "false") << ',';
    if (r.fitted_constant) os << *r.fitted_constant;
    os << '\n';
  }
  return os.str();
}

nlohmann::json reports_summary(const std::vector<BoundReport>& reports) {
  int n_pass = 0;
  double worst = kInf;
  for (const BoundReport& r : reports) {
    if (r.pass) ++n_pass;
    worst = std::min(worst, r.margin);
  }
  return {{"n_checks", reports.size()},
          {"n_pass", n_pass},
          {"worst_margin", reports.empty() ? 0.0 : worst}};
}

}  // namespace hjlab
