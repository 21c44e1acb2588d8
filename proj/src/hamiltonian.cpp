/// @file hamiltonian.cpp
/// @brief Closed-form Hamiltonian evaluation, certification, and envelopes.

#include "hjlab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hjlab {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Combined weight of the terms achieving the governing exponent (1 for
/// single-power variants).
double governing_weight(const HamiltonianSpec& spec, double p) {
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    double mu = 0.0;
    for (const auto& t : ps->terms)
      if (t.p == p) mu += t.weight;
    return mu;
  }
  return 1.0;
}

/// Smoothed integrand of one pure power:  (rho + eta^2)^{p/2} - eta^p.
double phi_power(double p, double eta, double rho) {
  if (rho == 0.0) return 0.0;
  const double v = std::pow(rho + eta * eta, 0.5 * p) - std::pow(eta, p);
  return std::max(0.0, v);  // nonnegative by construction; guard rounding
}

double phi_power_prime(double p, double eta, double rho) {
  return 0.5 * p * std::pow(rho + eta * eta, 0.5 * p - 1.0);
}

/// Exact excess part of PowerPlusShifted acting on squared gradient:
/// G(sqrt(rho)) with G(r) = (r - threshold)_+^q.
double phi_shift(double q, double threshold, double rho) {
  const double r = std::sqrt(rho);
  if (r <= threshold) return 0.0;
  return std::pow(r - threshold, q);
}

double phi_shift_prime(double q, double threshold, double rho) {
  const double r = std::sqrt(rho);
  if (r <= threshold || rho == 0.0) return 0.0;
  return 0.5 * q * std::pow(r - threshold, q - 1.0) / r;
}

}  // namespace

std::string spec_kind(const HamiltonianSpec& spec) {
  if (std::holds_alternative<PurePower>(spec)) return "pure_power";
  if (std::holds_alternative<PowerSum>(spec)) return "power_sum";
  if (std::holds_alternative<PowerPlusShifted>(spec)) return "power_plus_shifted";
  return "null";
}

double governing_exponent(const HamiltonianSpec& spec) {
  validate_spec(spec);
  if (const auto* pp = std::get_if<PurePower>(&spec)) return pp->p;
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    const bool steep = ps->terms.front().p > 1.0;
    double p = ps->terms.front().p;
    for (const auto& t : ps->terms) p = steep ? std::min(p, t.p) : std::max(p, t.p);
    return p;
  }
  if (const auto* px = std::get_if<PowerPlusShifted>(&spec)) return px->p;
  throw std::invalid_argument("hamiltonian: NullH has no governing exponent");
}

void validate_spec(const HamiltonianSpec& spec) {
  if (const auto* pp = std::get_if<PurePower>(&spec)) {
    require(pp->p > 0.0, "pure_power: exponent must be positive");
    require(pp->p != 1.0, "pure_power: exponent 1 admits no coercivity certificate");
    return;
  }
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    require(!ps->terms.empty(), "power_sum: needs at least one term");
    bool any_steep = false, any_flat = false;
    for (const auto& t : ps->terms) {
      require(t.weight > 0.0, "power_sum: term weights must be positive");
      require(t.p > 0.0 && t.p != 1.0, "power_sum: exponents must be positive and != 1");
      (t.p > 1.0 ? any_steep : any_flat) = true;
    }
    require(!(any_steep && any_flat),
            "power_sum: exponents must all lie on the same side of 1");
    return;
  }
  if (const auto* px = std::get_if<PowerPlusShifted>(&spec)) {
    require(px->p > 1.0, "power_plus_shifted: base exponent must exceed 1");
    require(px->q >= px->p, "power_plus_shifted: excess exponent must be >= base");
    require(px->threshold > 0.0, "power_plus_shifted: threshold must be positive");
    require(px->slope_floor > 0.0, "power_plus_shifted: slope floor must be positive");
    return;
  }
  // NullH: always valid.
}

double eval_h(const HamiltonianSpec& spec, double r) {
  if (r < 0.0) throw std::domain_error("eval_h: gradient magnitude must be >= 0");
  if (std::holds_alternative<NullH>(spec)) return 0.0;
  if (const auto* pp = std::get_if<PurePower>(&spec))
    return r == 0.0 ? 0.0 : std::pow(r, pp->p);
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    if (r == 0.0) return 0.0;
    double sum = 0.0;
    for (const auto& t : ps->terms) sum += t.weight * std::pow(r, t.p);
    return sum;
  }
  const auto& px = std::get<PowerPlusShifted>(spec);
  double v = r == 0.0 ? 0.0 : std::pow(r, px.p);
  if (r > px.threshold) v += std::pow(r - px.threshold, px.q);
  return v;
}

double eval_phi_eta(const HamiltonianSpec& spec, double eta, double rho) {
  if (std::holds_alternative<NullH>(spec)) return 0.0;
  if (eta <= 0.0) throw std::domain_error("eval_phi_eta: smoothing scale must be > 0");
  if (rho < 0.0) throw std::domain_error("eval_phi_eta: squared gradient must be >= 0");
  if (const auto* pp = std::get_if<PurePower>(&spec))
    return phi_power(pp->p, eta, rho);
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    double sum = 0.0;
    for (const auto& t : ps->terms) sum += t.weight * phi_power(t.p, eta, rho);
    return sum;
  }
  const auto& px = std::get<PowerPlusShifted>(spec);
  return phi_power(px.p, eta, rho) + phi_shift(px.q, px.threshold, rho);
}

double eval_phi_eta_prime(const HamiltonianSpec& spec, double eta, double rho) {
  if (std::holds_alternative<NullH>(spec)) return 0.0;
  if (eta <= 0.0) throw std::domain_error("eval_phi_eta_prime: smoothing scale must be > 0");
  if (rho < 0.0) throw std::domain_error("eval_phi_eta_prime: squared gradient must be >= 0");
  if (const auto* pp = std::get_if<PurePower>(&spec))
    return phi_power_prime(pp->p, eta, rho);
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    double sum = 0.0;
    for (const auto& t : ps->terms) sum += t.weight * phi_power_prime(t.p, eta, rho);
    return sum;
  }
  const auto& px = std::get<PowerPlusShifted>(spec);
  return phi_power_prime(px.p, eta, rho) + phi_shift_prime(px.q, px.threshold, rho);
}

double eval_theta_eta(const HamiltonianSpec& spec, double eta, double rho) {
  return 2.0 * rho * eval_phi_eta_prime(spec, eta, rho) -
         eval_phi_eta(spec, eta, rho);
}

namespace {

/// Closed-form certificate constants for one pure power of exponent p,
/// before weight scaling.  Returns {a, b, gamma, b_alternate}.
struct RawConstants {
  double a, b, gamma;
  std::optional<double> b_alt;
};

RawConstants raw_constants(double p) {
  if (p > 1.0 && p <= 2.0) return {p - 1.0, p - 1.0, p, std::nullopt};
  if (p > 2.0) {
    const double b_main = 2.0 * std::pow(p - 2.0, 0.5 * (p - 2.0));
    const double b_alt = 2.0 * std::pow(p - 2.0, (p - 2.0) / p);
    return {0.5 * (p - 1.0), b_main, 0.5 * (p + 2.0), b_alt};
  }
  return {1.0 - p, 1.0, p, std::nullopt};  // 0 < p < 1
}

}  // namespace

std::optional<CertificationViolation> audit_certificate(
    const HamiltonianSpec& spec, const PCertificate& cert,
    const AuditGrid& grid) {
  validate_spec(spec);
  require(grid.samples >= 2, "audit: need at least two samples");
  require(grid.rho_min > 0.0 && grid.rho_max > grid.rho_min,
          "audit: sample interval must be positive and increasing");
  const double log_lo = std::log(grid.rho_min);
  const double log_hi = std::log(grid.rho_max);
  for (double eta : grid.etas) {
    for (int i = 0; i < grid.samples; ++i) {
      const double rho =
          std::exp(log_lo + (log_hi - log_lo) * i / (grid.samples - 1));
      const double theta = eval_theta_eta(spec, eta, rho);
      const double power_part = cert.a * std::pow(rho, 0.5 * cert.p);
      const double penalty = cert.b * std::pow(eta, cert.gamma);
      const double scale =
          std::max({std::abs(theta), power_part, penalty, 1e-300});
      const double tol = grid.relative_slack * scale;
      bool ok;
      double bound;
      if (cert.direction == CertDirection::LowerBound) {
        bound = power_part - penalty;
        ok = theta >= bound - tol;
      } else {
        bound = -power_part + penalty;
        ok = theta <= bound + tol;
      }
      if (!ok) return CertificationViolation{rho, eta, theta, bound};
    }
  }
  return std::nullopt;
}

PCertificate certify(const HamiltonianSpec& spec, const AuditGrid& grid) {
  validate_spec(spec);
  if (std::holds_alternative<NullH>(spec))
    throw std::invalid_argument("certify: the zero Hamiltonian has no coercivity certificate");

  const double p = governing_exponent(spec);
  const double mu = governing_weight(spec, p);
  const RawConstants raw = raw_constants(p);

  PCertificate cert;
  cert.p = p;
  cert.a = mu * raw.a;
  cert.b = mu * raw.b;
  cert.gamma = raw.gamma;
  cert.direction = p > 1.0 ? CertDirection::LowerBound : CertDirection::UpperBound;
  if (raw.b_alt) cert.b_alternate = mu * *raw.b_alt;

  if (auto v = audit_certificate(spec, cert, grid)) {
    std::ostringstream msg;
    msg << "certify: coercivity audit failed at rho=" << v->rho
        << " eta=" << v->eta << " (theta=" << v->theta_value
        << ", bound=" << v->bound_value << ")";
    throw CertificationError(msg.str(), *v);
  }
  cert.audited = true;

  // Slope comparability audit for the excess part, sampled away from the
  // activation threshold where the floor is meaningful.
  if (const auto* px = std::get_if<PowerPlusShifted>(&spec)) {
    const double r_lo = 2.0 * px->threshold;
    const double r_hi = 1e4 * px->threshold;
    for (int i = 0; i < 64; ++i) {
      const double r = r_lo * std::pow(r_hi / r_lo, i / 63.0);
      const double g_slope = px->q * std::pow(r - px->threshold, px->q - 1.0);
      const double floor = px->slope_floor * px->q * std::pow(r, px->q - 1.0) *
                           std::pow(0.5, px->q - 1.0);
      if (g_slope < floor * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "certify: excess-slope audit failed at r=" << r;
        throw CertificationError(msg.str(),
                                 CertificationViolation{r * r, 0.0, g_slope, floor});
      }
    }
  }
  return cert;
}

GrowthEnvelope derived_envelopes(const HamiltonianSpec& spec,
                                 const PCertificate& cert, double r_max,
                                 int samples, EnvelopeAudit* audit_out) {
  validate_spec(spec);
  require(r_max > 0.0, "derived_envelopes: r_max must be positive");
  require(samples >= 2, "derived_envelopes: need at least two samples");
  if (std::holds_alternative<NullH>(spec))
    throw std::invalid_argument("derived_envelopes: zero Hamiltonian has no envelope");

  GrowthEnvelope env;
  if (const auto* pp = std::get_if<PurePower>(&spec)) {
    env = {1.0, pp->p, pp->p};
  } else if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    double lo = ps->terms.front().p, hi = lo, g = 0.0;
    for (const auto& t : ps->terms) {
      lo = std::min(lo, t.p);
      hi = std::max(hi, t.p);
      g += t.weight;
    }
    env = {g, hi, lo};
  } else {
    const auto& px = std::get<PowerPlusShifted>(spec);
    // (r - threshold)_+^q <= r^q, so two terms with unit prefactors suffice.
    env = {2.0, px.q, px.p};
  }

  EnvelopeAudit audit;
  const bool flat = cert.p < 1.0;
  // Log-spaced samples of (0, r_max]; a linear tail refines the small-r end.
  std::vector<double> rs;
  rs.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i)
    rs.push_back(r_max * std::pow(1e-6, 1.0 - static_cast<double>(i) / (samples - 1)));

  const double tol_rel = 1e-9;
  // (i) growth ceiling H(r) <= g_h (r^{kappa_inf} + r^{kappa_zero}).
  for (double r : rs) {
    const double h = eval_h(spec, r);
    const double ceil =
        env.g_h * (std::pow(r, env.kappa_inf) + std::pow(r, env.kappa_zero));
    if (h > ceil * (1.0 + tol_rel))
      throw std::runtime_error("derived_envelopes: growth ceiling audit failed");
  }
  audit.growth_checked = true;

  // (ii) coercive floor H(r) >= (a/|p-1|) r^p.
  const double floor_coef = cert.a / std::abs(cert.p - 1.0);
  for (double r : rs) {
    const double h = eval_h(spec, r);
    const double floor = floor_coef * std::pow(r, cert.p);
    if (h < floor * (1.0 - tol_rel))
      throw std::runtime_error("derived_envelopes: coercive floor audit failed");
  }
  audit.coercive_power_checked = true;

  // (iii) monotone: running max of H equals H itself.
  double prev = 0.0;
  for (double r : rs) {
    const double h = eval_h(spec, r);
    if (h < prev * (1.0 - 1e-12))
      throw std::runtime_error("derived_envelopes: monotonicity audit failed");
    prev = std::max(prev, h);
  }
  audit.monotone_checked = true;

  // (iv) subadditivity, meaningful only in the flat regime.
  if (flat) {
    const int n2 = 50;
    for (int i = 1; i <= n2; ++i) {
      for (int j = i; j <= n2; ++j) {
        const double r = r_max * i / n2;
        const double s = r_max * j / n2;
        if (eval_h(spec, r + s) >
            (eval_h(spec, r) + eval_h(spec, s)) * (1.0 + tol_rel))
          throw std::runtime_error("derived_envelopes: subadditivity audit failed");
      }
    }
    audit.subadditive_checked = true;
  }

  if (audit_out) *audit_out = audit;
  return env;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PCertificate& cert) {
  j = nlohmann::json{
      {"p", cert.p},
      {"a", cert.a},
      {"b", cert.b},
      {"gamma", cert.gamma},
      {"direction", cert.direction == CertDirection::LowerBound ? "lower" : "upper"},
      {"audited", cert.audited},
  };
  if (cert.b_alternate) j["b_alternate"] = *cert.b_alternate;
}

void from_json(const nlohmann::json& j, PCertificate& cert) {
  j.at("p").get_to(cert.p);
  j.at("a").get_to(cert.a);
  j.at("b").get_to(cert.b);
  j.at("gamma").get_to(cert.gamma);
  const std::string dir = j.at("direction").get<std::string>();
  if (dir == "lower") cert.direction = CertDirection::LowerBound;
  else if (dir == "upper") cert.direction = CertDirection::UpperBound;
  else throw std::invalid_argument("certificate: direction must be lower|upper");
  j.at("audited").get_to(cert.audited);
  if (j.contains("b_alternate")) cert.b_alternate = j["b_alternate"].get<double>();
  else cert.b_alternate.reset();
}

nlohmann::json spec_to_json(const HamiltonianSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec_kind(spec);
  if (const auto* pp = std::get_if<PurePower>(&spec)) {
    j["p"] = pp->p;
  } else if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : ps->terms)
      terms.push_back({{"weight", t.weight}, {"p", t.p}});
    j["terms"] = terms;
  } else if (const auto* px = std::get_if<PowerPlusShifted>(&spec)) {
    j["p"] = px->p;
    j["q"] = px->q;
    j["threshold"] = px->threshold;
    j["slope_floor"] = px->slope_floor;
  }
  return j;
}

HamiltonianSpec spec_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  HamiltonianSpec spec;
  if (kind == "pure_power") {
    spec = PurePower{j.at("p").get<double>()};
  } else if (kind == "power_sum") {
    PowerSum ps;
    for (const auto& t : j.at("terms"))
      ps.terms.push_back({t.at("weight").get<double>(), t.at("p").get<double>()});
    spec = ps;
  } else if (kind == "power_plus_shifted") {
    spec = PowerPlusShifted{j.at("p").get<double>(), j.at("q").get<double>(),
                            j.at("threshold").get<double>(),
                            j.value("slope_floor", 1.0)};
  } else if (kind == "null") {
    spec = NullH{};
  } else {
    throw std::invalid_argument("hamiltonian: unknown kind '" + kind + "'");
  }
  validate_spec(spec);
  return spec;
}

}  // namespace hjlab
