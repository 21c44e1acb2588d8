/// @file hamiltonian.hpp
/// @brief Hamiltonian families H(|∇v|), their smoothed regularizations, and
///        the coercivity certificates that drive every decay estimate.
///
/// A Hamiltonian here is a nonnegative function H(r) of the gradient magnitude
/// r = |∇v| with power-law behavior.  The solver never evaluates H directly on
/// |∇v|; it evaluates the smoothed integrand Φ_η(ρ) acting on ρ = |∇v|², where
///
///     Φ_η(ρ) = (ρ + η²)^{p/2} − η^p        (pure power H(r) = r^p)
///
/// extended termwise for sums.  The quantity that certifies dissipation is
///
///     Θ_η(ρ) = 2 ρ Φ_η'(ρ) − Φ_η(ρ),
///
/// which must be bounded below (steep case, p > 1) or above (flat case,
/// 0 < p < 1) by ± a ρ^{p/2} ∓ b η^γ.  `certify` produces the closed-form
/// constants (a, b, γ) and audits the inequality numerically before returning.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace hjlab {

// ---------------------------------------------------------------------------
// Hamiltonian variants
// ---------------------------------------------------------------------------

/// H(r) = r^p with p > 0, p ≠ 1.
struct PurePower {
  double p = 2.0;
};

/// One term μ r^p of a PowerSum; μ > 0.
struct PowerTerm {
  double weight = 1.0;
  double p = 2.0;
};

/// H(r) = Σ_k μ_k r^{p_k}.  All exponents must lie strictly on the same side
/// of 1 (all steep or all flat); mixed regimes admit no single-exponent
/// certificate and are rejected.
struct PowerSum {
  std::vector<PowerTerm> terms;
};

/// H(r) = r^p + (r − threshold)_+^q with q ≥ p > 1, threshold > 0.
/// `slope_floor` is the comparability constant λ used by the slope audit:
/// away from the activation threshold (r ≥ 2·threshold) the excess part must
/// satisfy G'(r) ≥ λ · q r^{q−1} on sampled radii.
struct PowerPlusShifted {
  double p = 2.0;
  double q = 3.0;
  double threshold = 1.0;
  double slope_floor = 1.0;
};

/// H ≡ 0.  Exists so the evolution code degenerates to the heat equation and
/// can be validated against the exact kernel; certification rejects it.
struct NullH {};

using HamiltonianSpec = std::variant<PurePower, PowerSum, PowerPlusShifted, NullH>;

/// Human-readable variant tag ("pure_power", "power_sum", ...).
std::string spec_kind(const HamiltonianSpec& spec);

/// Governing exponent: the exponent itself for single powers, the extremal
/// exponent for sums (min when all exceed 1, max when all are below 1).
/// Throws std::invalid_argument for NullH.
double governing_exponent(const HamiltonianSpec& spec);

/// Validates structural invariants (exponent ranges, weights, regimes).
/// Throws std::invalid_argument with a specific message on violation.
void validate_spec(const HamiltonianSpec& spec);

// ---------------------------------------------------------------------------
// Pointwise evaluation
// ---------------------------------------------------------------------------

/// H(r) for gradient magnitude r ≥ 0 (r < 0 → std::domain_error).
double eval_h(const HamiltonianSpec& spec, double r);

/// Smoothed integrand Φ_η(ρ) on squared-gradient ρ ≥ 0; requires η > 0
/// (η ≤ 0 → std::domain_error).  Φ_η(0) == 0 exactly and Φ_η ≥ 0 everywhere.
double eval_phi_eta(const HamiltonianSpec& spec, double eta, double rho);

/// dΦ_η/dρ, analytic per variant (not a finite difference).
double eval_phi_eta_prime(const HamiltonianSpec& spec, double eta, double rho);

/// Θ_η(ρ) = 2 ρ Φ_η'(ρ) − Φ_η(ρ); requires η > 0.
double eval_theta_eta(const HamiltonianSpec& spec, double eta, double rho);

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

/// Which side of the two-sided power bound Θ_η must satisfy.
enum class CertDirection {
  LowerBound,  ///< steep regime p > 1:   Θ_η(ρ) ≥  a ρ^{p/2} − b η^γ
  UpperBound,  ///< flat  regime 0 < p < 1: Θ_η(ρ) ≤ −a ρ^{p/2} + b η^γ
};

/// Closed-form certificate constants, plus the audit stamp.
struct PCertificate {
  double p = 2.0;       ///< governing exponent (extremal exponent for sums)
  double a = 1.0;       ///< coercivity prefactor
  double b = 1.0;       ///< η-penalty prefactor
  double gamma = 2.0;   ///< η-penalty exponent
  CertDirection direction = CertDirection::LowerBound;
  bool audited = false; ///< set once the sampled inequality audit has passed

  /// For steep powers beyond quadratic two readings of the penalty prefactor
  /// exist, 2(p−2)^{(p−2)/2} and 2(p−2)^{(p−2)/p}; `b` holds the first
  /// (the one the binding derivation produces) and this the second.
  std::optional<double> b_alternate;
};

void to_json(nlohmann::json& j, const PCertificate& cert);
void from_json(const nlohmann::json& j, PCertificate& cert);

/// Offending sample when a certificate audit fails.
struct CertificationViolation {
  double rho = 0.0;
  double eta = 0.0;
  double theta_value = 0.0;
  double bound_value = 0.0;
};

class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, CertificationViolation v)
      : std::runtime_error(what), violation(v) {}
  CertificationViolation violation;
};

/// Grid used by certificate and envelope audits: `samples` log-spaced ρ values
/// in [rho_min, rho_max] crossed with the listed η values.
struct AuditGrid {
  int samples = 200;
  double rho_min = 1e-4;
  double rho_max = 1e4;
  std::vector<double> etas = {1e-1, 1e-2, 1e-3, 1e-4};
  double relative_slack = 1e-10;
};

/// Produces the closed-form certificate for `spec` and audits the coercivity
/// inequality on `grid`.  Throws CertificationError if any sample violates the
/// bound, std::invalid_argument for NullH or invalid specs.
PCertificate certify(const HamiltonianSpec& spec, const AuditGrid& grid = {});

/// Re-runs the sampled audit for an arbitrary (possibly wrong) certificate.
/// Returns the first violation found, or nullopt if all samples pass.
std::optional<CertificationViolation> audit_certificate(
    const HamiltonianSpec& spec, const PCertificate& cert,
    const AuditGrid& grid = {});

// ---------------------------------------------------------------------------
// Growth envelopes
// ---------------------------------------------------------------------------

/// Two-exponent growth envelope: H(r) ≤ g_h (r^{kappa_inf} + r^{kappa_zero})
/// with kappa_inf ≤ p ≤ kappa_zero describing small-r / large-r behavior.
struct GrowthEnvelope {
  double g_h = 1.0;
  double kappa_zero = 2.0;  ///< exponent governing r ≤ 1
  double kappa_inf = 2.0;   ///< exponent governing r ≥ 1
};

/// Which envelope audits actually ran (some only apply to one regime).
struct EnvelopeAudit {
  bool growth_checked = false;        ///< H ≤ g_h(r^{κ∞} + r^{κ0}) sampled
  bool coercive_power_checked = false;///< H ≥ (a/|p−1|) r^p sampled
  bool monotone_checked = false;      ///< H nondecreasing sampled
  bool subadditive_checked = false;   ///< H(r+s) ≤ H(r)+H(s); flat regime only
};

/// Derives the growth envelope from a Hamiltonian and its certificate, audits
/// every applicable inequality on `samples` points of [0, r_max] (log-spaced
/// away from 0); throws std::runtime_error naming the clause on any audit
/// failure.  `audit_out`, when non-null, reports which audits ran.
GrowthEnvelope derived_envelopes(const HamiltonianSpec& spec,
                                 const PCertificate& cert,
                                 double r_max = 100.0, int samples = 200,
                                 EnvelopeAudit* audit_out = nullptr);

// ---------------------------------------------------------------------------
// Serialization of Hamiltonian descriptions
// ---------------------------------------------------------------------------

nlohmann::json spec_to_json(const HamiltonianSpec& spec);
HamiltonianSpec spec_from_json(const nlohmann::json& j);

}  // namespace hjlab
