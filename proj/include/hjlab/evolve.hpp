/// @file evolve.hpp
/// @brief Time integration: the viscous regularized flow, a monotone inviscid
///        upwind scheme, and the Hopf-Lax oracle for convex power Hamiltonians.
///
/// Both solvers advance v_t = eps*Lap(v) - Phi_eta(rho) by explicit Euler,
/// where rho is the squared upwind gradient magnitude
///     rho = sum_d max(D-_d v, -D+_d v, 0)^2 .
/// This one-sided argument keeps the scheme monotone under the CFL condition
/// below, which in turn makes the discrete maximum principle, comparison of
/// ordered data, and pointwise decrease in time (for eps = 0) exact to
/// rounding rather than merely asymptotic.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjlab/field.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

struct SolveConfig {
  double epsilon = 0.0;      ///< viscosity >= 0
  double eta = 0.0;          ///< gradient smoothing; > 0 required when p < 1
  double t_end = 1.0;        ///< horizon > 0
  double cfl_safety = 0.45;  ///< in (0, 1]
  double alpha_margin = 1.1; ///< >= 1; headroom on the speed-bound gradient range
  std::vector<double> snapshot_times;  ///< strictly increasing, in (0, t_end]
  std::int64_t max_steps = 50'000'000; ///< step-budget ceiling
};

/// Snapshot record of one solve.  Snapshots sit exactly at the requested
/// times (steps are clipped to land on them, never interpolated).
struct Trajectory {
  SolveConfig config;
  HamiltonianSpec spec;
  double initial_sup = 0.0;     ///< sup |phi|
  std::vector<double> times;    ///< strictly increasing
  std::vector<Field> snapshots; ///< one field per time
};

/// Raised when a solve produces a non-finite value.
class StabilityError : public std::runtime_error {
 public:
  StabilityError(const std::string& what, double time, std::size_t node)
      : std::runtime_error(what), time(time), node(node) {}
  double time;
  std::size_t node;
};

/// Raised when a solve exceeds its step budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Upper bound for the wave speed 2 r Phi_eta'(r^2) over r in [0, r_max],
/// per-variant closed form (exact for single powers, termwise-summed upper
/// bound for sums).  eta = 0 is allowed only in the steep regime.
double speed_bound(const HamiltonianSpec& spec, double eta, double r_max);

/// Monotone-CFL time step:
///     dt = cfl_safety / (2*dim*eps/dx^2 + dim*alpha/dx),
/// with alpha = speed_bound over [0, alpha_margin*grad_bound].  A vanishing
/// denominator (eps = 0 and alpha = 0) returns t_end: the field is stationary.
double stable_dt(const Box& box, const HamiltonianSpec& spec, double epsilon,
                 double eta, double grad_bound, double cfl_safety,
                 double alpha_margin, double t_end);

/// One explicit Euler update v <- v + dt*(eps*Lap v - Phi_eta(rho)) with the
/// upwind squared-gradient argument rho.  Pass eta = 0 in the steep regime to
/// use the unsmoothed integrand.  Throws StabilityError on non-finite output.
Field step_viscous(const Field& f, const HamiltonianSpec& spec, double epsilon,
                   double eta, double dt);

/// Sup of the one-sided gradient magnitude with the exact stencil the stepper
/// uses; feed this into stable_dt when driving steps manually.
double upwind_grad_sup(const Field& f);

/// Integrates the viscous flow (epsilon > 0) to t_end, re-deriving the step
/// from the current upwind gradient sup each iteration and recording a field
/// at every requested snapshot time.
Trajectory solve_viscous(const Field& phi, const HamiltonianSpec& spec,
                         const SolveConfig& config);

/// Same time loop at epsilon = 0 with the monotone upwind Hamiltonian only.
/// In the flat regime (p < 1) with config.eta = 0, the grid scale dx is used
/// as the smoothing eta so the speed bound stays finite.
Trajectory solve_inviscid(const Field& phi, const HamiltonianSpec& spec,
                          const SolveConfig& config);

/// Variational solution for H(r) = r^p, p > 1:
///     v(x, t) = min_y [ phi(y) + t * l((dist_per(x, y)/t)) ],
///     l(s) = (p-1) p^{-p/(p-1)} s^{p/(p-1)},
/// minimized by brute force over all grid nodes.  Throws for p <= 1.
Field hopf_lax_oracle(const Field& phi, double t, double p);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Writes manifest.json plus one snapshot_NNN.csv per snapshot into `dir`
/// (created if absent).  The manifest records epsilon, eta, the Hamiltonian,
/// the snapshot times, sup |phi|, and the grid geometry.
void write_trajectory(const Trajectory& traj, const std::string& dir);

/// Reads back a directory written by write_trajectory.
Trajectory read_trajectory(const std::string& dir);

}  // namespace hjlab
