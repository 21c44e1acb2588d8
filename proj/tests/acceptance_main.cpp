// Release gate: one binary, twelve release-blocking properties, one
// PASS/FAIL line each.  Exits nonzero if any line fails.  Parameters and
// tolerances are pinned here on purpose — loosening them is a release
// decision, not a refactor.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <hjlab/bounds.hpp>
#include <hjlab/evolve.hpp>
#include <hjlab/field.hpp>
#include <hjlab/hamiltonian.hpp>
#include <hjlab/sweep.hpp>

namespace {

using namespace hjlab;
using Clock = std::chrono::steady_clock;

const HamiltonianSpec kQuad{PurePower{2.0}};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_line = 0;
int g_failures = 0;

void report(const char* name, const Outcome& o) {
  ++g_line;
  std::printf("[%2d/12] %s  %s (%s)\n", g_line, o.pass ? "PASS" : "FAIL",
              name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::vector<double> geomspace(double first, double last, int count) {
  std::vector<double> t;
  for (int k = 0; k < count; ++k)
    t.push_back(first * std::pow(last / first, static_cast<double>(k) /
                                                   (count - 1)));
  return t;
}

std::vector<double> merged_times(std::vector<double> a,
                                 const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end(),
                      [](double x, double y) {
                        return std::abs(x - y) <= 1e-12 * std::max(1.0, y);
                      }),
          a.end());
  return a;
}

Trajectory run_cosine(double amplitude, double epsilon, int resolution,
                      double side, const std::vector<double>& times) {
  const Box box{1, side, resolution};
  const Field phi =
      make_initial(box, "cosine", {{"amplitude", amplitude}});
  SolveConfig cfg;
  cfg.epsilon = epsilon;
  cfg.t_end = times.back();
  cfg.snapshot_times = times;
  return epsilon > 0.0 ? solve_viscous(phi, kQuad, cfg)
                       : solve_inviscid(phi, kQuad, cfg);
}

DerivedConstants quad_constants(double sup_phi, int dim = 1) {
  const PCertificate cert = certify(kQuad);
  return derive_constants(cert, derived_envelopes(kQuad, cert), sup_phi, dim);
}

// --- 1: certificate constants on the audit grid --------------------------

Outcome certificates_under_a_second() {
  const auto t0 = Clock::now();
  try {
    for (const double p : {0.5, 1.5, 2.0, 3.0})
      (void)certify(HamiltonianSpec{PurePower{p}});
  } catch (const CertificationError& e) {
    return {false, std::string("grid violation: ") + e.what()};
  }
  const double ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return {ms < 1000.0,
          "4 exponents, 200x4 samples each, " + fmt(ms) + " ms"};
}

// --- 2: exact diffusion of the cosine profile -----------------------------

Outcome heat_oracle() {
  const double side = 2.0 * std::numbers::pi;
  const Trajectory traj = [&] {
    const Box box{1, side, 512};
    const Field phi = make_initial(box, "cosine", {{"amplitude", 2.0}});
    SolveConfig cfg;
    cfg.epsilon = 1.0;
    cfg.t_end = 1.0;
    cfg.snapshot_times = {1.0};
    return solve_viscous(phi, HamiltonianSpec{NullH{}}, cfg);
  }();
  const Box& box = traj.snapshots[0].box;
  const double k = 2.0 * std::numbers::pi / side;
  double err = 0.0;
  for (int i = 0; i < box.resolution; ++i) {
    const double exact =
        1.0 + std::exp(-k * k) * std::cos(k * box.coord(i));
    err = std::max(err, std::abs(traj.snapshots[0].at(i) - exact));
  }
  return {err <= 1e-3, "sup error " + fmt(err) + " <= 0.001 at t=1"};
}

// --- 3: agreement with the variational oracle ------------------------------

Outcome variational_oracle_order() {
  const auto error_at = [](int res) {
    const Box box{1, 6.0, res};
    const Field phi =
        make_initial(box, "cone", {{"amplitude", 2.0}, {"r0", 2.0}});
    SolveConfig cfg;
    cfg.t_end = 0.5;
    cfg.snapshot_times = {0.5};
    const Trajectory traj = solve_inviscid(phi, kQuad, cfg);
    const Field oracle = hopf_lax_oracle(phi, 0.5, 2.0);
    return sup_metrics(traj.snapshots[0], &oracle).sup_distance.value();
  };
  const double coarse = error_at(256), fine = error_at(1024);
  const double order = std::log(coarse / fine) / std::log(1024.0 / 256.0);
  return {order >= 0.5, "errors " + fmt(coarse) + " -> " + fmt(fine) +
                            ", measured order " + fmt(order) + " >= 0.5"};
}

// --- 4 & 5: gradient decay and its amplitude-independent variant ----------

struct GradOutcomes {
  Outcome plain;
  Outcome data_independent;
};

GradOutcomes gradient_decay_family() {
  const std::vector<double> amps = {1.0, 10.0, 100.0};
  const std::vector<double> eps_list = {0.1, 0.01, 0.001};
  const std::vector<double> times =
      merged_times(geomspace(0.01, 5.0, 25), {0.05, 0.1, 5.0});

  bool plain_ok = true, ind_ok = true;
  double worst_plain = 1e300, worst_ind = 1e300, min_vacuity = 1e300;
  std::string why_plain, why_ind;

  // bound values per (eps index, time) from the first amplitude; the
  // certified-rate line must reproduce them exactly for every other A.
  std::map<std::pair<int, long long>, double> ind_bound;

  for (std::size_t ia = 0; ia < amps.size(); ++ia) {
    const double amp = amps[ia];
    const DerivedConstants consts = quad_constants(amp);
    for (std::size_t ie = 0; ie < eps_list.size(); ++ie) {
      const Trajectory traj =
          run_cosine(amp, eps_list[ie], 1024, 6.0, times);
      const std::vector<BoundReport> rows =
          check_grad_decay(traj, consts, 0.05, 0.0);
      double vac = 0.0;
      for (const BoundReport& r : rows) {
        const long long key_t = std::llround(r.time * 1e9);
        if (r.bound_id == "gradx" && amp <= 10.0) {
          if (r.time >= 0.05) {  // the enveloped window
            plain_ok = plain_ok && r.pass;
            worst_plain = std::min(worst_plain, r.margin);
            if (!r.pass && why_plain.empty())
              why_plain = "gradx fails at t=" + fmt(r.time);
          }
          if (amp == 10.0 && r.time >= 0.01 && r.time <= 0.1)
            vac = std::max(vac, r.observed / r.bound_value);
        }
        if (r.bound_id == "gradxind") {
          ind_ok = ind_ok && r.pass;
          worst_ind = std::min(worst_ind, r.margin);
          if (!r.pass && why_ind.empty())
            why_ind = "gradxind fails at t=" + fmt(r.time) +
                      " for A=" + fmt(amp);
          const auto key = std::make_pair(static_cast<int>(ie), key_t);
          const auto it = ind_bound.find(key);
          if (it == ind_bound.end()) {
            ind_bound.emplace(key, r.bound_value);
          } else if (std::abs(it->second - r.bound_value) >
                     1e-12 * it->second) {
            ind_ok = false;
            if (why_ind.empty())
              why_ind = "bound line depends on amplitude at t=" + fmt(r.time);
          }
        }
      }
      if (amp == 10.0) min_vacuity = std::min(min_vacuity, vac);
    }
  }

  if (min_vacuity <= 0.3) {
    plain_ok = false;
    if (why_plain.empty())
      why_plain = "bound is vacuous early: best ratio " + fmt(min_vacuity);
  }

  GradOutcomes out;
  out.plain = {plain_ok,
               plain_ok ? "6 runs enveloped at 5% slack, worst margin " +
                              fmt(worst_plain) + ", early ratio " +
                              fmt(min_vacuity) + " > 0.3"
                        : why_plain};
  out.data_independent =
      {ind_ok, ind_ok ? "9 runs share one rate line, worst margin " +
                            fmt(worst_ind)
                      : why_ind};
  return out;
}

// --- 6: time-derivative envelopes -----------------------------------------

Outcome rate_envelopes() {
  const std::vector<double> times = geomspace(0.1, 2.0, 17);
  const DerivedConstants consts = quad_constants(1.0);
  if (std::abs(consts.l_const - 4.0) > 1e-12)
    return {false, "decrease-rate constant is " + fmt(consts.l_const) +
                       ", expected 4"};

  double worst = 1e300;
  for (const BoundReport& r : check_dt_bounds(
           run_cosine(1.0, 0.05, 1024, 6.0, times), consts, 0.10, 0.1, 2.0)) {
    worst = std::min(worst, r.margin);
    if (!r.pass)
      return {false, r.bound_id + " breaks 10% slack at t=" + fmt(r.time)};
  }
  for (const BoundReport& r : check_dt_bounds(
           run_cosine(1.0, 0.0, 1024, 6.0, times), consts, 0.10, 0.1, 2.0)) {
    if (r.bound_id == "vdt_upper" && (r.observed != 0.0 || !r.pass))
      return {false, "inviscid increase detected: sup rate " +
                         fmt(r.observed) + " at t=" + fmt(r.time)};
    if (r.bound_id == "dudtmn" && !r.pass)
      return {false, "inviscid decrease exceeds 1.1 * 4/t at t=" +
                         fmt(r.time)};
  }
  return {true, "viscous both sides within 10%, worst margin " + fmt(worst) +
                    "; inviscid never increases"};
}

// --- 7: the t^-1 product stays flat on a late window ----------------------

Outcome late_window_product() {
  Trajectory traj = [&] {
    const Box box{1, 5.0, 1024};
    const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
    SolveConfig cfg;
    cfg.epsilon = 0.05;
    cfg.t_end = 5.0;
    cfg.snapshot_times = geomspace(1.0, 5.0, 9);
    return solve_viscous(phi, kQuad, cfg);
  }();
  const HomogeneityReport hom = check_dt_homogeneous(traj, 1.0, 8);
  return {hom.report.pass && hom.samples.size() == 8,
          fmt(hom.samples.size()) + " samples, product ratio " +
              fmt(hom.ratio) + " <= 2"};
}

// --- 8: square-root time modulus ------------------------------------------

Outcome time_modulus() {
  const std::vector<double> times = {0.5, 0.51, 0.52, 0.54, 0.58};
  const Trajectory traj = run_cosine(1.0, 0.05, 1024, 6.0, times);
  const HolderReport rep = check_time_holder(
      traj, quad_constants(1.0), 0.5, {0.01, 0.02, 0.04, 0.08});
  const bool ok = rep.slope >= 0.5 && rep.c1_ratio <= 3.0 && rep.report.pass;
  return {ok, "log-log slope " + fmt(rep.slope) + " >= 0.5, constant ratio " +
                  fmt(rep.c1_ratio) + " <= 3"};
}

// --- 9: one constant covers local mass growth -----------------------------

Outcome ball_mass_constant() {
  const Box box{1, 12.0, 1024};
  const Field phi =
      make_initial(box, "bump", {{"amplitude", 4.0}, {"r0", 2.0}});
  SolveConfig cfg;
  cfg.epsilon = 0.05;
  cfg.t_end = 1.0;
  cfg.snapshot_times = {0.1, 1.0};
  const Trajectory traj = solve_viscous(phi, kQuad, cfg);
  const BallMassReport rep = check_ball_mass(
      traj, {{{0.0, 0.0}, 0.5}, {{0.0, 0.0}, 1.0}, {{0.0, 0.0}, 2.0}}, 0.1,
      1.0, 10.0);
  bool ok = rep.fitted_c <= 10.0;
  for (const BoundReport& r : rep.rows) ok = ok && r.pass;
  return {ok, "fitted C " + fmt(rep.fitted_c) + " <= 10 across 3 radii"};
}

// --- 10: ordering and exact shift invariance ------------------------------

Outcome ordering_and_shifts() {
  const Box box{1, 2.0 * std::numbers::pi, 512};
  const PCertificate cert = certify(kQuad);
  SolveConfig cfg;
  cfg.t_end = 1.0;
  cfg.snapshot_times = {0.25, 0.5, 1.0};

  const Field cone =
      make_initial(box, "cone", {{"amplitude", 1.0}, {"r0", 1.5}});
  const Field bump =
      make_initial(box, "bump", {{"amplitude", 2.0}, {"r0", 2.5}});
  const Field wave = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const Field tall = make_initial(box, "cosine", {{"amplitude", 2.0}});
  Field shifted = wave;
  for (double& v : shifted.values) v += 0.5;

  double worst = 0.0;
  for (const auto& [lo, hi] : {std::pair<const Field&, const Field&>{cone, bump},
                               {wave, tall},
                               {wave, shifted}}) {
    const SweepReport rep = comparison_harness(lo, hi, kQuad, cert, cfg);
    worst = std::max(worst,
                     rep.details.at("max_order_violation").get<double>());
    if (!rep.verdict)
      return {false, "ordering violated by " +
                         fmt(rep.details.at("max_order_violation")
                                 .get<double>())};
  }
  const SweepReport shift_rep =
      comparison_harness(wave, shifted, kQuad, cert, cfg);
  const auto ds =
      shift_rep.details.at("diff_sup").get<std::vector<double>>();
  const auto dm =
      shift_rep.details.at("diff_min").get<std::vector<double>>();
  double shift_err = 0.0;
  for (const double v : ds) shift_err = std::max(shift_err, std::abs(v - 0.5));
  for (const double v : dm) shift_err = std::max(shift_err, std::abs(v - 0.5));
  return {shift_err <= 1e-10,
          "3 ordered pairs, worst violation " + fmt(worst) +
              " <= 1e-12; shift preserved to " + fmt(shift_err)};
}

// --- 11: vanishing-viscosity convergence ----------------------------------

Outcome viscosity_limit() {
  const Box box{1, 6.0, 1024};
  const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const Box ref_box{1, 6.0, 4096};
  const Field phi_ref = make_initial(ref_box, "cosine", {{"amplitude", 1.0}});
  const PCertificate cert = certify(kQuad);
  const SweepReport rep =
      run_vv_sweep(phi, kQuad, cert, {0.2, 0.1, 0.05, 0.025},
                   SweepWindow{{0.5, 1.0, 2.0}, 0.5}, {}, &phi_ref);
  const double slope = rep.rate_fit ? rep.rate_fit->slope : 0.0;
  return {rep.verdict && slope >= 0.4,
          "distances strictly decrease, fitted rate " + fmt(slope) +
              " >= 0.4"};
}

// --- 12: capped growth data converge with a uniform gradient ceiling ------

Outcome truncation_family() {
  const Box box{1, 20.0, 2048};
  const PCertificate cert = certify(kQuad);
  SolveConfig cfg;
  cfg.epsilon = 0.1;
  const SweepReport rep =
      truncation_harness(box, GrowthParams{1.0, 1.0}, {1.0, 2.0, 4.0, 8.0},
                         kQuad, cert, cfg, SweepWindow{{0.5, 0.75, 1.0}, 0.2});
  const std::vector<double> gaps =
      rep.details.at("consecutive_distances").get<std::vector<double>>();
  bool halves = true;
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k)
    halves = halves && (gaps[k + 1] <= 0.5 * gaps[k] || gaps[k + 1] <= 1e-14);
  const bool uniform = rep.details.at("gradxind_uniform").get<bool>();
  std::string d = "window gaps";
  for (const double g : gaps) d += " " + fmt(g);
  d += "; uniform rate ceiling ratio " +
       fmt(rep.details.at("gradxind_worst_ratio").get<double>());
  return {rep.verdict && halves && uniform, d};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::printf("acceptance gate: 12 release-blocking properties\n");

  report("closed-form certificates audited in under a second",
         certificates_under_a_second());
  report("viscous solver reproduces exact cosine diffusion",
         heat_oracle());
  report("inviscid solver approaches the variational oracle at order 1/2",
         variational_oracle_order());
  const GradOutcomes grads = gradient_decay_family();
  report("gradient decay enveloped at 5% slack and non-vacuous",
         grads.plain);
  report("certified gradient rate is amplitude-independent",
         grads.data_independent);
  report("time-derivative envelopes hold at 10% slack",
         rate_envelopes());
  report("late-window product sup|dv/dt| * t stays within ratio 2",
         late_window_product());
  report("time modulus scales like sqrt(h) with stable constants",
         time_modulus());
  report("one fitted constant below 10 covers ball mass growth",
         ball_mass_constant());
  report("scheme preserves ordering and exact constant shifts",
         ordering_and_shifts());
  report("viscous runs converge to the inviscid limit at rate >= 0.4",
         viscosity_limit());
  report("capped growth runs converge 2x per doubling, ceiling uniform",
         truncation_family());

  const double s =
      std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%s: %d/12 passed in %.1f s\n",
              g_failures == 0 ? "ACCEPTED" : "REJECTED", 12 - g_failures, s);
  return g_failures == 0 ? 0 : 1;
}
