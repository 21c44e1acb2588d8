#include "hjlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hjlab/bounds.hpp"

namespace hjlab {

namespace {

constexpr double kTimeMatchTol = 1e-9;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

int snapshot_index(const Trajectory& traj, double t) {
  const double tol = kTimeMatchTol * std::max(1.0, std::abs(t));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (std::abs(traj.times[i] - t) <= tol) return static_cast<int>(i);
  }
  throw std::invalid_argument("sweep: window time " + std::to_string(t) +
                              " is not a snapshot of every run");
}

void validate_window(const SweepWindow& window) {
  require(!window.times.empty(), "sweep: window needs at least one time");
  double prev = 0.0;
  for (const double t : window.times) {
    require(t > prev, "sweep: window times must be positive and increasing");
    prev = t;
  }
  require(window.interior_fraction > 0.0 && window.interior_fraction < 1.0,
          "sweep: interior fraction must lie strictly inside (0, 1)");
}

std::string format_label(const char* prefix, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%g", prefix, value);
  return buf;
}

nlohmann::json run_manifest(const Trajectory& traj, const std::string& label) {
  return {{"label", label},
          {"epsilon", traj.config.epsilon},
          {"eta", traj.config.eta},
          {"t_end", traj.config.t_end},
          {"dim", traj.snapshots.front().box.dim},
          {"side_length", traj.snapshots.front().box.side_length},
          {"resolution", traj.snapshots.front().box.resolution},
          {"initial_sup", traj.initial_sup},
          {"times", traj.times},
          {"hamiltonian", spec_to_json(traj.spec)}};
}

/// Runs task(0..n-1) on a bounded worker pool; slot-indexed results keep the
/// assembly deterministic.  The lowest-index exception is rethrown.
void parallel_run(std::size_t n,
                  const std::function<void(std::size_t)>& task) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

/// Sup of |a - b| over interior coarse nodes at one pair of snapshots,
/// where b's grid refines a's by `factor`.
double interior_sup_diff(const Field& fa, const Field& fb, int factor,
                         double fraction) {
  const Box& box = fa.box;
  const double half = 0.5 * fraction * box.side_length;
  const int n = box.resolution;
  double sup = 0.0;
  if (box.dim == 1) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(box.coord(i)) >= half) continue;
      sup = std::max(sup, std::abs(fa.at(i) - fb.at(i * factor)));
    }
  } else {
    for (int j = 0; j < n; ++j) {
      if (std::abs(box.coord(j)) >= half) continue;
      for (int i = 0; i < n; ++i) {
        if (std::abs(box.coord(i)) >= half) continue;
        sup = std::max(sup,
                       std::abs(fa.at(i, j) - fb.at(i * factor, j * factor)));
      }
    }
  }
  return sup;
}

std::vector<std::vector<double>> distance_matrix(
    const std::vector<const Trajectory*>& runs, const SweepWindow& window) {
  const std::size_t m = runs.size();
  std::vector<std::vector<double>> mat(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      mat[i][j] = mat[j][i] = window_distance(*runs[i], *runs[j], window);
    }
  }
  return mat;
}

std::optional<RateFit> fit_log_log(const std::vector<double>& xs,
                                   const std::vector<double>& ys) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !(ys[k] > 0.0)) continue;
    const double x = std::log(xs[k]);
    const double y = std::log(ys[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nullopt;
  RateFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !(ys[k] > 0.0)) continue;
    const double r =
        std::log(ys[k]) - (fit.intercept + fit.slope * std::log(xs[k]));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

bool is_flat(const HamiltonianSpec& spec) {
  return !std::holds_alternative<NullH>(spec) && governing_exponent(spec) < 1.0;
}

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("HJLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<int>(std::min(v, 64L));
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw == 0 ? 4u : hw, 1u, 8u));
}

double window_distance(const Trajectory& a, const Trajectory& b,
                       const SweepWindow& window) {
  validate_window(window);
  const Box& ba = a.snapshots.front().box;
  const Box& bb = b.snapshots.front().box;
  require(ba.dim == bb.dim, "window_distance: dimension mismatch");
  require(std::abs(ba.side_length - bb.side_length) <=
              1e-12 * ba.side_length,
          "window_distance: box side mismatch");
  const bool a_coarse = ba.resolution <= bb.resolution;
  const Trajectory& coarse = a_coarse ? a : b;
  const Trajectory& fine = a_coarse ? b : a;
  const int rc = coarse.snapshots.front().box.resolution;
  const int rf = fine.snapshots.front().box.resolution;
  require(rf % rc == 0,
          "window_distance: resolutions must nest (integer refinement)");
  const int factor = rf / rc;

  double sup = 0.0;
  for (const double t : window.times) {
    const int ic = snapshot_index(coarse, t);
    const int jf = snapshot_index(fine, t);
    sup = std::max(sup, interior_sup_diff(coarse.snapshots[ic],
                                          fine.snapshots[jf], factor,
                                          window.interior_fraction));
  }
  return sup;
}

SweepReport run_vv_sweep(const Field& phi, const HamiltonianSpec& spec,
                         const PCertificate& cert,
                         const std::vector<double>& eps_list,
                         const SweepWindow& window, const SolveConfig& base,
                         const Field* phi_ref) {
  validate_window(window);
  require(eps_list.size() >= 3, "run_vv_sweep: need at least 3 viscosities");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    require(eps_list[k] > 0.0, "run_vv_sweep: viscosities must be positive");
    require(k == 0 || eps_list[k] < eps_list[k - 1],
            "run_vv_sweep: viscosities must be strictly decreasing");
  }
  if (phi_ref != nullptr) {
    require(phi_ref->box.dim == phi.box.dim &&
                std::abs(phi_ref->box.side_length - phi.box.side_length) <=
                    1e-12 * phi.box.side_length &&
                phi_ref->box.resolution % phi.box.resolution == 0,
            "run_vv_sweep: reference grid must refine the run grid");
  }

  SolveConfig cfg = base;
  cfg.snapshot_times = window.times;
  cfg.t_end = window.times.back();

  const std::size_t m = eps_list.size();
  std::vector<Trajectory> trajs(m + 1);
  parallel_run(m + 1, [&](std::size_t i) {
    SolveConfig run_cfg = cfg;
    if (i < m) {
      run_cfg.epsilon = eps_list[i];
      trajs[i] = solve_viscous(phi, spec, run_cfg);
    } else {
      run_cfg.epsilon = 0.0;
      trajs[i] = solve_inviscid(phi_ref != nullptr ? *phi_ref : phi, spec,
                                run_cfg);
    }
  });

  SweepReport report;
  report.kind = "vanishing_viscosity";
  std::vector<const Trajectory*> ptrs;
  for (std::size_t i = 0; i < m; ++i) {
    report.runs.push_back(
        run_manifest(trajs[i], format_label("eps=", eps_list[i])));
    ptrs.push_back(&trajs[i]);
  }
  report.runs.push_back(run_manifest(trajs[m], "reference"));
  ptrs.push_back(&trajs[m]);
  report.distances = distance_matrix(ptrs, window);

  std::vector<double> to_ref(m);
  for (std::size_t i = 0; i < m; ++i) to_ref[i] = report.distances[i][m];
  report.details["eps"] = eps_list;
  report.details["ref_distances"] = to_ref;

  const bool degenerate =
      *std::max_element(to_ref.begin(), to_ref.end()) <= 1e-14;
  if (degenerate) {
    report.verdict = true;
  } else {
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      decreasing = decreasing && to_ref[i + 1] < to_ref[i];
    }
    report.rate_fit = fit_log_log(eps_list, to_ref);
    report.verdict =
        decreasing && report.rate_fit && report.rate_fit->slope >= 0.4;
  }

  // Variational cross-check of the inviscid reference (single steep power,
  // one dimension: the oracle is exact up to the schemes' own errors).
  if (spec_kind(spec) == "pure_power" && cert.p > 1.0 && phi.box.dim == 1) {
    Trajectory oracle;
    oracle.spec = spec;
    oracle.config = cfg;
    oracle.initial_sup = sup_metrics(phi).sup_norm;
    oracle.times = window.times;
    for (const double t : window.times) {
      oracle.snapshots.push_back(hopf_lax_oracle(phi, t, cert.p));
    }
    report.details["hopf_lax_gap"] =
        window_distance(trajs[m], oracle, window);
  }
  return report;
}

SweepReport comparison_harness(const Field& phi_lo, const Field& phi_hi,
                               const HamiltonianSpec& spec,
                               const PCertificate& cert,
                               const SolveConfig& config) {
  (void)cert;  // ordering needs no certificate constants; kept for symmetry
  validate_field(phi_lo);
  validate_field(phi_hi);
  require(phi_lo.box == phi_hi.box, "comparison_harness: box mismatch");
  for (std::size_t k = 0; k < phi_lo.values.size(); ++k) {
    if (phi_lo.values[k] > phi_hi.values[k]) {
      throw std::invalid_argument(
          "comparison_harness: data not ordered at node " + std::to_string(k));
    }
  }
  validate_spec(spec);
  require(config.epsilon >= 0.0, "comparison_harness: epsilon must be >= 0");
  require(std::holds_alternative<NullH>(spec) || config.epsilon <= 0.5,
          "comparison_harness: viscosity above 0.5 drowns the transport term");
  require(!config.snapshot_times.empty(),
          "comparison_harness: snapshot_times must be nonempty");
  double prev = 0.0;
  for (const double t : config.snapshot_times) {
    require(t > prev,
            "comparison_harness: snapshot times must increase and be positive");
    prev = t;
  }
  require(prev <= config.t_end * (1.0 + 1e-12),
          "comparison_harness: snapshots beyond the horizon");

  double eta = config.eta;
  if (is_flat(spec) && eta == 0.0) {
    require(config.epsilon == 0.0,
            "comparison_harness: flat regime with viscosity needs eta > 0");
    eta = phi_lo.box.dx();
  }

  Trajectory lo, hi;
  lo.config = hi.config = config;
  lo.spec = hi.spec = spec;
  lo.initial_sup = sup_metrics(phi_lo).sup_norm;
  hi.initial_sup = sup_metrics(phi_hi).sup_norm;

  Field flo = phi_lo;
  Field fhi = phi_hi;
  const double tol_t = 1e-12 * std::max(1.0, config.t_end);
  double t = 0.0;
  std::int64_t steps = 0;
  double worst_violation = 0.0;
  std::vector<double> diff_sup, diff_min, violations;

  for (const double target : config.snapshot_times) {
    while (t < target - tol_t) {
      const double g = std::max(upwind_grad_sup(flo), upwind_grad_sup(fhi));
      double dt = stable_dt(flo.box, spec, config.epsilon, eta, g,
                            config.cfl_safety, config.alpha_margin,
                            config.t_end);
      bool lands = false;
      if (t + dt >= target - tol_t) {
        dt = target - t;
        lands = true;
      }
      flo = step_viscous(flo, spec, config.epsilon, eta, dt);
      fhi = step_viscous(fhi, spec, config.epsilon, eta, dt);
      t = lands ? target : t + dt;
      if (++steps > config.max_steps) {
        throw BudgetError("comparison_harness: step budget exceeded");
      }
    }
    double vio = 0.0, dsup = -std::numeric_limits<double>::infinity(),
           dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < flo.values.size(); ++k) {
      const double d = fhi.values[k] - flo.values[k];
      vio = std::max(vio, -d);
      dsup = std::max(dsup, d);
      dmin = std::min(dmin, d);
    }
    worst_violation = std::max(worst_violation, vio);
    violations.push_back(vio);
    diff_sup.push_back(dsup);
    diff_min.push_back(dmin);
    lo.times.push_back(target);
    hi.times.push_back(target);
    lo.snapshots.push_back(flo);
    hi.snapshots.push_back(fhi);
  }

  SweepReport report;
  report.kind = "comparison";
  report.runs.push_back(run_manifest(lo, "lower"));
  report.runs.push_back(run_manifest(hi, "upper"));
  double d = 0.0;
  for (std::size_t i = 0; i < lo.snapshots.size(); ++i) {
    d = std::max(
        d, sup_metrics(lo.snapshots[i], &hi.snapshots[i]).sup_distance.value());
  }
  report.distances = {{0.0, d}, {d, 0.0}};
  report.details["max_order_violation"] = worst_violation;
  report.details["violations"] = violations;
  report.details["diff_sup"] = diff_sup;
  report.details["diff_min"] = diff_min;
  report.verdict = worst_violation <= 1e-12;
  return report;
}

SweepReport truncation_harness(const Box& box, const GrowthParams& growth,
                               const std::vector<double>& n_list,
                               const HamiltonianSpec& spec,
                               const PCertificate& cert,
                               const SolveConfig& config,
                               const SweepWindow& window) {
  require(cert.p > 1.0,
          "truncation_harness: requires a super-linear governing power");
  require(growth.q > 0.0 && growth.s > 0.0,
          "truncation_harness: growth parameters must be positive");
  require(n_list.size() >= 2, "truncation_harness: need at least two caps");
  std::vector<double> caps = n_list;
  std::sort(caps.begin(), caps.end());
  for (std::size_t k = 0; k + 1 < caps.size(); ++k) {
    require(caps[k] > 0.0 && caps[k] < caps[k + 1],
            "truncation_harness: caps must be positive and distinct");
  }
  validate_window(window);

  SolveConfig cfg = config;
  cfg.snapshot_times = window.times;
  cfg.t_end = window.times.back();

  const std::size_t m = caps.size();
  std::vector<Trajectory> trajs(m);
  parallel_run(m, [&](std::size_t i) {
    const Field phi = make_initial(box, "truncated_growth",
                                   {{"q", growth.q},
                                    {"s", growth.s},
                                    {"n", caps[i]}});
    trajs[i] = cfg.epsilon > 0.0 ? solve_viscous(phi, spec, cfg)
                                 : solve_inviscid(phi, spec, cfg);
  });

  SweepReport report;
  report.kind = "truncation";
  std::vector<const Trajectory*> ptrs;
  for (std::size_t i = 0; i < m; ++i) {
    report.runs.push_back(run_manifest(trajs[i], format_label("n=", caps[i])));
    ptrs.push_back(&trajs[i]);
  }
  report.distances = distance_matrix(ptrs, window);

  std::vector<double> consecutive;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    consecutive.push_back(report.distances[k][k + 1]);
  }
  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < consecutive.size(); ++k) {
    decreasing = decreasing && (consecutive[k + 1] < consecutive[k] ||
                                consecutive[k + 1] <= 1e-14);
  }

  // The fractional-power gradient ceiling carries no data factor, so one
  // bound value must cover every cap level.
  const GrowthEnvelope envelope = derived_envelopes(spec, cert);
  bool uniform = true;
  double worst_ratio = 0.0;
  for (const Trajectory& traj : trajs) {
    const DerivedConstants consts =
        derive_constants(cert, envelope, traj.initial_sup, box.dim);
    for (const BoundReport& row : check_grad_decay(traj, consts)) {
      if (row.bound_id != "gradxind") continue;
      uniform = uniform && row.pass;
      if (row.bound_value > 0.0) {
        worst_ratio = std::max(worst_ratio, row.observed / row.bound_value);
      }
    }
  }

  report.details["caps"] = caps;
  report.details["consecutive_distances"] = consecutive;
  report.details["gradxind_uniform"] = uniform;
  report.details["gradxind_worst_ratio"] = worst_ratio;
  report.verdict = decreasing && uniform;
  return report;
}

nlohmann::json sweep_to_json(const SweepReport& report) {
  nlohmann::json j{{"kind", report.kind},
                   {"verdict", report.verdict},
                   {"runs", report.runs},
                   {"distances", report.distances},
                   {"details", report.details}};
  if (report.rate_fit) {
    j["rate_fit"] = {{"slope", report.rate_fit->slope},
                     {"intercept", report.rate_fit->intercept},
                     {"residual", report.rate_fit->residual}};
  }
  return j;
}

std::string distances_to_csv(const SweepReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "label";
  for (const auto& run : report.runs) {
    os << ',' << run.at("label").get<std::string>();
  }
  os << '\n';
  for (std::size_t i = 0; i < report.distances.size(); ++i) {
    os << report.runs.at(i).at("label").get<std::string>();
    for (const double v : report.distances[i]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

}  // namespace hjlab
