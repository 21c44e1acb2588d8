/// @file evolve.cpp
/// @brief Explicit monotone time integration and the Hopf-Lax oracle.

#include "hjlab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hjlab {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Max of 2 r Phi_eta'(r^2) over [0, r_max] for one power term of exponent p
/// (unit weight).  The profile p*r*(r^2+eta^2)^{p/2-1} is increasing for
/// p >= 1; for p < 1 it peaks at r = eta/sqrt(1-p).
double term_speed_bound(double p, double eta, double r_max) {
  if (r_max <= 0.0) return 0.0;
  double r = r_max;
  if (p < 1.0) {
    require(eta > 0.0, "speed_bound: flat regime requires a positive smoothing eta");
    r = std::min(r_max, eta / std::sqrt(1.0 - p));
  }
  const double rho = r * r + eta * eta;
  if (rho == 0.0) return 0.0;
  return p * r * std::pow(rho, 0.5 * p - 1.0);
}

/// Smoothed integrand on the squared gradient; eta = 0 falls back to the raw
/// Hamiltonian (steep regime only, where it is locally Lipschitz).
double integrand(const HamiltonianSpec& spec, double eta, double rho) {
  if (eta > 0.0) return eval_phi_eta(spec, eta, rho);
  return rho == 0.0 ? 0.0 : eval_h(spec, std::sqrt(rho));
}

/// One fused explicit-Euler pass.  Reads `v`, writes `out`; reports the sup of
/// the upwind gradient magnitude of `v` (computed before the update) and the
/// first non-finite output node, if any.
struct StepOutcome {
  double grad_sup = 0.0;
  std::ptrdiff_t bad_node = -1;
};

template <class PhiFn>
StepOutcome fused_step(const Box& box, const std::vector<double>& v,
                       std::vector<double>& out, double epsilon, double dt,
                       PhiFn&& phi_of_rho) {
  StepOutcome outcome;
  const int n = box.resolution;
  const double inv_dx = 1.0 / box.dx();
  const double inv_dx2 = inv_dx * inv_dx;
  double rho_sup = 0.0;

  const auto upwind = [](double dm, double dp) {
    return std::max({dm, -dp, 0.0});
  };

  if (box.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double c = v[i];
      const double vp = v[i + 1 == n ? 0 : i + 1];
      const double vm = v[i == 0 ? n - 1 : i - 1];
      const double g = upwind((c - vm) * inv_dx, (vp - c) * inv_dx);
      const double rho = g * g;
      rho_sup = std::max(rho_sup, rho);
      double rhs = -phi_of_rho(rho);
      if (epsilon > 0.0) rhs += epsilon * (vp - 2.0 * c + vm) * inv_dx2;
      const double nv = c + dt * rhs;
      out[i] = nv;
      if (!std::isfinite(nv) && outcome.bad_node < 0) outcome.bad_node = i;
    }
  } else {
    for (int j = 0; j < n; ++j) {
      const int jp = j + 1 == n ? 0 : j + 1;
      const int jm = j == 0 ? n - 1 : j - 1;
      const std::size_t row = static_cast<std::size_t>(j) * n;
      const std::size_t rowp = static_cast<std::size_t>(jp) * n;
      const std::size_t rowm = static_cast<std::size_t>(jm) * n;
      for (int i = 0; i < n; ++i) {
        const int ip = i + 1 == n ? 0 : i + 1;
        const int im = i == 0 ? n - 1 : i - 1;
        const double c = v[row + i];
        const double vxp = v[row + ip];
        const double vxm = v[row + im];
        const double vyp = v[rowp + i];
        const double vym = v[rowm + i];
        const double gx = upwind((c - vxm) * inv_dx, (vxp - c) * inv_dx);
        const double gy = upwind((c - vym) * inv_dx, (vyp - c) * inv_dx);
        const double rho = gx * gx + gy * gy;
        rho_sup = std::max(rho_sup, rho);
        double rhs = -phi_of_rho(rho);
        if (epsilon > 0.0)
          rhs += epsilon * (vxp + vxm + vyp + vym - 4.0 * c) * inv_dx2;
        const double nv = c + dt * rhs;
        out[row + i] = nv;
        if (!std::isfinite(nv) && outcome.bad_node < 0)
          outcome.bad_node = static_cast<std::ptrdiff_t>(row) + i;
      }
    }
  }
  outcome.grad_sup = std::sqrt(rho_sup);
  return outcome;
}

/// Dispatches the fused step to a specialized integrand when the algebra
/// collapses (zero Hamiltonian; quadratic power with no smoothing).
StepOutcome dispatch_step(const Box& box, const std::vector<double>& v,
                          std::vector<double>& out,
                          const HamiltonianSpec& spec, double epsilon,
                          double eta, double dt) {
  if (std::holds_alternative<NullH>(spec))
    return fused_step(box, v, out, epsilon, dt, [](double) { return 0.0; });
  if (const auto* pp = std::get_if<PurePower>(&spec);
      pp && pp->p == 2.0 && eta == 0.0)
    return fused_step(box, v, out, epsilon, dt, [](double rho) { return rho; });
  return fused_step(box, v, out, epsilon, dt, [&](double rho) {
    return integrand(spec, eta, rho);
  });
}

/// Sup of the upwind gradient magnitude (same stencil the stepper uses).
double upwind_grad_sup(const Box& box, const std::vector<double>& v) {
  const int n = box.resolution;
  const double inv_dx = 1.0 / box.dx();
  double rho_sup = 0.0;
  const auto upwind = [](double dm, double dp) {
    return std::max({dm, -dp, 0.0});
  };
  if (box.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double c = v[i];
      const double vp = v[i + 1 == n ? 0 : i + 1];
      const double vm = v[i == 0 ? n - 1 : i - 1];
      const double g = upwind((c - vm) * inv_dx, (vp - c) * inv_dx);
      rho_sup = std::max(rho_sup, g * g);
    }
  } else {
    for (int j = 0; j < n; ++j) {
      const int jp = j + 1 == n ? 0 : j + 1;
      const int jm = j == 0 ? n - 1 : j - 1;
      const std::size_t row = static_cast<std::size_t>(j) * n;
      const std::size_t rowp = static_cast<std::size_t>(jp) * n;
      const std::size_t rowm = static_cast<std::size_t>(jm) * n;
      for (int i = 0; i < n; ++i) {
        const int ip = i + 1 == n ? 0 : i + 1;
        const int im = i == 0 ? n - 1 : i - 1;
        const double c = v[row + i];
        const double gx = upwind((c - v[row + im]) * inv_dx, (v[row + ip] - c) * inv_dx);
        const double gy = upwind((c - v[rowm + i]) * inv_dx, (v[rowp + i] - c) * inv_dx);
        rho_sup = std::max(rho_sup, gx * gx + gy * gy);
      }
    }
  }
  return std::sqrt(rho_sup);
}

void validate_config(const SolveConfig& config) {
  require(config.epsilon >= 0.0, "solve: epsilon must be >= 0");
  require(config.eta >= 0.0, "solve: eta must be >= 0");
  require(config.t_end > 0.0, "solve: t_end must be positive");
  require(config.cfl_safety > 0.0 && config.cfl_safety <= 1.0,
          "solve: cfl_safety must lie in (0, 1]");
  require(config.alpha_margin >= 1.0, "solve: alpha_margin must be >= 1");
  require(!config.snapshot_times.empty(), "solve: snapshot_times must be nonempty");
  double prev = 0.0;
  for (double t : config.snapshot_times) {
    require(t > prev, "solve: snapshot_times must be strictly increasing and positive");
    prev = t;
  }
  require(prev <= config.t_end * (1.0 + 1e-12),
          "solve: snapshot_times must not exceed t_end");
  require(config.max_steps > 0, "solve: max_steps must be positive");
}

Trajectory run_solver(const Field& phi, const HamiltonianSpec& spec,
                      const SolveConfig& config) {
  validate_field(phi);
  validate_spec(spec);
  validate_config(config);

  const bool null_h = std::holds_alternative<NullH>(spec);
  if (!null_h) {
    require(config.epsilon <= 0.5,
            "solve: viscosity above the 0.5 ceiling is outside the validated regime");
  }
  double eta = config.eta;
  if (!null_h && governing_exponent(spec) < 1.0 && eta == 0.0) {
    require(config.epsilon == 0.0,
            "solve: flat regime with epsilon > 0 requires an explicit eta > 0");
    eta = phi.box.dx();  // grid-scale smoothing keeps the speed bound finite
  }

  Trajectory traj;
  traj.config = config;
  traj.spec = spec;
  traj.initial_sup = sup_metrics(phi).sup_norm;

  std::vector<double> v = phi.values;
  std::vector<double> next(v.size());
  const double tol_t = 1e-12 * std::max(1.0, config.t_end);

  // Integration targets: every snapshot, then the horizon.
  std::vector<double> targets = config.snapshot_times;
  if (targets.back() < config.t_end - tol_t) targets.push_back(config.t_end);

  double t = 0.0;
  std::int64_t steps = 0;
  double grad_sup = upwind_grad_sup(phi.box, v);

  for (double target : targets) {
    while (t < target - tol_t) {
      const double dt_max = stable_dt(phi.box, spec, config.epsilon, eta,
                                      grad_sup, config.cfl_safety,
                                      config.alpha_margin, config.t_end);
      const double dt = std::min(dt_max, target - t);
      const StepOutcome outcome =
          dispatch_step(phi.box, v, next, spec, config.epsilon, eta, dt);
      if (outcome.bad_node >= 0)
        throw StabilityError("solve: non-finite value produced", t + dt,
                             static_cast<std::size_t>(outcome.bad_node));
      v.swap(next);
      grad_sup = upwind_grad_sup(phi.box, v);
      t += dt;
      if (++steps > config.max_steps)
        throw BudgetError("solve: step budget exhausted before t_end");
    }
    t = target;
    const bool is_snapshot =
        std::find_if(config.snapshot_times.begin(), config.snapshot_times.end(),
                     [&](double s) { return std::abs(s - target) <= tol_t; }) !=
        config.snapshot_times.end();
    if (is_snapshot) {
      traj.times.push_back(target);
      traj.snapshots.push_back(Field{phi.box, v});
    }
  }
  return traj;
}

}  // namespace

double upwind_grad_sup(const Field& f) {
  validate_field(f);
  return upwind_grad_sup(f.box, f.values);
}

double speed_bound(const HamiltonianSpec& spec, double eta, double r_max) {
  validate_spec(spec);
  require(eta >= 0.0, "speed_bound: eta must be >= 0");
  require(r_max >= 0.0, "speed_bound: r_max must be >= 0");
  if (std::holds_alternative<NullH>(spec)) return 0.0;
  if (const auto* pp = std::get_if<PurePower>(&spec))
    return term_speed_bound(pp->p, eta, r_max);
  if (const auto* ps = std::get_if<PowerSum>(&spec)) {
    double sum = 0.0;
    for (const auto& t : ps->terms)
      sum += t.weight * term_speed_bound(t.p, eta, r_max);
    return sum;
  }
  const auto& px = std::get<PowerPlusShifted>(spec);
  double alpha = term_speed_bound(px.p, eta, r_max);
  if (r_max > px.threshold)
    alpha += px.q * std::pow(r_max - px.threshold, px.q - 1.0);
  return alpha;
}

double stable_dt(const Box& box, const HamiltonianSpec& spec, double epsilon,
                 double eta, double grad_bound, double cfl_safety,
                 double alpha_margin, double t_end) {
  validate_box(box);
  require(epsilon >= 0.0, "stable_dt: epsilon must be >= 0");
  require(grad_bound >= 0.0, "stable_dt: grad_bound must be >= 0");
  require(cfl_safety > 0.0 && cfl_safety <= 1.0,
          "stable_dt: cfl_safety must lie in (0, 1]");
  require(alpha_margin >= 1.0, "stable_dt: alpha_margin must be >= 1");
  require(t_end > 0.0, "stable_dt: t_end must be positive");
  const double dx = box.dx();
  const double alpha = speed_bound(spec, eta, alpha_margin * grad_bound);
  const double denom =
      2.0 * box.dim * epsilon / (dx * dx) + box.dim * alpha / dx;
  if (denom == 0.0) return t_end;  // stationary field
  return cfl_safety / denom;
}

Field step_viscous(const Field& f, const HamiltonianSpec& spec, double epsilon,
                   double eta, double dt) {
  validate_field(f);
  validate_spec(spec);
  require(epsilon >= 0.0, "step_viscous: epsilon must be >= 0");
  require(eta >= 0.0, "step_viscous: eta must be >= 0");
  require(dt > 0.0 && std::isfinite(dt), "step_viscous: dt must be positive");
  Field out = make_field(f.box);
  const StepOutcome outcome =
      dispatch_step(f.box, f.values, out.values, spec, epsilon, eta, dt);
  if (outcome.bad_node >= 0)
    throw StabilityError("step_viscous: non-finite value produced", dt,
                         static_cast<std::size_t>(outcome.bad_node));
  return out;
}

Trajectory solve_viscous(const Field& phi, const HamiltonianSpec& spec,
                         const SolveConfig& config) {
  require(config.epsilon > 0.0, "solve_viscous: epsilon must be positive");
  if (!std::holds_alternative<NullH>(spec) && governing_exponent(spec) < 1.0)
    require(config.eta > 0.0,
            "solve_viscous: flat regime requires a positive eta");
  return run_solver(phi, spec, config);
}

Trajectory solve_inviscid(const Field& phi, const HamiltonianSpec& spec,
                          const SolveConfig& config) {
  require(config.epsilon == 0.0, "solve_inviscid: epsilon must be zero");
  return run_solver(phi, spec, config);
}

Field hopf_lax_oracle(const Field& phi, double t, double p) {
  validate_field(phi);
  if (p <= 1.0)
    throw std::invalid_argument(
        "hopf_lax_oracle: requires a convex power exponent p > 1");
  if (t <= 0.0) throw std::domain_error("hopf_lax_oracle: time must be positive");

  const Box& box = phi.box;
  const int n = box.resolution;
  const double dx = box.dx();
  const double conj = p / (p - 1.0);
  const double pref = (p - 1.0) * std::pow(p, -conj);
  // Cost of a displacement of k cells along one axis (periodic wrap).
  const auto axis_delta = [&](int k) {
    double d = k * dx;
    if (d > 0.5 * box.side_length) d -= box.side_length;
    return d;
  };
  const auto lagrangian = [&](double dist) {
    if (dist == 0.0) return 0.0;
    return t * pref * std::pow(dist / t, conj);
  };

  Field out = make_field(box);
  if (box.dim == 1) {
    std::vector<double> cost(n);
    for (int k = 0; k < n; ++k) cost[k] = lagrangian(std::abs(axis_delta(k)));
    for (int i = 0; i < n; ++i) {
      double best = phi.at(i);  // zero-displacement candidate
      for (int jj = 0; jj < n; ++jj) {
        const int k = i - jj < 0 ? i - jj + n : i - jj;
        best = std::min(best, phi.at(jj) + cost[k]);
      }
      out.at(i) = best;
    }
    return out;
  }

  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int kj = 0; kj < n; ++kj)
    for (int ki = 0; ki < n; ++ki)
      cost[static_cast<std::size_t>(kj) * n + ki] =
          lagrangian(std::hypot(axis_delta(ki), axis_delta(kj)));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double best = phi.at(i, j);
      for (int jj = 0; jj < n; ++jj) {
        const int kj = j - jj < 0 ? j - jj + n : j - jj;
        const std::size_t row = static_cast<std::size_t>(kj) * n;
        for (int ii = 0; ii < n; ++ii) {
          const int ki = i - ii < 0 ? i - ii + n : i - ii;
          best = std::min(best, phi.at(ii, jj) + cost[row + ki]);
        }
      }
      out.at(i, j) = best;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json box_to_json(const Box& box) {
  return {{"dim", box.dim},
          {"side_length", box.side_length},
          {"resolution", box.resolution}};
}

Box box_from_json(const nlohmann::json& j) {
  Box box;
  j.at("dim").get_to(box.dim);
  j.at("side_length").get_to(box.side_length);
  j.at("resolution").get_to(box.resolution);
  validate_box(box);
  return box;
}

Field field_from_csv(const Box& box, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trajectory: cannot open " + path);
  Field f = make_field(box);
  std::string line;
  std::getline(in, line);  // header
  const int value_col = box.dim == 1 ? 2 : 4;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < value_col; ++c) std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    if (row >= f.values.size())
      throw std::runtime_error("read_trajectory: too many rows in " + path);
    f.values[row++] = std::stod(cell);
  }
  if (row != f.values.size())
    throw std::runtime_error("read_trajectory: row count mismatch in " + path);
  return f;
}

}  // namespace

void write_trajectory(const Trajectory& traj, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["epsilon"] = traj.config.epsilon;
  manifest["eta"] = traj.config.eta;
  manifest["t_end"] = traj.config.t_end;
  manifest["cfl_safety"] = traj.config.cfl_safety;
  manifest["alpha_margin"] = traj.config.alpha_margin;
  manifest["hamiltonian"] = spec_to_json(traj.spec);
  manifest["initial_sup"] = traj.initial_sup;
  manifest["times"] = traj.times;
  if (!traj.snapshots.empty()) manifest["box"] = box_to_json(traj.snapshots.front().box);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshot_" << (k < 10 ? "00" : k < 100 ? "0" : "") << k << ".csv";
    files.push_back(name.str());
    write_field_csv(traj.snapshots[k], (fs::path(dir) / name.str()).string());
  }
  manifest["snapshot_files"] = files;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("write_trajectory: cannot open manifest");
  out << manifest.dump(2) << '\n';
}

Trajectory read_trajectory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("read_trajectory: cannot open manifest");
  nlohmann::json manifest;
  in >> manifest;

  Trajectory traj;
  traj.config.epsilon = manifest.at("epsilon").get<double>();
  traj.config.eta = manifest.at("eta").get<double>();
  traj.config.t_end = manifest.at("t_end").get<double>();
  traj.config.cfl_safety = manifest.at("cfl_safety").get<double>();
  traj.config.alpha_margin = manifest.at("alpha_margin").get<double>();
  traj.spec = spec_from_json(manifest.at("hamiltonian"));
  traj.initial_sup = manifest.at("initial_sup").get<double>();
  traj.times = manifest.at("times").get<std::vector<double>>();
  traj.config.snapshot_times = traj.times;
  const Box box = box_from_json(manifest.at("box"));
  for (const auto& name : manifest.at("snapshot_files"))
    traj.snapshots.push_back(
        field_from_csv(box, (fs::path(dir) / name.get<std::string>()).string()));
  if (traj.snapshots.size() != traj.times.size())
    throw std::runtime_error("read_trajectory: times and snapshots disagree");
  return traj;
}

}  // namespace hjlab
