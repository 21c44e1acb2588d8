#include <hjlab/experiment.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include <hjlab/bounds.hpp>
#include <hjlab/evolve.hpp>
#include <hjlab/field.hpp>
#include <hjlab/hamiltonian.hpp>
#include <hjlab/sweep.hpp>

namespace hjlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

/// Running tally of every audited outcome, flushed into summary.json.
struct Tally {
  int pass = 0;
  int fail = 0;
  std::optional<double> worst_margin;

  void add(bool ok) { (ok ? pass : fail) += 1; }
  void add(const std::vector<BoundReport>& rows) {
    for (const BoundReport& r : rows) {
      add(r.pass);
      if (!worst_margin || r.margin < *worst_margin) worst_margin = r.margin;
    }
  }
  json to_json(const std::string& error = {}) const {
    json j{{"pass_count", pass},
           {"fail_count", fail},
           {"worst_margin", worst_margin.value_or(0.0)}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

json violation_json(const CertificationViolation& v) {
  return json{{"rho", v.rho},
              {"eta", v.eta},
              {"theta_value", v.theta_value},
              {"bound_value", v.bound_value}};
}

/// Compares each snapshot of a zero-Hamiltonian run against the exact
/// periodic heat solution of the cosine profile: the spatial mean persists
/// while the single cosine mode decays at rate epsilon (2 pi / L)^2.
std::vector<BoundReport> check_heat_error(const ExperimentConfig& cfg,
                                          const Trajectory& traj,
                                          double tol) {
  const bool fits = std::holds_alternative<NullH>(cfg.spec) && cfg.box &&
                    cfg.box->dim == 1 && cfg.initial_preset == "cosine" &&
                    cfg.solve.epsilon > 0.0;
  if (!fits) {
    throw std::invalid_argument(
        "heat_error needs the null Hamiltonian, a 1-D cosine initial "
        "profile, and positive viscosity");
  }
  const double amp = cfg.initial_params.at("amplitude");
  const Box& box = *cfg.box;
  const double k = 2.0 * std::numbers::pi / box.side_length;
  std::vector<BoundReport> rows;
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const double decay = std::exp(-cfg.solve.epsilon * k * k * traj.times[s]);
    const Field& f = traj.snapshots[s];
    double err = 0.0;
    for (int i = 0; i < box.resolution; ++i) {
      const double exact =
          0.5 * amp * (1.0 + decay * std::cos(k * box.coord(i)));
      err = std::max(err, std::abs(f.at(i) - exact));
    }
    rows.push_back(make_report("heat_error", traj.times[s], err, tol, 0.0));
  }
  return rows;
}

/// Runs every check named in [audits] and returns the combined rows.
/// Invalid audit parameters surface as the library's invalid_argument /
/// domain_error and are mapped to exit 2 by the caller.
std::vector<BoundReport> run_audits(const ExperimentConfig& cfg,
                                    const Trajectory& traj,
                                    const PCertificate& cert,
                                    bool have_cert) {
  const AuditSection& au = cfg.audits;
  const std::set<std::string> ids(au.checks.begin(), au.checks.end());
  std::vector<BoundReport> rows;
  if (ids.empty()) return rows;

  std::optional<DerivedConstants> consts;
  const auto need_consts = [&]() -> const DerivedConstants& {
    if (!consts) {
      if (!have_cert) {
        throw std::invalid_argument(
            "decay checks need a single certified Hamiltonian");
      }
      consts = derive_constants(cert, derived_envelopes(cfg.spec, cert),
                                traj.initial_sup,
                                traj.snapshots.front().box.dim);
    }
    return *consts;
  };
  const auto keep = [&](std::vector<BoundReport> fresh) {
    for (BoundReport& row : fresh)
      if (ids.count(row.bound_id) != 0) rows.push_back(std::move(row));
  };

  if (ids.count("gradx") != 0 || ids.count("gradxind") != 0)
    keep(check_grad_decay(traj, need_consts(), au.grad_slack, au.grad_t_min));
  if (ids.count("dudtpl") != 0 || ids.count("dudtmn") != 0 ||
      ids.count("vdt_upper") != 0) {
    keep(check_dt_bounds(traj, need_consts(), au.time_slack, au.dt_t_min,
                         au.dt_t_max));
  }
  if (ids.count("t_minus_one") != 0) {
    rows.push_back(check_dt_homogeneous(traj, au.homogeneous_rho,
                                        au.homogeneous_samples)
                       .report);
  }
  if (ids.count("holder_t") != 0) {
    if (au.holder_h.empty())
      throw std::invalid_argument("holder_t needs holder_h values in [audits]");
    rows.push_back(
        check_time_holder(traj, need_consts(), au.holder_base_t, au.holder_h)
            .report);
  }
  if (ids.count("ball_mass") != 0) {
    if (au.ball_radii.empty()) {
      throw std::invalid_argument(
          "ball_mass needs ball_radii values in [audits]");
    }
    std::vector<BallSpec> balls;
    for (double r : au.ball_radii) balls.push_back({{0.0, 0.0}, r});
    const BallMassReport rep =
        check_ball_mass(traj, balls, au.ball_s, au.ball_t, au.ball_ceiling);
    rows.insert(rows.end(), rep.rows.begin(), rep.rows.end());
  }
  if (ids.count("heat_error") != 0) keep(check_heat_error(cfg, traj, au.heat_tol));
  return rows;
}

SweepReport run_sweep_stage(const ExperimentConfig& cfg, const Field* phi,
                            const PCertificate& cert, bool have_cert) {
  if (!have_cert && !std::holds_alternative<NullH>(cfg.spec)) {
    throw std::invalid_argument(
        "sweeps need a single certified Hamiltonian, not a batch");
  }
  const SweepSection& sw = *cfg.sweep;
  const SweepWindow window{sw.window_times, sw.interior_fraction};
  if (sw.kind == "vanishing_viscosity") {
    std::optional<Field> ref;
    if (sw.ref_refine > 1) {
      Box rbox = *cfg.box;
      rbox.resolution *= sw.ref_refine;
      ref = make_initial(rbox, cfg.initial_preset, cfg.initial_params);
    }
    return run_vv_sweep(*phi, cfg.spec, cert, sw.eps_list, window, cfg.solve,
                        ref ? &*ref : nullptr);
  }
  return truncation_harness(*cfg.box, sw.growth, sw.caps, cfg.spec, cert,
                            cfg.solve, window);
}

}  // namespace

ExperimentResult run_experiment(const std::string& config_path, RunMode mode) {
  ExperimentConfig cfg;
  try {
    cfg = parse_experiment_config(config_path);
  } catch (const ConfigError& e) {
    return {2, e.what(), ""};
  }
  return run_experiment(cfg, mode);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, RunMode mode) {
  const fs::path dir(cfg.output_dir);
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    return {2, std::string("cannot create output directory: ") + e.what(), ""};
  }

  Tally tally;
  const auto finish = [&](int code, std::string msg,
                          const std::string& error = {}) -> ExperimentResult {
    write_json(dir / "summary.json", tally.to_json(error));
    return {code, std::move(msg), dir.string()};
  };
  const auto verdict_message = [&]() {
    std::string msg = std::to_string(tally.pass) + " check(s) passed, " +
                      std::to_string(tally.fail) + " failed";
    return msg + "; artifacts in " + dir.string();
  };

  // --- Certification ------------------------------------------------------
  PCertificate cert;
  bool have_cert = false;
  if (std::holds_alternative<NullH>(cfg.spec)) {
    write_json(dir / "certificate.json", json{{"kind", "null"}});
  } else if (!cfg.cert_p_list.empty()) {
    json batch = json::array();
    for (double p : cfg.cert_p_list) {
      json entry{{"p", p}};
      try {
        entry["certificate"] = certify(PurePower{p});
        tally.add(true);
      } catch (const CertificationError& e) {
        entry["error"] = e.what();
        entry["violation"] = violation_json(e.violation);
        tally.add(false);
      }
      batch.push_back(std::move(entry));
    }
    write_json(dir / "certificate.json", batch);
  } else {
    try {
      cert = certify(cfg.spec);
      have_cert = true;
      write_json(dir / "certificate.json", json(cert));
      tally.add(true);
    } catch (const CertificationError& e) {
      write_json(dir / "certificate.json",
                 json{{"error", e.what()},
                      {"violation", violation_json(e.violation)}});
      tally.add(false);
      return finish(1, std::string("certificate audit failed: ") + e.what());
    } catch (const std::invalid_argument& e) {
      return finish(2, e.what(), e.what());
    }
  }

  if (mode == RunMode::CertifyOnly || !cfg.runnable) {
    if (mode == RunMode::SweepOnly && cfg.sweep) {
      // Fall through below: a truncation sweep runs without [initial]/[solve].
    } else {
      return finish(tally.fail > 0 ? 1 : 0, verdict_message());
    }
  }

  // --- Initial data and main solve ---------------------------------------
  std::optional<Field> phi;
  if (cfg.runnable) {
    try {
      phi = make_initial(*cfg.box, cfg.initial_preset, cfg.initial_params);
    } catch (const std::invalid_argument& e) {
      return finish(2, e.what(), e.what());
    }
  }

  Trajectory traj;
  const bool solved = cfg.runnable && mode != RunMode::SweepOnly;
  if (solved) {
    try {
      traj = cfg.solve.epsilon > 0.0
                 ? solve_viscous(*phi, cfg.spec, cfg.solve)
                 : solve_inviscid(*phi, cfg.spec, cfg.solve);
    } catch (const StabilityError& e) {
      return finish(3, std::string("solver instability: ") + e.what(),
                    e.what());
    } catch (const BudgetError& e) {
      return finish(3, std::string("step budget exhausted: ") + e.what(),
                    e.what());
    } catch (const std::invalid_argument& e) {
      return finish(2, e.what(), e.what());
    }
    write_trajectory(traj, (dir / "trajectory").string());
  }

  if (mode == RunMode::SolveOnly)
    return finish(tally.fail > 0 ? 1 : 0, verdict_message());

  // --- Bound audits -------------------------------------------------------
  if (solved) {
    std::vector<BoundReport> rows;
    try {
      rows = run_audits(cfg, traj, cert, have_cert);
    } catch (const std::exception& e) {
      return finish(2, std::string("audit setup failed: ") + e.what(),
                    e.what());
    }
    tally.add(rows);
    write_text(dir / "bounds.csv", reports_to_csv(rows));
  }

  // --- Optional sweep -----------------------------------------------------
  if (cfg.sweep) {
    SweepReport sweep;
    try {
      sweep = run_sweep_stage(cfg, phi ? &*phi : nullptr, cert, have_cert);
    } catch (const StabilityError& e) {
      return finish(3, std::string("solver instability: ") + e.what(),
                    e.what());
    } catch (const BudgetError& e) {
      return finish(3, std::string("step budget exhausted: ") + e.what(),
                    e.what());
    } catch (const std::exception& e) {
      return finish(2, std::string("sweep setup failed: ") + e.what(),
                    e.what());
    }
    write_json(dir / "sweep.json", sweep_to_json(sweep));
    write_text(dir / "sweep_distances.csv", distances_to_csv(sweep));
    tally.add(sweep.verdict);
  } else if (mode == RunMode::SweepOnly) {
    return finish(2, "config has no [sweep] section",
                  "config has no [sweep] section");
  }

  return finish(tally.fail > 0 ? 1 : 0, verdict_message());
}

}  // namespace hjlab
