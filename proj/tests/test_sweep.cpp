#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <functional>

#include "hjlab/evolve.hpp"
#include "hjlab/field.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/sweep.hpp"

using namespace hjlab;

namespace {

Trajectory synthetic(const Box& box, const std::vector<double>& times,
                     const std::function<double(double, double)>& value) {
  Trajectory traj;
  traj.spec = PurePower{2.0};
  traj.config.t_end = times.back();
  traj.config.snapshot_times = times;
  traj.times = times;
  for (const double t : times) {
    Field f = make_field(box);
    for (int i = 0; i < box.resolution; ++i) f.at(i) = value(box.coord(i), t);
    traj.snapshots.push_back(std::move(f));
  }
  traj.initial_sup = sup_metrics(traj.snapshots.front()).sup_norm;
  return traj;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (value)
      setenv("HJLAB_WORKERS", value, 1);
    else
      unsetenv("HJLAB_WORKERS");
  }
  ~EnvGuard() { unsetenv("HJLAB_WORKERS"); }
};

}  // namespace

TEST_CASE("worker pool width follows the environment") {
  {
    EnvGuard g("3");
    CHECK(worker_count() == 3);
  }
  {
    EnvGuard g("200");
    CHECK(worker_count() == 64);
  }
  {
    EnvGuard g("0");
    CHECK(worker_count() >= 1);
  }
  {
    EnvGuard g("soup");
    CHECK(worker_count() >= 1);
  }
  {
    EnvGuard g(nullptr);
    CHECK(worker_count() >= 1);
    CHECK(worker_count() <= 8);
  }
}

TEST_CASE("window distance: interior masking and nested grids") {
  const Box coarse{1, 4.0, 64};
  const Box fine{1, 4.0, 128};
  const auto wave = [](double x, double t) { return std::sin(x) + t; };

  // Same analytic data on nested grids agrees exactly at shared nodes.
  const auto a = synthetic(coarse, {0.5, 1.0}, wave);
  const auto b = synthetic(fine, {0.5, 1.0}, wave);
  const SweepWindow window{{0.5, 1.0}, 0.5};
  CHECK(window_distance(a, b, window) == 0.0);
  CHECK(window_distance(b, a, window) == 0.0);

  // Disagreement outside the inner half of the box is invisible.
  const auto masked = synthetic(coarse, {0.5, 1.0}, [&](double x, double t) {
    return wave(x, t) + (std::abs(x) >= 1.0 ? 10.0 : 0.5);
  });
  CHECK(window_distance(a, masked, window) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // Geometry and bookkeeping errors.
  const auto other_side = synthetic(Box{1, 5.0, 64}, {0.5, 1.0}, wave);
  CHECK_THROWS_AS(window_distance(a, other_side, window),
                  std::invalid_argument);
  const auto non_nested = synthetic(Box{1, 4.0, 96}, {0.5, 1.0}, wave);
  CHECK_THROWS_AS(window_distance(a, non_nested, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(window_distance(a, b, SweepWindow{{0.7}, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(window_distance(a, b, SweepWindow{{0.5}, 1.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(window_distance(a, b, SweepWindow{{}, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("vanishing viscosity: distances shrink with a near-classical rate") {
  Box box{1, 2.0 * M_PI, 128};
  const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  const SweepWindow window{{0.5, 1.0}, 0.5};
  const SweepReport rep =
      run_vv_sweep(phi, spec, cert, {0.2, 0.1, 0.05}, window);

  CHECK(rep.kind == "vanishing_viscosity");
  CHECK(rep.verdict);
  REQUIRE(rep.runs.size() == 4);
  CHECK(rep.runs.back().at("label") == "reference");
  CHECK(rep.runs.back().at("epsilon").get<double>() == 0.0);

  const auto& d = rep.distances;
  REQUIRE(d.size() == 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d[i][i] == 0.0);
    for (std::size_t j = 0; j < d.size(); ++j) {
      CHECK(d[i][j] == d[j][i]);
      CHECK(d[i][j] >= 0.0);
    }
  }
  CHECK(d[1][3] < d[0][3]);
  CHECK(d[2][3] < d[1][3]);

  REQUIRE(rep.rate_fit.has_value());
  CHECK(rep.rate_fit->slope >= 0.4);
  CHECK(rep.rate_fit->slope <= 1.5);

  // The variational oracle pins the inviscid reference down to scheme error.
  REQUIRE(rep.details.contains("hopf_lax_gap"));
  CHECK(rep.details.at("hopf_lax_gap").get<double>() <= 0.1);
}

TEST_CASE("vanishing viscosity: constant data degenerates to a clean pass") {
  Box box{1, 4.0, 64};
  Field phi = make_field(box);
  for (double& v : phi.values) v = 0.7;
  const HamiltonianSpec spec = PurePower{2.0};
  const SweepReport rep = run_vv_sweep(phi, spec, certify(spec),
                                       {0.1, 0.05, 0.025},
                                       SweepWindow{{0.5, 1.0}, 0.5});
  CHECK(rep.verdict);
  CHECK_FALSE(rep.rate_fit.has_value());
  for (const auto& row : rep.distances) {
    for (const double v : row) CHECK(v <= 1e-14);
  }
}

TEST_CASE("vanishing viscosity: refined reference grid") {
  Box box{1, 2.0 * M_PI, 64};
  Box box_fine{1, 2.0 * M_PI, 256};
  const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const Field phi_ref = make_initial(box_fine, "cosine", {{"amplitude", 1.0}});
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  const SweepWindow window{{0.5, 1.0}, 0.5};

  const SweepReport rep =
      run_vv_sweep(phi, spec, cert, {0.2, 0.1, 0.05}, window, {}, &phi_ref);
  CHECK(rep.verdict);
  CHECK(rep.runs.back().at("resolution").get<int>() == 256);

  const Field bad_ref = make_initial(Box{1, 2.0 * M_PI, 96}, "cosine",
                                     {{"amplitude", 1.0}});
  CHECK_THROWS_AS(
      run_vv_sweep(phi, spec, cert, {0.2, 0.1, 0.05}, window, {}, &bad_ref),
      std::invalid_argument);
}

TEST_CASE("vanishing viscosity: input validation") {
  Box box{1, 4.0, 64};
  const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  const SweepWindow window{{0.5}, 0.5};
  CHECK_THROWS_AS(run_vv_sweep(phi, spec, cert, {0.05, 0.1, 0.2}, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_vv_sweep(phi, spec, cert, {0.2, 0.1}, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_vv_sweep(phi, spec, cert, {0.2, 0.1, -0.05}, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      run_vv_sweep(phi, spec, cert, {0.2, 0.1, 0.05}, SweepWindow{{0.5}, 0.0}),
      std::invalid_argument);
}

TEST_CASE("comparison harness: enclosed cone stays below the bump") {
  Box box{1, 2.0 * M_PI, 128};
  const Field lo = make_initial(box, "cone",
                                {{"amplitude", 1.0}, {"r0", 1.5}});
  const Field hi = make_initial(box, "bump",
                                {{"amplitude", 2.0}, {"r0", 2.5}});
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  SolveConfig cfg;
  cfg.t_end = 1.0;
  cfg.snapshot_times = {0.25, 0.5, 1.0};

  const SweepReport rep = comparison_harness(lo, hi, spec, cert, cfg);
  CHECK(rep.kind == "comparison");
  CHECK(rep.verdict);
  CHECK(rep.details.at("max_order_violation").get<double>() <= 1e-12);
  REQUIRE(rep.runs.size() == 2);
  CHECK(rep.runs[0].at("label") == "lower");
  CHECK(rep.runs[1].at("label") == "upper");
  REQUIRE(rep.distances.size() == 2);
  CHECK(rep.distances[0][1] == rep.distances[1][0]);
  CHECK(rep.distances[0][1] > 0.0);
  CHECK_FALSE(rep.rate_fit.has_value());

  // Swapped arguments violate the ordering precondition.
  CHECK_THROWS_AS(comparison_harness(hi, lo, spec, cert, cfg),
                  std::invalid_argument);
}

TEST_CASE("comparison harness: identical and shifted data") {
  Box box{1, 2.0 * M_PI, 96};
  const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  SolveConfig cfg;
  cfg.t_end = 0.5;
  cfg.snapshot_times = {0.25, 0.5};

  const SweepReport same = comparison_harness(phi, phi, spec, cert, cfg);
  CHECK(same.verdict);
  CHECK(same.distances[0][1] == 0.0);

  // The flow only sees gradients: a constant offset survives exactly.
  Field shifted = phi;
  for (double& v : shifted.values) v += 0.5;
  const SweepReport shift = comparison_harness(phi, shifted, spec, cert, cfg);
  CHECK(shift.verdict);
  for (const double s : shift.details.at("diff_sup").get<std::vector<double>>())
    CHECK(std::abs(s - 0.5) <= 1e-12);
  for (const double s : shift.details.at("diff_min").get<std::vector<double>>())
    CHECK(std::abs(s - 0.5) <= 1e-12);
}

TEST_CASE("comparison harness: viscous pairs obey the maximum principle") {
  Box box{1, 2.0 * M_PI, 64};
  const Field lo = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const Field hi = make_initial(box, "cosine", {{"amplitude", 2.0}});
  SolveConfig cfg;
  cfg.epsilon = 0.05;
  cfg.t_end = 0.5;
  cfg.snapshot_times = {0.25, 0.5};
  const SweepReport rep =
      comparison_harness(lo, hi, PurePower{2.0}, certify(PurePower{2.0}), cfg);
  CHECK(rep.verdict);

  cfg.epsilon = 0.9;  // ceiling: diffusion must not dominate the audit regime
  CHECK_THROWS_AS(
      comparison_harness(lo, hi, PurePower{2.0}, certify(PurePower{2.0}), cfg),
      std::invalid_argument);
}

TEST_CASE("truncation harness: cap family settles inside the window") {
  const Box box{1, 12.0, 256};
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  SolveConfig cfg;
  cfg.epsilon = 0.1;
  const SweepWindow window{{0.5, 0.75}, 0.25};  // |x| < 1.5

  const SweepReport rep = truncation_harness(box, GrowthParams{1.0, 1.0},
                                             {1.0, 2.0, 4.0}, spec, cert, cfg,
                                             window);
  CHECK(rep.kind == "truncation");
  CHECK(rep.verdict);
  const auto consecutive =
      rep.details.at("consecutive_distances").get<std::vector<double>>();
  REQUIRE(consecutive.size() == 2);
  CHECK(consecutive[1] < consecutive[0]);
  CHECK(rep.details.at("gradxind_uniform").get<bool>());
  CHECK(rep.details.at("gradxind_worst_ratio").get<double>() <= 1.05);
  CHECK_FALSE(rep.rate_fit.has_value());
}

TEST_CASE("truncation harness: saturated caps coincide exactly") {
  const Box box{1, 12.0, 128};
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  SolveConfig cfg;
  cfg.epsilon = 0.1;
  const SweepWindow window{{0.5}, 0.25};
  // Caps above sup |x| = 6 leave the data untouched, so the two runs are the
  // same run.
  const SweepReport rep = truncation_harness(box, GrowthParams{1.0, 1.0},
                                             {20.0, 40.0}, spec, cert, cfg,
                                             window);
  CHECK(rep.verdict);
  CHECK(rep.distances[0][1] == 0.0);
}

TEST_CASE("truncation harness: order independence and determinism") {
  const Box box{1, 12.0, 96};
  const HamiltonianSpec spec = PurePower{2.0};
  const PCertificate cert = certify(spec);
  SolveConfig cfg;
  cfg.epsilon = 0.1;
  const SweepWindow window{{0.5}, 0.25};
  const GrowthParams growth{1.0, 1.0};

  const std::string sorted = sweep_to_json(
      truncation_harness(box, growth, {1.0, 2.0, 4.0}, spec, cert, cfg,
                         window)).dump();
  const std::string shuffled = sweep_to_json(
      truncation_harness(box, growth, {4.0, 1.0, 2.0}, spec, cert, cfg,
                         window)).dump();
  CHECK(sorted == shuffled);

  // Same config, different pool widths: bit-identical reports.
  std::string serial, parallel;
  {
    EnvGuard g("1");
    serial = sweep_to_json(truncation_harness(box, growth, {1.0, 2.0, 4.0},
                                              spec, cert, cfg, window)).dump();
  }
  {
    EnvGuard g("4");
    parallel = sweep_to_json(truncation_harness(box, growth, {1.0, 2.0, 4.0},
                                                spec, cert, cfg, window)).dump();
  }
  CHECK(serial == parallel);
  CHECK(serial == sorted);
}

TEST_CASE("truncation harness: input validation") {
  const Box box{1, 12.0, 64};
  const SweepWindow window{{0.5}, 0.25};
  SolveConfig cfg;
  cfg.epsilon = 0.1;
  const GrowthParams growth{1.0, 1.0};
  const HamiltonianSpec steep = PurePower{2.0};
  const HamiltonianSpec flat = PurePower{0.5};

  CHECK_THROWS_AS(truncation_harness(box, growth, {1.0, 2.0}, flat,
                                     certify(flat), cfg, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(truncation_harness(box, growth, {1.0}, steep,
                                     certify(steep), cfg, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(truncation_harness(box, growth, {2.0, 2.0}, steep,
                                     certify(steep), cfg, window),
                  std::invalid_argument);
  CHECK_THROWS_AS(truncation_harness(box, GrowthParams{-1.0, 1.0}, {1.0, 2.0},
                                     steep, certify(steep), cfg, window),
                  std::invalid_argument);
}

TEST_CASE("sweep serialization: JSON keys and distance CSV") {
  Box box{1, 2.0 * M_PI, 64};
  const Field phi = make_initial(box, "cosine", {{"amplitude", 1.0}});
  const HamiltonianSpec spec = PurePower{2.0};
  const SweepReport rep = run_vv_sweep(phi, spec, certify(spec),
                                       {0.2, 0.1, 0.05},
                                       SweepWindow{{0.5}, 0.5});
  const nlohmann::json j = sweep_to_json(rep);
  CHECK(j.at("kind") == "vanishing_viscosity");
  CHECK(j.contains("verdict"));
  CHECK(j.contains("runs"));
  CHECK(j.contains("distances"));
  CHECK(j.contains("rate_fit"));
  CHECK(j.at("rate_fit").contains("slope"));
  CHECK(j.at("rate_fit").contains("intercept"));
  CHECK(j.at("rate_fit").contains("residual"));

  const std::string csv = distances_to_csv(rep);
  CHECK(csv.rfind("label,eps=0.2,eps=0.1,eps=0.05,reference\n", 0) == 0);
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 5);  // header + one row per run
}
