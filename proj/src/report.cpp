// Renders human-readable artifacts (plain-text summary plus SVG plots) from
// an experiment output directory.  Every byte written is a pure function of
// the input files: fixed canvas geometry, fixed formatting precision, no
// timestamps — re-emitting over unchanged artifacts is byte-identical.
#include <hjlab/experiment.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <hjlab/bounds.hpp>
#include <hjlab/evolve.hpp>
#include <hjlab/field.hpp>
#include <hjlab/hamiltonian.hpp>

namespace hjlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Minimal deterministic SVG line charts (log-log axes)
// ---------------------------------------------------------------------------

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<std::array<double, 2>> pts;  ///< raw (x, y); only x,y > 0 plot
};

constexpr double kW = 640, kH = 420;
constexpr double kL = 70, kR = 610, kT = 40, kB = 370;

/// Log-log chart: positive points only, decade grid lines, legend, optional
/// annotation line under the x axis.  With no positive data anywhere the
/// frame and an explanatory note are drawn instead (constant-data runs).
std::string log_log_svg(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<Series>& series,
                        const std::string& annotation) {
  double lx0 = 0, lx1 = 0, ly0 = 0, ly1 = 0;
  bool any = false;
  for (const Series& s : series) {
    for (const auto& p : s.pts) {
      if (!(p[0] > 0.0) || !(p[1] > 0.0)) continue;
      const double lx = std::log10(p[0]), ly = std::log10(p[1]);
      if (!any) {
        lx0 = lx1 = lx;
        ly0 = ly1 = ly;
        any = true;
      } else {
        lx0 = std::min(lx0, lx);
        lx1 = std::max(lx1, lx);
        ly0 = std::min(ly0, ly);
        ly1 = std::max(ly1, ly);
      }
    }
  }

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH
     << "\">\n"
     << "<rect width=\"" << kW << "\" height=\"" << kH
     << "\" fill=\"white\"/>\n"
     << "<text x=\"" << (kW / 2)
     << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << title << "</text>\n"
     << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << (kR - kL)
     << "\" height=\"" << (kB - kT)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";

  if (!any) {
    os << "<text x=\"" << (kW / 2) << "\" y=\"" << ((kT + kB) / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"13\" fill=\"#666\">all values zero or absent: "
          "nothing to draw on log axes</text>\n";
    os << "</svg>\n";
    return os.str();
  }

  if (lx1 - lx0 < 1e-9) {
    lx0 -= 0.5;
    lx1 += 0.5;
  }
  if (ly1 - ly0 < 1e-9) {
    ly0 -= 0.5;
    ly1 += 0.5;
  }
  const double xpad = 0.04 * (lx1 - lx0), ypad = 0.07 * (ly1 - ly0);
  lx0 -= xpad;
  lx1 += xpad;
  ly0 -= ypad;
  ly1 += ypad;

  const auto px = [&](double x) {
    return kL + (std::log10(x) - lx0) / (lx1 - lx0) * (kR - kL);
  };
  const auto py = [&](double y) {
    return kB - (std::log10(y) - ly0) / (ly1 - ly0) * (kB - kT);
  };

  // Decade grid + tick labels; fall back to range endpoints when the span
  // contains no integer decade.
  const auto ticks = [](double lo, double hi) {
    std::vector<double> t;
    for (int k = static_cast<int>(std::ceil(lo - 1e-9));
         k <= static_cast<int>(std::floor(hi + 1e-9)); ++k)
      t.push_back(static_cast<double>(k));
    if (t.empty()) t = {lo, hi};
    return t;
  };
  for (const double t : ticks(lx0, lx1)) {
    const double x = kL + (t - lx0) / (lx1 - lx0) * (kR - kL);
    os << "<line x1=\"" << fmt(x) << "\" y1=\"" << kT << "\" x2=\"" << fmt(x)
       << "\" y2=\"" << kB << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << fmt(x) << "\" y=\"" << (kB + 16)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(std::pow(10.0, t)) << "</text>\n";
  }
  for (const double t : ticks(ly0, ly1)) {
    const double y = kB - (t - ly0) / (ly1 - ly0) * (kB - kT);
    os << "<line x1=\"" << kL << "\" y1=\"" << fmt(y) << "\" x2=\"" << kR
       << "\" y2=\"" << fmt(y) << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << (kL - 6) << "\" y=\"" << fmt(y + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(std::pow(10.0, t)) << "</text>\n";
  }
  os << "<text x=\"" << ((kL + kR) / 2) << "\" y=\"" << (kB + 34)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\">"
     << x_label << "</text>\n"
     << "<text x=\"16\" y=\"" << ((kT + kB) / 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\" transform=\"rotate(-90 16 "
     << ((kT + kB) / 2) << ")\">" << y_label << "</text>\n";

  for (const Series& s : series) {
    std::vector<std::array<double, 2>> pos;
    for (const auto& p : s.pts)
      if (p[0] > 0.0 && p[1] > 0.0) pos.push_back(p);
    if (pos.empty()) continue;
    if (pos.size() == 1) {
      os << "<circle cx=\"" << fmt(px(pos[0][0])) << "\" cy=\""
         << fmt(py(pos[0][1])) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      continue;
    }
    os << "<polyline fill=\"none\" stroke=\"" << s.color
       << "\" stroke-width=\"1.6\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << " points=\"";
    for (const auto& p : pos)
      os << fmt(px(p[0])) << ',' << fmt(py(p[1])) << ' ';
    os << "\"/>\n";
  }

  double ly_row = kT + 14;
  for (const Series& s : series) {
    bool has = false;
    for (const auto& p : s.pts) has = has || (p[0] > 0.0 && p[1] > 0.0);
    if (!has) continue;
    os << "<line x1=\"" << (kR - 150) << "\" y1=\"" << fmt(ly_row - 4)
       << "\" x2=\"" << (kR - 126) << "\" y2=\"" << fmt(ly_row - 4)
       << "\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << "/>\n<text x=\"" << (kR - 120) << "\" y=\"" << fmt(ly_row)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
       << "</text>\n";
    ly_row += 15;
  }

  if (!annotation.empty()) {
    os << "<text x=\"" << (kL + 4) << "\" y=\"" << (kH - 8)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">"
       << annotation << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::optional<json> read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return j;
}

std::optional<std::string> read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Observed sup |grad v| per snapshot, with no constants needed.
std::vector<std::array<double, 2>> observed_grad_series(const Trajectory& t) {
  std::vector<std::array<double, 2>> pts;
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    pts.push_back(
        {t.times[k], sup_metrics(grad_mag_central(t.snapshots[k])).sup_norm});
  }
  return pts;
}

/// Observed sup of the positive/negative rate parts at snapshot midpoints.
void observed_rate_series(const Trajectory& t,
                          std::vector<std::array<double, 2>>& pos,
                          std::vector<std::array<double, 2>>& neg) {
  for (std::size_t k = 0; k + 1 < t.times.size(); ++k) {
    const double dt = t.times[k + 1] - t.times[k];
    const double mid = 0.5 * (t.times[k] + t.times[k + 1]);
    double up = 0.0, down = 0.0;
    const auto& a = t.snapshots[k].values;
    const auto& b = t.snapshots[k + 1].values;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double rate = (b[i] - a[i]) / dt;
      up = std::max(up, rate);
      down = std::max(down, -rate);
    }
    pos.push_back({mid, up});
    neg.push_back({mid, down});
  }
}

}  // namespace

int emit_report(const std::string& artifact_dir) {
  const fs::path dir(artifact_dir);

  Trajectory traj;
  try {
    traj = read_trajectory((dir / "trajectory").string());
  } catch (const std::exception&) {
    return 2;  // missing or unreadable trajectory manifest
  }

  const std::optional<json> cert_json =
      read_json_file(dir / "certificate.json");
  const std::optional<json> summary = read_json_file(dir / "summary.json");
  const std::optional<json> sweep = read_json_file(dir / "sweep.json");
  const std::optional<std::string> bounds_csv =
      read_text_file(dir / "bounds.csv");

  // Derived constants are available only for a single certified spec.
  std::optional<DerivedConstants> consts;
  if (cert_json && cert_json->is_object() && cert_json->contains("p") &&
      !cert_json->contains("error")) {
    try {
      const PCertificate cert = cert_json->get<PCertificate>();
      const int dim = traj.snapshots.empty() ? 1 : traj.snapshots.front().box.dim;
      consts = derive_constants(cert, derived_envelopes(traj.spec, cert),
                                traj.initial_sup, dim);
    } catch (const std::exception&) {
      consts.reset();
    }
  }

  // --- gradient decay plot ------------------------------------------------
  std::vector<Series> grad_series;
  grad_series.push_back(
      {"sup |grad v|", "#1f77b4", false, observed_grad_series(traj)});
  if (consts) {
    try {
      std::vector<std::array<double, 2>> bx, oind, bind;
      for (const BoundReport& r : check_grad_decay(traj, *consts)) {
        if (r.bound_id == "gradx") bx.push_back({r.time, r.bound_value});
        if (r.bound_id == "gradxind") {
          oind.push_back({r.time, r.observed});
          bind.push_back({r.time, r.bound_value});
        }
      }
      grad_series.push_back({"gradx bound", "#1f77b4", true, bx});
      if (!oind.empty()) {
        grad_series.push_back(
            {"sup |grad v^((p-1)/p)|", "#2ca02c", false, oind});
        grad_series.push_back({"gradxind bound", "#2ca02c", true, bind});
      }
    } catch (const std::exception&) {
      // keep the observed curve alone
    }
    // Reference decay slope -1/p anchored at the first positive observation.
    for (const auto& p0 : grad_series.front().pts) {
      if (!(p0[0] > 0.0) || !(p0[1] > 0.0)) continue;
      const double t1 = grad_series.front().pts.back()[0];
      std::vector<std::array<double, 2>> ref;
      for (int k = 0; k <= 16; ++k) {
        const double t = p0[0] * std::pow(t1 / p0[0], k / 16.0);
        ref.push_back({t, p0[1] * std::pow(t / p0[0], -1.0 / consts->p)});
      }
      grad_series.push_back({"slope -1/p reference", "#888888", true, ref});
      break;
    }
  }
  std::string grad_note;
  if (consts) grad_note = "reference slope -1/" + fmt(consts->p);
  write_file(dir / "gradient_decay.svg",
             log_log_svg("gradient decay", "t", "sup gradient magnitude",
                         grad_series, grad_note));

  // --- time-derivative envelope plot --------------------------------------
  std::vector<std::array<double, 2>> pos_obs, neg_obs;
  observed_rate_series(traj, pos_obs, neg_obs);
  std::vector<Series> dt_series;
  dt_series.push_back({"sup (dv/dt)+", "#1f77b4", false, pos_obs});
  dt_series.push_back({"sup (-dv/dt)+", "#d62728", false, neg_obs});
  if (consts) {
    try {
      std::vector<std::array<double, 2>> up_bound, down_bound;
      std::string up_label;
      for (const BoundReport& r : check_dt_bounds(traj, *consts)) {
        if (r.bound_id == "dudtmn") down_bound.push_back({r.time, r.bound_value});
        if (r.bound_id == "dudtpl" || r.bound_id == "vdt_upper") {
          up_label = r.bound_id + " bound";
          up_bound.push_back({r.time, r.bound_value});
        }
      }
      if (!up_bound.empty())
        dt_series.push_back({up_label, "#1f77b4", true, up_bound});
      if (!down_bound.empty())
        dt_series.push_back({"dudtmn bound", "#d62728", true, down_bound});
    } catch (const std::exception&) {
      // fewer than two snapshots or incompatible spec: observed only
    }
  }
  write_file(dir / "dt_envelopes.svg",
             log_log_svg("time-derivative envelopes", "t (midpoints)",
                         "sup rate", dt_series, ""));

  // --- sweep distance plot ------------------------------------------------
  bool sweep_plot = false;
  if (sweep && sweep->value("kind", "") == "vanishing_viscosity" &&
      sweep->contains("runs") && sweep->contains("distances")) {
    const auto& runs = (*sweep)["runs"];
    const auto& d = (*sweep)["distances"];
    std::size_t ref = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (runs[i].value("label", "") == "reference") ref = i;
    if (ref < runs.size() && d.size() == runs.size()) {
      std::vector<std::array<double, 2>> pts;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i == ref) continue;
        pts.push_back({runs[i].value("epsilon", 0.0),
                       d[i][ref].get<double>()});
      }
      std::sort(pts.begin(), pts.end());
      std::string note = "no rate fit (degenerate distances)";
      if (sweep->contains("rate_fit")) {
        note = "fitted slope " +
               fmt((*sweep)["rate_fit"].value("slope", 0.0));
      }
      write_file(dir / "sweep_distances.svg",
                 log_log_svg("distance to the inviscid reference", "epsilon",
                             "interior sup distance",
                             {{"sup distance", "#1f77b4", false, pts}}, note));
      sweep_plot = true;
    }
  }

  // --- plain-text summary table -------------------------------------------
  std::ostringstream txt;
  txt << "experiment report\n=================\n\n";
  txt << "hamiltonian: " << spec_to_json(traj.spec).dump() << '\n';
  if (!traj.snapshots.empty()) {
    const Box& box = traj.snapshots.front().box;
    txt << "grid: " << box.resolution << '^' << box.dim << ", side "
        << fmt(box.side_length) << ", epsilon " << fmt(traj.config.epsilon)
        << ", eta " << fmt(traj.config.eta) << '\n';
    txt << "snapshots: " << traj.times.size() << " in [" << fmt(traj.times.front())
        << ", " << fmt(traj.times.back()) << "], initial sup "
        << fmt(traj.initial_sup) << '\n';
  }
  txt << "certificate: " << (cert_json ? cert_json->dump() : "absent") << '\n';
  if (summary) {
    txt << "summary: pass_count " << summary->value("pass_count", 0)
        << ", fail_count " << summary->value("fail_count", 0)
        << ", worst_margin " << fmt(summary->value("worst_margin", 0.0))
        << '\n';
  }
  txt << '\n';
  if (bounds_csv && !bounds_csv->empty()) {
    txt << "bounds (one row per check):\n" << *bounds_csv;
  } else {
    txt << "bounds: none recorded\n";
  }
  if (sweep) {
    txt << "\nsweep: kind " << sweep->value("kind", "?") << ", verdict "
        << (sweep->value("verdict", false) ? "pass" : "fail");
    if (sweep->contains("rate_fit"))
      txt << ", fitted slope " << fmt((*sweep)["rate_fit"].value("slope", 0.0));
    txt << '\n';
  }
  txt << "\nplots: gradient_decay.svg, dt_envelopes.svg";
  if (sweep_plot) txt << ", sweep_distances.svg";
  txt << '\n';
  write_file(dir / "report.txt", txt.str());

  return 0;
}

}  // namespace hjlab
