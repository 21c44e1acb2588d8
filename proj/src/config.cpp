#include "hjlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hjlab {

namespace {

struct Entry {
  std::vector<std::string> tokens;
  int line = 0;
  bool used = false;
};

/// One parsed section: key -> entry.
using Section = std::map<std::string, Entry>;

struct RawConfig {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_lines;
};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

const std::vector<std::string> kSections{"hamiltonian", "box",   "initial",
                                         "solve",       "audits", "sweep",
                                         "output"};

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("unterminated section header", line_no, "");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) ==
          kSections.end()) {
        throw ConfigError("unknown section [" + section + "]", line_no, "");
      }
      if (raw.sections.count(section)) {
        throw ConfigError("duplicate section [" + section + "]", line_no, "");
      }
      raw.sections[section];
      raw.section_lines[section] = line_no;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value'", line_no, "");
    }
    if (section.empty()) {
      throw ConfigError("entry outside any [section]", line_no, "");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", line_no, "");
    Entry entry;
    entry.line = line_no;
    std::istringstream values(line.substr(eq + 1));
    std::string tok;
    while (values >> tok) entry.tokens.push_back(tok);
    if (entry.tokens.empty()) {
      throw ConfigError("empty value", line_no, "[" + section + "]." + key);
    }
    if (!raw.sections[section].emplace(key, std::move(entry)).second) {
      throw ConfigError("duplicate key", line_no, "[" + section + "]." + key);
    }
  }
  return raw;
}

/// Cursor over one section with typed accessors; every lookup marks the key
/// as consumed so leftovers can be reported.
class SectionReader {
 public:
  SectionReader(RawConfig& raw, const std::string& name)
      : name_(name), section_(nullptr) {
    const auto it = raw.sections.find(name);
    if (it != raw.sections.end()) section_ = &it->second;
  }

  bool present() const { return section_ != nullptr; }

  std::string field(const std::string& key) const {
    return "[" + name_ + "]." + key;
  }

  bool has(const std::string& key) const {
    return section_ != nullptr && section_->count(key) > 0;
  }

  const Entry* take(const std::string& key) {
    if (section_ == nullptr) return nullptr;
    const auto it = section_->find(key);
    if (it == section_->end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  const Entry& require(const std::string& key) {
    const Entry* e = take(key);
    if (e == nullptr) {
      throw ConfigError("missing required key", line_, field(key));
    }
    return *e;
  }

  double number(const std::string& key, double fallback) {
    const Entry* e = take(key);
    return e == nullptr ? fallback : to_number(*e, key);
  }

  int integer(const std::string& key, int fallback) {
    const Entry* e = take(key);
    if (e == nullptr) return fallback;
    const double v = to_number(*e, key);
    if (v != std::floor(v)) {
      throw ConfigError("expected an integer", e->line, field(key));
    }
    return static_cast<int>(v);
  }

  std::string word(const std::string& key, const std::string& fallback) {
    const Entry* e = take(key);
    if (e == nullptr) return fallback;
    if (e->tokens.size() != 1) {
      throw ConfigError("expected a single value", e->line, field(key));
    }
    return e->tokens.front();
  }

  std::vector<double> numbers(const std::string& key) {
    const Entry* e = take(key);
    if (e == nullptr) return {};
    std::vector<double> out;
    for (const auto& tok : e->tokens) out.push_back(to_scalar(tok, *e, key));
    return out;
  }

  std::vector<std::string> words(const std::string& key) {
    const Entry* e = take(key);
    return e == nullptr ? std::vector<std::string>{} : e->tokens;
  }

  int line_of(const std::string& key, int fallback) const {
    if (section_ == nullptr) return fallback;
    const auto it = section_->find(key);
    return it == section_->end() ? fallback : it->second.line;
  }

  void set_section_line(int line) { line_ = line; }

  void finish() const {
    if (section_ == nullptr) return;
    for (const auto& [key, entry] : *section_) {
      if (!entry.used) {
        throw ConfigError("unknown key", entry.line, field(key));
      }
    }
  }

  /// Remaining unused entries as a name -> scalar map (for initial params).
  std::map<std::string, double> drain_scalars() {
    std::map<std::string, double> out;
    if (section_ == nullptr) return out;
    for (auto& [key, entry] : *section_) {
      if (entry.used) continue;
      entry.used = true;
      if (entry.tokens.size() != 1) {
        throw ConfigError("expected a single number", entry.line, field(key));
      }
      out[key] = to_scalar(entry.tokens.front(), entry, key);
    }
    return out;
  }

 private:
  double to_number(const Entry& e, const std::string& key) {
    if (e.tokens.size() != 1) {
      throw ConfigError("expected a single number", e.line, field(key));
    }
    return to_scalar(e.tokens.front(), e, key);
  }

  double to_scalar(const std::string& tok, const Entry& e,
                   const std::string& key) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("'" + tok + "' is not a number", e.line, field(key));
    }
  }

  std::string name_;
  Section* section_;
  int line_ = 0;
};

HamiltonianSpec parse_hamiltonian(SectionReader& sec,
                                  std::vector<double>& cert_p_list) {
  const std::string kind = sec.word("kind", "");
  const int kind_line = sec.line_of("kind", 0);
  if (kind.empty()) {
    throw ConfigError("missing required key", 0, sec.field("kind"));
  }
  if (kind == "null") return NullH{};
  if (kind == "pure_power") {
    if (sec.has("p_list")) {
      cert_p_list = sec.numbers("p_list");
      if (cert_p_list.empty()) {
        throw ConfigError("p_list must be nonempty", kind_line,
                          sec.field("p_list"));
      }
      if (sec.has("p")) {
        throw ConfigError("give either p or p_list, not both",
                          sec.line_of("p", kind_line), sec.field("p"));
      }
      return PurePower{cert_p_list.front()};
    }
    return PurePower{sec.number("p", 2.0)};
  }
  if (kind == "power_sum") {
    const Entry& terms = sec.require("terms");
    PowerSum sum;
    for (const auto& tok : terms.tokens) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("term '" + tok + "' must look like weight:exponent",
                          terms.line, sec.field("terms"));
      }
      try {
        sum.terms.push_back(PowerTerm{std::stod(tok.substr(0, colon)),
                                      std::stod(tok.substr(colon + 1))});
      } catch (const std::exception&) {
        throw ConfigError("term '" + tok + "' is not numeric", terms.line,
                          sec.field("terms"));
      }
    }
    return sum;
  }
  if (kind == "power_plus_shifted") {
    PowerPlusShifted px;
    px.p = sec.number("p", px.p);
    px.q = sec.number("q", px.q);
    px.threshold = sec.number("threshold", px.threshold);
    px.slope_floor = sec.number("slope_floor", px.slope_floor);
    return px;
  }
  throw ConfigError("unknown Hamiltonian kind '" + kind + "'", kind_line,
                    sec.field("kind"));
}

const std::vector<std::string> kPresets{"cosine", "bump", "cone",
                                        "truncated_growth"};

}  // namespace

const std::vector<std::string>& known_check_ids() {
  static const std::vector<std::string> ids{
      "gradx",       "gradxind", "vdt_upper", "dudtpl",    "dudtmn",
      "t_minus_one", "holder_t", "ball_mass", "heat_error"};
  return ids;
}

ExperimentConfig parse_experiment_text(const std::string& text) {
  RawConfig raw = tokenize(text);
  ExperimentConfig cfg;

  if (!raw.sections.count("hamiltonian")) {
    throw ConfigError("missing [hamiltonian] section", 0, "[hamiltonian]");
  }
  SectionReader ham(raw, "hamiltonian");
  ham.set_section_line(raw.section_lines["hamiltonian"]);
  cfg.spec = parse_hamiltonian(ham, cfg.cert_p_list);
  try {
    if (!cfg.cert_p_list.empty()) {
      for (const double p : cfg.cert_p_list) validate_spec(PurePower{p});
    } else {
      validate_spec(cfg.spec);
    }
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what(), raw.section_lines["hamiltonian"],
                      "[hamiltonian]");
  }
  ham.finish();

  SectionReader box_sec(raw, "box");
  if (box_sec.present()) {
    Box box;
    box.dim = box_sec.integer("dim", 1);
    box.side_length = box_sec.number("side_length", box.side_length);
    box.resolution = box_sec.integer("resolution", box.resolution);
    try {
      validate_box(box);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what(), raw.section_lines["box"], "[box]");
    }
    cfg.box = box;
    box_sec.finish();
  }

  SectionReader init(raw, "initial");
  if (init.present()) {
    if (!cfg.box) {
      throw ConfigError("[initial] requires a [box] section",
                        raw.section_lines["initial"], "[initial]");
    }
    if (!cfg.cert_p_list.empty()) {
      throw ConfigError("a certification batch (p_list) cannot be solved",
                        raw.section_lines["initial"], "[initial]");
    }
    cfg.initial_preset = init.word("preset", "");
    if (std::find(kPresets.begin(), kPresets.end(), cfg.initial_preset) ==
        kPresets.end()) {
      throw ConfigError("unknown preset '" + cfg.initial_preset + "'",
                        init.line_of("preset", raw.section_lines["initial"]),
                        init.field("preset"));
    }
    cfg.initial_params = init.drain_scalars();
    cfg.runnable = true;
  }

  SectionReader solve(raw, "solve");
  if (solve.present() && !cfg.runnable) {
    throw ConfigError("[solve] requires [initial] and [box]",
                      raw.section_lines["solve"], "[solve]");
  }
  if (cfg.runnable) {
    if (!solve.present()) {
      throw ConfigError("runnable experiment needs a [solve] section", 0,
                        "[solve]");
    }
    cfg.solve.epsilon = solve.number("epsilon", 0.0);
    cfg.solve.eta = solve.number("eta", 0.0);
    cfg.solve.t_end = solve.number("t_end", 1.0);
    cfg.solve.cfl_safety = solve.number("cfl_safety", cfg.solve.cfl_safety);
    cfg.solve.alpha_margin =
        solve.number("alpha_margin", cfg.solve.alpha_margin);
    cfg.solve.max_steps = solve.integer(
        "max_steps", static_cast<int>(
                         std::min<std::int64_t>(cfg.solve.max_steps,
                                                2'000'000'000)));
    std::vector<double> snaps = solve.numbers("snapshot_times");
    const std::vector<double> geom = solve.numbers("snapshot_geomspace");
    if (!geom.empty()) {
      if (geom.size() != 3 || geom[0] <= 0.0 || geom[1] <= geom[0] ||
          geom[2] < 2.0 || geom[2] != std::floor(geom[2])) {
        throw ConfigError(
            "snapshot_geomspace needs 'first last count' with 0 < first < "
            "last and integer count >= 2",
            solve.line_of("snapshot_geomspace", 0),
            solve.field("snapshot_geomspace"));
      }
      const int count = static_cast<int>(geom[2]);
      for (int k = 0; k < count; ++k) {
        snaps.push_back(geom[0] * std::pow(geom[1] / geom[0],
                                           static_cast<double>(k) /
                                               (count - 1)));
      }
    }
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end(),
                            [](double a, double b) {
                              return std::abs(a - b) <=
                                     1e-12 * std::max(1.0, std::abs(b));
                            }),
                snaps.end());
    if (snaps.empty()) {
      throw ConfigError("no snapshot times given", raw.section_lines["solve"],
                        solve.field("snapshot_times"));
    }
    cfg.solve.snapshot_times = std::move(snaps);
    solve.finish();
  }

  SectionReader audits(raw, "audits");
  if (audits.present()) {
    AuditSection& a = cfg.audits;
    a.checks = audits.words("checks");
    const int checks_line =
        audits.line_of("checks", raw.section_lines["audits"]);
    for (const auto& id : a.checks) {
      if (std::find(known_check_ids().begin(), known_check_ids().end(), id) ==
          known_check_ids().end()) {
        throw ConfigError("unknown check id '" + id + "'", checks_line,
                          audits.field("checks"));
      }
      const bool is_heat = id == "heat_error";
      const bool null_h = std::holds_alternative<NullH>(cfg.spec);
      if (is_heat != null_h) {
        throw ConfigError(
            is_heat ? "heat_error applies only to the null Hamiltonian"
                    : "check '" + id +
                          "' needs a non-null Hamiltonian (only heat_error "
                          "applies)",
            checks_line, audits.field("checks"));
      }
      if (id == "t_minus_one" && spec_kind(cfg.spec) != "pure_power") {
        throw ConfigError(
            "t_minus_one is defined for single-power Hamiltonians only",
            checks_line, audits.field("checks"));
      }
    }
    if (!a.checks.empty() && !cfg.runnable) {
      throw ConfigError("audits need a runnable experiment", checks_line,
                        audits.field("checks"));
    }
    a.grad_slack = audits.number("grad_slack", a.grad_slack);
    a.time_slack = audits.number("time_slack", a.time_slack);
    a.grad_t_min = audits.number("grad_t_min", a.grad_t_min);
    a.dt_t_min = audits.number("dt_t_min", a.dt_t_min);
    a.dt_t_max = audits.number("dt_t_max", a.dt_t_max);
    a.homogeneous_rho = audits.number("homogeneous_rho", a.homogeneous_rho);
    a.homogeneous_samples =
        audits.integer("homogeneous_samples", a.homogeneous_samples);
    a.holder_base_t = audits.number("holder_base_t", a.holder_base_t);
    a.holder_h = audits.numbers("holder_h");
    a.ball_radii = audits.numbers("ball_radii");
    a.ball_s = audits.number("ball_s", a.ball_s);
    a.ball_t = audits.number("ball_t", a.ball_t);
    a.ball_ceiling = audits.number("ball_ceiling", a.ball_ceiling);
    a.heat_tol = audits.number("heat_tol", a.heat_tol);
    audits.finish();
  }

  SectionReader sweep(raw, "sweep");
  if (sweep.present()) {
    SweepSection s;
    s.kind = sweep.word("kind", "");
    const int kind_line = sweep.line_of("kind", raw.section_lines["sweep"]);
    if (s.kind != "vanishing_viscosity" && s.kind != "truncation") {
      throw ConfigError("sweep kind must be vanishing_viscosity or truncation",
                        kind_line, sweep.field("kind"));
    }
    s.window_times = sweep.numbers("window_times");
    if (s.window_times.empty()) {
      throw ConfigError("missing required key", raw.section_lines["sweep"],
                        sweep.field("window_times"));
    }
    s.interior_fraction =
        sweep.number("interior_fraction", s.interior_fraction);
    if (s.kind == "vanishing_viscosity") {
      if (!cfg.runnable) {
        throw ConfigError("a viscosity sweep needs [box] and [initial]",
                          kind_line, sweep.field("kind"));
      }
      s.eps_list = sweep.numbers("eps_list");
      if (s.eps_list.empty()) {
        throw ConfigError("missing required key", kind_line,
                          sweep.field("eps_list"));
      }
      if (s.eps_list.size() < 3) {
        throw ConfigError(
            "a viscosity sweep needs at least three viscosities for the "
            "rate fit",
            sweep.line_of("eps_list", kind_line), sweep.field("eps_list"));
      }
      s.ref_refine = sweep.integer("ref_refine", s.ref_refine);
      if (s.ref_refine < 1) {
        throw ConfigError("ref_refine must be >= 1",
                          sweep.line_of("ref_refine", kind_line),
                          sweep.field("ref_refine"));
      }
    } else {
      if (!cfg.box) {
        throw ConfigError("a truncation sweep needs a [box] section",
                          kind_line, sweep.field("kind"));
      }
      s.growth.q = sweep.number("growth_q", s.growth.q);
      s.growth.s = sweep.number("growth_s", s.growth.s);
      s.caps = sweep.numbers("caps");
      if (s.caps.size() < 2) {
        throw ConfigError("truncation needs at least two caps", kind_line,
                          sweep.field("caps"));
      }
    }
    cfg.sweep = std::move(s);
    sweep.finish();
  }

  SectionReader output(raw, "output");
  if (output.present()) {
    cfg.output_dir = output.word("dir", cfg.output_dir);
    output.finish();
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path + "'", 0, "");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_text(buffer.str());
}

}  // namespace hjlab
