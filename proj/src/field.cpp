/// @file field.cpp
/// @brief Grid-function operators on the periodic box.

#include "hjlab/field.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hjlab {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double param(const std::map<std::string, double>& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end())
    throw std::invalid_argument("make_initial: missing parameter '" + key + "'");
  return it->second;
}

/// Wrap an axis delta into [-L/2, L/2].
double wrap_delta(double d, double side) {
  d = std::fmod(d, side);
  if (d > 0.5 * side) d -= side;
  if (d < -0.5 * side) d += side;
  return d;
}

}  // namespace

void validate_box(const Box& box) {
  require(box.dim == 1 || box.dim == 2, "box: dim must be 1 or 2");
  require(box.side_length > 0.0, "box: side_length must be positive");
  require(box.resolution >= 16, "box: resolution must be at least 16");
}

Field make_field(const Box& box) {
  validate_box(box);
  return Field{box, std::vector<double>(box.node_count(), 0.0)};
}

void validate_field(const Field& f) {
  validate_box(f.box);
  require(f.values.size() == f.box.node_count(),
          "field: value count does not match box");
  for (double v : f.values)
    require(std::isfinite(v), "field: values must be finite");
}

Field make_initial(const Box& box, const std::string& preset,
                   const std::map<std::string, double>& params) {
  Field f = make_field(box);
  const int n = box.resolution;
  const double L = box.side_length;
  const double two_pi = 2.0 * std::numbers::pi;

  /// Euclidean distance of node (i, j) from the box center.
  const auto radius_at = [&](int i, int j) {
    const double x = box.coord(i);
    if (box.dim == 1) return std::abs(x);
    const double y = box.coord(j);
    return std::hypot(x, y);
  };

  const auto fill = [&](auto&& value_at) {
    const int nj = box.dim == 1 ? 1 : n;
    for (int j = 0; j < nj; ++j)
      for (int i = 0; i < n; ++i) f.at(i, j) = value_at(i, j);
  };

  if (preset == "cosine") {
    const double amp = param(params, "amplitude");
    require(amp >= 0.0, "make_initial: amplitude must be >= 0");
    fill([&](int i, int j) {
      double v = amp * 0.5 * (1.0 + std::cos(two_pi * box.coord(i) / L));
      if (box.dim == 2) v *= 0.5 * (1.0 + std::cos(two_pi * box.coord(j) / L));
      return v;
    });
  } else if (preset == "bump") {
    const double amp = param(params, "amplitude");
    const double r0 = param(params, "r0");
    require(amp >= 0.0, "make_initial: amplitude must be >= 0");
    require(r0 > 0.0, "make_initial: r0 must be positive");
    require(r0 < 0.5 * L, "make_initial: bump radius must be below half the box side");
    fill([&](int i, int j) {
      const double s = radius_at(i, j) / r0;
      if (s >= 1.0) return 0.0;
      return amp * std::exp(1.0 - 1.0 / (1.0 - s * s));
    });
  } else if (preset == "cone") {
    const double amp = param(params, "amplitude");
    const double r0 = param(params, "r0");
    require(amp >= 0.0, "make_initial: amplitude must be >= 0");
    require(r0 > 0.0, "make_initial: r0 must be positive");
    fill([&](int i, int j) {
      return amp * std::max(0.0, 1.0 - radius_at(i, j) / r0);
    });
  } else if (preset == "truncated_growth") {
    const double q = param(params, "q");
    const double s = param(params, "s");
    const double cap = param(params, "n");
    require(q >= 0.0, "make_initial: growth prefactor q must be >= 0");
    require(s > 0.0, "make_initial: growth exponent s must be positive");
    require(cap >= 0.0, "make_initial: cap n must be >= 0");
    fill([&](int i, int j) {
      const double r = radius_at(i, j);
      const double growth = r == 0.0 ? 0.0 : q * std::pow(r, s);
      return std::min(growth, cap);
    });
  } else {
    throw std::invalid_argument("make_initial: unknown preset '" + preset + "'");
  }
  return f;
}

Field grad_mag_central(const Field& f) {
  validate_field(f);
  Field g = make_field(f.box);
  const int n = f.box.resolution;
  const double inv2dx = 1.0 / (2.0 * f.box.dx());
  if (f.box.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double dp = f.at(i + 1 == n ? 0 : i + 1);
      const double dm = f.at(i == 0 ? n - 1 : i - 1);
      g.at(i) = std::abs((dp - dm) * inv2dx);
    }
    return g;
  }
  for (int j = 0; j < n; ++j) {
    const int jp = j + 1 == n ? 0 : j + 1;
    const int jm = j == 0 ? n - 1 : j - 1;
    for (int i = 0; i < n; ++i) {
      const int ip = i + 1 == n ? 0 : i + 1;
      const int im = i == 0 ? n - 1 : i - 1;
      const double gx = (f.at(ip, j) - f.at(im, j)) * inv2dx;
      const double gy = (f.at(i, jp) - f.at(i, jm)) * inv2dx;
      g.at(i, j) = std::hypot(gx, gy);
    }
  }
  return g;
}

Field laplacian(const Field& f) {
  validate_field(f);
  Field g = make_field(f.box);
  const int n = f.box.resolution;
  const double inv_dx2 = 1.0 / (f.box.dx() * f.box.dx());
  if (f.box.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double vp = f.at(i + 1 == n ? 0 : i + 1);
      const double vm = f.at(i == 0 ? n - 1 : i - 1);
      g.at(i) = (vp - 2.0 * f.at(i) + vm) * inv_dx2;
    }
    return g;
  }
  for (int j = 0; j < n; ++j) {
    const int jp = j + 1 == n ? 0 : j + 1;
    const int jm = j == 0 ? n - 1 : j - 1;
    for (int i = 0; i < n; ++i) {
      const int ip = i + 1 == n ? 0 : i + 1;
      const int im = i == 0 ? n - 1 : i - 1;
      g.at(i, j) = (f.at(ip, j) + f.at(im, j) + f.at(i, jp) + f.at(i, jm) -
                    4.0 * f.at(i, j)) *
                   inv_dx2;
    }
  }
  return g;
}

SupMetrics sup_metrics(const Field& f, const Field* g) {
  SupMetrics m;
  for (double v : f.values) m.sup_norm = std::max(m.sup_norm, std::abs(v));
  if (g) {
    if (!(g->box == f.box))
      throw std::invalid_argument("sup_metrics: fields live on different boxes");
    double d = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k)
      d = std::max(d, std::abs(f.values[k] - g->values[k]));
    m.sup_distance = d;
  }
  return m;
}

double field_max(const Field& f) {
  double m = f.values.front();
  for (double v : f.values) m = std::max(m, v);
  return m;
}

double field_min(const Field& f) {
  double m = f.values.front();
  for (double v : f.values) m = std::min(m, v);
  return m;
}

double periodic_distance(const Box& box, const std::array<double, 2>& a,
                         const std::array<double, 2>& b) {
  const double dx0 = wrap_delta(a[0] - b[0], box.side_length);
  if (box.dim == 1) return std::abs(dx0);
  const double dx1 = wrap_delta(a[1] - b[1], box.side_length);
  return std::hypot(dx0, dx1);
}

double integral_within_radius(const Field& f,
                              const std::array<double, 2>& center,
                              double radius) {
  validate_field(f);
  if (!(radius > 0.0))
    throw std::invalid_argument("integral_within_radius: radius must be positive");
  if (!(radius < 0.5 * f.box.side_length))
    throw std::invalid_argument(
        "integral_within_radius: ball self-overlaps under periodicity");
  const int n = f.box.resolution;
  const int nj = f.box.dim == 1 ? 1 : n;
  double sum = 0.0;
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::array<double, 2> node = {f.box.coord(i),
                                          f.box.dim == 2 ? f.box.coord(j) : 0.0};
      if (periodic_distance(f.box, node, center) < radius) sum += f.at(i, j);
    }
  }
  const double cell = f.box.dim == 1 ? f.box.dx() : f.box.dx() * f.box.dx();
  return sum * cell;
}

double ball_integral(const Field& f, const BallSpec& ball) {
  if (ball.radius > 0.0 && !(2.0 * ball.radius < 0.5 * f.box.side_length))
    throw std::invalid_argument(
        "ball_integral: doubled ball must fit inside half the box side");
  return integral_within_radius(f, ball.center, ball.radius);
}

std::string field_to_csv(const Field& f) {
  std::ostringstream out;
  out.precision(17);
  const int n = f.box.resolution;
  if (f.box.dim == 1) {
    out << "i,x,value\n";
    for (int i = 0; i < n; ++i)
      out << i << ',' << f.box.coord(i) << ',' << f.at(i) << '\n';
  } else {
    out << "i,j,x,y,value\n";
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        out << i << ',' << j << ',' << f.box.coord(i) << ',' << f.box.coord(j)
            << ',' << f.at(i, j) << '\n';
  }
  return out.str();
}

void write_field_csv(const Field& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << field_to_csv(f);
}

}  // namespace hjlab
