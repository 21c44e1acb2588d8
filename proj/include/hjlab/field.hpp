/// @file field.hpp
/// @brief Periodic-box grid functions with the differential operators, norms,
///        and ball integrals every estimate is stated in.
///
/// The domain is a periodic box [-L/2, L/2)^dim sampled on a uniform grid;
/// node d-coordinate is x_d(i) = -L/2 + i*dx.  Fields are immutable values;
/// operators return new fields.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hjlab {

/// Uniform periodic grid over [-side_length/2, side_length/2)^dim.
struct Box {
  int dim = 1;           ///< 1 or 2
  double side_length = 1.0;
  int resolution = 16;   ///< nodes per axis, >= 16

  double dx() const { return side_length / resolution; }
  std::size_t node_count() const {
    return dim == 1 ? static_cast<std::size_t>(resolution)
                    : static_cast<std::size_t>(resolution) * resolution;
  }
  /// Physical coordinate of node index along one axis.
  double coord(int i) const { return -0.5 * side_length + i * dx(); }

  bool operator==(const Box&) const = default;
};

/// Throws std::invalid_argument when box invariants fail.
void validate_box(const Box& box);

/// A scalar grid function on a Box.  2D storage is row-major: value(i, j) at
/// index j*resolution + i, with i the x-index.
struct Field {
  Box box;
  std::vector<double> values;

  double& at(int i, int j = 0) {
    return values[static_cast<std::size_t>(j) * box.resolution + i];
  }
  double at(int i, int j = 0) const {
    return values[static_cast<std::size_t>(j) * box.resolution + i];
  }
};

/// Field of zeros on `box`.
Field make_field(const Box& box);

/// Throws std::invalid_argument if sizes disagree or any value is non-finite.
void validate_field(const Field& f);

/// Ball for local mass estimates.  The doubled ball must also fit without
/// periodic self-overlap: 2*radius < side_length/2.
struct BallSpec {
  std::array<double, 2> center = {0.0, 0.0};
  double radius = 0.25;
};

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Families of nonnegative bounded initial data:
///   cosine            A * prod_d (1 + cos(2 pi x_d / L)) / 2^dim   (smooth)
///   bump              A * exp(1 - 1/(1 - |x/r0|^2)) inside |x| < r0, else 0
///   cone              A * max(0, 1 - |x|/r0)                        (Lipschitz)
///   truncated_growth  min(q * |x|^s, n)                             (capped growth)
/// |x| is the Euclidean distance from the box center.  Params are looked up
/// by name: cosine{amplitude}, bump/cone{amplitude, r0},
/// truncated_growth{q, s, n}.
Field make_initial(const Box& box, const std::string& preset,
                   const std::map<std::string, double>& params);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Node-wise magnitude of the centered-difference gradient, periodic wrap.
Field grad_mag_central(const Field& f);

/// Standard (2*dim+1)-point second-difference Laplacian, periodic wrap.
Field laplacian(const Field& f);

struct SupMetrics {
  double sup_norm = 0.0;                 ///< max |f|
  std::optional<double> sup_distance;    ///< max |f - g| when g given
};

/// Sup norm of `f`, and sup distance to `g` when present (boxes must match).
SupMetrics sup_metrics(const Field& f, const Field* g = nullptr);

/// Convenience extremes (signed).
double field_max(const Field& f);
double field_min(const Field& f);

/// Riemann sum of f over nodes with periodic distance to `center` strictly
/// below `radius`, times dx^dim.  The only geometric requirement is that the
/// ball itself does not self-overlap under periodicity (radius < side/2).
double integral_within_radius(const Field& f,
                              const std::array<double, 2>& center,
                              double radius);

/// Ball integral under the full BallSpec invariant: the DOUBLED companion
/// ball must also fit without self-overlap (2 * radius < side/2), since the
/// mass estimates always pair B_R with B_{2R}.  Throws std::invalid_argument
/// otherwise.
double ball_integral(const Field& f, const BallSpec& ball);

/// Periodic Euclidean distance between two points of the box.
double periodic_distance(const Box& box, const std::array<double, 2>& a,
                         const std::array<double, 2>& b);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// CSV with header; 1D columns i,x,value; 2D columns i,j,x,y,value.
/// Values are written round-trip exactly (max_digits10).
std::string field_to_csv(const Field& f);
void write_field_csv(const Field& f, const std::string& path);

}  // namespace hjlab
