/// @file test_field.cpp
/// @brief Grid-function operators: initial data, stencils, norms, balls, CSV.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hjlab/field.hpp"

using namespace hjlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Field sine_field(const Box& box) {
  Field f = make_field(box);
  for (int i = 0; i < box.resolution; ++i)
    f.at(i) = std::sin(kTwoPi * box.coord(i) / box.side_length);
  return f;
}

}  // namespace

TEST_CASE("box and field validation") {
  CHECK_THROWS_AS(validate_box(Box{3, 1.0, 64}), std::invalid_argument);
  CHECK_THROWS_AS(validate_box(Box{1, 1.0, 8}), std::invalid_argument);
  CHECK_THROWS_AS(validate_box(Box{1, -1.0, 64}), std::invalid_argument);
  CHECK_NOTHROW(validate_box(Box{2, 4.0, 16}));

  Field f = make_field(Box{1, 1.0, 16});
  f.values[3] = std::nan("");
  CHECK_THROWS_AS(validate_field(f), std::invalid_argument);
}

TEST_CASE("initial data families") {
  const Box box{1, 2.0 * std::numbers::pi, 512};

  SUBCASE("cosine peaks at the center and vanishes at the seam") {
    const Field f = make_initial(box, "cosine", {{"amplitude", 1.0}});
    CHECK(f.at(box.resolution / 2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.at(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(field_min(f) >= 0.0);
    CHECK(field_max(f) == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("cone hits its amplitude at the center and zero at its radius") {
    const Field f = make_initial(box, "cone", {{"amplitude", 2.0}, {"r0", 1.0}});
    CHECK(f.at(box.resolution / 2) == doctest::Approx(2.0).epsilon(1e-14));
    // node closest to |x| = 1
    const int off = static_cast<int>(std::lround(1.0 / box.dx()));
    CHECK(std::abs(f.at(box.resolution / 2 + off)) <= 2.0 * box.dx());
    CHECK(field_min(f) == 0.0);
  }

  SUBCASE("bump is compactly supported and positive inside") {
    const Field f = make_initial(box, "bump", {{"amplitude", 1.0}, {"r0", 2.0}});
    CHECK(f.at(box.resolution / 2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.at(0) == 0.0);
    CHECK(field_min(f) >= 0.0);
    CHECK_THROWS_AS(
        make_initial(box, "bump", {{"amplitude", 1.0}, {"r0", 0.5 * box.side_length}}),
        std::invalid_argument);
  }

  SUBCASE("truncated growth caps at n") {
    const Box wide{1, 20.0, 256};
    const Field f = make_initial(wide, "truncated_growth",
                                 {{"q", 1.0}, {"s", 1.0}, {"n", 3.0}});
    CHECK(field_max(f) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(f.at(wide.resolution / 2) == 0.0);
    const int off = static_cast<int>(std::lround(1.0 / wide.dx()));
    const double x = wide.coord(wide.resolution / 2 + off);
    CHECK(std::abs(f.at(wide.resolution / 2 + off) - std::abs(x)) <= 1e-12);
  }

  SUBCASE("unknown preset and missing params are rejected") {
    CHECK_THROWS_AS(make_initial(box, "sawtooth", {}), std::invalid_argument);
    CHECK_THROWS_AS(make_initial(box, "cosine", {}), std::invalid_argument);
  }
}

TEST_CASE("centered gradient magnitude") {
  const Box box{1, 2.0 * std::numbers::pi, 512};
  const double k = kTwoPi / box.side_length;

  SUBCASE("constant field has zero gradient") {
    Field c = make_field(box);
    for (auto& v : c.values) v = 4.2;
    CHECK(field_max(grad_mag_central(c)) == 0.0);
  }

  SUBCASE("sine reaches its analytic slope") {
    const Field g = grad_mag_central(sine_field(box));
    CHECK(field_max(g) == doctest::Approx(k).epsilon(1e-4));
  }

  SUBCASE("second-order convergence on sine data") {
    double errs[2];
    int idx = 0;
    for (int res : {64, 128}) {
      const Box b{1, 2.0 * std::numbers::pi, res};
      const Field g = grad_mag_central(sine_field(b));
      double err = 0.0;
      for (int i = 0; i < res; ++i) {
        const double exact = std::abs(k * std::cos(k * b.coord(i)));
        err = std::max(err, std::abs(g.at(i) - exact));
      }
      errs[idx++] = err;
    }
    CHECK(errs[0] / errs[1] >= 3.5);
  }

  SUBCASE("2D gradient of x-only data is independent of y") {
    const Box b2{2, 2.0 * std::numbers::pi, 32};
    Field f = make_field(b2);
    for (int j = 0; j < b2.resolution; ++j)
      for (int i = 0; i < b2.resolution; ++i)
        f.at(i, j) = std::sin(k * b2.coord(i));
    const Field g = grad_mag_central(f);
    for (int i = 0; i < b2.resolution; ++i)
      for (int j = 1; j < b2.resolution; ++j)
        CHECK(g.at(i, j) == doctest::Approx(g.at(i, 0)).epsilon(1e-13));
  }
}

TEST_CASE("laplacian stencil") {
  const Box box{1, 2.0 * std::numbers::pi, 512};
  const double k = kTwoPi / box.side_length;

  SUBCASE("eigenfunction relation for cosine") {
    Field f = make_field(box);
    for (int i = 0; i < box.resolution; ++i) f.at(i) = std::cos(k * box.coord(i));
    const Field lap = laplacian(f);
    for (int i = 0; i < box.resolution; ++i) {
      CHECK(lap.at(i) ==
            doctest::Approx(-k * k * f.at(i)).epsilon(1e-3).scale(k * k));
    }
  }

  SUBCASE("linearity to machine precision") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Box small{1, 1.0, 32};
    Field f = make_field(small), g = make_field(small);
    for (auto& v : f.values) v = u(rng);
    for (auto& v : g.values) v = u(rng);
    Field combo = make_field(small);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
      combo.values[i] = 2.0 * f.values[i] - 3.0 * g.values[i];
    const Field lc = laplacian(combo), lf = laplacian(f), lg = laplacian(g);
    for (std::size_t i = 0; i < lc.values.size(); ++i)
      CHECK(lc.values[i] ==
            doctest::Approx(2.0 * lf.values[i] - 3.0 * lg.values[i])
                .epsilon(1e-12));
  }

  SUBCASE("periodic shift commutes with the stencils") {
    const Box small{1, 1.0, 64};
    Field f = make_field(small);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : f.values) v = u(rng);
    Field shifted = make_field(small);
    const int shift = 17;
    for (int i = 0; i < small.resolution; ++i)
      shifted.at(i) = f.at((i + shift) % small.resolution);
    const Field a = laplacian(shifted);
    const Field b = laplacian(f);
    for (int i = 0; i < small.resolution; ++i)
      CHECK(a.at(i) == b.at((i + shift) % small.resolution));
  }
}

TEST_CASE("sup metrics") {
  const Box box{1, 1.0, 32};
  Field f = make_field(box);
  for (auto& v : f.values) v = 3.0;
  CHECK(sup_metrics(f).sup_norm == 3.0);
  CHECK(*sup_metrics(f, &f).sup_distance == 0.0);

  Field z = make_field(box);
  const Field cosine =
      make_initial(Box{1, 1.0, 32}, "cosine", {{"amplitude", 1.0}});
  CHECK(*sup_metrics(cosine, &z).sup_distance == doctest::Approx(1.0).epsilon(1e-13));

  const Field other = make_field(Box{1, 2.0, 32});
  CHECK_THROWS_AS(sup_metrics(f, &other), std::invalid_argument);

  SUBCASE("triangle inequality and symmetry on random triples") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      Field a = make_field(box), b = make_field(box), c = make_field(box);
      for (auto& v : a.values) v = u(rng);
      for (auto& v : b.values) v = u(rng);
      for (auto& v : c.values) v = u(rng);
      const double dab = *sup_metrics(a, &b).sup_distance;
      const double dba = *sup_metrics(b, &a).sup_distance;
      const double dac = *sup_metrics(a, &c).sup_distance;
      const double dcb = *sup_metrics(c, &b).sup_distance;
      CHECK(dab == dba);
      CHECK(dab <= dac + dcb + 1e-15);
    }
  }
}

TEST_CASE("ball integrals") {
  const Box box{1, 4.0, 512};
  Field ones = make_field(box);
  for (auto& v : ones.values) v = 1.0;

  SUBCASE("interval length for the unit field") {
    CHECK(ball_integral(ones, {{0.0, 0.0}, 0.5}) ==
          doctest::Approx(1.0).epsilon(2.0 * box.dx()));
  }

  SUBCASE("doubling the radius doubles the 1D measure") {
    const double one = ball_integral(ones, {{0.0, 0.0}, 0.4});
    const double two = ball_integral(ones, {{0.0, 0.0}, 0.8});
    CHECK(two == doctest::Approx(2.0 * one).epsilon(3.0 * box.dx()));
  }

  SUBCASE("monotone in radius for nonnegative fields") {
    const Field f = make_initial(box, "bump", {{"amplitude", 2.0}, {"r0", 1.0}});
    double prev = 0.0;
    for (double r : {0.2, 0.4, 0.6, 0.8}) {
      const double cur = ball_integral(f, {{0.0, 0.0}, r});
      CHECK(cur >= prev);
      prev = cur;
    }
  }

  SUBCASE("oversized balls are rejected") {
    CHECK_THROWS_AS(ball_integral(ones, {{0.0, 0.0}, 1.01}), std::invalid_argument);
  }

  SUBCASE("2D unit field gives the disc area") {
    const Box b2{2, 4.0, 256};
    Field u2 = make_field(b2);
    for (auto& v : u2.values) v = 1.0;
    const double r = 0.7;
    CHECK(ball_integral(u2, {{0.0, 0.0}, r}) ==
          doctest::Approx(std::numbers::pi * r * r).epsilon(0.02));
  }
}

TEST_CASE("CSV serialization") {
  const Box box{1, 1.0, 16};
  const Field f = make_initial(box, "cosine", {{"amplitude", 1.5}});
  const std::string csv = field_to_csv(f);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "i,x,value");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 16);

  const Box b2{2, 1.0, 16};
  Field f2 = make_field(b2);
  const std::string csv2 = field_to_csv(f2);
  std::istringstream in2(csv2);
  std::getline(in2, line);
  CHECK(line == "i,j,x,y,value");
}
