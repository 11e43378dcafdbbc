#include <doctest.h>

#include <cmath>
#include <numbers>

#include "horolab/boundary.hpp"
#include "horolab/stats.hpp"

using namespace horolab;

namespace {

constexpr double kPi = std::numbers::pi;

double closed_busemann(double theta, Point z) {
  const double dx = std::cos(theta) - z.x, dy = std::sin(theta) - z.y;
  return std::log((dx * dx + dy * dy) / (1 - z.x * z.x - z.y * z.y));
}

double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

GromovParams pipeline() {
  GromovParams p;
  p.evaluator = Evaluator::Pipeline;
  return p;
}

ManifoldModel flat_perturbed() {
  ModelDescriptor d = ManifoldModel::perturbed_axial().descriptor();
  d.amplitude = 0.0;
  return ManifoldModel(d);
}

}  // namespace

TEST_CASE("busemann cocycle examples") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  const BoundaryPoint xi(0.0);
  CHECK(busemann_cocycle(h, xi, {0, 0}, {0.5, 0}) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-6));
  CHECK(busemann_cocycle(h, xi, {0.2, 0.1}, {0.2, 0.1}) == 0.0);
  for (const ManifoldModel& m : {h, ManifoldModel::perturbed_axial()}) {
    // y on the ray from x to xi at distance s.
    const Point x{-0.3, 0.2};
    Fermi fx = fermi_of_point(x);
    fx.phi = direction_to(m, fx.s, fx.rho, ideal_of(m, BoundaryPoint(0.7)), 1e-12);
    const Fermi end = flow_fermi(m, fx, 1.5, 1e-12);
    const Point y = point_of_fermi(end.s, end.rho);
    CHECK(busemann_cocycle(m, BoundaryPoint(0.7), x, y) == doctest::Approx(-1.5).epsilon(1e-4));
  }
}

TEST_CASE("q is antisymmetric and reduces to the Busemann difference") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(q_value(h, BoundaryPoint(0.0), {0, 0}, {0.5, 0}) == doctest::Approx(std::log(3.0)).epsilon(1e-6));
  CHECK(q_value(h, BoundaryPoint(1.0), {0.1, 0.1}, {0.1, 0.1}) == 0.0);
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    const BoundaryPoint xi(rng.uniform(0, 2 * kPi));
    const Point x{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}, y{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    CHECK(q_value(h, xi, x, y) == doctest::Approx(closed_busemann(xi.theta, x) - closed_busemann(xi.theta, y)).epsilon(1e-6));
  }
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const BoundaryPoint xi(2.0);
  const Point x{0.1, -0.2}, y{-0.3, 0.1};
  CHECK(q_value(m, xi, x, y) + q_value(m, xi, y, x) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("connecting geodesics") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  const BoundaryGeodesic d = connect_boundary_points(h, BoundaryPoint(0.0), BoundaryPoint(kPi), 3.0, 11);
  for (const Point& p : d.samples) CHECK(std::abs(p.y) < 1e-9);
  // Orthogonal circle through angles 0 and pi/2: center (1, 1), radius 1.
  const BoundaryGeodesic a = connect_boundary_points(h, BoundaryPoint(0.0), BoundaryPoint(kPi / 2), 3.0, 3);
  for (const Point& p : a.samples) CHECK(std::hypot(p.x - 1, p.y - 1) == doctest::Approx(1.0).epsilon(1e-6));
  const BoundaryGeodesic z = connect_boundary_points(flat_perturbed(), BoundaryPoint(0.3), BoundaryPoint(2.5), 3.0, 11);
  const BoundaryGeodesic c = connect_boundary_points(h, BoundaryPoint(0.3), BoundaryPoint(2.5), 3.0, 11);
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    CHECK(std::abs(z.samples[i].x - c.samples[i].x) < 1e-6);
    CHECK(std::abs(z.samples[i].y - c.samples[i].y) < 1e-6);
  }
}

TEST_CASE("gromov products at the origin") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  for (const GromovParams& p : {GromovParams{}, pipeline()}) {
    CHECK(std::abs(gromov_product(h, {0, 0}, BoundaryPoint(0.4), BoundaryPoint(0.4 + kPi), p)) < 1e-6);
    CHECK(gromov_product(h, {0, 0}, BoundaryPoint(0.0), BoundaryPoint(kPi / 2), p) ==
          doctest::Approx(-std::log(std::sin(kPi / 4))).epsilon(1e-6));
  }
  CHECK(std::isinf(gromov_product(h, {0, 0}, BoundaryPoint(1.0), BoundaryPoint(1.0))));
}

TEST_CASE("cross ratio of the square and the degenerate guard") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  auto g0 = [](double a, double b) { return -std::log(std::abs(std::sin(0.5 * (a - b)))); };
  const double t[4] = {0.0, kPi / 2, kPi, 3 * kPi / 2};
  const double exact = g0(t[0], t[2]) + g0(t[1], t[3]) - g0(t[0], t[3]) - g0(t[1], t[2]);
  for (Point x : {Point{0, 0}, Point{0.3, -0.2}}) {
    const CrossRatio c = cross_ratio_add(h, x, BoundaryPoint(t[0]), BoundaryPoint(t[1]), BoundaryPoint(t[2]),
                                         BoundaryPoint(t[3]), pipeline());
    CHECK(c.value == doctest::Approx(exact).epsilon(1e-6));
  }
  const CrossRatio d = cross_ratio_add(h, {0, 0}, BoundaryPoint(1.0), BoundaryPoint(1.0), BoundaryPoint(2.0),
                                       BoundaryPoint(3.0));
  CHECK(d.degenerate);
  CHECK(d.value == 0.0);
}

TEST_CASE("cross ratio does not depend on the base point on the perturbed model") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const BoundaryPoint a(0.2), b(1.9), c(3.3), d(5.0);
  const double at0 = cross_ratio_add(m, {0, 0}, a, b, c, d).value;
  for (Point x : {Point{0.3, 0.1}, Point{-0.2, 0.4}})
    CHECK(cross_ratio_add(m, x, a, b, c, d, pipeline()).value == doctest::Approx(at0).epsilon(1e-6));
}

TEST_CASE("quasimetric values") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(quasimetric(h, {0, 0}, 1.0, BoundaryPoint(0.0), BoundaryPoint(kPi / 2)) == doctest::Approx(std::sin(kPi / 4)));
  CHECK(quasimetric(h, {0, 0}, 1.0, BoundaryPoint(0.0), BoundaryPoint(kPi)) == doctest::Approx(1.0));
  CHECK(quasimetric(h, {0, 0}, 2.0, BoundaryPoint(0.0), BoundaryPoint(kPi / 2)) == doctest::Approx(0.5));
  CHECK(quasimetric(h, {0, 0}, 1.0, BoundaryPoint(2.0), BoundaryPoint(2.0)) == 0.0);
  CHECK_THROWS_AS(quasimetric(h, {0, 0}, 0.0, BoundaryPoint(0.0), BoundaryPoint(1.0)), DomainError);
}

TEST_CASE("quasimetric constant") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(quasimetric_constant(h, {0, 0}, 1.0, 100000, 7).k_hat <= 1 + 1e-9);
  const QuasiMetric q(h, {0, 0}, 1.0);
  CHECK(triple_ratio(q, BoundaryPoint(0.5), BoundaryPoint(2.0), BoundaryPoint(0.5)) <= 1.0);
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.5, 0.25, 0.1}) {
    const double k = quasimetric_constant(m, {0, 0}, eps, 20000, 3).k_hat;
    CHECK(k <= prev);
    prev = k;
  }
}

TEST_CASE("frink chain metric") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  Rng rng(9);
  std::vector<BoundaryPoint> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(BoundaryPoint(rng.uniform(0, 2 * kPi)));
  const FrinkMetric f(QuasiMetric(h, {0, 0}, 1.0), pts, 3);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < f.size(); ++j) CHECK(std::abs(f.distance(i, j) - f.quasi(i, j)) < 1e-9);
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const FrinkMetric g = frink_metrize(QuasiMetric(m, {0, 0}, 0.25), pts, 6);
  CHECK(g.lower_constant() >= 0.25);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(g.distance(i, j) <= g.quasi(i, j) + 1e-15);
      for (std::size_t k = 0; k < g.size(); k += 7) CHECK(g.distance(i, j) <= g.distance(i, k) + g.distance(k, j) + 1e-12);
    }
}

TEST_CASE("boundary map: rotations and the Moebius action") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(angle_gap(boundary_map(h, IsometryElement::rotation(0.9), BoundaryPoint(1.0)).theta, 1.9) < 1e-14);
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const IsometryElement g = IsometryElement::rotation(rng.uniform(0, 6)) *
                              IsometryElement::translation(rng.uniform(-2, 2)) *
                              IsometryElement::rotation(rng.uniform(0, 6));
    const double th = rng.uniform(0, 2 * kPi);
    const double r = 1 - 1e-10;
    const Point p = isometry_apply(h, g, Point{r * std::cos(th), r * std::sin(th)});
    CHECK(angle_gap(boundary_map(h, g, BoundaryPoint(th)).theta, std::atan2(p.y, p.x)) < 1e-7);
  }
}

TEST_CASE("perturbed boundary map: group law, evaluator agreement, invalid elements") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const IsometryElement g = IsometryElement::translation(0.8), k = IsometryElement::half_turn() * IsometryElement::translation(-0.5);
  for (double th : {0.3, 2.0, 4.4}) {
    const BoundaryPoint xi(th);
    const double a = boundary_map(m, g * k, xi).theta;
    const double b = boundary_map(m, g, boundary_map(m, k, xi)).theta;
    CHECK(angle_gap(a, b) < 1e-9);
    CHECK(angle_gap(a, boundary_map(m, g * k, xi, Evaluator::Pipeline).theta) < 1e-8);
  }
  CHECK_THROWS_AS(boundary_map(m, IsometryElement::rotation(0.2), BoundaryPoint(1.0)), InvalidIsometry);
}

TEST_CASE("boundary derivative") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  for (double th : {0.1, 2.5}) CHECK(std::abs(boundary_derivative(h, IsometryElement::rotation(1.1), BoundaryPoint(th), 1.0).value - 1) < 1e-8);
  const IsometryElement g = IsometryElement::translation(1.0);
  CHECK(boundary_derivative(h, g, BoundaryPoint(0.0), 1.0).value == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(std::exp(log_boundary_derivative_exact(h, g, BoundaryPoint(0.0), 1.0)) == doctest::Approx(std::exp(-1.0)));
  CHECK(boundary_jacobian(h, g, BoundaryPoint(1.3)) ==
        doctest::Approx(std::exp(log_boundary_derivative_exact(h, g, BoundaryPoint(1.3), 1.0))).epsilon(1e-8));
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  CHECK(std::abs(boundary_derivative(m, IsometryElement::half_turn(), BoundaryPoint(0.7), 0.25).value - 1) < 1e-8);
  // Lipschitz: difference quotients stay bounded as the pair shrinks.
  const IsometryElement t = IsometryElement::translation(1.5);
  double worst_small = 0, worst_large = 0;
  for (double gap : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
    const BoundaryPoint a(1.0), b(1.0 + gap);
    const double ratio = std::abs(std::exp(log_boundary_derivative_exact(m, t, a, 0.25)) -
                                  std::exp(log_boundary_derivative_exact(m, t, b, 0.25))) /
                         quasimetric(m, {0, 0}, 0.25, a, b);
    (gap > 5e-3 ? worst_large : worst_small) = std::max(gap > 5e-3 ? worst_large : worst_small, ratio);
  }
  CHECK(worst_small <= 2 * worst_large);
}

TEST_CASE("eps-derivative is the eps power of the circle jacobian in constant curvature") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  Rng rng(12);
  for (int i = 0; i < 5; ++i) {
    const IsometryElement g = IsometryElement::rotation(rng.uniform(0, 6)) *
                              IsometryElement::translation(rng.uniform(-2, 2));
    const BoundaryPoint xi(rng.uniform(0, 2 * kPi));
    const double lhs = std::log(boundary_derivative(h, g, xi, 0.5).value);
    CHECK(lhs == doctest::Approx(0.5 * std::log(boundary_jacobian(h, g, xi))).epsilon(1e-7));
  }
}
