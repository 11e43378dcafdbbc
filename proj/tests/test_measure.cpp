#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "horolab/measure.hpp"
#include "horolab/stats.hpp"

using namespace horolab;

namespace {

constexpr double kPi = std::numbers::pi;

ManifoldModel flat_perturbed() {
  ModelDescriptor d = ManifoldModel::perturbed_axial().descriptor();
  d.amplitude = 0.0;
  return ManifoldModel(d);
}

double harmonic(Point x, double th) {
  const double dx = std::cos(th) - x.x, dy = std::sin(th) - x.y;
  return (1 - x.x * x.x - x.y * x.y) / (dx * dx + dy * dy) / (2 * kPi);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, i / (n - 1.0)));
  return g;
}

}  // namespace

TEST_CASE("visual measure densities") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  CHECK(lambda_density(m, {0, 0}, BoundaryPoint(1.0)) == doctest::Approx(1 / (2 * kPi)));
  for (double th : {0.0, kPi, 2.0}) {
    CHECK(lambda_density(h, {0.5, 0}, BoundaryPoint(th)) == doctest::Approx(harmonic({0.5, 0}, th)).epsilon(1e-8));
    CHECK(lambda_density(flat_perturbed(), {0.3, 0.2}, BoundaryPoint(th)) ==
          doctest::Approx(lambda_density(h, {0.3, 0.2}, BoundaryPoint(th))).epsilon(1e-5));
  }
  // A probability density on the perturbed model too.
  double total = 0;
  // The density is only C^2 across the band edge, so the midpoint rule needs a fine grid.
  const int n = 800;
  for (int i = 0; i < n; ++i) total += lambda_density(m, {0.2, 0.3}, BoundaryPoint((i + 0.5) * 2 * kPi / n)) * 2 * kPi / n;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("radon-nikodym derivative of visual measures") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(rn_lambda(h, {0.1, 0.2}, {0.1, 0.2}, BoundaryPoint(0.4)) == 1.0);
  const Point x{0.1, -0.3}, y{-0.4, 0.2};
  for (double th : {0.3, 2.9, 5.0})
    CHECK(rn_lambda(h, x, y, BoundaryPoint(th)) == doctest::Approx(harmonic(y, th) / harmonic(x, th)).epsilon(1e-7));
}

TEST_CASE("ball masses") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(ball_mass(h, {0, 0}, 1.0, BoundaryPoint(0.0), 0.1) == doctest::Approx(2 * std::asin(0.1) / kPi).epsilon(1e-10));
  CHECK(ball_mass(h, {0, 0}, 1.0, BoundaryPoint(0.0), 1.5) == 1.0);
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  CHECK(ball_mass(m, {0, 0}, 0.5, BoundaryPoint(2.0), 10.0) == doctest::Approx(1.0));
  // mass / r stays bounded as r -> 0 for Q = 1.
  double lo = 1e300, hi = 0;
  for (double r : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double ratio = ball_mass(m, {0, 0}, 1.0, BoundaryPoint(0.8), r) / r;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo < 1.5);
  // Off-center ball on the constant model: compare with the harmonic density over the arc.
  const Point x{0.3, 0.1};
  const BallArc arc = ball_arc(h, x, 1.0, BoundaryPoint(1.0), 0.2);
  double integral = 0;
  const int n = 2000;
  const double lo_t = 1.0 - arc.minus, w = arc.minus + arc.plus;
  for (int i = 0; i < n; ++i) integral += harmonic(x, lo_t + (i + 0.5) * w / n) * w / n;
  CHECK(ball_mass(h, x, 1.0, BoundaryPoint(1.0), 0.2) == doctest::Approx(integral).epsilon(1e-6));
}

TEST_CASE("ahlfors dimension") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  std::vector<BoundaryPoint> xs;
  Rng rng(2);
  for (int i = 0; i < 16; ++i) xs.push_back(BoundaryPoint(rng.uniform(0, 2 * kPi)));
  for (double eps : {1.0, 0.5}) {
    const double rmax = std::pow(0.6, eps);
    const AhlforsFit f = ahlfors_fit(h, {0, 0}, eps, log_grid(rmax * 0.02, rmax, 10), xs);
    CHECK(f.dimension_estimate == doctest::Approx(1 / eps).epsilon(0.05));
  }
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const double rmax = std::pow(0.6, 0.25);
  const AhlforsFit f = ahlfors_fit(m, {0, 0}, 0.25, log_grid(rmax * 0.02, rmax, 10), xs);
  CHECK(f.dimension_estimate == doctest::Approx(4.0).epsilon(0.15));
  CHECK(f.C_estimate >= 1.0);
  CHECK_THROWS_AS(ahlfors_fit(h, {0, 0}, 1.0, {0.1, 0.2}, xs), DomainError);
}

TEST_CASE("nu density and the sampler") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  const NuMeasure nu(h, {0, 0}, 1.0);
  CHECK(nu_density(nu, BoundaryPoint(0.0), BoundaryPoint(kPi)) == doctest::Approx(1 / (4 * kPi * kPi)).epsilon(1e-12));
  CHECK_THROWS(nu.density(BoundaryPoint(1.0), BoundaryPoint(1.0 + 1e-6)));
  const NuSample s = nu_sample(nu, 20000, 5, Proposal::Mixture);
  CHECK(s.pairs.size() == 20000);
  for (const NuPair& p : s.pairs) CHECK(p.delta >= nu.cutoff);
  double mass = 0;
  for (const NuPair& p : s.pairs) mass += p.weight;
  mass /= static_cast<double>(s.pairs.size());
  const double c = nu.cutoff;
  const double exact = 2 / kPi * std::sqrt(1 - c * c) / c;
  CHECK(mass == doctest::Approx(exact).epsilon(0.03));
  CHECK(weighted_mean(s, [](double, double) { return 3.0; }) == doctest::Approx(3.0).epsilon(1e-12));
  // Same seed, same sample.
  const NuSample t = nu_sample(nu, 20000, 5, Proposal::Mixture);
  CHECK(t.pairs[123].theta1 == s.pairs[123].theta1);
  CHECK(t.pairs[19999].weight == s.pairs[19999].weight);
}

TEST_CASE("sample CSV format") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  const NuSample s = nu_sample(NuMeasure(h, {0, 0}, 1.0), 3, 1);
  const std::string path = "horolab_test_samples.csv";
  write_samples_csv(s, path);
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  CHECK(text.rfind("theta1,theta2,weight,delta\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find('\r') == std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("RN of nu") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  for (double th : {0.2, 3.0})
    CHECK(rn_nu(h, IsometryElement::rotation(0.7), 1.0, BoundaryPoint(th), BoundaryPoint(th + 1.5)) == doctest::Approx(1.0).epsilon(1e-8));
  const IsometryElement g = IsometryElement::translation(1.0);
  const NuMeasure nu(h, {0, 0}, 1.0, 1e-9);
  for (double th : {0.2, 1.4, 4.0}) {
    const BoundaryPoint a(th), b(th + 2.1);
    const double direct = nu.density(boundary_map(h, g, a), boundary_map(h, g, b)) * boundary_jacobian(h, g, a) *
                          boundary_jacobian(h, g, b) / nu.density(a, b);
    CHECK(rn_nu(h, g, 1.0, a, b) == doctest::Approx(direct).epsilon(1e-6));
    CHECK(rn_nu(h, g, 1.0, a, b) == doctest::Approx(1.0).epsilon(1e-6));
  }
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  Rng rng(8);
  for (int l : {-2, -1, 1, 2}) {
    const IsometryElement gl = IsometryElement::translation(3.0).power(l);
    for (int i = 0; i < 10; ++i) {
      const BoundaryPoint a(rng.uniform(0, 2 * kPi)), b(a.theta + rng.uniform(0.1, 6.0));
      const double r = rn_nu(m, gl, 0.25, a, b);
      CHECK(r > 0.5);
      CHECK(r < 2.0);
      CHECK(rn_nu(m, gl, 0.25, a, b, RnMode::Derivative) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}
