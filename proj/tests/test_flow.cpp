#include <doctest.h>

#include <cmath>

#include "horolab/flow.hpp"

using namespace horolab;

namespace {

ManifoldModel flat_perturbed() {
  ModelDescriptor d = ManifoldModel::perturbed_axial().descriptor();
  d.amplitude = 0.0;
  return ManifoldModel(d);
}

}  // namespace

TEST_CASE("riccati closed form on the constant model") {
  const ManifoldModel m = ManifoldModel::constant_curvature();
  const UnitTangent v = unit_tangent(m, {0.2, -0.1}, 1.3);
  CHECK(std::abs(riccati_mean_curvature(m, v, 10.0).value - std::tanh(10.0)) < 1e-9);
  CHECK(std::abs(riccati_mean_curvature(m, v, 1.0).value - std::tanh(1.0)) < 1e-9);
  CHECK(std::abs(f_symmetric(m, v, 10.0) - 1.0) < 1e-6);
}

TEST_CASE("perturbed riccati agrees with the Jacobi quotient and lies in [a, b]") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const double R = 15.0;
  for (double phi : {0.4, 1.2, 2.0}) {
    const Fermi v{0.0, 0.2, phi};
    const double mr = riccati_mean_curvature_fermi(m, v, R).value;
    CHECK(mr >= m.a() - 1e-9);
    CHECK(mr <= m.b() + 1e-9);
    // J'' + K J = 0 from gamma_v(-R) with J' = 0 there; m = J'/J at gamma_v(0).
    const Fermi back = flow_fermi(m, v, -R, 1e-12);
    const auto js = jacobi_solve_fermi(m, back, 1.0, 0.0, R, 2, 1e-12);
    CHECK(mr == doctest::Approx(js.back().dJ / js.back().J).epsilon(1e-7));
  }
}

TEST_CASE("f equals 1 far from the bump") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  // Closest approach to the axis at distance 3: the whole geodesic avoids the band.
  const Fermi v{0.0, 3.0, 0.0};
  const auto fwd = riccati_mean_curvature_fermi(m, v);
  const auto bwd = riccati_mean_curvature_fermi(m, {v.s, v.rho, v.phi + 3.141592653589793});
  CHECK(std::abs(fwd.value - 1.0) <= 2 * fwd.est_truncation_error + 1e-12);
  CHECK(std::abs(0.5 * (fwd.value + bwd.value) - 1.0) <= 2 * fwd.est_truncation_error + 1e-12);
}

TEST_CASE("jacobi fields on the constant model") {
  const ManifoldModel m = ManifoldModel::constant_curvature();
  const UnitTangent v = unit_tangent(m, {0, 0}, 0.4);
  CHECK(jacobi_solve(m, v, 0.0, 1.0, 2.0).back().J == doctest::Approx(std::sinh(2.0)).epsilon(1e-9));
  CHECK(jacobi_solve(m, v, 1.0, 0.0, 2.0).back().J == doctest::Approx(std::cosh(2.0)).epsilon(1e-9));
}

TEST_CASE("truncation difference decays with the horizon") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const Fermi v{0.0, 0.3, 1.1};
  double prev = 1.0;
  for (double R : {4.0, 6.0, 8.0, 10.0}) {
    const double d = std::abs(riccati_mean_curvature_fermi(m, v, R, 1e-13).value -
                              riccati_mean_curvature_fermi(m, v, 2 * R, 1e-13).value);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("symmetry defect examples") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  const Fermi g{0.1, 0.4, 2.2};
  for (double t : {1.0, 10.0}) CHECK(symmetry_defect_fermi(h, g, t) <= 2 * riccati_mean_curvature_fermi(h, g).est_truncation_error + 1e-9);
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  CHECK(symmetry_defect_fermi(m, {0.0, 0.0, 0.0}, 10.0) < 1e-8);
  const double d10 = symmetry_defect_fermi(m, {0.0, 0.2, 0.5}, 10.0);
  const double d20 = symmetry_defect_fermi(m, {0.0, 0.2, 0.5}, 20.0);
  const double d40 = symmetry_defect_fermi(m, {0.0, 0.2, 0.5}, 40.0);
  CHECK(d20 == doctest::Approx(d10).epsilon(1e-6));
  CHECK(d40 == doctest::Approx(d10).epsilon(1e-6));
  CHECK_THROWS_AS(symmetry_defect_fermi(m, {0.0, 0.2, 0.5}, 0.0), DomainError);
}

TEST_CASE("holder exponent: degenerate flag and positive estimate") {
  const ManifoldModel h = ManifoldModel::constant_curvature();
  CHECK(holder_exponent(h, {0.0, 0.2}, 50, {1e-3, 0.3}, 1).degenerate);
  CHECK(holder_exponent(flat_perturbed(), {0.0, 0.2}, 50, {1e-3, 0.3}, 1).degenerate);
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const HolderResult r = holder_exponent(m, point_at_axis_distance(m, 0.5), 500, {1e-3, 0.3}, 7);
  CHECK_FALSE(r.degenerate);
  CHECK(r.exponent_estimate > 0);
  CHECK(r.ci_low > 0);
}

TEST_CASE("point_at_axis_distance inverts the distance to the axis") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  for (double d : {0.3, 0.5, 1.7}) CHECK(distance(m, {0, 0}, point_at_axis_distance(m, d)) == doctest::Approx(d).epsilon(1e-8));
}

TEST_CASE("mean curvature cache returns the uncached values") {
  const ManifoldModel m = ManifoldModel::perturbed_axial();
  const MeanCurvatureField plain(m), memo(m, 15.0, 1e-10, CachePolicy::Memo);
  const UnitTangent v = unit_tangent(m, {0.1, 0.05}, 0.8);
  CHECK(memo.m(v) == plain.m(v));
  CHECK(memo.m(v) == plain.m(v));
  CHECK(memo.f(v) == doctest::Approx(f_symmetric(m, v)).epsilon(1e-12));
  CHECK(memo.cache_size() >= 1);
}
