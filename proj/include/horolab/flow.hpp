#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "horolab/models.hpp"

namespace horolab {

struct RiccatiResult {
  double value = 0.0;
  double horizon = 0.0;
  double est_truncation_error = 0.0;  // C0 * exp(-2 a R), C0 calibrated per model
  double solver_tolerance = 0.0;
};

// m_R(v): solve u' = -u^2 - K(gamma_v(t - R)) on [0, R] from u(0) = 0.
RiccatiResult riccati_mean_curvature(const ManifoldModel& m, const UnitTangent& v, double R = 15.0,
                                     double tol = 1e-10);
RiccatiResult riccati_mean_curvature_fermi(const ManifoldModel& m, const Fermi& v, double R = 15.0,
                                           double tol = 1e-10);

// C0 in the truncation estimate, from comparing horizons 10 and 20 on a few vectors.
double truncation_constant(const ManifoldModel& m);

double f_symmetric(const ManifoldModel& m, const UnitTangent& v, double R = 15.0, double tol = 1e-10);

struct JacobiSample {
  double t = 0.0;
  double J = 0.0;
  double dJ = 0.0;
};

// Scalar normal Jacobi field J'' + K J = 0 along gamma_v, sampled at n points of [0, T].
std::vector<JacobiSample> jacobi_solve(const ManifoldModel& m, const UnitTangent& v, double J0,
                                       double dJ0, double T, int n_samples = 2, double tol = 1e-11);
std::vector<JacobiSample> jacobi_solve_fermi(const ManifoldModel& m, const Fermi& v, double J0,
                                             double dJ0, double T, int n_samples = 2,
                                             double tol = 1e-11);

// Mean curvature of both horocycle families along the segment gamma_v([t0, t1]).
// The forward pass starts at t0 - R with u = 0 and gives m(gamma'(t)); the backward pass
// starts at t1 + R and gives m(-gamma'(t)). Both carry running integrals.
class WeightProfile {
 public:
  WeightProfile(const ManifoldModel& m, const Fermi& v, double t0, double t1, double R = 15.0,
                double tol = 1e-10);

  double m_forward(double t) const { return fwd_.at(t)[0]; }
  double m_backward(double t) const { return bwd_.at(t)[0]; }
  double f(double t) const { return 0.5 * (m_forward(t) + m_backward(t)); }
  // Integrals over [a, b] inside [t0, t1].
  double integral_forward(double a, double b) const { return fwd_.at(b)[1] - fwd_.at(a)[1]; }
  double integral_backward(double a, double b) const { return bwd_.at(b)[1] - bwd_.at(a)[1]; }
  double integral_f(double a, double b) const {
    return 0.5 * (integral_forward(a, b) + integral_backward(a, b));
  }
  const Geodesic& geodesic() const { return path_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }

 private:
  Geodesic path_;
  DensePath<2> fwd_, bwd_;
  double t0_, t1_;
};

// |int_0^t m(gamma'(s)) ds - int_0^t m(-gamma'(s)) ds|
double symmetry_defect(const ManifoldModel& m, const UnitTangent& v, double t, double R = 15.0,
                       double tol = 1e-10);
double symmetry_defect_fermi(const ManifoldModel& m, const Fermi& v, double t, double R = 15.0,
                             double tol = 1e-10);

struct HolderResult {
  double exponent_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double fit_r2 = 0.0;
  bool degenerate = false;
  std::string note;
  int n_used = 0;
  double max_difference = 0.0;
};

// Regress log|m(v) - m(w)| on log angle(v, w) for v, w in the unit circle at x.
HolderResult holder_exponent(const ManifoldModel& m, Point x, int n_pairs,
                             std::pair<double, double> angle_range, std::uint64_t seed,
                             double R = 15.0, double tol = 1e-10);
// Point on the s = 0 geodesic perpendicular to the axis at metric distance d from it.
Point point_at_axis_distance(const ManifoldModel& m, double d);

enum class CachePolicy { Disabled, Memo };

class MeanCurvatureField {
 public:
  MeanCurvatureField(const ManifoldModel& m, double R = 15.0, double tol = 1e-10,
                     CachePolicy policy = CachePolicy::Disabled)
      : m_(&m), R_(R), tol_(tol), policy_(policy) {}

  double m(const UnitTangent& v) const;
  double f(const UnitTangent& v) const;
  double horizon() const { return R_; }
  std::size_t cache_size() const;

 private:
  const ManifoldModel* m_;
  double R_, tol_;
  CachePolicy policy_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>, double> memo_;
};

}  // namespace horolab
