#pragma once

#include <memory>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/makima.hpp>

#include "horolab/models.hpp"

namespace horolab {

// Interpolant on a finite range, continued linearly outside it.
class Table1D {
 public:
  Table1D() = default;
  static Table1D uniform(const std::vector<double>& y, double x0, double h);
  static Table1D scattered(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double prime(double x) const;
  double x_min() const { return lo_; }
  double x_max() const { return hi_; }
  bool empty() const { return !uni_ && !sca_; }

 private:
  double inner(double x) const;
  double inner_prime(double x) const;
  using Uniform = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  using Scattered = boost::math::interpolators::makima<std::vector<double>>;
  std::shared_ptr<Uniform> uni_;
  std::shared_ptr<Scattered> sca_;
  double lo_ = 0, hi_ = 0;
  double ylo_ = 0, yhi_ = 0, dlo_ = 0, dhi_ = 0;
};

// Quantities of one geodesic through a state inside the band, integrated between its
// two band exits. Mean curvatures use the exact tails: outside the band the past of
// the geodesic is hyperbolic, so u = 1 there and the remaining integral of u - 1 past
// an exit with value u_e is log((1 + u_e) / 2).
struct GeodesicPass {
  double t_back = 0, t_fwd = 0;
  Fermi exit_back, exit_fwd;
  IdealPoint end_back, end_fwd;
  double fwd_int_0f = 0;    // int_0^t_fwd (m(v) - 1)
  double fwd_int_all = 0;   // int_t_back^t_fwd (m(v) - 1)
  double bwd_int_0f = 0;    // int_0^t_fwd (m(-v) - 1)
  double bwd_int_all = 0;
  double fwd_exit_u = 1, bwd_exit_u = 1;
};
GeodesicPass geodesic_pass(const ManifoldModel& m, const Fermi& start, double tol = 1e-11);

// b_w(P) = log(|P - w|^2 / Im P) on the upper half plane, P given in Fermi coordinates.
double uhp_busemann(const IdealPoint& w, double s, double rho);
// log|w_a - w_b| for finite boundary coordinates; axis endpoints are clamped.
double log_abs_dw(const IdealPoint& a, const IdealPoint& b);

struct FactorizedOptions {
  double tau_max = 18.0;
  double tau_step = 0.02;
  int family_size = 1600;
  double family_depth = 40.0;
  double tol = 1e-11;
};

// Gromov products at the origin in closed product form
//   (xi|eta)_0 = (P(xi) + P(eta))/2 - log|w_xi - w_eta| - Lambda(xi, eta)/2.
// P(xi) = D_0(xi) + b_xi(0) collects the integral of f - 1 along the ray from the
// origin and the Busemann function normalized by its hyperbolic form near xi.
// Lambda depends only on the class of the connecting geodesic modulo translation
// along the axis: its side pattern and the separation |sigma_xi - sigma_eta|.
// Only valid for metrics invariant under translation along the axis.
class FactorizedBoundary {
 public:
  explicit FactorizedBoundary(const ManifoldModel& m, const FactorizedOptions& opt = {});
  // Built once per model descriptor and shared.
  static std::shared_ptr<const FactorizedBoundary> shared(const ManifoldModel& m);

  IdealPoint ideal_of_direction(double theta) const;
  double direction_of_ideal(const IdealPoint& e) const;

  double potential(const IdealPoint& e) const;
  double potential_sigma(double sigma) const;
  double geodesic_term(const IdealPoint& a, const IdealPoint& b) const;
  double gromov(const IdealPoint& a, const IdealPoint& b) const;
  double gromov_directions(double theta1, double theta2) const;

  // log|g'|(e) for the quasimetric exp(-eps (.|.)_0); g must preserve the axis.
  double log_derivative(const IsometryElement& g, const IdealPoint& e, double eps) const;

  // Separation below which same-side geodesics miss the band.
  double same_side_threshold() const { return l_star_; }
  double build_seconds() const { return build_seconds_; }
  bool closed_form() const { return hyperbolic_; }

  static constexpr double kSigmaClamp = 60.0;

 private:
  double sigma_of_tau(double tau) const;
  double tau_of_sigma(double sigma) const;

  bool hyperbolic_ = true;
  double l_star_ = 0.0;
  double build_seconds_ = 0.0;
  Table1D sigma_tau_, tau_sigma_, pot_sigma_;
  Table1D lambda_same_;   // in v = sqrt(Delta - l_star)
  Table1D lambda_cross_;  // in Delta
};

}  // namespace horolab
