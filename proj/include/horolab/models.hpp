#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "horolab/ode.hpp"

namespace horolab {

using cplx = std::complex<double>;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidIsometry : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved_time() const { return achieved_; }

 private:
  double achieved_;
};

// Poincare disk chart.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Chart components (vx, vy) of a vector of metric norm one at p.
struct UnitTangent {
  Point p;
  double vx = 0.0;
  double vy = 0.0;
};

// Fermi coordinates about the axis (the real diameter): s is arclength along the axis
// in the hyperbolic metric, rho the signed hyperbolic distance to it (rho > 0 in the
// upper half disk), phi the angle of the velocity measured from d/ds.
struct Fermi {
  double s = 0.0;
  double rho = 0.0;
  double phi = 0.0;
};

// Ideal point as a normalized pair with w = p / q the upper-half-plane boundary
// coordinate under w = i(1 + z)/(1 - z). (p, q) = (-cos(omega/2), sin(omega/2)) where
// omega is the angle of the point on the unit circle. The pair keeps full relative
// precision near both axis endpoints omega = 0 (w = inf) and omega = pi (w = 0).
struct IdealPoint {
  double p = -1.0;
  double q = 0.0;

  static IdealPoint from_angle(double omega);
  static IdealPoint from_w(double w);
  // side = +1 for the upper arc (w < 0), -1 for the lower arc.
  static IdealPoint from_log(int side, double sigma);
  static IdealPoint axis_plus() { return {-1.0, 0.0}; }
  static IdealPoint axis_minus() { return {0.0, 1.0}; }

  double angle() const;
  int side() const { return p * q < 0 ? 1 : -1; }
  double sigma() const;  // log|w|; +inf at omega = 0, -inf at omega = pi
  bool is_axis_endpoint() const { return p == 0.0 || q == 0.0; }
};

// sin((omega_a - omega_b) / 2) up to sign conventions of the pairs.
double ideal_cross(const IdealPoint& a, const IdealPoint& b);
// |sin((omega_a - omega_b)/2)|: half the chordal distance between the circle points.
double ideal_half_chord(const IdealPoint& a, const IdealPoint& b);

enum class ModelKind { ConstantCurvature, PerturbedAxial };

struct ModelDescriptor {
  ModelKind kind = ModelKind::ConstantCurvature;
  double a = 1.0;
  double b = 1.0;
  double amplitude = 0.0;
  double support_radius = 1.0;
};

inline bool operator<(const ModelDescriptor& l, const ModelDescriptor& r) {
  return std::tie(l.kind, l.a, l.b, l.amplitude, l.support_radius) <
         std::tie(r.kind, r.a, r.b, r.amplitude, r.support_radius);
}

std::string model_kind_name(ModelKind k);

struct ProfileJet {
  double psi = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

class ManifoldModel {
 public:
  explicit ManifoldModel(const ModelDescriptor& d);

  static ManifoldModel constant_curvature();
  static ManifoldModel perturbed_axial(double amplitude = 0.1, double support_radius = 1.0,
                                       double a = 0.55, double b = 1.2);

  const ModelDescriptor& descriptor() const { return d_; }
  ModelKind kind() const { return d_.kind; }
  double a() const { return d_.a; }
  double b() const { return d_.b; }
  // True when the metric is exactly hyperbolic (constant model or zero amplitude).
  bool hyperbolic() const { return hyperbolic_; }
  // Half-width of the band |rho| < band() outside which the metric is hyperbolic.
  double band() const { return d_.support_radius; }

  ProfileJet profile(double rho) const;
  double curvature_fermi(double rho) const;
  double curvature_gradient_fermi(double rho) const;
  double curvature_gradient_bound() const { return grad_bound_; }
  // e^psi: ratio of the metric to the hyperbolic one.
  double conformal(double rho) const;

  // Geodesic equations in Fermi coordinates with unit speed built in.
  void geodesic_rhs(const Vec<3>& y, Vec<3>& dy) const;

 private:
  ModelDescriptor d_;
  bool hyperbolic_ = true;
  double grad_bound_ = 0.0;
};

// Chart conversions.
cplx disk_to_uhp(Point p);
Point uhp_to_disk(cplx w);
Fermi fermi_of_point(Point p);  // phi left at 0
Point point_of_fermi(double s, double rho);
cplx uhp_of_fermi(double s, double rho);
Fermi fermi_of_tangent(const UnitTangent& v);
UnitTangent tangent_of_fermi(const ManifoldModel& m, const Fermi& f);
UnitTangent unit_tangent(const ManifoldModel& m, Point p, double chart_angle);
double metric_norm(const ManifoldModel& m, Point p, double vx, double vy);
double curvature_at(const ManifoldModel& m, Point p);

// Geodesic tracing in Fermi coordinates.
class Geodesic {
 public:
  Geodesic() = default;
  Geodesic(DensePath<3> path) : path_(std::move(path)) {}
  Fermi at(double t) const {
    const auto y = path_.at(t);
    return {y[0], y[1], y[2]};
  }
  double t_min() const { return path_.t_min(); }
  double t_max() const { return path_.t_max(); }
  const DensePath<3>& path() const { return path_; }

 private:
  DensePath<3> path_;
};

OdeOptions geodesic_options(double tol);
Geodesic trace_geodesic(const ManifoldModel& m, const Fermi& start, double t_lo, double t_hi,
                        double tol = 1e-10);
Fermi flow_fermi(const ManifoldModel& m, const Fermi& start, double t, double tol = 1e-10);

struct EvolveResult {
  UnitTangent end;
  std::vector<UnitTangent> samples;
  double achieved_time = 0.0;
};
EvolveResult geodesic_evolve(const ManifoldModel& m, const UnitTangent& v, double t,
                             double tol = 1e-10, int n_samples = 0);

// Closed-form hyperbolic endpoint of the geodesic through a Fermi state.
IdealPoint hyperbolic_endpoint(const Fermi& f);
// Direction (Fermi phi) at (s, rho) of the hyperbolic geodesic ray to an ideal point.
double hyperbolic_direction_to(double s, double rho, const IdealPoint& target);

struct RayExit {
  IdealPoint endpoint;
  double t_exit = 0.0;  // time at which the ray is in the hyperbolic region for good
  Fermi exit_state;
  bool exits = true;  // false if the ray stays in the band (asymptotic to the axis)
};

// Forward endpoint of the geodesic through f. Rays are integrated only while inside
// the band; once outside and not returning, the hyperbolic closed form takes over.
RayExit ray_endpoint(const ManifoldModel& m, const Fermi& f, double tol = 1e-10,
                     double t_max = 80.0);
// True if the hyperbolic continuation of f never enters the band again.
bool leaves_band(const ManifoldModel& m, const Fermi& f);

// Direction phi at (s, rho) whose ray converges to target.
double direction_to(const ManifoldModel& m, double s, double rho, const IdealPoint& target,
                    double tol = 1e-10);

double hyperbolic_distance(Point x, Point y);
double hyperbolic_distance_fermi(double s1, double r1, double s2, double r2);
double distance_fermi(const ManifoldModel& m, double s1, double r1, double s2, double r2,
                      double tol = 1e-11);
double distance(const ManifoldModel& m, Point x, Point y);

enum class IsometryClass { Elliptic, Parabolic, Loxodromic };

// Element of PSL(2,R) acting on the upper half plane, conjugated to the disk.
class IsometryElement {
 public:
  IsometryElement() : a_(1), b_(0), c_(0), d_(1) {}
  IsometryElement(double a, double b, double c, double d);

  static IsometryElement identity() { return {}; }
  // z -> e^{i alpha} z on the disk.
  static IsometryElement rotation(double alpha);
  // Translation by ell along the axis toward +1 (w -> e^ell w).
  static IsometryElement translation(double ell);
  // z -> -z (w -> -1/w).
  static IsometryElement half_turn();

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }
  double det() const { return a_ * d_ - b_ * c_; }
  double trace() const { return a_ + d_; }
  bool axis_compatible() const;
  bool is_identity() const;

  IsometryElement operator*(const IsometryElement& o) const;
  IsometryElement inverse() const { return {d_, -b_, -c_, a_}; }
  IsometryElement power(int k) const;

  cplx apply_uhp(cplx w) const { return (a_ * w + b_) / (c_ * w + d_); }
  cplx derivative_uhp(cplx w) const {
    const cplx den = c_ * w + d_;
    return 1.0 / (den * den);
  }
  IdealPoint apply(const IdealPoint& xi) const;

 private:
  double a_, b_, c_, d_;
};

struct Classification {
  IsometryClass cls = IsometryClass::Elliptic;
  double translation_length = 0.0;
  std::vector<IdealPoint> fixed_points;
  std::optional<IdealPoint> attracting;
  std::optional<IdealPoint> repelling;
};

Classification isometry_classify(const IsometryElement& g);
std::string isometry_class_name(IsometryClass c);

Point isometry_apply(const ManifoldModel& m, const IsometryElement& g, Point p);
UnitTangent isometry_apply(const ManifoldModel& m, const IsometryElement& g, const UnitTangent& v);
// Action on Fermi states; exact for axis-compatible elements.
Fermi isometry_apply_fermi(const IsometryElement& g, const Fermi& f);

}  // namespace horolab
