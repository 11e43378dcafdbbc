#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "horolab/boundary.hpp"

namespace horolab {

// Density of lambda_x (the visual image of the round measure on the unit circle at x)
// with respect to d theta in the origin chart. 1/(2 pi) at the origin; elsewhere the
// derivative of the direction-transfer map, by fourth-order differences.
double lambda_density(const ManifoldModel& m, Point x, const BoundaryPoint& xi, double h = 1e-4);

// dlambda_y / dlambda_x at xi.
double rn_lambda(const ManifoldModel& m, Point x, Point y, const BoundaryPoint& xi);

// lambda_x of the open ball {eta : delta_{x,eps}(xi, eta) < r}.
double ball_mass(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& xi, double r,
                 const GromovParams& params = {});

struct BallArc {
  double minus = 0.0;  // angular extent on each side of xi
  double plus = 0.0;
};
BallArc ball_arc(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& xi, double r,
                 const GromovParams& params = {});

struct AhlforsFit {
  double dimension_estimate = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double C_estimate = 0.0;  // max over samples of max(mass / r^Q, r^Q / mass), Q = 1/eps
  double fit_r2 = 0.0;
  std::size_t n_used = 0;
  std::vector<double> r, mass;  // every (xi, r) evaluation, xi-major
};
AhlforsFit ahlfors_fit(const ManifoldModel& m, Point x, double eps, const std::vector<double>& r_grid,
                       const std::vector<BoundaryPoint>& xi_samples, const GromovParams& params = {});

struct NuMeasure {
  std::shared_ptr<const ManifoldModel> owned;  // copy of the model, shared between copies
  const ManifoldModel* model = nullptr;         // = owned.get()
  Point base;
  double epsilon = 1.0;
  double Q = 1.0;
  double cutoff = 1e-3;
  GromovParams params;

  NuMeasure(const ManifoldModel& m, Point x, double eps, double cutoff = 1e-3, GromovParams p = {});
  double delta(const BoundaryPoint& a, const BoundaryPoint& b) const;
  double density(const BoundaryPoint& a, const BoundaryPoint& b) const;
  double lambda(const BoundaryPoint& a) const;
};

double nu_density(const NuMeasure& nu, const BoundaryPoint& xi, const BoundaryPoint& eta);

struct NuPair {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double weight = 0.0;  // mean of weight * F estimates the nu-integral of F
  double delta = 0.0;
};

// Uniform: both angles uniform. Mixture adds separations drawn log-uniformly down to the
// cutoff scale, and, given focus angles, first points drawn log-uniformly in their distance
// to a focus: integrands concentrated near the diagonal or near fixed points.
enum class Proposal { Uniform, Mixture };

struct NuSample {
  std::vector<NuPair> pairs;
  long draws = 0;  // proposals including rejected ones
  double ess = 0.0;
  double min_separation = 0.0;  // lower end of the log-uniform component
};

// n accepted pairs with delta >= cutoff, in fixed batches with one substream each.
NuSample nu_sample(const NuMeasure& nu, long n, std::uint64_t seed,
                   Proposal proposal = Proposal::Uniform, const std::vector<double>& focus = {});
double weighted_mean(const NuSample& s, const std::function<double(double, double)>& f);
void write_samples_csv(const NuSample& s, const std::string& path);

// Jacobian: RN(g) is the derivative of the boundary map in the origin chart, i.e. the
// Radon-Nikodym derivative of lambda_0. Derivative: RN(g) = |g'|^(1/eps), for which the
// identity delta(g xi, g eta)^2 = |g'(xi)| |g'(eta)| delta(xi, eta)^2 makes RN_nu = 1.
enum class RnMode { Jacobian, Derivative };

// delta(g xi, g eta)^(-2Q) RN(g)(xi) RN(g)(eta) delta(xi, eta)^(2Q), Q = 1/eps, based at 0.
double rn_nu(const ManifoldModel& m, const IsometryElement& g, double eps, const BoundaryPoint& xi,
             const BoundaryPoint& eta, RnMode mode = RnMode::Jacobian);

}  // namespace horolab
