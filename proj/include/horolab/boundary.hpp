#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "horolab/factorized.hpp"
#include "horolab/flow.hpp"
#include "horolab/models.hpp"

namespace horolab {

// A boundary point, charted by the initial direction at the origin of the ray
// converging to it.
struct BoundaryPoint {
  double theta = 0.0;

  BoundaryPoint() = default;
  explicit BoundaryPoint(double t);
  bool operator==(const BoundaryPoint& o) const;
};

// ClosedForm needs the hyperbolic metric; Factorized needs the origin as base point;
// Pipeline works everywhere and is the slow reference. Auto picks the fastest valid one.
enum class Evaluator { Auto, ClosedForm, Factorized, Pipeline };

struct GromovParams {
  Evaluator evaluator = Evaluator::Auto;
  double T = 20.0;       // ray horizon for the truncated limits
  double R = 15.0;       // Riccati horizon
  double tol = 1e-10;
  double y_time = 0.0;   // where on the connecting geodesic y is taken
};

IdealPoint ideal_of(const ManifoldModel& m, const BoundaryPoint& xi, Evaluator ev = Evaluator::Auto);
BoundaryPoint boundary_point_of(const ManifoldModel& m, const IdealPoint& e,
                                Evaluator ev = Evaluator::Auto);

// lim_T d(y, gamma(T)) - d(x, gamma(T)) = b_xi(y) - b_xi(x), gamma the ray from x to xi.
double busemann_cocycle(const ManifoldModel& m, const BoundaryPoint& xi, Point x, Point y,
                        double T = 20.0, double tol = 1e-10);

// q_xi(x, y): integral of f along the ray from x to xi up to T, minus the integral along
// the ray from y over the asymptotically matching length T - u.
double q_value(const ManifoldModel& m, const BoundaryPoint& xi, Point x, Point y, double T = 20.0,
               double R = 15.0, double tol = 1e-10);
double q_value_ideal(const ManifoldModel& m, const IdealPoint& xi, Point x, Point y, double T = 20.0,
                     double R = 15.0, double tol = 1e-10);

struct BoundaryGeodesic {
  BoundaryPoint xi, eta;
  IdealPoint end_xi, end_eta;
  Fermi anchor;  // point at t = 0, moving toward eta
  Geodesic path;
  std::vector<Point> samples;
  double endpoint_residual = 0.0;

  Fermi at(double t) const { return path.at(t); }
  Point point(double t) const;
};

// Geodesic from xi to eta, traced on [-half_length, half_length].
BoundaryGeodesic connect_boundary_points(const ManifoldModel& m, const BoundaryPoint& xi,
                                         const BoundaryPoint& eta, double half_length = 5.0,
                                         int n_samples = 101, double tol = 1e-10);
// Fermi state on the geodesic from a to b, moving toward b.
Fermi connect_ideal(const ManifoldModel& m, const IdealPoint& a, const IdealPoint& b,
                    double tol = 1e-10);

double gromov_product(const ManifoldModel& m, Point x, const BoundaryPoint& xi,
                      const BoundaryPoint& eta, const GromovParams& params = {});

struct CrossRatio {
  double value = 0.0;
  bool degenerate = false;  // xi1 = xi2 or xi3 = xi4: the terms cancel pairwise
};
// (xi1|xi3) + (xi2|xi4) - (xi1|xi4) - (xi2|xi3)
CrossRatio cross_ratio_add(const ManifoldModel& m, Point x, const BoundaryPoint& x1,
                           const BoundaryPoint& x2, const BoundaryPoint& x3, const BoundaryPoint& x4,
                           const GromovParams& params = {});
// delta13 delta24 / (delta14 delta23); log Cr = -eps [x1, x2, x3, x4].
double cross_ratio_mult(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& x1,
                        const BoundaryPoint& x2, const BoundaryPoint& x3, const BoundaryPoint& x4,
                        const GromovParams& params = {});

// exp(-eps (xi|eta)_x); 0 on the diagonal.
double quasimetric(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& xi,
                   const BoundaryPoint& eta, const GromovParams& params = {});

struct QuasiMetric {
  std::shared_ptr<const ManifoldModel> owned;  // copy of the model, shared between copies
  const ManifoldModel* model = nullptr;         // = owned.get()
  Point base;
  double epsilon = 1.0;
  GromovParams params;
  std::optional<double> estimated_constant;

  QuasiMetric(const ManifoldModel& m, Point x, double eps, GromovParams p = {});
  double operator()(const BoundaryPoint& a, const BoundaryPoint& b) const;
};

struct QuasimetricConstant {
  double k_hat = 0.0;
  std::array<BoundaryPoint, 3> witness;  // (xi, eta, zeta) attaining k_hat
  long n_triples = 0;
};
// max over sampled triples of delta(xi,eta) / (delta(xi,zeta) + delta(zeta,eta)).
QuasimetricConstant quasimetric_constant(const ManifoldModel& m, Point x, double eps, long n_triples,
                                         std::uint64_t seed, const GromovParams& params = {});
double triple_ratio(const QuasiMetric& q, const BoundaryPoint& a, const BoundaryPoint& b,
                    const BoundaryPoint& c);

// Chain metric d(a, b) = inf sum delta(z_i, z_{i+1}) over chains through the sample
// points with at most chain_depth links.
class FrinkMetric {
 public:
  FrinkMetric(const QuasiMetric& q, std::vector<BoundaryPoint> points, int chain_depth);

  double distance(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  double quasi(std::size_t i, std::size_t j) const { return q_[i * n_ + j]; }
  // Chains from a and b enter the sample set once each.
  double distance(const BoundaryPoint& a, const BoundaryPoint& b) const;
  std::size_t size() const { return n_; }
  // Largest c with c delta <= d over all sample pairs.
  double lower_constant() const { return c_; }
  bool converged() const { return converged_; }  // chains stopped improving before depth
  int depth() const { return depth_; }
  const std::vector<BoundaryPoint>& points() const { return pts_; }

 private:
  QuasiMetric qm_;
  std::vector<BoundaryPoint> pts_;
  std::size_t n_;
  std::vector<double> q_, d_;
  double c_ = 1.0;
  bool converged_ = false;
  int depth_;
};

FrinkMetric frink_metrize(const QuasiMetric& q, const std::vector<BoundaryPoint>& samples,
                          int chain_depth);

BoundaryPoint boundary_map(const ManifoldModel& m, const IsometryElement& g, const BoundaryPoint& xi,
                           Evaluator ev = Evaluator::Auto);

struct DerivativeEstimate {
  double value = 0.0;
  bool conditioning_warning = false;
};
// |g'|(xi) from the cross-ratio identity with auxiliary points u, v (default xi +- 2pi/3),
// quasimetric based at the origin.
DerivativeEstimate boundary_derivative(const ManifoldModel& m, const IsometryElement& g,
                                       const BoundaryPoint& xi, double eps,
                                       std::optional<std::pair<BoundaryPoint, BoundaryPoint>> aux = {},
                                       const GromovParams& params = {});
// log|g'|(xi) from the Moebius multiplier (constant curvature) or the factorized form.
double log_boundary_derivative_exact(const ManifoldModel& m, const IsometryElement& g,
                                     const BoundaryPoint& xi, double eps);
// d theta' / d theta of the boundary map in the origin chart, fourth-order differences.
double boundary_jacobian(const ManifoldModel& m, const IsometryElement& g, const BoundaryPoint& xi,
                         double h = 1e-4, Evaluator ev = Evaluator::Auto);

}  // namespace horolab
