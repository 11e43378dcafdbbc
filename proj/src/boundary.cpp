#include "horolab/boundary.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "horolab/stats.hpp"

namespace horolab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap(double t) {
  double w = std::fmod(t, 2 * kPi);
  if (w < 0) w += 2 * kPi;
  if (w >= 2 * kPi) w = 0.0;
  return w;
}

bool is_origin(Point x) { return x.x == 0.0 && x.y == 0.0; }

Evaluator resolve(const ManifoldModel& m, Point x, Evaluator ev) {
  switch (ev) {
    case Evaluator::Auto:
      if (m.hyperbolic()) return Evaluator::ClosedForm;
      return is_origin(x) ? Evaluator::Factorized : Evaluator::Pipeline;
    case Evaluator::ClosedForm:
      if (!m.hyperbolic()) throw DomainError("closed-form evaluator needs the hyperbolic metric");
      return ev;
    case Evaluator::Factorized:
      if (!is_origin(x)) throw DomainError("factorized evaluator is based at the origin");
      return ev;
    case Evaluator::Pipeline:
      return ev;
  }
  return ev;
}

// Most accurate endpoint available for the model.
IdealPoint exact_ideal(const ManifoldModel& m, const BoundaryPoint& xi) {
  return ideal_of(m, xi, m.hyperbolic() ? Evaluator::ClosedForm : Evaluator::Pipeline);
}

auto tight = [](double a, double b) { return std::abs(b - a) < 1e-14; };

// Smallest x >= 0 with f(x) = target for increasing f, bracketed by doubling.
double solve_increasing(const std::function<double(double)>& f, double target, double x_cap) {
  double lo = 0.0, hi = 1.0;
  while (f(hi) < target) {
    lo = hi;
    hi *= 2;
    if (hi > x_cap) throw SolverError("connecting geodesic outside the search range", hi);
  }
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve([&](double x) { return f(x) - target; }, lo, hi,
                                                   tight, it);
  return 0.5 * (r.first + r.second);
}

Fermi connect_hyperbolic(const ManifoldModel& m, const IdealPoint& a, const IdealPoint& b) {
  // Point of the geodesic closest to the origin, on the bisecting radius.
  const double ta = a.angle(), tb = b.angle();
  const double half = 0.5 * std::abs(std::remainder(tb - ta, 2 * kPi));
  const double mid = ta + std::remainder(tb - ta, 2 * kPi) / 2;
  const double r = (1 - std::sin(half)) / std::cos(half);
  const Point p{r * std::cos(mid), r * std::sin(mid)};
  double dir = mid + kPi / 2;
  const double bx = std::cos(tb) - p.x, by = std::sin(tb) - p.y;
  if (std::cos(dir) * bx + std::sin(dir) * by < 0) dir += kPi;
  return fermi_of_tangent(unit_tangent(m, p, dir));
}

}  // namespace

BoundaryPoint::BoundaryPoint(double t) : theta(wrap(t)) {}

bool BoundaryPoint::operator==(const BoundaryPoint& o) const {
  return std::abs(std::remainder(theta - o.theta, 2 * kPi)) <= 1e-12;
}

IdealPoint ideal_of(const ManifoldModel& m, const BoundaryPoint& xi, Evaluator ev) {
  if (ev == Evaluator::Auto) ev = m.hyperbolic() ? Evaluator::ClosedForm : Evaluator::Factorized;
  switch (ev) {
    case Evaluator::ClosedForm:
      if (!m.hyperbolic()) throw DomainError("closed-form endpoints need the hyperbolic metric");
      return IdealPoint::from_angle(xi.theta);
    case Evaluator::Factorized:
      return FactorizedBoundary::shared(m)->ideal_of_direction(xi.theta);
    default:
      return ray_endpoint(m, {0.0, 0.0, xi.theta}, 1e-11, 200.0).endpoint;
  }
}

BoundaryPoint boundary_point_of(const ManifoldModel& m, const IdealPoint& e, Evaluator ev) {
  if (ev == Evaluator::Auto) ev = m.hyperbolic() ? Evaluator::ClosedForm : Evaluator::Factorized;
  switch (ev) {
    case Evaluator::ClosedForm:
      if (!m.hyperbolic()) throw DomainError("closed-form endpoints need the hyperbolic metric");
      return BoundaryPoint(e.angle());
    case Evaluator::Factorized:
      return BoundaryPoint(FactorizedBoundary::shared(m)->direction_of_ideal(e));
    default:
      return BoundaryPoint(direction_to(m, 0.0, 0.0, e, 1e-11));
  }
}

double busemann_cocycle(const ManifoldModel& m, const BoundaryPoint& xi, Point x, Point y, double T,
                        double tol) {
  if (x.x == y.x && x.y == y.y) return 0.0;
  const IdealPoint e = exact_ideal(m, xi);
  Fermi fx = fermi_of_point(x);
  fx.phi = direction_to(m, fx.s, fx.rho, e, tol);
  const Fermi end = flow_fermi(m, fx, T, tol);
  const Fermi fy = fermi_of_point(y);
  return distance_fermi(m, fy.s, fy.rho, end.s, end.rho) - T;
}

double q_value_ideal(const ManifoldModel& m, const IdealPoint& xi, Point x, Point y, double T,
                     double R, double tol) {
  if (x.x == y.x && x.y == y.y) return 0.0;
  Fermi fx = fermi_of_point(x);
  fx.phi = direction_to(m, fx.s, fx.rho, xi, tol);
  const WeightProfile wx(m, fx, 0.0, T, R, tol);
  const Fermi end = wx.geodesic().at(T);
  Fermi fy = fermi_of_point(y);
  // T - u, the length of the matching piece of the ray from y.
  const double ty = distance_fermi(m, fy.s, fy.rho, end.s, end.rho);
  fy.phi = direction_to(m, fy.s, fy.rho, xi, tol);
  const WeightProfile wy(m, fy, 0.0, ty, R, tol);
  return wx.integral_f(0.0, T) - wy.integral_f(0.0, ty);
}

double q_value(const ManifoldModel& m, const BoundaryPoint& xi, Point x, Point y, double T, double R,
               double tol) {
  return q_value_ideal(m, exact_ideal(m, xi), x, y, T, R, tol);
}

Fermi connect_ideal(const ManifoldModel& m, const IdealPoint& a, const IdealPoint& b, double tol) {
  if (ideal_half_chord(a, b) == 0.0) throw DomainError("cannot connect a boundary point to itself");
  if (m.hyperbolic()) return connect_hyperbolic(m, a, b);
  if (a.is_axis_endpoint() || b.is_axis_endpoint())
    throw SolverError("connecting geodesics to the axis endpoints are not supported", 0.0);
  const double r0 = m.band();
  const double sa = a.sigma(), sb = b.sigma();
  auto endpoints = [&](const Fermi& f) {
    const IdealPoint fwd = ray_endpoint(m, f, tol, 400.0).endpoint;
    const IdealPoint bwd = ray_endpoint(m, {f.s, f.rho, f.phi + kPi}, tol, 400.0).endpoint;
    return std::make_pair(fwd, bwd);
  };
  Fermi anchor;
  if (a.side() == b.side()) {
    const int side = a.side();
    const double delta = std::abs(sa - sb);
    const double l_star = 2 * std::log(1.0 / std::tanh(r0 / 2));
    double rho_c;
    if (delta <= l_star) {
      rho_c = 2 * std::atanh(std::exp(-delta / 2));
    } else {
      auto sep = [&](double x) {
        const auto e = endpoints({0.0, side * r0 * std::exp(-x), 0.0});
        return e.first.sigma() - e.second.sigma();
      };
      rho_c = r0 * std::exp(-solve_increasing(sep, delta, 200.0));
    }
    anchor = {0.5 * (sa + sb), side * rho_c, sb > sa ? 0.0 : kPi};
  } else {
    const bool b_upper = b.side() > 0;
    const double su = b_upper ? sb : sa, sl = b_upper ? sa : sb;
    const double D = su - sl;
    const bool pos = D >= 0;
    auto phi_of = [&](double x) { return pos ? 0.5 * kPi * std::exp(-x) : kPi - 0.5 * kPi * std::exp(-x); };
    auto sep = [&](double x) {
      const auto e = endpoints({0.0, 0.0, phi_of(x)});
      return std::abs(e.first.sigma() - e.second.sigma());
    };
    const double x = std::abs(D) == 0 ? 0.0 : solve_increasing(sep, std::abs(D), 200.0);
    const double phi_c = phi_of(x);
    anchor = {0.5 * (su + sl), 0.0, b_upper ? phi_c : phi_c + kPi};
  }
  return anchor;
}

Point BoundaryGeodesic::point(double t) const {
  const Fermi f = path.at(t);
  return point_of_fermi(f.s, f.rho);
}

BoundaryGeodesic connect_boundary_points(const ManifoldModel& m, const BoundaryPoint& xi,
                                         const BoundaryPoint& eta, double half_length, int n_samples,
                                         double tol) {
  if (xi == eta) throw DomainError("connect_boundary_points needs distinct points");
  BoundaryGeodesic g;
  g.xi = xi;
  g.eta = eta;
  g.end_xi = exact_ideal(m, xi);
  g.end_eta = exact_ideal(m, eta);
  g.anchor = connect_ideal(m, g.end_xi, g.end_eta, tol);
  g.path = trace_geodesic(m, g.anchor, -half_length, half_length, tol);
  const IdealPoint fwd = ray_endpoint(m, g.anchor, tol, 400.0).endpoint;
  const IdealPoint bwd =
      ray_endpoint(m, {g.anchor.s, g.anchor.rho, g.anchor.phi + kPi}, tol, 400.0).endpoint;
  g.endpoint_residual = std::max(ideal_half_chord(fwd, g.end_eta), ideal_half_chord(bwd, g.end_xi));
  if (g.endpoint_residual > 1e-6)
    throw SolverError("connecting geodesic misses its endpoints", g.endpoint_residual);
  n_samples = std::max(n_samples, 2);
  for (int i = 0; i < n_samples; ++i)
    g.samples.push_back(g.point(-half_length + 2 * half_length * i / (n_samples - 1)));
  return g;
}

double gromov_product(const ManifoldModel& m, Point x, const BoundaryPoint& xi,
                      const BoundaryPoint& eta, const GromovParams& params) {
  if (xi == eta) return kInf;
  switch (resolve(m, x, params.evaluator)) {
    case Evaluator::ClosedForm: {
      // Visual angle at x via the disk automorphism moving x to 0.
      const double hc = std::abs(std::sin(0.5 * (xi.theta - eta.theta)));
      const double r2 = x.x * x.x + x.y * x.y;
      const double da = std::hypot(std::cos(xi.theta) - x.x, std::sin(xi.theta) - x.y);
      const double db = std::hypot(std::cos(eta.theta) - x.x, std::sin(eta.theta) - x.y);
      return -std::log(hc) - std::log1p(-r2) + std::log(da) + std::log(db);
    }
    case Evaluator::Factorized:
      return FactorizedBoundary::shared(m)->gromov_directions(xi.theta, eta.theta);
    default: {
      const IdealPoint a = exact_ideal(m, xi), b = exact_ideal(m, eta);
      Fermi y = connect_ideal(m, a, b, params.tol);
      if (params.y_time != 0.0) y = flow_fermi(m, y, params.y_time, params.tol);
      const Point yp = point_of_fermi(y.s, y.rho);
      return 0.5 * (q_value_ideal(m, a, x, yp, params.T, params.R, params.tol) +
                    q_value_ideal(m, b, x, yp, params.T, params.R, params.tol));
    }
  }
}

CrossRatio cross_ratio_add(const ManifoldModel& m, Point x, const BoundaryPoint& x1,
                           const BoundaryPoint& x2, const BoundaryPoint& x3, const BoundaryPoint& x4,
                           const GromovParams& params) {
  if (x1 == x2 || x3 == x4) return {0.0, true};
  if (x1 == x3 || x1 == x4 || x2 == x3 || x2 == x4)
    throw DomainError("cross ratio of coincident points");
  CrossRatio c;
  c.value = gromov_product(m, x, x1, x3, params) + gromov_product(m, x, x2, x4, params) -
            gromov_product(m, x, x1, x4, params) - gromov_product(m, x, x2, x3, params);
  return c;
}

double cross_ratio_mult(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& x1,
                        const BoundaryPoint& x2, const BoundaryPoint& x3, const BoundaryPoint& x4,
                        const GromovParams& params) {
  return std::exp(-eps * cross_ratio_add(m, x, x1, x2, x3, x4, params).value);
}

double quasimetric(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& xi,
                   const BoundaryPoint& eta, const GromovParams& params) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  if (xi == eta) return 0.0;
  return std::exp(-eps * gromov_product(m, x, xi, eta, params));
}

QuasiMetric::QuasiMetric(const ManifoldModel& m, Point x, double eps, GromovParams p)
    : owned(std::make_shared<const ManifoldModel>(m)), model(owned.get()), base(x), epsilon(eps), params(p) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
}

double QuasiMetric::operator()(const BoundaryPoint& a, const BoundaryPoint& b) const {
  return quasimetric(*model, base, epsilon, a, b, params);
}

double triple_ratio(const QuasiMetric& q, const BoundaryPoint& a, const BoundaryPoint& b,
                    const BoundaryPoint& c) {
  const double num = q(a, b);
  if (num == 0.0) return 0.0;
  return num / (q(a, c) + q(c, b));
}

QuasimetricConstant quasimetric_constant(const ManifoldModel& m, Point x, double eps, long n_triples,
                                         std::uint64_t seed, const GromovParams& params) {
  if (n_triples < 1) throw DomainError("need at least one triple");
  const QuasiMetric q(m, x, eps, params);
  if (resolve(m, x, params.evaluator) == Evaluator::Factorized) FactorizedBoundary::shared(m);
  constexpr long kBatch = 4096;
  const long nb = (n_triples + kBatch - 1) / kBatch;
  std::vector<QuasimetricConstant> part(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(dynamic, 1)
  for (long b = 0; b < nb; ++b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    auto& best = part[static_cast<std::size_t>(b)];
    best.k_hat = -1.0;
    const long end = std::min(n_triples, (b + 1) * kBatch);
    for (long i = b * kBatch; i < end; ++i) {
      const BoundaryPoint a(rng.uniform(0, 2 * kPi)), c(rng.uniform(0, 2 * kPi)),
          z(rng.uniform(0, 2 * kPi));
      const double r = triple_ratio(q, a, c, z);
      if (r > best.k_hat) {
        best.k_hat = r;
        best.witness = {a, c, z};
      }
    }
  }
  QuasimetricConstant out;
  out.k_hat = -1.0;
  for (const auto& p : part)
    if (p.k_hat > out.k_hat) out = p;
  out.n_triples = n_triples;
  return out;
}

FrinkMetric::FrinkMetric(const QuasiMetric& q, std::vector<BoundaryPoint> points, int chain_depth)
    : qm_(q), pts_(std::move(points)), n_(pts_.size()), depth_(std::max(chain_depth, 1)) {
  q_.assign(n_ * n_, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < static_cast<long>(n_); ++i)
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n_; ++j) {
      const double v = qm_(pts_[static_cast<std::size_t>(i)], pts_[j]);
      q_[static_cast<std::size_t>(i) * n_ + j] = v;
      q_[j * n_ + static_cast<std::size_t>(i)] = v;
    }
  d_ = q_;
  for (int k = 2; k <= depth_; ++k) {
    std::vector<double> nd(d_);
    bool changed = false;
#pragma omp parallel for schedule(static) reduction(|| : changed)
    for (long i = 0; i < static_cast<long>(n_); ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto iu = static_cast<std::size_t>(i);
        double best = d_[iu * n_ + j];
        for (std::size_t z = 0; z < n_; ++z) best = std::min(best, d_[iu * n_ + z] + q_[z * n_ + j]);
        if (best < nd[iu * n_ + j]) {
          nd[iu * n_ + j] = best;
          changed = true;
        }
      }
    d_.swap(nd);
    if (!changed) {
      converged_ = true;
      break;
    }
  }
  c_ = 1.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (q_[i * n_ + j] > 0) c_ = std::min(c_, d_[i * n_ + j] / q_[i * n_ + j]);
}

double FrinkMetric::distance(const BoundaryPoint& a, const BoundaryPoint& b) const {
  if (a == b) return 0.0;
  double best = qm_(a, b);
  std::vector<double> qa(n_), qb(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    qa[i] = qm_(a, pts_[i]);
    qb[i] = qm_(pts_[i], b);
  }
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) best = std::min(best, qa[i] + d_[i * n_ + j] + qb[j]);
  return best;
}

FrinkMetric frink_metrize(const QuasiMetric& q, const std::vector<BoundaryPoint>& samples,
                          int chain_depth) {
  return FrinkMetric(q, samples, chain_depth);
}

BoundaryPoint boundary_map(const ManifoldModel& m, const IsometryElement& g, const BoundaryPoint& xi,
                           Evaluator ev) {
  if (!m.hyperbolic() && !g.axis_compatible())
    throw InvalidIsometry("the perturbed metric only admits axis-preserving isometries");
  if (ev == Evaluator::ClosedForm && !m.hyperbolic())
    throw DomainError("closed-form boundary map needs the hyperbolic metric");
  return boundary_point_of(m, g.apply(ideal_of(m, xi, ev)), ev);
}

DerivativeEstimate boundary_derivative(const ManifoldModel& m, const IsometryElement& g,
                                       const BoundaryPoint& xi, double eps,
                                       std::optional<std::pair<BoundaryPoint, BoundaryPoint>> aux,
                                       const GromovParams& params) {
  const auto uv = aux.value_or(std::make_pair(BoundaryPoint(xi.theta + 2 * kPi / 3),
                                              BoundaryPoint(xi.theta - 2 * kPi / 3)));
  const BoundaryPoint& u = uv.first;
  const BoundaryPoint& v = uv.second;
  if (u == xi || v == xi || u == v) throw DomainError("auxiliary points must be distinct from xi");
  const Point o{0.0, 0.0};
  const Evaluator ev = params.evaluator == Evaluator::Pipeline ? Evaluator::Pipeline : Evaluator::Auto;
  const BoundaryPoint gx = boundary_map(m, g, xi, ev), gu = boundary_map(m, g, u, ev),
                      gv = boundary_map(m, g, v, ev);
  auto d = [&](const BoundaryPoint& a, const BoundaryPoint& b) {
    return quasimetric(m, o, eps, a, b, params);
  };
  const double dxu = d(xi, u), dxv = d(xi, v), duv = d(u, v);
  DerivativeEstimate out;
  out.value = (d(gx, gv) / dxv) * (d(gx, gu) / dxu) * (duv / d(gu, gv));
  out.conditioning_warning = std::min(dxu, dxv) < 0.1 * duv;
  return out;
}

double log_boundary_derivative_exact(const ManifoldModel& m, const IsometryElement& g,
                                     const BoundaryPoint& xi, double eps) {
  if (m.hyperbolic()) {
    // d theta'/d theta = 1 / ((a p + b q)^2 + (c p + d q)^2) with w = p/q on the unit circle.
    const IdealPoint e = IdealPoint::from_angle(xi.theta);
    const double u = g.a() * e.p + g.b() * e.q, w = g.c() * e.p + g.d() * e.q;
    return -eps * std::log(u * u + w * w);
  }
  return FactorizedBoundary::shared(m)->log_derivative(g, ideal_of(m, xi), eps);
}

double boundary_jacobian(const ManifoldModel& m, const IsometryElement& g, const BoundaryPoint& xi,
                         double h, Evaluator ev) {
  const double base = boundary_map(m, g, xi, ev).theta;
  auto d = [&](double t) {
    return std::remainder(boundary_map(m, g, BoundaryPoint(xi.theta + t), ev).theta - base, 2 * kPi);
  };
  return (8 * (d(h) - d(-h)) - (d(2 * h) - d(-2 * h))) / (12 * h);
}

}  // namespace horolab
