#include "horolab/flow.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstring>
#include <numbers>

#include "horolab/stats.hpp"

namespace horolab {

namespace {

OdeOptions riccati_options(double tol) {
  OdeOptions o;
  o.rtol = tol;
  o.atol = tol;
  o.h_max = 0.5;
  return o;
}

double riccati_raw(const ManifoldModel& m, const Fermi& v, double R, double tol) {
  if (!(R > 0)) throw DomainError("riccati horizon must be positive");
  if (!(tol > 0)) throw DomainError("riccati tolerance must be positive");
  Vec<1> u{0.0};
  if (m.hyperbolic()) {
    auto rhs = [](double, const Vec<1>& y, Vec<1>& dy) { dy[0] = 1.0 - y[0] * y[0]; };
    dopri5<1>(rhs, 0.0, u, R, riccati_options(tol));
    return u[0];
  }
  const Geodesic g = trace_geodesic(m, v, -R, 0.0, std::min(tol, 1e-10));
  auto rhs = [&](double t, const Vec<1>& y, Vec<1>& dy) {
    dy[0] = -y[0] * y[0] - m.curvature_fermi(g.at(t - R).rho);
  };
  const auto res = dopri5<1>(rhs, 0.0, u, R, riccati_options(tol));
  if (res.status != OdeStatus::Done) throw SolverError("riccati integration failed", res.t);
  return u[0];
}

}  // namespace

double truncation_constant(const ManifoldModel& m) {
  static std::mutex mu;
  static std::map<ModelDescriptor, double> cache;
  const ModelDescriptor& key = m.descriptor();
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double R1 = 10.0, R2 = 20.0;
  double c0 = 0.0;
  const Fermi probes[] = {{0, 0, 0.0}, {0, 0, 0.7}, {0, 0, 1.5707963}, {0, 0.5, 0.3}, {0, -0.3, 2.5}};
  for (const auto& v : probes) {
    const double diff = std::abs(riccati_raw(m, v, R1, 1e-12) - riccati_raw(m, v, R2, 1e-12));
    c0 = std::max(c0, diff * std::exp(2 * m.a() * R1));
  }
  // tanh convergence gives 2 on the hyperbolic plane; keep that as a floor.
  c0 = std::max(c0, 2.0);
  std::lock_guard<std::mutex> lock(mu);
  cache[key] = c0;
  return c0;
}

RiccatiResult riccati_mean_curvature_fermi(const ManifoldModel& m, const Fermi& v, double R,
                                           double tol) {
  RiccatiResult r;
  r.value = riccati_raw(m, v, R, tol);
  r.horizon = R;
  r.solver_tolerance = tol;
  r.est_truncation_error = truncation_constant(m) * std::exp(-2 * m.a() * R);
  return r;
}

RiccatiResult riccati_mean_curvature(const ManifoldModel& m, const UnitTangent& v, double R,
                                     double tol) {
  return riccati_mean_curvature_fermi(m, fermi_of_tangent(v), R, tol);
}

double f_symmetric(const ManifoldModel& m, const UnitTangent& v, double R, double tol) {
  const UnitTangent w{v.p, -v.vx, -v.vy};
  const bool first = v.vy > 0 || (v.vy == 0 && v.vx > 0);
  const UnitTangent& a = first ? v : w;
  const UnitTangent& b = first ? w : v;
  const double ma = riccati_mean_curvature(m, a, R, tol).value;
  const double mb = riccati_mean_curvature(m, b, R, tol).value;
  return 0.5 * (ma + mb);
}

namespace {

struct JacobiRhs5 {
  const ManifoldModel* m;
  void operator()(double, const Vec<5>& y, Vec<5>& dy) const {
    Vec<3> g{y[0], y[1], y[2]}, dg;
    m->geodesic_rhs(g, dg);
    dy[0] = dg[0];
    dy[1] = dg[1];
    dy[2] = dg[2];
    dy[3] = y[4];
    dy[4] = -m->curvature_fermi(y[1]) * y[3];
  }
};

}  // namespace

std::vector<JacobiSample> jacobi_solve_fermi(const ManifoldModel& m, const Fermi& v, double J0,
                                             double dJ0, double T, int n_samples, double tol) {
  if (!std::isfinite(T)) throw DomainError("jacobi_solve: T must be finite");
  if (J0 == 0.0 && dJ0 == 0.0) throw DomainError("jacobi_solve: initial data both zero");
  n_samples = std::max(n_samples, 2);
  std::vector<JacobiSample> out;
  if (T == 0.0) {
    out.assign(static_cast<std::size_t>(n_samples), JacobiSample{0.0, J0, dJ0});
    return out;
  }
  std::vector<DenseStep<5>> steps;
  Vec<5> y{v.s, v.rho, v.phi, J0, dJ0};
  OdeOptions o = riccati_options(tol);
  const auto res = dopri5<5>(JacobiRhs5{&m}, 0.0, y, T, o, [&](const DenseStep<5>& st, const Vec<5>&) {
    steps.push_back(st);
    return true;
  });
  if (res.status != OdeStatus::Done) throw SolverError("jacobi integration failed", res.t);
  const DensePath<5> path = T > 0 ? DensePath<5>({}, steps) : DensePath<5>(steps, {});
  for (int i = 0; i < n_samples; ++i) {
    const double t = T * i / (n_samples - 1);
    const auto s = i == n_samples - 1 ? y : path.at(t);
    out.push_back({t, s[3], s[4]});
  }
  return out;
}

std::vector<JacobiSample> jacobi_solve(const ManifoldModel& m, const UnitTangent& v, double J0,
                                       double dJ0, double T, int n_samples, double tol) {
  return jacobi_solve_fermi(m, fermi_of_tangent(v), J0, dJ0, T, n_samples, tol);
}

WeightProfile::WeightProfile(const ManifoldModel& m, const Fermi& v, double t0, double t1, double R,
                             double tol)
    : t0_(t0), t1_(t1) {
  if (!(R > 0)) throw DomainError("weight profile horizon must be positive");
  if (t0 > 0 || t1 < 0 || t1 < t0) throw DomainError("weight profile needs t0 <= 0 <= t1");
  path_ = trace_geodesic(m, v, t0 - R, t1 + R, std::min(tol, 1e-10));
  const OdeOptions o = riccati_options(tol);
  auto kappa = [&](double t) { return m.hyperbolic() ? -1.0 : m.curvature_fermi(path_.at(t).rho); };

  std::vector<DenseStep<2>> fs, bs;
  Vec<2> y{0.0, 0.0};
  auto frhs = [&](double t, const Vec<2>& u, Vec<2>& du) {
    du[0] = -u[0] * u[0] - kappa(t);
    du[1] = u[0];
  };
  auto r1 = dopri5<2>(frhs, t0 - R, y, t1, o, [&](const DenseStep<2>& st, const Vec<2>&) {
    fs.push_back(st);
    return true;
  });
  if (r1.status != OdeStatus::Done) throw SolverError("forward riccati failed", r1.t);

  Vec<2> z{0.0, 0.0};
  auto brhs = [&](double t, const Vec<2>& u, Vec<2>& du) {
    du[0] = u[0] * u[0] + kappa(t);
    du[1] = u[0];
  };
  auto r2 = dopri5<2>(brhs, t1 + R, z, t0, o, [&](const DenseStep<2>& st, const Vec<2>&) {
    bs.push_back(st);
    return true;
  });
  if (r2.status != OdeStatus::Done) throw SolverError("backward riccati failed", r2.t);
  fwd_ = DensePath<2>({}, fs);
  bwd_ = DensePath<2>(bs, {});
}

double symmetry_defect_fermi(const ManifoldModel& m, const Fermi& v, double t, double R, double tol) {
  if (!(t > 0)) throw DomainError("symmetry_defect: t must be positive");
  const WeightProfile wp(m, v, 0.0, t, R, tol);
  return std::abs(wp.integral_forward(0.0, t) - wp.integral_backward(0.0, t));
}

double symmetry_defect(const ManifoldModel& m, const UnitTangent& v, double t, double R, double tol) {
  return symmetry_defect_fermi(m, fermi_of_tangent(v), t, R, tol);
}

Point point_at_axis_distance(const ManifoldModel& m, double d) {
  if (d == 0) return {0.0, 0.0};
  auto dist = [&](double rho) {
    return boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double r) { return m.conformal(r); }, 0.0, rho);
  };
  const double sg = d > 0 ? 1.0 : -1.0;
  const double target = std::abs(d);
  if (m.hyperbolic()) return point_of_fermi(0.0, sg * target);
  std::uintmax_t it = 200;
  auto stop = [](double a, double b) { return std::abs(b - a) < 1e-15; };
  // Quadrature splits at the support edge, where psi is only C^2.
  auto g = [&](double rho) {
    const double r0 = m.band();
    const double v = rho <= r0 ? dist(rho) : dist(r0) + (rho - r0);
    return v - target;
  };
  const auto r = boost::math::tools::toms748_solve(g, 0.0, target + 1.0, stop, it);
  return point_of_fermi(0.0, sg * 0.5 * (r.first + r.second));
}

HolderResult holder_exponent(const ManifoldModel& m, Point x, int n_pairs,
                             std::pair<double, double> angle_range, std::uint64_t seed, double R,
                             double tol) {
  const double lo = angle_range.first, hi = angle_range.second;
  if (!(lo > 0) || !(hi > lo) || !(hi < std::numbers::pi / 4))
    throw DomainError("holder_exponent: angle range must lie in (0, pi/4)");
  if (n_pairs < 3) throw DomainError("holder_exponent: need at least 3 pairs");
  const Fermi fx = fermi_of_point(x);
  std::vector<double> lx(static_cast<std::size_t>(n_pairs)), ly(lx.size()), dm(lx.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n_pairs; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const double alpha = rng.uniform(0.0, 2 * std::numbers::pi);
    const double delta = std::exp(rng.uniform(std::log(lo), std::log(hi)));
    const double mv = riccati_mean_curvature_fermi(m, {fx.s, fx.rho, alpha}, R, tol).value;
    const double mw = riccati_mean_curvature_fermi(m, {fx.s, fx.rho, alpha + delta}, R, tol).value;
    lx[static_cast<std::size_t>(i)] = std::log(delta);
    dm[static_cast<std::size_t>(i)] = std::abs(mv - mw);
  }
  HolderResult out;
  for (double d : dm) out.max_difference = std::max(out.max_difference, d);
  if (out.max_difference < 1e-9) {
    out.degenerate = true;
    out.note = "degenerate: constant field";
    out.exponent_estimate = std::numeric_limits<double>::quiet_NaN();
    out.ci_low = out.ci_high = out.exponent_estimate;
    return out;
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < dm.size(); ++i) {
    if (dm[i] > 1e-13) {
      xs.push_back(lx[i]);
      ys.push_back(std::log(dm[i]));
    }
  }
  out.n_used = static_cast<int>(xs.size());
  if (xs.size() < 3) {
    out.degenerate = true;
    out.note = "degenerate: too few nonzero differences";
    return out;
  }
  const LinearFit fit = linear_fit(xs, ys);
  out.exponent_estimate = fit.slope;
  out.ci_low = fit.slope_ci_low;
  out.ci_high = fit.slope_ci_high;
  out.fit_r2 = fit.r2;
  return out;
}

double MeanCurvatureField::m(const UnitTangent& v) const {
  if (policy_ == CachePolicy::Disabled) return riccati_mean_curvature(*m_, v, R_, tol_).value;
  auto q = [](double x) { return static_cast<std::int64_t>(std::llround(x * 0x1.0p40)); };
  const auto key = std::make_tuple(q(v.p.x), q(v.p.y), q(v.vx), q(v.vy));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  const double val = riccati_mean_curvature(*m_, v, R_, tol_).value;
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(key, val);
  return val;
}

double MeanCurvatureField::f(const UnitTangent& v) const {
  const UnitTangent w{v.p, -v.vx, -v.vy};
  const bool first = v.vy > 0 || (v.vy == 0 && v.vx > 0);
  return 0.5 * (m(first ? v : w) + m(first ? w : v));
}

std::size_t MeanCurvatureField::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return memo_.size();
}

}  // namespace horolab
