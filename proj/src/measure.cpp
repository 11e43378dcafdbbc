#include "horolab/measure.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "horolab/stats.hpp"

namespace horolab {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_origin(Point x) { return x.x == 0.0 && x.y == 0.0; }

// Fermi phi at x of the ray converging to the boundary point with origin direction theta.
double direction_at(const ManifoldModel& m, const Fermi& fx, double theta) {
  if (m.hyperbolic()) return hyperbolic_direction_to(fx.s, fx.rho, IdealPoint::from_angle(theta));
  return direction_to(m, fx.s, fx.rho, ideal_of(m, BoundaryPoint(theta)), 1e-12);
}

// Largest t in (0, pi] found by halving from pi with f(t) < target, refined to the crossing.
double crossing_below(const std::function<double(double)>& f, double target) {
  if (f(kPi) <= target) return kPi;
  double t = kPi;
  int halvings = 0;
  while (f(t) >= target) {
    t *= 0.5;
    if (++halvings > 1000 || t == 0.0) return 0.0;
  }
  // f(t) < target <= f(2t). Bisection in log t: f may vanish where points merge.
  double lo = std::log(t), hi = std::log(std::min(2 * t, kPi));
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (f(std::exp(mid)) < target ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

double lambda_density(const ManifoldModel& m, Point x, const BoundaryPoint& xi, double h) {
  if (is_origin(x)) return 1.0 / (2 * kPi);
  const Fermi fx = fermi_of_point(x);
  const double base = direction_at(m, fx, xi.theta);
  auto d = [&](double t) {
    return std::remainder(direction_at(m, fx, xi.theta + t) - base, 2 * kPi);
  };
  const double jac = (8 * (d(h) - d(-h)) - (d(2 * h) - d(-2 * h))) / (12 * h);
  return std::abs(jac) / (2 * kPi);
}

double rn_lambda(const ManifoldModel& m, Point x, Point y, const BoundaryPoint& xi) {
  if (x.x == y.x && x.y == y.y) return 1.0;
  return lambda_density(m, y, xi) / lambda_density(m, x, xi);
}

BallArc ball_arc(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& xi, double r,
                 const GromovParams& params) {
  if (!(r > 0)) throw DomainError("ball radius must be positive");
  const QuasiMetric q(m, x, eps, params);
  BallArc arc;
  arc.plus = crossing_below([&](double t) { return q(xi, BoundaryPoint(xi.theta + t)); }, r);
  arc.minus = crossing_below([&](double t) { return q(xi, BoundaryPoint(xi.theta - t)); }, r);
  return arc;
}

double ball_mass(const ManifoldModel& m, Point x, double eps, const BoundaryPoint& xi, double r,
                 const GromovParams& params) {
  const BallArc arc = ball_arc(m, x, eps, xi, r, params);
  const double width = arc.minus + arc.plus;
  if (width >= 2 * kPi) return 1.0;
  if (width == 0.0) return 0.0;
  if (is_origin(x)) return width / (2 * kPi);
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  const double mass = GK::integrate([&](double t) { return lambda_density(m, x, BoundaryPoint(t)); },
                                    xi.theta - arc.minus, xi.theta + arc.plus, 8, 1e-10);
  return std::clamp(mass, 0.0, 1.0);
}

AhlforsFit ahlfors_fit(const ManifoldModel& m, Point x, double eps, const std::vector<double>& r_grid,
                       const std::vector<BoundaryPoint>& xi_samples, const GromovParams& params) {
  if (r_grid.size() < 2 || xi_samples.empty()) throw DomainError("empty radius grid or sample set");
  const auto [lo, hi] = std::minmax_element(r_grid.begin(), r_grid.end());
  if (!(*lo > 0) || *hi / *lo < std::pow(10.0, 1.5))
    throw DomainError("radius grid must be positive and span at least 1.5 decades");
  if (!m.hyperbolic()) FactorizedBoundary::shared(m);  // build the tables outside the parallel loop

  const std::size_t nr = r_grid.size(), nx = xi_samples.size();
  AhlforsFit out;
  out.r.resize(nr * nx);
  out.mass.resize(nr * nx);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      out.r[i * nr + j] = r_grid[j];
      out.mass[i * nr + j] = ball_mass(m, x, eps, xi_samples[i], r_grid[j], params);
    }
  }
  const double Q = 1.0 / eps;
  std::vector<double> lx, ly;
  double c = 1.0;
  for (std::size_t k = 0; k < out.r.size(); ++k) {
    const double mk = out.mass[k];
    if (!(mk > 0) || mk >= 1.0) continue;
    lx.push_back(std::log(out.r[k]));
    ly.push_back(std::log(mk));
    const double ratio = mk / std::pow(out.r[k], Q);
    c = std::max({c, ratio, 1.0 / ratio});
  }
  if (lx.size() < 3) throw DomainError("too few radii with nontrivial ball mass");
  const LinearFit fit = linear_fit(lx, ly);
  out.dimension_estimate = fit.slope;
  out.slope_ci_low = fit.slope_ci_low;
  out.slope_ci_high = fit.slope_ci_high;
  out.fit_r2 = fit.r2;
  out.C_estimate = c;
  out.n_used = lx.size();
  return out;
}

NuMeasure::NuMeasure(const ManifoldModel& m, Point x, double eps, double cut, GromovParams p)
    : owned(std::make_shared<const ManifoldModel>(m)), model(owned.get()), base(x), epsilon(eps), Q(1.0 / eps), cutoff(cut), params(p) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  if (!(cut > 0)) throw DomainError("cutoff must be positive");
}

double NuMeasure::delta(const BoundaryPoint& a, const BoundaryPoint& b) const {
  return quasimetric(*model, base, epsilon, a, b, params);
}

double NuMeasure::lambda(const BoundaryPoint& a) const { return lambda_density(*model, base, a); }

double NuMeasure::density(const BoundaryPoint& a, const BoundaryPoint& b) const {
  const double d = delta(a, b);
  if (d < cutoff) throw DomainError("pair closer than the diagonal cutoff");
  return std::pow(d, -2 * Q) * lambda(a) * lambda(b);
}

double nu_density(const NuMeasure& nu, const BoundaryPoint& xi, const BoundaryPoint& eta) {
  return nu.density(xi, eta);
}

NuSample nu_sample(const NuMeasure& nu, long n, std::uint64_t seed, Proposal proposal,
                   const std::vector<double>& focus) {
  if (n < 1) throw DomainError("need at least one sample");
  if (!nu.model->hyperbolic()) FactorizedBoundary::shared(*nu.model);
  NuSample out;

  double dmin = 0.0, logspan = 0.0;
  if (proposal == Proposal::Mixture) {
    // Separation at which delta falls to a quarter of the cutoff, minimized over a few anchors.
    dmin = kPi;
    for (int j = 0; j < 16; ++j) {
      const BoundaryPoint a(0.1 + 2 * kPi * j / 16);
      for (int side : {-1, 1}) {
        const double t = crossing_below(
            [&](double s) { return nu.delta(a, BoundaryPoint(a.theta + side * s)); }, 0.25 * nu.cutoff);
        if (t > 0) dmin = std::min(dmin, 0.5 * t);
      }
    }
    logspan = std::log(kPi / dmin);
  }
  out.min_separation = dmin;
  const bool focused = proposal == Proposal::Mixture && !focus.empty();
  const double w_uniform = proposal == Proposal::Uniform ? 1.0 : focused ? 1.0 / 3 : 0.5;
  const double w_diag = proposal == Proposal::Uniform ? 0.0 : w_uniform;
  const double w_focus = 1.0 - w_uniform - w_diag;

  auto log_uniform_density = [&](double d) { return d >= dmin ? 1.0 / (2 * d * logspan) : 0.0; };
  auto proposal_density = [&](double t1, double sep) {
    double q = w_uniform / (4 * kPi * kPi);
    if (w_diag > 0) q += w_diag / (2 * kPi) * log_uniform_density(std::abs(sep));
    if (w_focus > 0) {
      // Either point of the pair may be the one drawn near a focus.
      double qf = 0;
      for (double f : focus)
        qf += log_uniform_density(std::abs(std::remainder(t1 - f, 2 * kPi))) +
              log_uniform_density(std::abs(std::remainder(t1 + sep - f, 2 * kPi)));
      q += w_focus * qf / (2.0 * static_cast<double>(focus.size())) * log_uniform_density(std::abs(sep));
    }
    return q;
  };
  auto draw_log_uniform = [&](Rng& rng) {
    const double mag = dmin * std::exp(logspan * rng.uniform());
    return rng.uniform() < 0.5 ? -mag : mag;
  };

  constexpr long kBatch = 1024;
  const long nb = (n + kBatch - 1) / kBatch;
  std::vector<std::vector<NuPair>> parts(static_cast<std::size_t>(nb));
  std::vector<long> draws(static_cast<std::size_t>(nb), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (long b = 0; b < nb; ++b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    const long quota = std::min(kBatch, n - b * kBatch);
    auto& part = parts[static_cast<std::size_t>(b)];
    part.reserve(static_cast<std::size_t>(quota));
    long& nd = draws[static_cast<std::size_t>(b)];
    while (static_cast<long>(part.size()) < quota) {
      ++nd;
      const double u = rng.uniform();
      double t1, sep;
      if (u < w_uniform) {
        t1 = rng.uniform(0, 2 * kPi);
        sep = rng.uniform(-kPi, kPi);
      } else if (u < w_uniform + w_diag) {
        t1 = rng.uniform(0, 2 * kPi);
        sep = draw_log_uniform(rng);
      } else {
        t1 = focus[rng.index(focus.size())] + draw_log_uniform(rng);
        sep = draw_log_uniform(rng);
        if (rng.uniform() < 0.5) {
          t1 += sep;
          sep = -sep;
        }
      }
      const BoundaryPoint a(t1), c(a.theta + sep);
      const double d = nu.delta(a, c);
      if (!(d >= nu.cutoff)) continue;
      const double dens = std::pow(d, -2 * nu.Q) * nu.lambda(a) * nu.lambda(c);
      part.push_back({a.theta, c.theta, dens / proposal_density(a.theta, sep), d});
    }
  }
  out.pairs.reserve(static_cast<std::size_t>(n));
  for (long b = 0; b < nb; ++b) {
    out.draws += draws[static_cast<std::size_t>(b)];
    for (const auto& p : parts[static_cast<std::size_t>(b)]) out.pairs.push_back(p);
  }
  const double scale = static_cast<double>(n) / static_cast<double>(out.draws);
  double sw = 0, sw2 = 0;
  for (auto& p : out.pairs) {
    p.weight *= scale;
    sw += p.weight;
    sw2 += p.weight * p.weight;
  }
  out.ess = sw2 > 0 ? sw * sw / sw2 : 0.0;
  return out;
}

double weighted_mean(const NuSample& s, const std::function<double(double, double)>& f) {
  double num = 0, den = 0;
  for (const auto& p : s.pairs) {
    num += p.weight * f(p.theta1, p.theta2);
    den += p.weight;
  }
  return num / den;
}

void write_samples_csv(const NuSample& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "theta1,theta2,weight,delta\n";
  char buf[128];
  for (const auto& p : s.pairs) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.theta1, p.theta2, p.weight, p.delta);
    os << buf;
  }
}

double rn_nu(const ManifoldModel& m, const IsometryElement& g, double eps, const BoundaryPoint& xi,
             const BoundaryPoint& eta, RnMode mode) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  if (xi == eta) throw DomainError("rn_nu needs distinct points");
  const Point o{0.0, 0.0};
  const BoundaryPoint gx = boundary_map(m, g, xi), ge = boundary_map(m, g, eta);
  // delta^(-2Q) = exp(2 (.|.)_0) since Q eps = 1.
  double log_rn = 2 * (gromov_product(m, o, gx, ge) - gromov_product(m, o, xi, eta));
  if (mode == RnMode::Jacobian) {
    log_rn += std::log(boundary_jacobian(m, g, xi)) + std::log(boundary_jacobian(m, g, eta));
  } else {
    log_rn += (log_boundary_derivative_exact(m, g, xi, eps) +
               log_boundary_derivative_exact(m, g, eta, eps)) / eps;
  }
  return std::exp(log_rn);
}

}  // namespace horolab
