#include "horolab/factorized.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace horolab {

namespace {
constexpr double kPi = std::numbers::pi;

double clamp_sigma(double s) {
  return std::clamp(s, -FactorizedBoundary::kSigmaClamp, FactorizedBoundary::kSigmaClamp);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
}  // namespace

Table1D Table1D::uniform(const std::vector<double>& y, double x0, double h) {
  Table1D t;
  t.uni_ = std::make_shared<Uniform>(y.data(), y.size(), x0, h);
  t.lo_ = x0;
  t.hi_ = x0 + h * static_cast<double>(y.size() - 1);
  t.ylo_ = y.front();
  t.yhi_ = y.back();
  t.dlo_ = t.uni_->prime(t.lo_);
  t.dhi_ = t.uni_->prime(t.hi_ - 1e-12 * h);
  return t;
}

Table1D Table1D::scattered(std::vector<double> x, std::vector<double> y) {
  Table1D t;
  t.lo_ = x.front();
  t.hi_ = x.back();
  t.ylo_ = y.front();
  t.yhi_ = y.back();
  t.sca_ = std::make_shared<Scattered>(std::move(x), std::move(y));
  t.dlo_ = t.sca_->prime(t.lo_);
  t.dhi_ = t.sca_->prime(t.hi_);
  return t;
}

double Table1D::inner(double x) const { return uni_ ? (*uni_)(x) : (*sca_)(x); }
double Table1D::inner_prime(double x) const { return uni_ ? uni_->prime(x) : sca_->prime(x); }

double Table1D::operator()(double x) const {
  if (x < lo_) return ylo_ + dlo_ * (x - lo_);
  if (x >= hi_) return yhi_ + dhi_ * (x - hi_);
  return inner(x);
}

double Table1D::prime(double x) const {
  if (x < lo_) return dlo_;
  if (x >= hi_) return dhi_;
  return inner_prime(x);
}

double uhp_busemann(const IdealPoint& w, double s, double rho) {
  const double sig = clamp_sigma(w.sigma());
  const double we = -w.side() * std::exp(sig - s);
  const double th = std::tanh(rho);
  const double sech = 1.0 / std::cosh(rho);
  return s + std::log((th + we) * (th + we) + sech * sech) + std::log(std::cosh(rho));
}

double log_abs_dw(const IdealPoint& a, const IdealPoint& b) {
  const double sa = clamp_sigma(a.sigma()), sb = clamp_sigma(b.sigma());
  const double mx = std::max(sa, sb);
  const double d = std::abs(sa - sb);
  if (a.side() == b.side()) {
    if (d == 0) return -std::numeric_limits<double>::infinity();
    return mx + std::log(-std::expm1(-d));
  }
  return mx + std::log1p(std::exp(-d));
}

GeodesicPass geodesic_pass(const ManifoldModel& m, const Fermi& start, double tol) {
  GeodesicPass out;
  OdeOptions go;
  go.rtol = tol;
  go.atol = 1e-24;
  go.h_max = 0.25;
  auto rhs = [&](double, const Vec<3>& y, Vec<3>& dy) { m.geodesic_rhs(y, dy); };
  const double t_limit = 400.0;

  std::vector<DenseStep<3>> fs, bs;
  Vec<3> yf{start.s, start.rho, start.phi};
  if (!leaves_band(m, start)) {
    bool done = false;
    const auto r = dopri5<3>(rhs, 0.0, yf, t_limit, go, [&](const DenseStep<3>& st, const Vec<3>& y1) {
      fs.push_back(st);
      done = leaves_band(m, {y1[0], y1[1], y1[2]});
      return !done;
    });
    if (!done) throw TruncationError("geodesic did not leave the band", r.t);
    out.t_fwd = r.t;
  }
  Vec<3> yb{start.s, start.rho, start.phi};
  if (!leaves_band(m, {start.s, start.rho, start.phi + kPi})) {
    bool done = false;
    const auto r = dopri5<3>(rhs, 0.0, yb, -t_limit, go, [&](const DenseStep<3>& st, const Vec<3>& y1) {
      bs.push_back(st);
      done = leaves_band(m, {y1[0], y1[1], y1[2] + kPi});
      return !done;
    });
    if (!done) throw TruncationError("geodesic did not leave the band backward", r.t);
    out.t_back = r.t;
  }
  out.exit_fwd = {yf[0], yf[1], yf[2]};
  out.exit_back = {yb[0], yb[1], yb[2]};
  out.end_fwd = hyperbolic_endpoint(out.exit_fwd);
  out.end_back = hyperbolic_endpoint({yb[0], yb[1], yb[2] + kPi});
  if (fs.empty() && bs.empty()) return out;

  const DensePath<3> path(bs, fs);
  auto K = [&](double t) { return m.curvature_fermi(path.at(t)[1]); };
  OdeOptions ro;
  ro.rtol = tol;
  ro.atol = 1e-14;
  ro.h_max = 0.25;

  auto frhs = [&](double t, const Vec<2>& u, Vec<2>& du) {
    du[0] = -u[0] * u[0] - K(t);
    du[1] = u[0] - 1.0;
  };
  Vec<2> a{1.0, 0.0};
  dopri5<2>(frhs, out.t_back, a, 0.0, ro);
  const double i0 = a[1];
  dopri5<2>(frhs, 0.0, a, out.t_fwd, ro);
  out.fwd_int_all = a[1];
  out.fwd_int_0f = a[1] - i0;
  out.fwd_exit_u = a[0];

  // m(-v) along the same parameter: seeded at the forward exit, run backward.
  auto brhs = [&](double t, const Vec<2>& u, Vec<2>& du) {
    du[0] = u[0] * u[0] + K(t);
    du[1] = -(u[0] - 1.0);
  };
  Vec<2> b{1.0, 0.0};
  dopri5<2>(brhs, out.t_fwd, b, 0.0, ro);
  out.bwd_int_0f = b[1];
  dopri5<2>(brhs, 0.0, b, out.t_back, ro);
  out.bwd_int_all = b[1];
  out.bwd_exit_u = b[0];
  return out;
}

namespace {

double tail(double u) { return std::log((1.0 + u) / 2.0); }

double lambda_of_pass(const GeodesicPass& g) {
  const double E = 0.5 * (g.fwd_int_all + tail(g.fwd_exit_u) + g.bwd_int_all + tail(g.bwd_exit_u));
  const double L = uhp_busemann(g.end_fwd, g.exit_fwd.s, g.exit_fwd.rho) +
                   uhp_busemann(g.end_back, g.exit_back.s, g.exit_back.rho) + (g.t_fwd - g.t_back) -
                   2 * log_abs_dw(g.end_fwd, g.end_back);
  return L + E;
}

void sort_unique(std::vector<double>& x, std::vector<double>& y) {
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs, ys;
  for (std::size_t i : idx) {
    if (!xs.empty() && x[i] <= xs.back() + 1e-12) continue;
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  x = std::move(xs);
  y = std::move(ys);
}

}  // namespace

FactorizedBoundary::FactorizedBoundary(const ManifoldModel& m, const FactorizedOptions& opt) {
  hyperbolic_ = m.hyperbolic();
  if (hyperbolic_) return;
  const auto t0 = std::chrono::steady_clock::now();
  const double r0 = m.band();
  l_star_ = 2 * std::log(1.0 / std::tanh(r0 / 2));

  // Rays from the origin, theta in (0, pi/2], tau = log cot(theta/2).
  const int n = static_cast<int>(std::lround(opt.tau_max / opt.tau_step)) + 1;
  std::vector<double> sig(static_cast<std::size_t>(n)), pot(sig.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (int j = 0; j < n; ++j) {
    const double tau = opt.tau_step * j;
    const double theta = 2 * std::atan(std::exp(-tau));
    const GeodesicPass g = geodesic_pass(m, {0.0, 0.0, theta}, opt.tol);
    const double D = 0.5 * (g.fwd_int_0f + tail(g.fwd_exit_u) + g.bwd_int_0f);
    const double H = g.t_fwd + uhp_busemann(g.end_fwd, g.exit_fwd.s, g.exit_fwd.rho);
    sig[static_cast<std::size_t>(j)] = j == 0 ? 0.0 : g.end_fwd.sigma();
    pot[static_cast<std::size_t>(j)] = D + H;
  }
  for (int j = 1; j < n; ++j)
    if (!(sig[static_cast<std::size_t>(j)] > sig[static_cast<std::size_t>(j - 1)]))
      throw SolverError("endpoint coordinate not monotone in the origin direction",
                        sig[static_cast<std::size_t>(j)]);
  sigma_tau_ = Table1D::uniform(sig, 0.0, opt.tau_step);
  const Table1D pot_tau = Table1D::uniform(pot, 0.0, opt.tau_step);

  const double sig_max = sig.back();
  const int ns = static_cast<int>(std::ceil(sig_max / 0.02));
  const double hs = sig_max / ns;
  std::vector<double> tau_s(static_cast<std::size_t>(ns) + 1), pot_s(tau_s.size());
  for (int i = 0; i <= ns; ++i) {
    const double target = hs * i;
    double tau;
    if (i == 0) {
      tau = 0.0;
    } else if (i == ns) {
      tau = opt.tau_max;
    } else {
      std::uintmax_t it = 100;
      auto f = [&](double t) { return sigma_tau_(t) - target; };
      const auto r = boost::math::tools::toms748_solve(
          f, 0.0, opt.tau_max, [](double a, double b) { return std::abs(b - a) < 1e-15; }, it);
      tau = 0.5 * (r.first + r.second);
    }
    tau_s[static_cast<std::size_t>(i)] = tau;
    pot_s[static_cast<std::size_t>(i)] = pot_tau(tau);
  }
  tau_sigma_ = Table1D::uniform(tau_s, 0.0, hs);
  pot_sigma_ = Table1D::uniform(pot_s, 0.0, hs);

  // Geodesic classes. Same side: apex (0, rho_c, 0) with rho_c = r0 e^{-x}.
  // Crossing: (0, 0, phi_c) with phi_c = (pi/2) e^{-x}. x is spaced quadratically.
  const int nf = opt.family_size;
  std::vector<double> v_same(static_cast<std::size_t>(nf) + 1), l_same(v_same.size());
  std::vector<double> d_cross(v_same.size()), l_cross(v_same.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (int k = 0; k <= nf; ++k) {
    const double x = opt.family_depth * (static_cast<double>(k) / nf) * (static_cast<double>(k) / nf);
    const auto ku = static_cast<std::size_t>(k);
    if (k == 0) {
      v_same[ku] = 0.0;
      l_same[ku] = 0.0;
    } else {
      const GeodesicPass g = geodesic_pass(m, {0.0, r0 * std::exp(-x), 0.0}, opt.tol);
      const double delta = std::abs(g.end_fwd.sigma() - g.end_back.sigma());
      v_same[ku] = std::sqrt(std::max(delta - l_star_, 0.0));
      l_same[ku] = lambda_of_pass(g);
    }
    const GeodesicPass c = geodesic_pass(m, {0.0, 0.0, 0.5 * kPi * std::exp(-x)}, opt.tol);
    d_cross[ku] = k == 0 ? 0.0 : std::abs(c.end_fwd.sigma() - c.end_back.sigma());
    l_cross[ku] = lambda_of_pass(c);
  }
  sort_unique(v_same, l_same);
  sort_unique(d_cross, l_cross);
  lambda_same_ = Table1D::scattered(std::move(v_same), std::move(l_same));
  lambda_cross_ = Table1D::scattered(std::move(d_cross), std::move(l_cross));
  build_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const FactorizedBoundary> FactorizedBoundary::shared(const ManifoldModel& m) {
  static std::mutex mu;
  static std::map<ModelDescriptor, std::shared_ptr<const FactorizedBoundary>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[m.descriptor()];
  if (!slot) slot = std::make_shared<const FactorizedBoundary>(m);
  return slot;
}

double FactorizedBoundary::sigma_of_tau(double tau) const {
  if (hyperbolic_) return tau;
  return tau >= 0 ? sigma_tau_(tau) : -sigma_tau_(-tau);
}

double FactorizedBoundary::tau_of_sigma(double sigma) const {
  if (hyperbolic_) return sigma;
  return sigma >= 0 ? tau_sigma_(sigma) : -tau_sigma_(-sigma);
}

IdealPoint FactorizedBoundary::ideal_of_direction(double theta) const {
  double th = std::fmod(theta, 2 * kPi);
  if (th < 0) th += 2 * kPi;
  if (hyperbolic_) return IdealPoint::from_angle(th);
  if (th == 0.0) return IdealPoint::axis_plus();
  if (th == kPi) return IdealPoint::axis_minus();
  const int side = th < kPi ? 1 : -1;
  const double tu = side > 0 ? th : 2 * kPi - th;
  const double tau = -std::log(std::tan(tu / 2));
  return IdealPoint::from_log(side, sigma_of_tau(tau));
}

double FactorizedBoundary::direction_of_ideal(const IdealPoint& e) const {
  if (hyperbolic_) return e.angle();
  if (e.q == 0) return 0.0;
  if (e.p == 0) return kPi;
  const double tau = tau_of_sigma(e.sigma());
  const double tu = 2 * std::atan(std::exp(-tau));
  return e.side() > 0 ? tu : 2 * kPi - tu;
}

double FactorizedBoundary::potential_sigma(double sigma) const {
  const double s = std::isinf(sigma) ? clamp_sigma(sigma) : sigma;
  if (hyperbolic_) return softplus(2 * s);
  return s >= 0 ? pot_sigma_(s) : pot_sigma_(-s) + 2 * s;
}

double FactorizedBoundary::potential(const IdealPoint& e) const { return potential_sigma(e.sigma()); }

double FactorizedBoundary::geodesic_term(const IdealPoint& a, const IdealPoint& b) const {
  if (hyperbolic_) return 0.0;
  const double sa = clamp_sigma(a.sigma()), sb = clamp_sigma(b.sigma());
  const double d = std::abs(sa - sb);
  if (a.side() == b.side()) return d <= l_star_ ? 0.0 : lambda_same_(std::sqrt(d - l_star_));
  return lambda_cross_(d);
}

double FactorizedBoundary::gromov(const IdealPoint& a, const IdealPoint& b) const {
  if (hyperbolic_) {
    const double c = ideal_half_chord(a, b);
    return c == 0 ? std::numeric_limits<double>::infinity() : -std::log(c);
  }
  const double ldw = log_abs_dw(a, b);
  if (std::isinf(ldw)) return std::numeric_limits<double>::infinity();
  return 0.5 * (potential(a) + potential(b)) - ldw - 0.5 * geodesic_term(a, b);
}

double FactorizedBoundary::gromov_directions(double theta1, double theta2) const {
  return gromov(ideal_of_direction(theta1), ideal_of_direction(theta2));
}

double FactorizedBoundary::log_derivative(const IsometryElement& g, const IdealPoint& e,
                                          double eps) const {
  if (!g.axis_compatible()) throw InvalidIsometry("element does not preserve the axis");
  // Anti-diagonal elements are the half-turn after a translation; the half-turn fixes
  // the origin and contributes nothing.
  const double ell = g.b() == 0.0 ? 2 * std::log(std::abs(g.a())) : 2 * std::log(std::abs(g.c()));
  const double s = clamp_sigma(e.sigma());
  return -eps * (potential_sigma(s + ell) - potential_sigma(s) - ell);
}

}  // namespace horolab
