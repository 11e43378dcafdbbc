#include "horolab/models.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <numbers>

namespace horolab {

namespace {

constexpr double kPi = std::numbers::pi;

IdealPoint normalized(double p, double q) {
  const double n = std::hypot(p, q);
  p /= n;
  q /= n;
  if (q < 0 || (q == 0 && p > 0)) {
    p = -p;
    q = -q;
  }
  if (q == 0) p = -1.0;
  if (p == 0) p = 0.0;  // drop negative zero
  return {p, q};
}

}  // namespace

IdealPoint IdealPoint::from_angle(double omega) {
  double w = std::fmod(omega, 2 * kPi);
  if (w < 0) w += 2 * kPi;
  return normalized(-std::cos(w / 2), std::sin(w / 2));
}

IdealPoint IdealPoint::from_w(double w) {
  if (std::isinf(w)) return axis_plus();
  const double n = std::hypot(1.0, w);
  return normalized(w / n, 1.0 / n);
}

IdealPoint IdealPoint::from_log(int side, double sigma) {
  if (sigma == std::numeric_limits<double>::infinity()) return axis_plus();
  if (sigma == -std::numeric_limits<double>::infinity()) return axis_minus();
  const double sg = side > 0 ? -1.0 : 1.0;
  if (sigma > 0) {
    const double e = std::exp(-sigma);
    const double n = std::sqrt(1 + e * e);
    return normalized(sg / n, e / n);
  }
  const double e = std::exp(sigma);
  const double n = std::sqrt(1 + e * e);
  return normalized(sg * e / n, 1.0 / n);
}

double IdealPoint::angle() const {
  double w = 2 * std::atan2(q, -p);
  if (w >= 2 * kPi) w -= 2 * kPi;
  if (w < 0) w += 2 * kPi;
  return w;
}

double IdealPoint::sigma() const {
  if (q == 0) return std::numeric_limits<double>::infinity();
  if (p == 0) return -std::numeric_limits<double>::infinity();
  return std::log(std::abs(p)) - std::log(std::abs(q));
}

double ideal_cross(const IdealPoint& a, const IdealPoint& b) { return a.p * b.q - a.q * b.p; }
double ideal_half_chord(const IdealPoint& a, const IdealPoint& b) {
  return std::abs(ideal_cross(a, b));
}

std::string model_kind_name(ModelKind k) {
  return k == ModelKind::ConstantCurvature ? "constant" : "perturbed_axial";
}

ManifoldModel::ManifoldModel(const ModelDescriptor& d) : d_(d) {
  if (!(d.a > 0) || !(d.b >= d.a)) throw DomainError("curvature bounds need 0 < a <= b");
  if (!(d.support_radius > 0)) throw DomainError("support_radius must be positive");
  if (!std::isfinite(d.amplitude)) throw DomainError("amplitude must be finite");
  hyperbolic_ = d.kind == ModelKind::ConstantCurvature || d.amplitude == 0.0;
  // Pinching is checked, not assumed.
  const int n = 20000;
  const double r0 = hyperbolic_ ? 1.0 : d.support_radius;
  double gmax = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double rho = r0 * i / n;
    const double k = curvature_fermi(rho);
    if (k < -d.b * d.b - 1e-12 || k > -d.a * d.a + 1e-12)
      throw DomainError("curvature " + std::to_string(k) + " at rho=" + std::to_string(rho) +
                        " outside the declared pinching interval");
    gmax = std::max(gmax, curvature_gradient_fermi(rho));
  }
  grad_bound_ = 1.05 * gmax;
}

ManifoldModel ManifoldModel::constant_curvature() {
  return ManifoldModel(ModelDescriptor{ModelKind::ConstantCurvature, 1.0, 1.0, 0.0, 1.0});
}

ManifoldModel ManifoldModel::perturbed_axial(double amplitude, double support_radius, double a,
                                             double b) {
  return ManifoldModel(ModelDescriptor{ModelKind::PerturbedAxial, a, b, amplitude, support_radius});
}

ProfileJet ManifoldModel::profile(double rho) const {
  const double r0 = d_.support_radius;
  if (hyperbolic_ || std::abs(rho) >= r0) return {};
  const double A = d_.amplitude;
  const double u = (rho / r0) * (rho / r0);
  const double v = 1.0 - u;
  const double r02 = r0 * r0, r04 = r02 * r02;
  ProfileJet j;
  j.psi = A * v * v * v;
  j.d1 = -6 * A * rho * v * v / r02;
  j.d2 = -6 * A * v * v / r02 + 24 * A * rho * rho * v / r04;
  j.d3 = 72 * A * rho * v / r04 - 48 * A * rho * rho * rho / (r04 * r02);
  return j;
}

double ManifoldModel::conformal(double rho) const {
  return hyperbolic_ ? 1.0 : std::exp(profile(rho).psi);
}

double ManifoldModel::curvature_fermi(double rho) const {
  if (hyperbolic_) return -1.0;
  const auto j = profile(rho);
  return -std::exp(-2 * j.psi) * (1 + j.d2 + std::tanh(rho) * j.d1);
}

double ManifoldModel::curvature_gradient_fermi(double rho) const {
  if (hyperbolic_) return 0.0;
  const auto j = profile(rho);
  const double th = std::tanh(rho);
  const double e2 = std::exp(-2 * j.psi);
  const double sech2 = 1 - th * th;
  const double dk = 2 * j.d1 * e2 * (1 + j.d2 + th * j.d1) - e2 * (j.d3 + sech2 * j.d1 + th * j.d2);
  return std::abs(dk) / std::exp(j.psi);
}

void ManifoldModel::geodesic_rhs(const Vec<3>& y, Vec<3>& dy) const {
  const double rho = y[1];
  const double c = std::cos(y[2]);
  const double s = std::sin(y[2]);
  if (hyperbolic_ || std::abs(rho) >= d_.support_radius) {
    dy[0] = c / std::cosh(rho);
    dy[1] = s;
    dy[2] = std::tanh(rho) * c;
    return;
  }
  const auto j = profile(rho);
  const double k = std::exp(j.psi);
  dy[0] = c / (k * std::cosh(rho));
  dy[1] = s / k;
  dy[2] = (j.d1 + std::tanh(rho)) * c / k;
}

cplx disk_to_uhp(Point p) {
  const cplx z(p.x, p.y);
  return cplx(0, 1) * (1.0 + z) / (1.0 - z);
}

Point uhp_to_disk(cplx w) {
  const cplx z = (w - cplx(0, 1)) / (w + cplx(0, 1));
  return {z.real(), z.imag()};
}

Fermi fermi_of_point(Point p) {
  const double r2 = p.x * p.x + p.y * p.y;
  if (!(r2 < 1.0)) throw DomainError("point outside the unit disk");
  Fermi f;
  f.s = std::log(std::hypot(1 + p.x, p.y)) - std::log(std::hypot(1 - p.x, p.y));
  f.rho = std::asinh(2 * p.y / (1 - r2));
  return f;
}

cplx uhp_of_fermi(double s, double rho) {
  return std::exp(s) * cplx(-std::tanh(rho), 1.0 / std::cosh(rho));
}

Point point_of_fermi(double s, double rho) { return uhp_to_disk(uhp_of_fermi(s, rho)); }

Fermi fermi_of_tangent(const UnitTangent& v) {
  Fermi f = fermi_of_point(v.p);
  const cplx z(v.p.x, v.p.y);
  const double base = std::arg(1.0 - z * z);
  f.phi = std::atan2(v.vy, v.vx) - base;
  return f;
}

double metric_norm(const ManifoldModel& m, Point p, double vx, double vy) {
  const double r2 = p.x * p.x + p.y * p.y;
  const double rho = fermi_of_point(p).rho;
  return m.conformal(rho) * 2.0 / (1.0 - r2) * std::hypot(vx, vy);
}

UnitTangent unit_tangent(const ManifoldModel& m, Point p, double chart_angle) {
  const double r2 = p.x * p.x + p.y * p.y;
  if (!(r2 < 1.0)) throw DomainError("point outside the unit disk");
  const double rho = fermi_of_point(p).rho;
  const double len = (1.0 - r2) / (2.0 * m.conformal(rho));
  return {p, len * std::cos(chart_angle), len * std::sin(chart_angle)};
}

UnitTangent tangent_of_fermi(const ManifoldModel& m, const Fermi& f) {
  const Point p = point_of_fermi(f.s, f.rho);
  const cplx z(p.x, p.y);
  return unit_tangent(m, p, std::arg(1.0 - z * z) + f.phi);
}

double curvature_at(const ManifoldModel& m, Point p) {
  return m.curvature_fermi(fermi_of_point(p).rho);
}

OdeOptions geodesic_options(double tol) {
  OdeOptions o;
  o.rtol = tol;
  o.atol = tol;
  o.h_max = 0.5;
  return o;
}

namespace {

struct GeoRhs {
  const ManifoldModel* m;
  void operator()(double, const Vec<3>& y, Vec<3>& dy) const { m->geodesic_rhs(y, dy); }
};

std::vector<DenseStep<3>> integrate_steps(const ManifoldModel& m, const Fermi& start, double t_end,
                                          double tol) {
  std::vector<DenseStep<3>> steps;
  Vec<3> y{start.s, start.rho, start.phi};
  const auto res = dopri5<3>(GeoRhs{&m}, 0.0, y, t_end, geodesic_options(tol),
                             [&](const DenseStep<3>& st, const Vec<3>&) {
                               steps.push_back(st);
                               return true;
                             });
  if (res.status == OdeStatus::StepUnderflow || res.status == OdeStatus::MaxSteps)
    throw TruncationError("geodesic integration stopped early", res.t);
  return steps;
}

}  // namespace

Geodesic trace_geodesic(const ManifoldModel& m, const Fermi& start, double t_lo, double t_hi,
                        double tol) {
  if (t_lo > 0 || t_hi < 0) throw DomainError("trace_geodesic needs t_lo <= 0 <= t_hi");
  auto back = t_lo < 0 ? integrate_steps(m, start, t_lo, tol) : std::vector<DenseStep<3>>{};
  auto fwd = t_hi > 0 ? integrate_steps(m, start, t_hi, tol) : std::vector<DenseStep<3>>{};
  if (back.empty() && fwd.empty()) {
    DenseStep<3> st;
    st.t0 = 0.0;
    st.h = 1e-300;
    st.r[0] = {start.s, start.rho, start.phi};
    fwd.push_back(st);
  }
  return Geodesic(DensePath<3>(back, fwd));
}

Fermi flow_fermi(const ManifoldModel& m, const Fermi& start, double t, double tol) {
  Vec<3> y{start.s, start.rho, start.phi};
  const auto res = dopri5<3>(GeoRhs{&m}, 0.0, y, t, geodesic_options(tol));
  if (res.status == OdeStatus::StepUnderflow || res.status == OdeStatus::MaxSteps)
    throw TruncationError("geodesic integration stopped early", res.t);
  return {y[0], y[1], y[2]};
}

EvolveResult geodesic_evolve(const ManifoldModel& m, const UnitTangent& v, double t, double tol,
                             int n_samples) {
  if (!std::isfinite(t)) throw DomainError("geodesic_evolve: t must be finite");
  EvolveResult out;
  const Fermi f0 = fermi_of_tangent(v);
  if (t == 0.0) {
    out.end = v;
    if (n_samples > 0) out.samples.assign(static_cast<std::size_t>(n_samples), v);
    return out;
  }
  const Geodesic g = t > 0 ? trace_geodesic(m, f0, 0.0, t, tol) : trace_geodesic(m, f0, t, 0.0, tol);
  out.end = tangent_of_fermi(m, g.at(t));
  out.achieved_time = t;
  if (n_samples == 1) out.samples.push_back(out.end);
  for (int i = 0; n_samples > 1 && i < n_samples; ++i)
    out.samples.push_back(tangent_of_fermi(m, g.at(t * i / (n_samples - 1))));
  return out;
}

IdealPoint hyperbolic_endpoint(const Fermi& f) {
  // Endpoint of the geodesic through (s, rho) in direction phi, computed at s = 0
  // and rescaled. Near w = 0 the half-turn w -> -1/w avoids cancellation.
  auto raw = [](double rho, double phi) {
    const double X = -std::tanh(rho);
    const double Y = 1.0 / std::cosh(rho);
    const double beta = std::atan2(Y, X) + phi;
    const double sb = std::sin(beta), cb = std::cos(beta);
    double T;
    if (sb >= 0) {
      if (cb == 0) return std::numeric_limits<double>::infinity();
      T = (1 + sb) / cb;
    } else {
      T = cb / (1 - sb);
    }
    return X + Y * T;
  };
  const double e = raw(f.rho, f.phi);
  if (std::isinf(e)) return IdealPoint::axis_plus();
  if (std::abs(e) >= 0.5) return IdealPoint::from_log(e < 0 ? 1 : -1, f.s + std::log(std::abs(e)));
  const double ei = raw(-f.rho, f.phi + kPi);
  if (std::isinf(ei)) return IdealPoint::axis_minus();
  // e = -1/ei
  const int side = ei > 0 ? 1 : -1;
  return IdealPoint::from_log(side, f.s - std::log(std::abs(ei)));
}

double hyperbolic_direction_to(double s, double rho, const IdealPoint& target) {
  const double X = -std::tanh(rho);
  const double Y = 1.0 / std::cosh(rho);
  double omega;
  if (target.q == 0) {
    omega = 0.0;
  } else {
    // x_t = (w_t e^{-s} - X) / Y, the target seen from the point moved to i.
    const double ws = target.p == 0 ? 0.0 : -target.side() * std::exp(target.sigma() - s);
    const double xt = (ws - X) / Y;
    omega = 2 * std::atan2(1.0, -xt);
  }
  const double beta = omega + kPi / 2;
  return std::remainder(beta - std::atan2(Y, X), 2 * kPi);
}

bool leaves_band(const ManifoldModel& m, const Fermi& f) {
  if (m.hyperbolic()) return true;
  const double r0 = m.band();
  if (std::abs(f.rho) < r0) return false;
  if (f.rho * std::sin(f.phi) > 0) return true;
  return std::cosh(f.rho) * std::abs(std::cos(f.phi)) >= std::cosh(r0);
}

RayExit ray_endpoint(const ManifoldModel& m, const Fermi& f, double tol, double t_max) {
  RayExit out;
  if (leaves_band(m, f)) {
    out.endpoint = hyperbolic_endpoint(f);
    out.exit_state = f;
    return out;
  }
  Vec<3> y{f.s, f.rho, f.phi};
  bool done = false;
  const auto res = dopri5<3>(GeoRhs{&m}, 0.0, y, t_max, geodesic_options(tol),
                             [&](const DenseStep<3>&, const Vec<3>& y1) {
                               done = leaves_band(m, {y1[0], y1[1], y1[2]});
                               return !done;
                             });
  if (res.status == OdeStatus::StepUnderflow || res.status == OdeStatus::MaxSteps)
    throw TruncationError("ray integration stopped early", res.t);
  out.exit_state = {y[0], y[1], y[2]};
  out.t_exit = res.t;
  if (done) {
    out.endpoint = hyperbolic_endpoint(out.exit_state);
  } else {
    out.exits = false;
    out.endpoint = std::cos(y[2]) > 0 ? IdealPoint::axis_plus() : IdealPoint::axis_minus();
  }
  return out;
}

double direction_to(const ManifoldModel& m, double s, double rho, const IdealPoint& target,
                    double tol) {
  const double phi0 = hyperbolic_direction_to(s, rho, target);
  if (m.hyperbolic()) return phi0;
  auto g = [&](double phi) {
    const IdealPoint e = ray_endpoint(m, {s, rho, phi}, tol).endpoint;
    const double sg = (e.p * target.p + e.q * target.q) >= 0 ? 1.0 : -1.0;
    return sg * ideal_cross(e, target);
  };
  double lo = phi0 - 0.02, hi = phi0 + 0.02;
  double glo = g(lo), ghi = g(hi);
  double step = 0.02;
  while (glo > 0 && phi0 - lo < kPi / 2) {
    hi = lo;
    ghi = glo;
    step *= 2;
    lo -= step;
    glo = g(lo);
  }
  while (ghi < 0 && hi - phi0 < kPi / 2) {
    lo = hi;
    glo = ghi;
    step *= 2;
    hi += step;
    ghi = g(hi);
  }
  if (glo > 0 || ghi < 0) throw SolverError("direction_to: no bracket", std::min(std::abs(glo), std::abs(ghi)));
  if (glo == 0) return lo;
  if (ghi == 0) return hi;
  std::uintmax_t iters = 200;
  auto stop = [](double a, double b) { return std::abs(b - a) <= 4e-16 * (1 + std::abs(a)); };
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, stop, iters);
  return 0.5 * (r.first + r.second);
}

double hyperbolic_distance(Point x, Point y) {
  const cplx zx(x.x, x.y), zy(y.x, y.y);
  const double num = std::abs(zx - zy);
  const double den = std::abs(1.0 - std::conj(zx) * zy);
  return 2 * std::atanh(num / den);
}

double hyperbolic_distance_fermi(double s1, double r1, double s2, double r2) {
  const double h = 0.5 * (s1 - s2);
  const cplx w1 = std::exp(h) * cplx(-std::tanh(r1), 1.0 / std::cosh(r1));
  const cplx w2 = std::exp(-h) * cplx(-std::tanh(r2), 1.0 / std::cosh(r2));
  const double den = 2 * std::sqrt(1.0 / (std::cosh(r1) * std::cosh(r2)));
  return 2 * std::asinh(std::abs(w1 - w2) / den);
}

namespace {

// Direction at (s1, r1) of the hyperbolic geodesic segment to (s2, r2).
double hyperbolic_direction_to_point(double s1, double r1, double s2, double r2) {
  const cplx P1 = uhp_of_fermi(0.0, r1);
  const cplx P2 = uhp_of_fermi(s2 - s1, r2);
  const cplx Q = (P2 - P1.real()) / P1.imag();
  const cplx zq = (Q - cplx(0, 1)) / (Q + cplx(0, 1));
  const double beta = std::arg(zq) + kPi / 2;
  return std::remainder(beta - std::arg(P1), 2 * kPi);
}

struct JacobiRhs {
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

// Newton shooting for the segment (s1, r1) -> (s2, r2) from the guess (phi, L).
bool shoot_segment(const ManifoldModel& m, double s1, double r1, double s2, double r2, double tol,
                   double& phi, double& L, double& best) {
  OdeOptions opt = geodesic_options(std::min(tol, 1e-11));
  for (int it = 0; it < 60; ++it) {
    Vec<5> y{s1, r1, phi, 0.0, 1.0};
    const auto res = dopri5<5>(JacobiRhs{&m}, 0.0, y, L, opt);
    if (res.status != OdeStatus::Done) throw SolverError("distance: integration failed", best);
    const double k = m.conformal(y[1]);
    const double rs = k * std::cosh(y[1]) * (y[0] - s2);
    const double rr = k * (y[1] - r2);
    const double res_norm = std::hypot(rs, rr);
    best = std::min(best, res_norm);
    // Fermi coordinates lose absolute precision like cosh(rho) far from the axis.
    const double floor = 64 * std::numeric_limits<double>::epsilon() * std::cosh(r2) *
                         (1 + std::abs(s2) + std::abs(y[0]));
    if (res_norm <= std::max(tol * (1 + L), floor)) return true;
    const double ct = std::cos(y[2]), st = std::sin(y[2]);
    const double along = rs * ct + rr * st;
    const double normal = -rs * st + rr * ct;
    double dL = -along;
    double dphi = -normal / y[3];
    if (std::abs(dphi) > 0.5) dphi *= 0.5 / std::abs(dphi);
    L = std::max(0.5 * L, L + dL);
    phi += dphi;
  }
  return false;
}

}  // namespace

double distance_fermi(const ManifoldModel& m, double s1, double r1, double s2, double r2,
                      double tol) {
  const double dh = hyperbolic_distance_fermi(s1, r1, s2, r2);
  if (m.hyperbolic() || dh == 0.0) return dh;
  // If the hyperbolic geodesic through both points avoids the band, so does the segment.
  const double phi_h = hyperbolic_direction_to_point(s1, r1, s2, r2);
  if (std::abs(r1) >= m.band() && std::abs(r2) >= m.band() && r1 * r2 > 0 &&
      std::cosh(r1) * std::abs(std::cos(phi_h)) >= std::cosh(m.band()))
    return dh;

  double phi = phi_h, L = dh;
  double best = std::numeric_limits<double>::infinity();
  if (shoot_segment(m, s1, r1, s2, r2, tol, phi, L, best)) return L;

  // Continuation in the amplitude from the hyperbolic segment; each stage starts from the
  // previous solution. Needed for long segments where the hyperbolic guess is too far off.
  for (int stages = 8; stages <= 64; stages *= 2) {
    phi = phi_h;
    L = dh;
    bool ok = true;
    for (int i = 1; i <= stages && ok; ++i) {
      ModelDescriptor d = m.descriptor();
      d.amplitude *= static_cast<double>(i) / stages;
      ok = shoot_segment(ManifoldModel(d), s1, r1, s2, r2, tol, phi, L, best);
    }
    if (ok) return L;
  }
  throw SolverError("distance: shooting did not converge", best);
}

double distance(const ManifoldModel& m, Point x, Point y) {
  if (x.x == y.x && x.y == y.y) return 0.0;
  if (m.hyperbolic()) return hyperbolic_distance(x, y);
  const Fermi a = fermi_of_point(x), b = fermi_of_point(y);
  return distance_fermi(m, a.s, a.rho, b.s, b.rho);
}

IsometryElement::IsometryElement(double a, double b, double c, double d) {
  const double det = a * d - b * c;
  if (!(det > 0)) throw InvalidIsometry("isometry matrix needs positive determinant");
  const double k = 1.0 / std::sqrt(det);
  a_ = a * k;
  b_ = b * k;
  c_ = c * k;
  d_ = d * k;
}

IsometryElement IsometryElement::rotation(double alpha) {
  const double c = std::cos(alpha / 2), s = std::sin(alpha / 2);
  return {c, s, -s, c};
}

IsometryElement IsometryElement::translation(double ell) {
  return {std::exp(ell / 2), 0.0, 0.0, std::exp(-ell / 2)};
}

IsometryElement IsometryElement::half_turn() { return {0.0, -1.0, 1.0, 0.0}; }

bool IsometryElement::axis_compatible() const {
  const double sc = std::max({std::abs(a_), std::abs(b_), std::abs(c_), std::abs(d_)});
  const double eps = 1e-12 * sc;
  return (std::abs(b_) <= eps && std::abs(c_) <= eps) || (std::abs(a_) <= eps && std::abs(d_) <= eps);
}

bool IsometryElement::is_identity() const {
  const double eps = 1e-12;
  const double sg = a_ >= 0 ? 1.0 : -1.0;
  return std::abs(sg * a_ - 1) <= eps && std::abs(sg * d_ - 1) <= eps && std::abs(b_) <= eps &&
         std::abs(c_) <= eps;
}

IsometryElement IsometryElement::operator*(const IsometryElement& o) const {
  return {a_ * o.a_ + b_ * o.c_, a_ * o.b_ + b_ * o.d_, c_ * o.a_ + d_ * o.c_,
          c_ * o.b_ + d_ * o.d_};
}

IsometryElement IsometryElement::power(int k) const {
  IsometryElement base = k >= 0 ? *this : inverse();
  IsometryElement out;
  for (int i = 0; i < std::abs(k); ++i) out = out * base;
  return out;
}

IdealPoint IsometryElement::apply(const IdealPoint& xi) const {
  return normalized(a_ * xi.p + b_ * xi.q, c_ * xi.p + d_ * xi.q);
}

std::string isometry_class_name(IsometryClass c) {
  switch (c) {
    case IsometryClass::Elliptic: return "elliptic";
    case IsometryClass::Parabolic: return "parabolic";
    case IsometryClass::Loxodromic: return "loxodromic";
  }
  return "?";
}

Classification isometry_classify(const IsometryElement& g) {
  Classification out;
  if (g.is_identity()) return out;
  const double t = std::abs(g.trace());
  const double a = g.a(), b = g.b(), c = g.c(), d = g.d();
  const double sc = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (std::abs(t - 2) <= 1e-12) {
    out.cls = IsometryClass::Parabolic;
    out.fixed_points.push_back(std::abs(c) <= 1e-14 * sc ? IdealPoint::axis_plus()
                                                         : IdealPoint::from_w((a - d) / (2 * c)));
    return out;
  }
  if (t < 2) return out;
  out.cls = IsometryClass::Loxodromic;
  out.translation_length = 2 * std::acosh(t / 2);
  IdealPoint f1, f2;
  double m1, m2;
  if (std::abs(c) <= 1e-14 * sc) {
    f1 = IdealPoint::axis_plus();
    m1 = std::abs(d / a);
    f2 = IdealPoint::from_w(b / (d - a));
    m2 = std::abs(a / d);
  } else {
    const double B = d - a, C = -b;
    const double disc = std::sqrt(t * t - 4);
    const double qq = -0.5 * (B + (B >= 0 ? 1.0 : -1.0) * disc);
    const double w1 = qq / c, w2 = C / qq;
    f1 = IdealPoint::from_w(w1);
    f2 = IdealPoint::from_w(w2);
    m1 = 1.0 / ((c * w1 + d) * (c * w1 + d));
    m2 = 1.0 / ((c * w2 + d) * (c * w2 + d));
  }
  out.fixed_points = {f1, f2};
  if (m1 < m2) {
    out.attracting = f1;
    out.repelling = f2;
  } else {
    out.attracting = f2;
    out.repelling = f1;
  }
  return out;
}

namespace {
void require_valid(const ManifoldModel& m, const IsometryElement& g) {
  if (m.kind() == ModelKind::PerturbedAxial && !g.axis_compatible())
    throw InvalidIsometry("element does not preserve the perturbation axis");
}
}  // namespace

Point isometry_apply(const ManifoldModel& m, const IsometryElement& g, Point p) {
  require_valid(m, g);
  return uhp_to_disk(g.apply_uhp(disk_to_uhp(p)));
}

UnitTangent isometry_apply(const ManifoldModel& m, const IsometryElement& g, const UnitTangent& v) {
  require_valid(m, g);
  const cplx z(v.p.x, v.p.y);
  const cplx w = disk_to_uhp(v.p);
  const cplx w2 = g.apply_uhp(w);
  const cplx i(0, 1);
  const cplx dzinv = 2.0 * i / ((1.0 - z) * (1.0 - z));
  const cplx dc = 2.0 * i / ((w2 + i) * (w2 + i));
  const cplx jac = dc * g.derivative_uhp(w) * dzinv;
  const cplx nv = jac * cplx(v.vx, v.vy);
  return {uhp_to_disk(w2), nv.real(), nv.imag()};
}

Fermi isometry_apply_fermi(const IsometryElement& g, const Fermi& f) {
  const double sc = std::max({std::abs(g.a()), std::abs(g.b()), std::abs(g.c()), std::abs(g.d())});
  const double eps = 1e-14 * sc;
  if (std::abs(g.b()) <= eps && std::abs(g.c()) <= eps)
    return {f.s + 2 * std::log(std::abs(g.a())), f.rho, f.phi};
  if (std::abs(g.a()) <= eps && std::abs(g.d()) <= eps)
    return {2 * std::log(std::abs(g.b())) - f.s, -f.rho, std::remainder(f.phi + kPi, 2 * kPi)};
  const double X = -std::tanh(f.rho), Y = 1.0 / std::cosh(f.rho);
  const double es = std::exp(f.s);
  const cplx P(es * X, es * Y);
  const double a = g.a(), b = g.b(), c = g.c(), d = g.d();
  const double den = std::norm(c * P + d);
  const double re = (a * c * std::norm(P) + b * d + (a * d + b * c) * P.real()) / den;
  const double im = P.imag() / den;
  const cplx dir = std::polar(1.0, std::arg(P) + f.phi) * g.derivative_uhp(P);
  Fermi out;
  out.s = 0.5 * std::log(re * re + im * im);
  out.rho = std::asinh(-re / im);
  out.phi = std::remainder(std::arg(dir) - std::atan2(im, re), 2 * kPi);
  return out;
}

}  // namespace horolab
