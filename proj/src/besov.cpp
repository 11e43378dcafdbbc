#include "horolab/besov.hpp"

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
constexpr std::uint64_t kBootstrapStream = 1ull << 40;
constexpr std::uint64_t kRnStream = 1ull << 41;

struct Extrapolation {
  double value = 0.0;
  double kappa = 0.0;
  bool ok = false;
  bool diverging = false;
};

// Richardson step on the last three rungs, assuming I(c) = I0 - A c^kappa.
Extrapolation extrapolate(const std::vector<double>& c, const std::vector<double>& I) {
  Extrapolation e;
  const std::size_t L = I.size();
  e.value = I.back();
  if (L < 3) return e;
  const double c1 = c[L - 3], c2 = c[L - 2], c3 = c[L - 1];
  const double d1 = I[L - 2] - I[L - 3], d2 = I[L - 1] - I[L - 2];
  if (d2 <= 1e-14 * std::max(1.0, std::abs(I.back()))) {
    e.ok = true;
    e.kappa = std::numeric_limits<double>::infinity();
    return e;
  }
  if (d1 <= 0) return e;
  auto h = [&](double k) { return (std::pow(c1, k) - std::pow(c2, k)) / (std::pow(c2, k) - std::pow(c3, k)); };
  const double ratio = d1 / d2;
  const double h0 = std::log(c1 / c2) / std::log(c2 / c3);  // kappa -> 0, logarithmic growth
  if (ratio <= h0 * (1 + 1e-9)) {
    e.diverging = d2 > 1e-3 * std::abs(I.back());
    return e;
  }
  double lo = 1e-9, hi = 20.0;
  if (ratio >= h(hi)) {
    lo = hi;
  } else {
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) < ratio ? lo : hi) = mid;
    }
  }
  e.kappa = 0.5 * (lo + hi);
  const double k = e.kappa;
  e.value = I.back() + d2 * std::pow(c3, k) / (std::pow(c2, k) - std::pow(c3, k));
  e.ok = true;
  return e;
}

std::vector<double> ladder_sums(const NuSample& s, const std::vector<double>& contrib,
                                const std::vector<double>& cutoffs, const std::vector<std::size_t>* idx) {
  std::vector<double> out(cutoffs.size(), 0.0);
  const std::size_t n = idx ? idx->size() : contrib.size();
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = idx ? (*idx)[t] : t;
    const double d = s.pairs[i].delta;
    for (std::size_t j = 0; j < cutoffs.size(); ++j)
      if (d >= cutoffs[j]) out[j] += contrib[i];
  }
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace

double BesovEstimate::seminorm() const { return std::pow(std::max(extrapolated, 0.0), 1.0 / p); }

std::vector<double> evaluate_pairs_serial(const NuSample& s,
                                          const std::function<double(double, double)>& F) {
  std::vector<double> v(s.pairs.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = F(s.pairs[i].theta1, s.pairs[i].theta2);
  return v;
}

std::vector<double> evaluate_pairs_parallel(const NuSample& s,
                                            const std::function<double(double, double)>& F) {
  std::vector<double> v(s.pairs.size());
  const long n = static_cast<long>(v.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto& p = s.pairs[static_cast<std::size_t>(i)];
    v[static_cast<std::size_t>(i)] = F(p.theta1, p.theta2);
  }
  return v;
}

std::vector<BesovEstimate> integrate_pairs_many(
    const NuMeasure& nu, const std::vector<std::function<double(double, double)>>& Fs, long n,
    std::uint64_t seed, const std::vector<double>& cutoffs_in, int n_boot,
    const std::vector<double>& focus) {
  if (cutoffs_in.empty()) throw DomainError("empty cutoff ladder");
  std::vector<double> cutoffs = cutoffs_in;
  std::sort(cutoffs.begin(), cutoffs.end(), std::greater<>());
  if (!(cutoffs.back() > 0)) throw DomainError("cutoffs must be positive");
  NuMeasure sampler = nu;
  sampler.cutoff = cutoffs.back();
  const NuSample s = nu_sample(sampler, n, seed, Proposal::Mixture, focus);

  // Bootstrap index sets shared by all integrands.
  std::vector<std::vector<std::size_t>> boot(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    Rng rng(seed, kBootstrapStream + static_cast<std::uint64_t>(b));
    auto& ix = boot[static_cast<std::size_t>(b)];
    ix.resize(s.pairs.size());
    for (auto& i : ix) i = rng.index(s.pairs.size());
  }
  const double z = normal_quantile(0.975);

  std::vector<BesovEstimate> out;
  for (const auto& F : Fs) {
    std::vector<double> contrib = evaluate_pairs_parallel(s, F);
    for (std::size_t i = 0; i < contrib.size(); ++i) contrib[i] *= s.pairs[i].weight;

    BesovEstimate e;
    e.p = 0;
    e.Q = nu.Q;
    e.cutoffs = cutoffs;
    e.n = n;
    e.n_effective = s.ess;
    e.estimates = ladder_sums(s, contrib, cutoffs, nullptr);
    const Extrapolation ex = extrapolate(cutoffs, e.estimates);
    e.kappa = ex.kappa;
    e.diverging = ex.diverging;
    e.converged = ex.ok && ex.kappa >= 0.25;
    e.lower_bound = !e.converged;
    // Tail factor of the Richardson step, held fixed across bootstrap resamples.
    double tail = 0.0;
    const std::size_t L = cutoffs.size();
    if (e.converged && L >= 3 && std::isfinite(ex.kappa)) {
      const double a = std::pow(cutoffs[L - 1], ex.kappa), b = std::pow(cutoffs[L - 2], ex.kappa);
      tail = a / (b - a);
    }
    auto limit = [&](const std::vector<double>& v) {
      return L >= 2 ? v[L - 1] + tail * (v[L - 1] - v[L - 2]) : v.back();
    };
    e.extrapolated = limit(e.estimates);

    std::vector<std::vector<double>> bs(cutoffs.size());
    std::vector<double> bx;
    for (const auto& ix : boot) {
      const auto v = ladder_sums(s, contrib, cutoffs, &ix);
      for (std::size_t j = 0; j < v.size(); ++j) bs[j].push_back(v[j]);
      bx.push_back(limit(v));
    }
    for (std::size_t j = 0; j < cutoffs.size(); ++j) {
      const double sd = n_boot > 1 ? stddev(bs[j]) : 0.0;
      e.ci_low.push_back(e.estimates[j] - z * sd);
      e.ci_high.push_back(e.estimates[j] + z * sd);
    }
    const double sdx = n_boot > 1 ? stddev(bx) : 0.0;
    e.ci_low_extrapolated = e.extrapolated - z * sdx;
    e.ci_high_extrapolated = e.extrapolated + z * sdx;
    out.push_back(std::move(e));
  }
  return out;
}

BesovEstimate integrate_pairs(const NuMeasure& nu, const std::function<double(double, double)>& F,
                              long n, std::uint64_t seed, const std::vector<double>& cutoffs,
                              int n_boot, const std::vector<double>& focus) {
  return integrate_pairs_many(nu, {F}, n, seed, cutoffs, n_boot, focus).front();
}

BesovEstimate besov_seminorm(const std::function<double(const BoundaryPoint&)>& f, double p, double Q,
                             const NuMeasure& nu, long n, std::uint64_t seed,
                             const std::vector<double>& cutoffs, bool exploratory) {
  if (!(Q > 0) || !(p > 0)) throw DomainError("p and Q must be positive");
  if (p < 2 * Q && !exploratory) throw DomainError("Besov seminorm needs p >= 2Q");
  NuMeasure weighted = nu;
  weighted.Q = Q;
  auto F = [&](double a, double b) {
    return std::pow(std::abs(f(BoundaryPoint(a)) - f(BoundaryPoint(b))), p);
  };
  BesovEstimate e = integrate_pairs(weighted, F, n, seed, cutoffs);
  e.p = p;
  e.Q = Q;
  return e;
}

double cocycle_value(const ManifoldModel& m, const IsometryElement& g, double eps,
                     const BoundaryPoint& xi, const BoundaryPoint& eta) {
  return log_boundary_derivative_exact(m, g, xi, eps) - log_boundary_derivative_exact(m, g, eta, eps);
}

namespace {

void check_lp_pre(const ManifoldModel& m, const IsometryElement& g, double p, double eps, long n) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  if (p < 2.0 / eps * (1 - 1e-12)) throw DomainError("cocycle norm needs p >= 2/epsilon");
  if (n < 1000) throw DomainError("cocycle norm needs at least 1000 samples");
  if (!m.hyperbolic() && !g.axis_compatible())
    throw InvalidIsometry("the perturbed metric only admits axis-preserving isometries");
}

// Boundary fixed points of g in the origin chart.
std::vector<double> fixed_angles(const ManifoldModel& m, const IsometryElement& g) {
  std::vector<double> out;
  if (g.is_identity()) return out;
  for (const auto& e : isometry_classify(g).fixed_points) out.push_back(boundary_point_of(m, e).theta);
  return out;
}

std::function<double(double, double)> cocycle_integrand(const ManifoldModel& m,
                                                         const IsometryElement& g, double p,
                                                         double eps) {
  return [&m, g, p, eps](double a, double b) {
    return std::pow(std::abs(cocycle_value(m, g, eps, BoundaryPoint(a), BoundaryPoint(b))), p);
  };
}

}  // namespace

BesovEstimate cocycle_lp_norm(const ManifoldModel& m, const IsometryElement& g, double p, double eps,
                              long n, std::uint64_t seed, const std::vector<double>& cutoffs) {
  check_lp_pre(m, g, p, eps, n);
  const NuMeasure nu(m, {0.0, 0.0}, eps, *std::min_element(cutoffs.begin(), cutoffs.end()));
  BesovEstimate e =
      integrate_pairs(nu, cocycle_integrand(m, g, p, eps), n, seed, cutoffs, 20, fixed_angles(m, g));
  e.p = p;
  return e;
}

CocycleSeries growth_experiment(const ManifoldModel& m, const IsometryElement& g, double p, double eps,
                                int k_max, long n, std::uint64_t seed,
                                const std::vector<double>& cutoffs) {
  if (isometry_classify(g).cls != IsometryClass::Loxodromic)
    throw DomainError("growth experiment needs a loxodromic isometry");
  if (k_max < 2) throw DomainError("k_max must be at least 2");
  check_lp_pre(m, g, p, eps, n);

  CocycleSeries s;
  s.g = g;
  s.p = p;
  s.epsilon = eps;
  s.seed = seed;
  s.n = n;
  std::vector<std::function<double(double, double)>> Fs;
  for (int k = 1; k <= k_max; ++k) {
    s.k.push_back(k);
    Fs.push_back(cocycle_integrand(m, g.power(k), p, eps));
  }
  const NuMeasure nu(m, {0.0, 0.0}, eps, *std::min_element(cutoffs.begin(), cutoffs.end()));
  s.norms = integrate_pairs_many(nu, Fs, n, seed, cutoffs, 20, fixed_angles(m, g));
  for (auto& e : s.norms) e.p = p;

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s.norms.size(); ++i) {
    xs.push_back(s.k[i]);
    ys.push_back(s.norms[i].extrapolated);
  }
  const LinearFit fit = linear_fit(xs, ys);
  s.slope = fit.slope;
  s.intercept = fit.intercept;
  s.r2 = fit.r2;
  s.slope_ci_low = fit.slope_ci_low;
  s.slope_ci_high = fit.slope_ci_high;
  s.strictly_increasing = true;
  s.adjacent_cis_disjoint = true;
  for (std::size_t i = 1; i < s.norms.size(); ++i) {
    if (!(ys[i] > ys[i - 1])) s.strictly_increasing = false;
    if (s.k[i] >= 3 && !(s.norms[i].ci_low_extrapolated > s.norms[i - 1].ci_high_extrapolated))
      s.adjacent_cis_disjoint = false;
  }
  s.unbounded_growth_evidence = s.strictly_increasing && s.slope_ci_low > 0 && s.r2 >= 0.9;

  // Spread of RN_nu over small powers, the quasi-invariance the growth argument assumes.
  Rng rng(seed, kRnStream);
  s.rn_nu_min = std::numeric_limits<double>::infinity();
  s.rn_nu_max = 0.0;
  for (int l = -2; l <= 2; ++l) {
    if (l == 0) continue;
    const IsometryElement gl = g.power(l);
    for (int i = 0; i < 32; ++i) {
      const BoundaryPoint a(rng.uniform(0, 2 * kPi)), b(rng.uniform(0, 2 * kPi));
      if (a == b) continue;
      const double v = rn_nu(m, gl, eps, a, b);
      s.rn_nu_min = std::min(s.rn_nu_min, v);
      s.rn_nu_max = std::max(s.rn_nu_max, v);
    }
  }
  return s;
}

void write_series_csv(const CocycleSeries& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "k,norm_estimate,ci_low,ci_high,n_effective\n";
  char buf[160];
  for (std::size_t i = 0; i < s.norms.size(); ++i) {
    const auto& e = s.norms[i];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", s.k[i], e.extrapolated,
                  e.ci_low_extrapolated, e.ci_high_extrapolated, e.n_effective);
    os << buf;
  }
}

}  // namespace horolab
