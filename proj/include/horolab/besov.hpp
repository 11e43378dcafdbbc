#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "horolab/measure.hpp"

namespace horolab {

inline const std::vector<double> kDefaultCutoffs{1e-2, 3e-3, 1e-3};

struct BesovEstimate {
  double p = 2.0;
  double Q = 1.0;
  std::vector<double> cutoffs;    // decreasing
  std::vector<double> estimates;  // integral over delta >= cutoff, nondecreasing along the ladder
  std::vector<double> ci_low, ci_high;
  double extrapolated = 0.0;  // cutoff -> 0 limit, or the last estimate when not converged
  double ci_low_extrapolated = 0.0, ci_high_extrapolated = 0.0;
  double kappa = 0.0;        // fitted power of the cutoff in the remainder
  bool converged = false;    // remainder fits a power of the cutoff with kappa >= 1/4
  bool lower_bound = false;  // not converged; extrapolated is the last estimate, a lower bound
  bool diverging = false;    // increments do not decay along the ladder
  long n = 0;
  double n_effective = 0.0;  // Kish ESS of the weights above the smallest cutoff

  // p-th root of the extrapolated integral.
  double seminorm() const;
};

// Monte-Carlo integral of F(theta1, theta2) against nu restricted to delta >= c for each
// c of the ladder, one shared sample, bootstrap CIs. focus: angles where F concentrates.
BesovEstimate integrate_pairs(const NuMeasure& nu, const std::function<double(double, double)>& F,
                              long n, std::uint64_t seed, const std::vector<double>& cutoffs,
                              int n_boot = 20, const std::vector<double>& focus = {});
// Several integrands on one shared sample (common random numbers).
std::vector<BesovEstimate> integrate_pairs_many(
    const NuMeasure& nu, const std::vector<std::function<double(double, double)>>& Fs, long n,
    std::uint64_t seed, const std::vector<double>& cutoffs, int n_boot = 20,
    const std::vector<double>& focus = {});

// Serial and OpenMP evaluation of F over a sample; identical results.
std::vector<double> evaluate_pairs_serial(const NuSample& s,
                                          const std::function<double(double, double)>& F);
std::vector<double> evaluate_pairs_parallel(const NuSample& s,
                                            const std::function<double(double, double)>& F);

// Integral of |f(xi) - f(eta)|^p delta^(-2Q) dlambda dlambda with the base, epsilon and
// lambda of nu. Requires p >= 2Q unless exploratory.
BesovEstimate besov_seminorm(const std::function<double(const BoundaryPoint&)>& f, double p, double Q,
                             const NuMeasure& nu, long n, std::uint64_t seed,
                             const std::vector<double>& cutoffs = kDefaultCutoffs,
                             bool exploratory = false);

// c_g(xi, eta) = log|g'|(xi) - log|g'|(eta) for delta_{0,eps}.
double cocycle_value(const ManifoldModel& m, const IsometryElement& g, double eps,
                     const BoundaryPoint& xi, const BoundaryPoint& eta);

// Integral of |c_g|^p d nu, nu = delta^(-2/eps) lambda_0 x lambda_0.
BesovEstimate cocycle_lp_norm(const ManifoldModel& m, const IsometryElement& g, double p, double eps,
                              long n, std::uint64_t seed,
                              const std::vector<double>& cutoffs = kDefaultCutoffs);

struct CocycleSeries {
  IsometryElement g;
  double p = 2.0;
  double epsilon = 1.0;
  std::vector<int> k;
  std::vector<BesovEstimate> norms;  // integral of |c_{g^k}|^p d nu
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  double slope_ci_low = 0.0, slope_ci_high = 0.0;
  bool strictly_increasing = false;  // over k >= 2
  bool adjacent_cis_disjoint = false;  // over k >= 3
  bool unbounded_growth_evidence = false;
  double rn_nu_min = 0.0, rn_nu_max = 0.0;  // over g^l, |l| <= 2, on a small sample
  std::uint64_t seed = 0;
  long n = 0;
};

CocycleSeries growth_experiment(const ManifoldModel& m, const IsometryElement& g, double p, double eps,
                                int k_max, long n, std::uint64_t seed,
                                const std::vector<double>& cutoffs = kDefaultCutoffs);
void write_series_csv(const CocycleSeries& s, const std::string& path);

}  // namespace horolab
