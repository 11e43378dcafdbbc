#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace horolab {

// Independent stream per (seed, index); the same pair always gives the same numbers.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0) : eng_(substream_seed(seed, stream)) {}
  // Uniform in [0, 1) with 53 random bits; portable across standard libraries.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return eng_(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 eng_;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  std::size_t n = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, double level = 0.95);
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sd, double level = 0.95);
double student_t_quantile(double p, double dof);
double normal_quantile(double p);

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);
double quantile(std::vector<double> v, double q);

}  // namespace horolab
