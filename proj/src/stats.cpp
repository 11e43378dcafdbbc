#include "horolab/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace horolab {

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over a combination of both words
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + (index + 1) * 0xBF58476D1CE4E5B9ULL;
  for (int i = 0; i < 2; ++i) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

double student_t_quantile(double p, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, double level) {
  return weighted_linear_fit(x, y, std::vector<double>(x.size(), 1.0), level);
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sd, double level) {
  if (x.size() != y.size() || x.size() != sd.size()) throw std::invalid_argument("fit: size mismatch");
  LinearFit f;
  f.n = x.size();
  if (f.n < 2) throw std::invalid_argument("fit: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double w = 1.0 / (sd[i] * sd[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double w = 1.0 / (sd[i] * sd[i]);
    sxx += w * (x[i] - mx) * (x[i] - mx);
    sxy += w * (x[i] - mx) * (y[i] - my);
    syy += w * (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit: degenerate abscissae");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double w = 1.0 / (sd[i] * sd[i]);
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += w * r * r;
  }
  f.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
  if (f.n > 2) {
    const double dof = static_cast<double>(f.n - 2);
    f.slope_se = std::sqrt(rss / dof / sxx);
    const double tq = student_t_quantile(0.5 + level / 2, dof);
    f.slope_ci_low = f.slope - tq * f.slope_se;
    f.slope_ci_high = f.slope + tq * f.slope_se;
  } else {
    f.slope_ci_low = -std::numeric_limits<double>::infinity();
    f.slope_ci_high = std::numeric_limits<double>::infinity();
  }
  return f;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

}  // namespace horolab
