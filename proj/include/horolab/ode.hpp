#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace horolab {

template <std::size_t N>
using Vec = std::array<double, N>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_init = 0.02;
  double h_max = 0.5;
  double h_min = 1e-13;
  long max_steps = 2000000;
};

enum class OdeStatus { Done, Stopped, StepUnderflow, MaxSteps };

// One accepted Dormand-Prince step with its quartic continuous extension.
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec<N>, 5> r{};

  double t1() const { return t0 + h; }
  double lo() const { return std::min(t0, t0 + h); }
  double hi() const { return std::max(t0, t0 + h); }

  Vec<N> eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
    return y;
  }
};

// Dense trajectory on [t_min, t_max], assembled from steps taken in either direction.
template <std::size_t N>
class DensePath {
 public:
  DensePath() = default;

  // backward: steps from an integration with decreasing t, in the order taken.
  // forward: steps with increasing t, in the order taken.
  DensePath(const std::vector<DenseStep<N>>& backward, const std::vector<DenseStep<N>>& forward) {
    steps_.reserve(backward.size() + forward.size());
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) steps_.push_back(*it);
    for (const auto& s : forward) steps_.push_back(s);
    lo_.reserve(steps_.size());
    for (const auto& s : steps_) lo_.push_back(s.lo());
  }

  bool empty() const { return steps_.empty(); }
  double t_min() const { return steps_.front().lo(); }
  double t_max() const { return steps_.back().hi(); }
  const std::vector<DenseStep<N>>& steps() const { return steps_; }

  Vec<N> at(double t) const {
    if (steps_.empty()) throw std::logic_error("DensePath: empty");
    auto it = std::upper_bound(lo_.begin(), lo_.end(), t);
    std::size_t k = (it == lo_.begin()) ? 0 : static_cast<std::size_t>(it - lo_.begin()) - 1;
    if (k >= steps_.size()) k = steps_.size() - 1;
    return steps_[k].eval(t);
  }

 private:
  std::vector<DenseStep<N>> steps_;
  std::vector<double> lo_;
};

namespace detail {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace detail

struct OdeResult {
  OdeStatus status = OdeStatus::Done;
  double t = 0.0;
  long steps = 0;
};

// Adaptive Dormand-Prince 5(4). t_end may lie on either side of t0.
// observer(const DenseStep<N>&, const Vec<N>& y1) is called after each accepted step
// and returns false to stop; y holds the state at the returned time.
template <std::size_t N, class F, class Obs>
OdeResult dopri5(F&& f, double t0, Vec<N>& y, double t_end, const OdeOptions& opt, Obs&& observer) {
  using namespace detail;
  OdeResult res;
  res.t = t0;
  if (t_end == t0) return res;
  const double dir = t_end > t0 ? 1.0 : -1.0;
  double t = t0;
  double h = dir * std::min(opt.h_init, std::abs(t_end - t0));
  Vec<N> k1, k2, k3, k4, k5, k6, k7, yt, y1;
  f(t, y, k1);
  bool last_rejected = false;
  while (true) {
    if (res.steps >= opt.max_steps) {
      res.status = OdeStatus::MaxSteps;
      return res;
    }
    if (dir * (t + h - t_end) > 0) h = t_end - t;
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, yt, k2);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, yt, k3);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, yt, k4);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, yt, k5);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, yt, k6);
    for (std::size_t i = 0; i < N; ++i)
      y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    f(t + h, y1, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double ei =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = std::sqrt(err / static_cast<double>(N));

    if (err <= 1.0) {
      DenseStep<N> st;
      st.t0 = t;
      st.h = h;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = y1[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        st.r[0][i] = y[i];
        st.r[1][i] = ydiff;
        st.r[2][i] = bspl;
        st.r[3][i] = ydiff - h * k7[i] - bspl;
        st.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      t += h;
      y = y1;
      k1 = k7;
      ++res.steps;
      res.t = t;
      if (!observer(st, y)) {
        res.status = OdeStatus::Stopped;
        return res;
      }
      if (dir * (t - t_end) >= 0) return res;
      double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 10.0;
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
      last_rejected = false;
      h = dir * std::min(std::abs(h) * fac, opt.h_max);
    } else {
      last_rejected = true;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (std::abs(h) < opt.h_min) {
        res.status = OdeStatus::StepUnderflow;
        return res;
      }
    }
  }
}

template <std::size_t N, class F>
OdeResult dopri5(F&& f, double t0, Vec<N>& y, double t_end, const OdeOptions& opt) {
  return dopri5<N>(std::forward<F>(f), t0, y, t_end, opt,
                   [](const DenseStep<N>&, const Vec<N>&) { return true; });
}

}  // namespace horolab
