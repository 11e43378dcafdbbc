#include <doctest.h>

#include <cmath>

#include "horolab/ode.hpp"

using namespace horolab;

TEST_CASE("dopri5 integrates exponential growth") {
  Vec<1> y{1.0};
  OdeOptions opt;
  const auto res = dopri5<1>([](double, const Vec<1>& u, Vec<1>& du) { du[0] = u[0]; }, 0.0, y, 3.0, opt);
  CHECK(res.status == OdeStatus::Done);
  CHECK(y[0] == doctest::Approx(std::exp(3.0)).epsilon(1e-9));
}

TEST_CASE("dopri5 runs backward in time") {
  Vec<2> y{0.0, 1.0};
  OdeOptions opt;
  auto osc = [](double, const Vec<2>& u, Vec<2>& du) {
    du[0] = u[1];
    du[1] = -u[0];
  };
  dopri5<2>(osc, 0.0, y, -2.0, opt);
  CHECK(y[0] == doctest::Approx(std::sin(-2.0)).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(std::cos(-2.0)).epsilon(1e-9));
}

TEST_CASE("observer can stop the integration and dense output interpolates") {
  Vec<1> y{0.0};
  OdeOptions opt;
  double worst = 0.0;
  const auto res = dopri5<1>(
      [](double t, const Vec<1>&, Vec<1>& du) { du[0] = std::cos(t); }, 0.0, y, 10.0, opt,
      [&](const DenseStep<1>& st, const Vec<1>&) {
        const double tm = 0.5 * (st.lo() + st.hi());
        worst = std::max(worst, std::abs(st.eval(tm)[0] - std::sin(tm)));
        return st.t1() < 1.0;
      });
  CHECK(res.status == OdeStatus::Stopped);
  CHECK(res.t >= 1.0);
  CHECK(res.t < 10.0);
  CHECK(worst < 1e-8);
}

TEST_CASE("zero-length interval leaves the state unchanged") {
  Vec<1> y{2.5};
  OdeOptions opt;
  dopri5<1>([](double, const Vec<1>& u, Vec<1>& du) { du[0] = u[0]; }, 1.0, y, 1.0, opt);
  CHECK(y[0] == 2.5);
}
