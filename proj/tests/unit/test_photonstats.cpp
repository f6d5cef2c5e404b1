#include <doctest.h>

#include <cmath>
#include <vector>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"
#include "clusterpdc/photonstats.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::photonstats;

namespace {

// Least-squares slope of log(profile) over [a, b].
double log_slope(const CoincidenceProfile& p, double a, double b) {
  const int n = 200;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    const double t = a + (b - a) * k / (n - 1);
    const double y = std::log(profile(t, p));
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("symmetric double exponential without jitter") {
  testsupport::for_all(50, 51, [](testsupport::Gen& g, int) {
    CoincidenceProfile p;
    p.gamma_signal = p.gamma_idler = g.log_uniform(1e8, 1e10);
    p.jitter_s = 0.0;
    CHECK(profile_fwhm(p) == doctest::Approx(2.0 * std::log(2.0) / p.gamma_signal).epsilon(1e-6));
  });
}

TEST_CASE("single-cavity rates with the system jitter bracket 2.1 ns") {
  CoincidenceProfile p;
  p.gamma_signal = p.gamma_idler = kTwoPi * 200e6;
  p.jitter_s = 0.5e-9 / 2.355;
  const double w = profile_fwhm(p);
  CHECK(w >= 1.1e-9);
  CHECK(w <= 2.5e-9);
}

TEST_CASE("log slopes recover both decay rates") {
  CoincidenceProfile p;
  p.gamma_signal = 1.26e9;
  p.gamma_idler = 0.8e9;
  p.jitter_s = 0.2e-9;
  CHECK(log_slope(p, -12e-9, -3e-9) == doctest::Approx(p.gamma_signal).epsilon(0.02));
  CHECK(-log_slope(p, 3e-9, 15e-9) == doctest::Approx(p.gamma_idler).epsilon(0.02));
}

TEST_CASE("profile area is preserved by the jitter") {
  testsupport::for_all(60, 52, [](testsupport::Gen& g, int) {
    CoincidenceProfile p;
    p.gamma_signal = g.log_uniform(3e8, 5e9);
    p.gamma_idler = g.log_uniform(3e8, 5e9);
    p.jitter_s = g.uniform(0.0, 1e-9);
    p.amplitude = g.uniform(0.1, 10.0);
    const double lo = -20.0 / p.gamma_signal - 8.0 * p.jitter_s;
    const double hi = 20.0 / p.gamma_idler + 8.0 * p.jitter_s;
    const int n = 200000;
    const double h = (hi - lo) / n;
    double area = 0.0;
    for (int k = 0; k <= n; ++k) area += (k == 0 || k == n ? 0.5 : 1.0) * profile(lo + k * h, p);
    area *= h;
    const double expected = p.amplitude * (1.0 / p.gamma_signal + 1.0 / p.gamma_idler);
    CHECK(area == doctest::Approx(expected).epsilon(1e-3));
  });
}

TEST_CASE("binned counts sum to the area") {
  CoincidenceProfile p;
  const double w = 0.1e-9;
  double sum = 0.0;
  for (int k = -400; k <= 400; ++k) sum += binned_profile(k * w, w, p);
  CHECK(sum == doctest::Approx(1.0 / p.gamma_signal + 1.0 / p.gamma_idler).epsilon(1e-4));
}

TEST_CASE("symmetric profile peaks within one jitter of zero") {
  testsupport::for_all(60, 53, [](testsupport::Gen& g, int) {
    CoincidenceProfile p;
    p.gamma_signal = p.gamma_idler = g.log_uniform(3e8, 5e9);
    p.jitter_s = g.uniform(0.01e-9, 1e-9);
    double best_t = 0.0, best = -1.0;
    const double span = 3.0 * p.jitter_s + 3.0 / p.gamma_signal;
    for (int k = -2000; k <= 2000; ++k) {
      const double t = span * k / 2000.0;
      const double v = profile(t, p);
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    CHECK(std::abs(best_t) <= p.jitter_s);
  });
}

TEST_CASE("profile is nonnegative and finite far in the tails") {
  CoincidenceProfile p;
  p.jitter_s = 0.5e-9;
  for (double t = -1e-6; t <= 1e-6; t += 1e-9) {
    const double v = profile(t, p);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  p.gamma_idler = -1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("bandwidth and correlation time") {
  CHECK(bandwidth_from_correlation(2.1e-9) == doctest::Approx(151.6e6).epsilon(1e-3));
  CHECK(bandwidth_from_correlation(1e-9 / kPi) == doctest::Approx(1e9).epsilon(1e-15));
  CHECK(correlation_from_bandwidth(150e6) == doctest::Approx(2.12e-9).epsilon(2e-3));
  testsupport::for_all(500, 54, [](testsupport::Gen& g, int) {
    const double tau = g.log_uniform(1e-12, 1e-6);
    CHECK(correlation_from_bandwidth(bandwidth_from_correlation(tau)) == doctest::Approx(tau).epsilon(1e-12));
    const double bw = g.log_uniform(1e6, 1e12);
    CHECK(correlation_from_bandwidth(2.0 * bw) == 0.5 * correlation_from_bandwidth(bw));
  });
}

TEST_CASE("g2 from the effective mode number") {
  CHECK(g2_zero(1.0) == 2.0);
  CHECK(g2_zero(2.5) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(g2_zero(1e12) > 1.0);
  CHECK_THROWS_AS(g2_zero(0.9), DomainError);
  testsupport::for_all(500, 55, [](testsupport::Gen& g, int) {
    const double k1 = g.log_uniform(1.0, 1e6);
    const double k2 = k1 * g.uniform(1.001, 3.0);
    CHECK(g2_zero(k2) < g2_zero(k1));
    CHECK(g2_zero(k1) > 1.0);
    CHECK(g2_zero(k1) <= 2.0);
  });
}

TEST_CASE("jitter from FWHM") { CHECK(jitter_from_fwhm(0.5e-9) == doctest::Approx(0.5e-9 / 2.3548).epsilon(1e-4)); }
