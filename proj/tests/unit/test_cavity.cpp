#include <doctest.h>

#include <cmath>
#include <vector>

#include "clusterpdc/cavity.hpp"
#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::cavity;

namespace {

CavityState state_with(double length, double ng, double loss = 0.0, MirrorPair m = {}) {
  CavityState s;
  s.length_m = length;
  s.group_index = ng;
  s.phase_index = ng;
  s.loss_per_m = loss;
  s.mirrors = m;
  s.reference_frequency_hz = 3.37e14;
  return s;
}

// Survival r for a target finesse by bisection on pi sqrt(r)/(1-r).
double survival_for(double f) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (kPi * std::sqrt(mid) / (1.0 - mid) < f ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("free spectral range") {
  CHECK(fsr(state_with(14.5e-3, 2.35)) == doctest::Approx(4.40e9).epsilon(0.005));
  CHECK(fsr(state_with(14.5e-3, 2.20)) == doctest::Approx(4.70e9).epsilon(0.005));
  CHECK(fsr(state_with(29e-3, 2.35)) == 0.5 * fsr(state_with(14.5e-3, 2.35)));
}

TEST_CASE("nominal propagation loss overestimates the finesse") {
  const auto s = state_with(14.5e-3, 2.33, testsupport::default_config().signal.loss_db_per_cm * 100.0 * std::log(10.0) / 10.0);
  const double f = finesse(s);
  CHECK(f > 40.0);
  CHECK(f < 44.0);
  CHECK(f > 22.0);
}

TEST_CASE("finesse is zero at zero survival and increases with survival") {
  CHECK(finesse_from_survival(0.0) == 0.0);
  double last = 0.0;
  for (double r = 0.01; r < 0.999; r += 0.01) {
    const double f = finesse_from_survival(r);
    CHECK(f > last);
    last = f;
  }
}

TEST_CASE("finesse 22 at 4.4 GHz gives a 200 MHz linewidth") {
  const double r = survival_for(22.0);
  CHECK(finesse_from_survival(r) == doctest::Approx(22.0).epsilon(1e-12));
  CHECK(4.4e9 / finesse_from_survival(r) == doctest::Approx(200e6).epsilon(0.01));
}

TEST_CASE("loss inference") {
  const MirrorPair m{0.99, 0.90};
  const double a22 = infer_loss(22.0, m, 14.5e-3);
  // Plug back: r^2 = R1 R2 exp(-2 alpha L) with r fixed by the finesse.
  const double r = survival_for(22.0);
  CHECK(std::sqrt(0.99 * 0.90) * std::exp(-a22 * 14.5e-3) == doctest::Approx(r).epsilon(1e-9));
  const double a_rt = round_trip_loss(a22, 14.5e-3);
  CHECK(a_rt == doctest::Approx(0.15).epsilon(0.1));

  const double lossless = finesse_from_survival(std::sqrt(0.99 * 0.90));
  CHECK(infer_loss(lossless, m, 14.5e-3) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(infer_loss(25.0, m, 14.5e-3) < a22);
  CHECK_THROWS_AS((void)infer_loss(lossless * 1.01, m, 14.5e-3), ComputationError);
}

TEST_CASE("Airy lineshape") {
  const MirrorPair m{0.99, 0.90};
  auto s = state_with(14.5e-3, 2.33, infer_loss(22.0, m, 14.5e-3), m);
  CHECK(airy(s.reference_frequency_hz, s) == 1.0);
  const double f_sr = fsr(s);
  testsupport::for_all(500, 31, [&](testsupport::Gen& g, int) {
    const double nu = s.reference_frequency_hz + g.uniform(-50e9, 50e9);
    CHECK(airy(nu + f_sr, s) == doctest::Approx(airy(nu, s)).epsilon(1e-9));
  });

  // Half-maximum crossings on a 1 MHz grid against FSR / F.
  const double nu0 = s.reference_frequency_hz;
  double left = 0.0, right = 0.0;
  for (double d = 0.0; d < 0.5 * f_sr; d += 1e6) {
    if (airy(nu0 + d, s) < 0.5) {
      right = d;
      break;
    }
  }
  for (double d = 0.0; d < 0.5 * f_sr; d += 1e6) {
    if (airy(nu0 - d, s) < 0.5) {
      left = d;
      break;
    }
  }
  const double width = left + right;
  CHECK(width == doctest::Approx(f_sr / 22.0).epsilon(0.01));
  CHECK(width == doctest::Approx(200e6).epsilon(0.02));
  CHECK(airy_fwhm(s) == doctest::Approx(width).epsilon(0.01));
}

TEST_CASE("Airy mean over one FSR") {
  testsupport::for_all(40, 32, [](testsupport::Gen& g, int) {
    const MirrorPair m{g.uniform(0.5, 0.995), g.uniform(0.5, 0.995)};
    auto s = state_with(g.uniform(5e-3, 25e-3), g.uniform(2.1, 2.4), g.uniform(0.0, 10.0), m);
    const double r = round_trip_survival(s);
    const double f_sr = fsr(s);
    const int n = 20000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += airy(s.reference_frequency_hz + f_sr * (k + 0.5) / n, s);
    CHECK(sum / n == doctest::Approx((1.0 - r) / (1.0 + r)).epsilon(0.01));
  });
}

TEST_CASE("finesse of inferred loss is the identity") {
  testsupport::for_all(500, 33, [](testsupport::Gen& g, int) {
    const MirrorPair m{g.uniform(0.9, 0.999), g.uniform(0.6, 0.99)};
    const double len = g.uniform(2e-3, 40e-3);
    const double bound = finesse_from_survival(std::sqrt(m.front * m.rear));
    const double f = g.uniform(1.0, bound);
    auto s = state_with(len, 2.3, infer_loss(f, m, len), m);
    CHECK(std::abs(finesse(s) - f) / f < 1e-9);
  });
}

TEST_CASE("escape probability") {
  const MirrorPair m{0.99, 0.90};
  const double eta_s = escape_probability(m, round_trip_loss(infer_loss(22.0, m, 14.5e-3), 14.5e-3));
  CHECK(eta_s == doctest::Approx(0.38).epsilon(0.03));
  CHECK(std::abs(eta_s - 0.41) <= 0.08);
  CHECK(escape_probability(MirrorPair{1.0, 0.9}, 0.0) == 1.0);
  CHECK(0.41 * 0.37 == doctest::Approx(0.152).epsilon(0.002));
  CHECK_THROWS_AS((void)escape_probability(MirrorPair{1.0, 1.0}, 0.0), Error);
}

TEST_CASE("escape probability monotonicity on a parameter grid") {
  const double h = 1e-6;
  for (double tf = 0.002; tf < 0.2; tf += 0.02) {
    for (double tr = 0.01; tr < 0.5; tr += 0.05) {
      for (double a = 0.0; a < 0.4; a += 0.05) {
        const auto eta = [](double f, double r, double loss) {
          return escape_probability(MirrorPair{1.0 - f, 1.0 - r}, loss);
        };
        const double e = eta(tf, tr, a);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
        CHECK(eta(tf, tr, a + h) < e);
        CHECK(eta(tf + h, tr, a) < e);
        CHECK(eta(tf, tr + h, a) > e);
      }
    }
  }
}

TEST_CASE("mirror and state validation") {
  CHECK_THROWS_AS((MirrorPair{1.0, 0.9}.validate()), DomainError);
  CHECK_THROWS_AS((MirrorPair{0.9, -0.1}.validate()), DomainError);
  auto s = state_with(14.5e-3, 2.3);
  s.length_m = -1.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
}
