#include <doctest.h>

#include <cmath>
#include <vector>

#include "clusterpdc/error.hpp"
#include "clusterpdc/mirrors.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::mirrors;

namespace {

double quarter_wave_oracle(double nh, double nl, int pairs, double n0, double ns) {
  const double y = std::pow(nh / nl, 2 * pairs) * nh * nh / (n0 * ns);
  const double r = (1.0 - y) / (1.0 + y);
  return r * r;
}

LayerStack random_stack(testsupport::Gen& g) {
  LayerStack s;
  s.incident_index = g.uniform(1.0, 1.6);
  s.substrate_index = g.uniform(1.0, 2.5);
  const int n = g.integer(0, 25);
  for (int k = 0; k < n; ++k) s.layers.push_back({g.uniform(1.0, 2.6), g.uniform(10e-9, 400e-9), {}});
  return s;
}

}  // namespace

TEST_CASE("no layers and matched media reflect nothing") {
  LayerStack s;
  s.incident_index = s.substrate_index = 1.7;
  CHECK(stack_reflectivity(s, 890e-9) == 0.0);
}

TEST_CASE("17-layer quarter-wave stack matches the closed form") {
  const auto s = quarter_wave_stack(2.3, 1.45, 17, 890e-9, 1.0, 2.2);
  const double r = stack_reflectivity(s, 890e-9);
  CHECK(std::abs(r - quarter_wave_oracle(2.3, 1.45, 8, 1.0, 2.2)) < 1e-9);
  CHECK(r > 0.99);
  testsupport::for_all(200, 71, [](testsupport::Gen& g, int) {
    const double nh = g.uniform(1.8, 2.6), nl = g.uniform(1.3, 1.7);
    const int p = g.integer(0, 12);
    const double n0 = g.uniform(1.0, 1.5), ns = g.uniform(1.4, 2.3);
    const double lam = g.uniform(500e-9, 1500e-9);
    const auto st = quarter_wave_stack(nh, nl, 2 * p + 1, lam, n0, ns);
    CHECK(std::abs(stack_reflectivity(st, lam) - quarter_wave_oracle(nh, nl, p, n0, ns)) < 1e-9);
  });
}

TEST_CASE("shipped demonstration stacks") {
  const auto front = LayerStack::load(testsupport::data_dir() / "stacks" / "front_17.json");
  const auto rear = LayerStack::load(testsupport::data_dir() / "stacks" / "rear_13.json");
  CHECK(front.layers.size() == 17);
  CHECK(rear.layers.size() == 13);
  CHECK(stack_reflectivity(front, 890e-9) >= 0.99);
  CHECK(stack_reflectivity(front, 890e-9) == doctest::Approx(0.998964751116).epsilon(1e-10));
  CHECK(stack_reflectivity(rear, 890e-9) == doctest::Approx(0.898416953408).epsilon(1e-10));
  CHECK(stack_reflectivity(front, 532e-9) == doctest::Approx(0.121535338837).epsilon(1e-10));
}

TEST_CASE("design wavelength is a local maximum") {
  const auto s = quarter_wave_stack(2.3, 1.45, 13, 1025e-9, 1.0, 2.2);
  const double r0 = stack_reflectivity(s, 1025e-9);
  CHECK(stack_reflectivity(s, 1024e-9) < r0);
  CHECK(stack_reflectivity(s, 1026e-9) < r0);
}

TEST_CASE("reflectivity stays finite and bounded over the visible and near infrared") {
  const auto front = LayerStack::load(testsupport::data_dir() / "stacks" / "front_17.json");
  std::vector<double> grid;
  for (double nm = 400.0; nm <= 1600.0; nm += 0.5) grid.push_back(nm * 1e-9);
  for (double r : stack_spectrum(front, grid)) {
    CHECK(std::isfinite(r));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("energy bound for random lossless stacks") {
  testsupport::for_all(3000, 72, [](testsupport::Gen& g, int) {
    const auto s = random_stack(g);
    const double r = stack_reflectivity(s, g.uniform(400e-9, 1600e-9));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0 + 1e-15);
  });
}

TEST_CASE("reversal symmetry") {
  testsupport::for_all(1000, 73, [](testsupport::Gen& g, int) {
    const auto s = random_stack(g);
    const double lam = g.uniform(400e-9, 1600e-9);
    CHECK(stack_reflectivity(s.reversed(), lam) == doctest::Approx(stack_reflectivity(s, lam)).epsilon(1e-10));
  });
}

TEST_CASE("adding a high/low pair raises the reflectivity") {
  testsupport::for_all(200, 74, [](testsupport::Gen& g, int) {
    const double nh = g.uniform(1.8, 2.6), nl = g.uniform(1.3, 1.7);
    const double lam = g.uniform(500e-9, 1500e-9);
    const int n = 2 * g.integer(0, 10) + 1;
    const double r1 = stack_reflectivity(quarter_wave_stack(nh, nl, n, lam, 1.0, 1.5), lam);
    const double r2 = stack_reflectivity(quarter_wave_stack(nh, nl, n + 2, lam, 1.0, 1.5), lam);
    CHECK(r2 > r1);
  });
}

TEST_CASE("stack validation and JSON round trip") {
  auto s = quarter_wave_stack(2.3, 1.45, 5, 890e-9, 1.0, 2.2);
  s.layers[0].dispersion = {{800e-9, 2.32}, {900e-9, 2.30}};
  const auto back = LayerStack::from_json(s.to_json());
  REQUIRE(back.layers.size() == s.layers.size());
  CHECK(stack_reflectivity(back, 870e-9) == doctest::Approx(stack_reflectivity(s, 870e-9)).epsilon(1e-12));
  CHECK(s.layers[0].index_at(850e-9) == doctest::Approx(2.31));
  CHECK(s.layers[0].index_at(700e-9) == 2.32);
  s.layers[1].thickness_m = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s.layers[1].thickness_m = 100e-9;
  s.layers[1].index = 0.9;
  CHECK_THROWS_AS(s.validate(), DomainError);
}
