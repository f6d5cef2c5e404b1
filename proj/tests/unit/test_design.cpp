#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "clusterpdc/design.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::design;

namespace {

double product_width_oracle(double a, double b) {
  const auto f = [&](double x) { return 1.0 / ((1.0 + 4.0 * x * x / (a * a)) * (1.0 + 4.0 * x * x / (b * b))); };
  double lo = 0.0, hi = std::max(a, b);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.5 ? lo : hi) = mid;
  }
  return lo + hi;
}

config::DesignScanConfig single(double rear, double length, double fmin) {
  return {rear, rear, 1, length, length, 1, fmin};
}

}  // namespace

TEST_CASE("product of two Lorentzians") {
  CHECK(product_linewidth(200e6, 200e6) == doctest::Approx(128.7e6).epsilon(1e-3));
  testsupport::for_all(300, 91, [](testsupport::Gen& g, int) {
    const double a = g.log_uniform(1e6, 1e10), b = g.log_uniform(1e6, 1e10);
    CHECK(product_linewidth(a, b) == doctest::Approx(product_width_oracle(a, b)).epsilon(1e-9));
  });
}

TEST_CASE("reference design is feasible") {
  const auto p = scan(testsupport::device(), single(0.90, 14.5e-3, 20.0), {}).front();
  CHECK(p.feasible);
  CHECK(p.finesse_signal >= 20.0);
  CHECK(p.finesse_idler >= 20.0);
  CHECK(p.finesse_signal == doctest::Approx(testsupport::resolved().finesse_signal).epsilon(0.01));
}

TEST_CASE("raising the finesse bound never adds feasible points") {
  const auto& grid = testsupport::default_config().design_scan;
  auto loose = grid;
  loose.finesse_min = 15.0;
  const auto a = scan(testsupport::device(), loose, {});
  testsupport::for_all(8, 92, [&](testsupport::Gen& g, int) {
    auto tight = grid;
    tight.finesse_min = g.uniform(15.0, 60.0);
    const auto b = scan(testsupport::device(), tight, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (b[k].feasible) CHECK(a[k].feasible);
    }
  });
}

TEST_CASE("without loss the escape probability rises with rear transmission") {
  auto dev = testsupport::device();
  dev.signal.loss_per_m = dev.idler.loss_per_m = 0.0;
  const auto points = scan(dev, testsupport::default_config().design_scan, {});
  std::map<double, std::vector<DesignPoint>> by_length;
  for (const auto& p : points) by_length[p.length_m].push_back(p);
  for (auto& [len, row] : by_length) {
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.mirror_rear > y.mirror_rear; });
    for (std::size_t k = 1; k < row.size(); ++k) {
      CHECK(row[k].escape_signal > row[k - 1].escape_signal);
      CHECK(row[k].escape_idler > row[k - 1].escape_idler);
    }
  }
}

TEST_CASE("Pareto flags match a brute-force dominance check") {
  const auto points = scan(testsupport::device(), testsupport::default_config().design_scan, {});
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      if (!q.feasible) continue;
      if (q.brightness >= p.brightness && q.pair_escape >= p.pair_escape &&
          (q.brightness > p.brightness || q.pair_escape > p.pair_escape)) {
        dominated = true;
      }
    }
    CHECK(p.pareto == (p.feasible && !dominated));
  }
}
