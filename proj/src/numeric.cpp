#include "clusterpdc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "clusterpdc/error.hpp"

namespace clusterpdc::numeric {

std::vector<double> linspace(double first, double last, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = first;
    return out;
  }
  const double step = (last - first) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = first + step * static_cast<double>(i);
  out.back() = last;
  return out;
}

std::vector<double> arange(double first, double last, double step) {
  if (!(step > 0.0)) throw DomainError("arange: step must be positive");
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = first + step * static_cast<double>(i);
  return out;
}

namespace {

double interpolate_crossing(double x0, double y0, double x1, double y1, double level) {
  if (y1 == y0) return 0.5 * (x0 + x1);
  return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}

}  // namespace

double sampled_fwhm(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) return 0.0;
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[peak];
  std::size_t left = peak;
  while (left > 0 && y[left] >= half) --left;
  std::size_t right = peak;
  while (right + 1 < y.size() && y[right] >= half) ++right;
  if (y[left] >= half || y[right] >= half) return 0.0;
  const double xl = interpolate_crossing(x[left], y[left], x[left + 1], y[left + 1], half);
  const double xr = interpolate_crossing(x[right - 1], y[right - 1], x[right], y[right], half);
  return xr - xl;
}

double function_fwhm(const std::function<double(double)>& f, double lo, double hi, double step) {
  if (!(hi > lo) || !(step > 0.0)) throw DomainError("function_fwhm: invalid bracket");
  double best_x = lo;
  double best_y = f(lo);
  for (double x = lo + step; x <= hi; x += step) {
    const double y = f(x);
    if (y > best_y) {
      best_y = y;
      best_x = x;
    }
  }
  const auto refined = boost::math::tools::brent_find_minima(
      [&](double x) { return -f(x); }, std::max(lo, best_x - step), std::min(hi, best_x + step), 52);
  const double peak_x = refined.first;
  const double half = -0.5 * refined.second;

  auto crossing = [&](double direction) {
    double inside = peak_x;
    double outside = peak_x + direction * step;
    std::uintmax_t guard = 0;
    while (f(outside) >= half) {
      inside = outside;
      outside += direction * step;
      if (++guard > 10'000'000) throw ComputationError("function_fwhm: no half-maximum crossing");
    }
    auto g = [&](double x) { return f(x) - half; };
    auto tol = [&](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(a)) + 1e-18; };
    const auto r = boost::math::tools::bisect(g, std::min(inside, outside), std::max(inside, outside), tol);
    return 0.5 * (r.first + r.second);
  };
  return crossing(+1.0) - crossing(-1.0);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size() && i < y.size(); ++i) sum += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return sum;
}

}  // namespace clusterpdc::numeric
