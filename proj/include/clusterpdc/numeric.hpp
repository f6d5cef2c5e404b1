#pragma once

#include <functional>
#include <span>
#include <vector>

namespace clusterpdc::numeric {

std::vector<double> linspace(double first, double last, std::size_t count);

/// Uniform grid from `first` with spacing `step`, including `last` when it
/// falls on the grid (within 1e-9 of a step).
std::vector<double> arange(double first, double last, double step);

/// Full width at half maximum of a sampled curve, using linear interpolation
/// of the two half-maximum crossings around the global maximum.
/// Returns 0 when the curve does not fall below half maximum on both sides.
double sampled_fwhm(std::span<const double> x, std::span<const double> y);

/// Full width at half maximum of a continuous unimodal-near-peak function.
/// The peak is located inside [lo, hi]; crossings are bracketed by stepping
/// outward with `step` and refined by bisection.
double function_fwhm(const std::function<double(double)>& f, double lo, double hi, double step);

/// Composite trapezoid rule on a sampled curve.
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace clusterpdc::numeric
