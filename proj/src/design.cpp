#include "clusterpdc/design.hpp"

#include <cmath>

#include "clusterpdc/error.hpp"
#include "clusterpdc/numeric.hpp"

namespace clusterpdc::design {

nlohmann::json DesignPoint::to_json() const {
  return {{"mirror_rear", mirror_rear},
          {"length_m", length_m},
          {"finesse_signal", finesse_signal},
          {"finesse_idler", finesse_idler},
          {"linewidth_signal_hz", linewidth_signal_hz},
          {"linewidth_idler_hz", linewidth_idler_hz},
          {"joint_linewidth_hz", joint_linewidth_hz},
          {"escape_signal", escape_signal},
          {"escape_idler", escape_idler},
          {"pair_escape", pair_escape},
          {"brightness", brightness},
          {"feasible", feasible},
          {"pareto", pareto}};
}

double product_linewidth(double a_hz, double b_hz) {
  if (!(a_hz > 0.0 && b_hz > 0.0)) throw DomainError("linewidths must be positive");
  // (1 + u/a^2)(1 + u/b^2) = 2 with u = (2 x)^2
  const double ia = 1.0 / (a_hz * a_hz);
  const double ib = 1.0 / (b_hz * b_hz);
  const double s = ia + ib;
  const double u = 2.0 / (s + std::sqrt(s * s + 4.0 * ia * ib));
  return std::sqrt(u);
}

std::vector<DesignPoint> scan(const cluster::Device& base, const config::DesignScanConfig& grid, const ScanInputs& in) {
  if (!(grid.finesse_min > 0.0)) throw DomainError("finesse_min must be positive");
  if (grid.rear_steps < 1 || grid.length_steps < 1) throw DomainError("scan ranges must be nonempty");
  const auto rears = numeric::linspace(grid.rear_min, grid.rear_max, static_cast<std::size_t>(grid.rear_steps));
  const auto lengths = numeric::linspace(grid.length_min_m, grid.length_max_m, static_cast<std::size_t>(grid.length_steps));

  std::vector<DesignPoint> out;
  for (double length : lengths) {
    for (double rear : rears) {
      cluster::Device d = base;
      d.length_m = length;
      d.signal.mirrors.rear = rear;
      d.idler.mirrors.rear = rear;
      const auto s = config::cavity_figures(d, dispersion::Wave::Signal);
      const auto i = config::cavity_figures(d, dispersion::Wave::Idler);
      DesignPoint p;
      p.mirror_rear = rear;
      p.length_m = length;
      p.finesse_signal = s.finesse;
      p.finesse_idler = i.finesse;
      p.linewidth_signal_hz = s.linewidth_hz;
      p.linewidth_idler_hz = i.linewidth_hz;
      p.joint_linewidth_hz = product_linewidth(s.linewidth_hz, i.linewidth_hz);
      p.escape_signal = s.escape;
      p.escape_idler = i.escape;
      p.pair_escape = s.escape * i.escape;
      p.brightness = cluster::brightness(in.pair_rate_per_s_per_mw, in.dominant_fraction, p.pair_escape,
                                         p.joint_linewidth_hz);
      p.feasible = s.finesse >= grid.finesse_min && i.finesse >= grid.finesse_min;
      out.push_back(p);
    }
  }
  for (auto& p : out) {
    if (!p.feasible) continue;
    p.pareto = true;
    for (const auto& q : out) {
      if (!q.feasible) continue;
      const bool ge = q.brightness >= p.brightness && q.pair_escape >= p.pair_escape;
      const bool gt = q.brightness > p.brightness || q.pair_escape > p.pair_escape;
      if (ge && gt) {
        p.pareto = false;
        break;
      }
    }
  }
  return out;
}

}  // namespace clusterpdc::design
