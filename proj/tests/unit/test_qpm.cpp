#include <doctest.h>

#include <cmath>
#include <vector>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"
#include "clusterpdc/qpm.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::qpm;

namespace {

const dispersion::DispersionModel& model() { return testsupport::device().model; }
const PolingSpec& poling() { return testsupport::device().poling; }

dispersion::DispersionModel bulk_model() {
  return dispersion::DispersionModel(dispersion::SellmeierModel::load(testsupport::data_dir() / "sellmeier_congruent_ln.json"));
}

double mismatch_at_signal_hz(double nu_s, double t) {
  const double nu_p = kSpeedOfLight / 532e-9;
  return phase_mismatch(532e-9, kSpeedOfLight / nu_s, kSpeedOfLight / (nu_p - nu_s), t, poling(), model());
}

}  // namespace

TEST_CASE("calibrated mismatch vanishes at the design point") {
  const auto op = OperatingPoint::from_pump_signal(532e-9, 890e-9, testsupport::t_cal());
  CHECK(std::abs(phase_mismatch(op, poling(), model())) < 1e-6);
}

TEST_CASE("shortening the poling period shifts the mismatch by the grating change") {
  const auto op = OperatingPoint::from_pump_signal(532e-9, 890e-9, testsupport::t_cal());
  const double eps = 1e-6;
  PolingSpec shorter = poling();
  shorter.period_m = poling().period_m / (1.0 + eps);
  const double delta = phase_mismatch(op, shorter, model()) - phase_mismatch(op, poling(), model());
  const double expected = -kTwoPi * eps / poling().period_m;
  CHECK(delta == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("mismatch changes sign across the calibration temperature") {
  const double t = testsupport::t_cal();
  const auto lo = OperatingPoint::from_pump_signal(532e-9, 890e-9, t - 5.0);
  const auto hi = OperatingPoint::from_pump_signal(532e-9, 890e-9, t + 5.0);
  CHECK(phase_mismatch(lo, poling(), model()) * phase_mismatch(hi, poling(), model()) < 0.0);
}

TEST_CASE("envelope special values") {
  CHECK(envelope_from_mismatch(0.0, 14.5e-3) == 1.0);
  const double first_null = kTwoPi / 14.5e-3;
  CHECK(envelope_from_mismatch(first_null, 14.5e-3) < 1e-30);
  CHECK(sinc(0.0) == 1.0);
  CHECK(sinc(kPi) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("envelope FWHM in signal frequency is about 151 GHz") {
  const double t = testsupport::t_cal();
  const double nu0 = kSpeedOfLight / 890e-9;
  double lo = 0.0, hi = 0.0;
  double step = 0.05e9;
  for (double d = 0.0; d < 1e12; d += step) {
    if (envelope_from_mismatch(mismatch_at_signal_hz(nu0 - d, t), 14.5e-3) < 0.5) {
      lo = nu0 - d;
      break;
    }
  }
  for (double d = 0.0; d < 1e12; d += step) {
    if (envelope_from_mismatch(mismatch_at_signal_hz(nu0 + d, t), 14.5e-3) < 0.5) {
      hi = nu0 + d;
      break;
    }
  }
  const double fwhm = hi - lo;
  CHECK(fwhm > 151e9 * 0.9);
  CHECK(fwhm < 151e9 * 1.1);
}

TEST_CASE("operating point solver") {
  const double t = testsupport::t_cal();
  const auto op = solve_operating_point(532e-9, t, poling(), model());
  CHECK(std::abs(op.signal_m() - 890e-9) < 0.05e-9);

  // Signal moves to longer wavelengths as the crystal warms.
  double last = 0.0;
  for (double dt = -2.0; dt <= 2.0 + 1e-12; dt += 0.5) {
    const double ls = solve_operating_point(532e-9, t + dt, poling(), model()).signal_m();
    if (dt > -2.0) CHECK(ls > last);
    last = ls;
  }
  CHECK(solve_operating_point(532e-9, t + 2.0, poling(), model()).signal_m() ==
        doctest::Approx(890.228406e-9).epsilon(1e-8));

  const auto detuned = solve_operating_point(532.01e-9, t, poling(), model());
  CHECK(detuned.energy_conservation_error() < 1e-12);
}

TEST_CASE("solver reports the scanned extrema when no root exists") {
  SearchWindow w;
  w.signal_min_m = 900e-9;
  w.signal_max_m = 930e-9;
  try {
    (void)solve_operating_point(532e-9, testsupport::t_cal(), poling(), model(), w);
    FAIL("expected no phase-matched point");
  } catch (const ComputationError& e) {
    CHECK(std::string(e.what()).find("no phase-matched point") != std::string::npos);
  }
}

TEST_CASE("phase-only calibration") {
  const auto targets = OperatingPoint::from_pump_signal(532e-9, 890e-9, 160.0);
  const auto bulk = bulk_model();
  const auto cal = calibrate(targets, poling(), bulk);
  CHECK(cal.correction.dn_signal == 0.0);
  CHECK(cal.correction.dn_idler == 0.0);
  CHECK(cal.correction.dn_pump == 0.0);
  CHECK(std::abs(phase_mismatch(targets, poling(), bulk.with_correction(cal.correction))) < 1e-6);
  CHECK(cal.correction.residual_mismatch_per_m == doctest::Approx(-cal.bulk_mismatch_per_m));
  // Published coefficients leave a residual of about 2.4 % of the grating vector.
  CHECK(cal.residual_fraction_of_grating > 0.0);
  CHECK(cal.residual_fraction_of_grating < 0.03);
}

TEST_CASE("FSR-fit calibration hits both free spectral ranges") {
  const auto targets = OperatingPoint::from_pump_signal(532e-9, 890e-9, testsupport::t_cal());
  CalibrationOptions opt;
  opt.mode = CalibrationMode::FitFsr;
  const auto cal = calibrate(targets, poling(), bulk_model(), opt);
  CHECK(std::abs(cal.fsr_signal_hz - 4.4e9) / 4.4e9 < 0.01);
  CHECK(std::abs(cal.fsr_idler_hz - 4.7e9) / 4.7e9 < 0.01);
  CHECK(cal.correction.is_perturbative());
  CHECK(std::abs(phase_mismatch(targets, poling(), bulk_model().with_correction(cal.correction))) < 1e-6);
}

TEST_CASE("calibration rejects temperatures outside the calibration band") {
  const auto targets = OperatingPoint::from_pump_signal(532e-9, 890e-9, 120.0);
  CHECK_THROWS_AS(calibrate(targets, poling(), bulk_model()), Error);
}

TEST_CASE("envelope is even, bounded by one and peaks only at zero mismatch") {
  testsupport::for_all(2000, 21, [](testsupport::Gen& g, int) {
    const double db = g.uniform(-5e3, 5e3);
    const double len = g.uniform(1e-3, 40e-3);
    const double e = envelope_from_mismatch(db, len);
    CHECK(e == envelope_from_mismatch(-db, len));
    CHECK(e <= 1.0);
    if (db != 0.0) CHECK(e < 1.0);
  });
}

TEST_CASE("solver stays phase matched within three kelvin of calibration") {
  testsupport::for_all(25, 22, [](testsupport::Gen& g, int) {
    const double t = testsupport::t_cal() + g.uniform(-3.0, 3.0);
    const auto op = solve_operating_point(532e-9, t, poling(), model());
    CHECK(std::abs(phase_mismatch(op, poling(), model())) < 1e-3);
  });
}

TEST_CASE("energy conservation is enforced at construction") {
  testsupport::for_all(1000, 23, [](testsupport::Gen& g, int) {
    const double lp = g.uniform(500e-9, 560e-9);
    const double ls = g.uniform(1.2 * lp, 1.95 * lp);
    const auto op = OperatingPoint::from_pump_signal(lp, ls, 160.0);
    CHECK(op.energy_conservation_error() < 1e-12);
    CHECK(op.signal_m() < op.idler_m());
  });
  CHECK_THROWS_AS(OperatingPoint::from_wavelengths(532e-9, 890e-9, 1300e-9, 160.0), DomainError);
  CHECK_THROWS_AS(OperatingPoint::from_pump_signal(532e-9, 1320e-9, 160.0), DomainError);
}

TEST_CASE("poling parameter validation") {
  PolingSpec p;
  p.order = 2;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.order = 3;
  CHECK_NOTHROW(p.validate());
  CHECK(p.grating_vector() == doctest::Approx(3.0 * kTwoPi / 4.44e-6));
  p.period_m = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}
