#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/dispersion.hpp"
#include "clusterpdc/error.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::dispersion;

namespace {

const SellmeierModel& bulk() {
  static const auto m = SellmeierModel::load(testsupport::data_dir() / "sellmeier_congruent_ln.json");
  return m;
}

// Closed-form index and derivative read straight from the data file.
struct Branch {
  double a[4];
  double b[3];
};

Branch read_branch(const std::string& name) {
  std::ifstream in(testsupport::data_dir() / "sellmeier_congruent_ln.json");
  const auto j = nlohmann::json::parse(in);
  Branch br{};
  for (int k = 0; k < 4; ++k) br.a[k] = j[name]["A"][k].get<double>();
  for (int k = 0; k < 3; ++k) br.b[k] = j[name]["B"][k].get<double>();
  return br;
}

struct IndexAndSlope {
  double n;
  double dn_dlambda_um;
};

IndexAndSlope closed_form(const Branch& br, double lambda_um, double t_c) {
  const double f = (t_c - 24.5) * (t_c + 570.82);
  const double num = br.a[1] + br.b[0] * f;
  const double pole = br.a[2] + br.b[1] * f;
  const double den = lambda_um * lambda_um - pole * pole;
  const double n2 = br.a[0] + num / den + br.b[2] * f - br.a[3] * lambda_um * lambda_um;
  const double n = std::sqrt(n2);
  const double dn2 = -num * 2.0 * lambda_um / (den * den) - 2.0 * br.a[3] * lambda_um;
  return {n, dn2 / (2.0 * n)};
}

}  // namespace

TEST_CASE("refractive index at the idler and signal carriers") {
  const double ne = refractive_index(bulk(), 1.32e-6, 160.0, Polarization::TM);
  CHECK(ne > 2.0);
  CHECK(ne < 2.4);
  CHECK(ne == doctest::Approx(2.151261555206).epsilon(1e-11));

  const double no = refractive_index(bulk(), 0.890e-6, 160.0, Polarization::TE);
  CHECK(no > 2.1);
  CHECK(no < 2.4);
  CHECK(no == doctest::Approx(2.246386547174).epsilon(1e-11));
}

TEST_CASE("offset is added exactly") {
  testsupport::for_all(200, 11, [](testsupport::Gen& g, int) {
    const double lam = g.uniform(0.4e-6, 1.6e-6);
    const double t = g.uniform(20.0, 200.0);
    const auto pol = g.coin() ? Polarization::TE : Polarization::TM;
    const double base = refractive_index(bulk(), lam, t, pol);
    CHECK(refractive_index(bulk(), lam, t, pol, 0.01) == base + 0.01);
  });
}

TEST_CASE("out-of-domain inputs name the offending value") {
  try {
    (void)refractive_index(bulk(), 0.3e-6, 100.0, Polarization::TE);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("0.3") != std::string::npos);
  }
  try {
    (void)refractive_index(bulk(), 1.0e-6, 250.0, Polarization::TE);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("250") != std::string::npos);
  }
}

TEST_CASE("numerical group index matches the analytic derivative") {
  const DispersionModel model(bulk());
  const Branch ord = read_branch("ordinary");
  const Branch ext = read_branch("extraordinary");
  testsupport::for_all(300, 12, [&](testsupport::Gen& g, int) {
    const double lam_um = g.uniform(0.45, 1.55);
    const double t = g.uniform(20.0, 200.0);
    const bool idler = g.coin();
    const auto cf = closed_form(idler ? ext : ord, lam_um, t);
    const double expected = cf.n - lam_um * cf.dn_dlambda_um;
    const double got = model.group_index(idler ? Wave::Idler : Wave::Signal, lam_um * 1e-6, t);
    CHECK(std::abs(got - expected) / expected < 1e-6);
    CHECK(model.refractive_index(idler ? Wave::Idler : Wave::Signal, lam_um * 1e-6, t) ==
          doctest::Approx(cf.n).epsilon(1e-13));
  });
}

TEST_CASE("dispersionless branch has group index equal to phase index") {
  SellmeierModel flat;
  flat.ordinary.a1 = 4.84;
  flat.extraordinary.a1 = 4.41;
  const DispersionModel model(flat);
  for (double lam : {0.5e-6, 0.89e-6, 1.32e-6}) {
    CHECK(model.group_index(Wave::Signal, lam, 100.0) == doctest::Approx(2.2).epsilon(1e-12));
    CHECK(model.group_index(Wave::Idler, lam, 100.0) == doctest::Approx(2.1).epsilon(1e-12));
  }
}

TEST_CASE("calibrated group indices reproduce the quoted free spectral ranges") {
  const auto& model = testsupport::device().model;
  const double ng_s = model.group_index(Wave::Signal, 0.890e-6, 160.0);
  const double ng_i = model.group_index(Wave::Idler, 1.320e-6, 160.0);
  const double fsr_s = kSpeedOfLight / (2.0 * ng_s * 14.5e-3);
  const double fsr_i = kSpeedOfLight / (2.0 * ng_i * 14.5e-3);
  CHECK(std::abs(fsr_s - 4.4e9) / 4.4e9 < 0.05);
  CHECK(std::abs(fsr_i - 4.7e9) / 4.7e9 < 0.05);
  CHECK(ng_s == doctest::Approx(2.35).epsilon(0.02));
}

TEST_CASE("optical path length") {
  const auto& model = testsupport::device().model;
  const double tref = model.expansion_reference_c;
  const double n = model.refractive_index(Wave::Signal, 0.89e-6, tref);
  CHECK(model.optical_path_length(Wave::Signal, 14.5e-3, 0.89e-6, tref) == n * 14.5e-3);

  const double h = 1e-3;
  const double slope = (model.optical_path_length(Wave::Signal, 14.5e-3, 0.89e-6, 160.0 + h) -
                        model.optical_path_length(Wave::Signal, 14.5e-3, 0.89e-6, 160.0 - h)) /
                       (2.0 * h);
  CHECK(slope > 0.0);

  CHECK(model.optical_path_length(Wave::Signal, 14.5e-3, 0.89e-6, 160.0) ==
        doctest::Approx(3.263856445901602e-02).epsilon(1e-12));
  CHECK_THROWS_AS((void)model.optical_path_length(Wave::Signal, 0.0, 0.89e-6, 160.0), DomainError);
}

TEST_CASE("index is real, above one and finite over the domain") {
  testsupport::for_all(2000, 13, [](testsupport::Gen& g, int) {
    const double lam = g.uniform(0.4e-6, 1.6e-6);
    const double t = g.uniform(20.0, 200.0);
    for (auto pol : {Polarization::TE, Polarization::TM}) {
      const double n = refractive_index(bulk(), lam, t, pol);
      CHECK(std::isfinite(n));
      CHECK(n > 1.0);
    }
  });
}

TEST_CASE("birefringence exceeds 0.05 across the operating band") {
  testsupport::for_all(500, 14, [](testsupport::Gen& g, int) {
    const double lam = g.uniform(0.5e-6, 1.4e-6);
    const double t = g.uniform(140.0, 180.0);
    const double d = refractive_index(bulk(), lam, t, Polarization::TE) - refractive_index(bulk(), lam, t, Polarization::TM);
    CHECK(std::abs(d) > 0.05);
  });
}

TEST_CASE("index rises with temperature at the three carriers") {
  const DispersionModel model(bulk());
  testsupport::for_all(300, 15, [&](testsupport::Gen& g, int) {
    const double t1 = g.uniform(20.0, 199.0);
    const double t2 = g.uniform(t1 + 0.5, 200.0);
    CHECK(model.refractive_index(Wave::Pump, 0.532e-6, t2) > model.refractive_index(Wave::Pump, 0.532e-6, t1));
    CHECK(model.refractive_index(Wave::Signal, 0.890e-6, t2) > model.refractive_index(Wave::Signal, 0.890e-6, t1));
    CHECK(model.refractive_index(Wave::Idler, 1.320e-6, t2) > model.refractive_index(Wave::Idler, 1.320e-6, t1));
  });
}

TEST_CASE("waveguide correction stays perturbative") {
  WaveguideCorrection c;
  c.dn_signal = 0.049;
  c.dn_idler = -0.02;
  CHECK(c.is_perturbative());
  CHECK(WaveguideCorrection::from_json(c.to_json()) == c);
  c.dn_idler = -0.05;
  CHECK_FALSE(c.is_perturbative());
}

TEST_CASE("polarization mapping in the Z-cut device") {
  const WavePolarizations p;
  CHECK(branch_for(p.of(Wave::Pump)) == branch_for(p.of(Wave::Signal)));
  CHECK(branch_for(p.of(Wave::Idler)) != branch_for(p.of(Wave::Signal)));
  CHECK(branch_for(Polarization::TE) == IndexBranch::Ordinary);
  CHECK(branch_for(Polarization::TM) == IndexBranch::Extraordinary);
}
