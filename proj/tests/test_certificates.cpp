#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conecert/certificates.hpp"
#include "conecert/problem.hpp"

using namespace conecert;

namespace {

const double kRho = 15.0 * M_PI / 64.0;

SystemOperator example_system(const char* name, double h) {
  return load_problem_text(embedded_problem_text(name)).build(h);
}

const Condition& condition(const Certificate& cert, const std::string& name) {
  for (const auto& c : cert.conditions)
    if (c.name == name) return c;
  FAIL("condition not found: " << name);
  static Condition dummy;
  return dummy;
}

}  // namespace

TEST_CASE("existence certificate for the worked example") {
  auto sys = example_system("example1", 1.0 / 32.0);
  CertifyOptions options;
  options.repro_rounding = true;
  const auto constants = gather_constants(sys, options);

  // User majorants round up to the published table.
  CHECK(round_up_3_string(constants.M[0].value) == "1.765");
  CHECK(round_up_3_string(constants.M[1].value) == "0.543");
  CHECK(round_up_3_string(constants.H[0].value) == "1.401");
  CHECK(round_up_3_string(constants.H[1].value) == "6.278");
  CHECK(constants.M[0].provenance == Provenance::User);
  CHECK(constants.delta_provenance == Provenance::Sampled);
  CHECK(constants.k1_norm[0] == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(constants.gamma_norm[0] == doctest::Approx(1.0).epsilon(1e-10));

  SUBCASE("the box inequality fails at eta2 = 0.2 and passes at eta2 = 0.05") {
    sys.mutable_spec().components[0].lambda = 0.5;
    sys.mutable_spec().components[1].lambda = 0.5;
    sys.mutable_spec().components[0].eta = 0.2;
    sys.mutable_spec().components[1].eta = 0.2;
    const auto failing = certify_existence(sys, constants, options);
    CHECK(failing.verdict == "fail");
    const auto& bad = condition(failing, "d2.box_inequality_2");
    CHECK_FALSE(bad.satisfied);
    CHECK(bad.lhs == doctest::Approx(1.323475).epsilon(1e-6));
    CHECK(bad.margin == doctest::Approx(kRho - 1.323475).epsilon(1e-5));
    const auto& good1 = condition(failing, "d2.box_inequality_1");
    CHECK(good1.satisfied);
    CHECK(good1.lhs == doctest::Approx(0.500825).epsilon(1e-6));

    sys.mutable_spec().components[1].eta = 0.05;
    const auto passing = certify_existence(sys, constants, options);
    const auto& d2_2 = condition(passing, "d2.box_inequality_2");
    CHECK(d2_2.satisfied);
    CHECK(d2_2.lhs == doctest::Approx(0.381775).epsilon(1e-6));
    CHECK(passing.all_conditions_satisfied());
    // delta is sampled, so a satisfied certificate stays advisory.
    CHECK(passing.verdict == "advisory");
    CHECK(!passing.localization.empty());
  }

  SUBCASE("margins replay bit-identically from the stored constants") {
    const auto cert = certify_existence(sys, constants, options);
    for (int i = 0; i < sys.n(); ++i) {
      const auto& comp = sys.spec().components[static_cast<size_t>(i)];
      const double M = round_up_3(cert.constants.M[static_cast<size_t>(i)].value);
      const double H = round_up_3(cert.constants.H[static_cast<size_t>(i)].value);
      const double lhs = comp.lambda * M * cert.constants.k1_norm[static_cast<size_t>(i)] +
                         comp.eta * H * cert.constants.gamma_norm[static_cast<size_t>(i)];
      const auto& c = condition(cert, "d2.box_inequality_" + std::to_string(i + 1));
      CHECK(c.lhs == lhs);                 // exact replay
      CHECK(c.margin == comp.rho - lhs);   // bit-identical arithmetic
    }
  }

  SUBCASE("the spectral lower bound holds with the small default box") {
    const auto cert = certify_existence(sys, constants, options);
    const auto& d1 = condition(cert, "d1.spectral_lower_bound");
    CHECK(d1.satisfied);
    CHECK(cert.mu_i0 == doctest::Approx(5.7832).epsilon(2e-3));
    CHECK(constants.delta >= 1.0 / std::sqrt(constants.rho0));
    // Richardson extrapolation attached and closer to the analytic value.
    const double r_exact = 0.17291506903064496;
    CHECK(std::abs(cert.r_extrapolated - r_exact) <= std::abs(cert.r_h - r_exact));
  }

  SUBCASE("boundary case mu/delta = lambda has zero margin and passes") {
    ConstantsReport tweaked = constants;
    const double mu = sys.op(0).spectral().mu;
    tweaked.delta = mu / sys.spec().components[0].lambda;
    tweaked.delta_provenance = Provenance::User;
    const auto cert = certify_existence(sys, tweaked, options);
    const auto& d1 = condition(cert, "d1.spectral_lower_bound");
    CHECK(d1.satisfied);
    CHECK(d1.margin == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }

  SUBCASE("json serialization carries verdict, conditions and caveats") {
    const auto cert = certify_existence(sys, constants, options);
    const auto j = cert.to_json();
    CHECK(j["kind"] == "existence");
    CHECK(j["conditions"].is_array());
    CHECK(j["constants"]["M"][0]["provenance"] == "user");
    CHECK(j["spectral"]["r_h"].get<double>() > 0.0);
  }
}

TEST_CASE("non-existence certificate for the worked example") {
  auto sys = example_system("example2", 1.0 / 16.0);
  const auto constants = gather_constants(sys, {});
  CHECK(constants.bounds_verified[0]);
  CHECK(constants.bounds_verified[1]);

  SUBCASE("passes at the bundled parameter point with the right contraction factor") {
    const auto cert = certify_nonexistence(sys, constants);
    CHECK(cert.verdict == "pass");
    const auto& c1 = condition(cert, "contraction_inequality_1");
    const auto& c2 = condition(cert, "contraction_inequality_2");
    CHECK(c1.satisfied);
    CHECK(c2.satisfied);
    CHECK(c1.lhs == doctest::Approx(0.3552544031041707).epsilon(1e-4));
    CHECK(c2.lhs == doctest::Approx(0.3671592842654908).epsilon(1e-4));
    CHECK(cert.contraction_factor == doctest::Approx(0.3671592842654908).epsilon(1e-4));
    CHECK(cert.localization == "at most the zero solution in the box P_I");
  }

  SUBCASE("zero parameters are trivially inside the region") {
    for (auto& comp : sys.mutable_spec().components) {
      comp.lambda = 0.0;
      comp.eta = 0.0;
    }
    const auto cert = certify_nonexistence(sys, constants);
    CHECK(cert.verdict == "pass");
    CHECK(cert.contraction_factor == 0.0);
  }

  SUBCASE("the conservative reduced inequality from the example is stricter") {
    // tau_1 lambda_1 + xi_1 eta_1 and tau_2 lambda_2 + xi_2 eta_2 with the
    // operator norm factor dropped; at (0.5, 0.1) and (0.2, 0.1):
    CHECK(M_PI / 4.0 * 0.5 + (M_PI / 2.0 + 1.0) * 0.1 ==
          doctest::Approx(0.6497787143782139).epsilon(1e-12));
    CHECK(std::pow(M_PI, 3) / 8.0 * 0.2 + (M_PI * M_PI / 4.0 + 1.0) * 0.1 ==
          doctest::Approx(1.1218970270347295).epsilon(1e-12));
    // The theorem-form certificate keeps ||K(1)|| = 1/4 and is weaker here.
    sys.mutable_spec().components[1].lambda = 0.2;
    sys.mutable_spec().components[1].eta = 0.1;
    const auto cert = certify_nonexistence(sys, constants);
    const auto& c2 = condition(cert, "contraction_inequality_2");
    CHECK(c2.lhs == doctest::Approx(0.54053).epsilon(1e-3));
    CHECK(c2.satisfied);
  }

  SUBCASE("unverifiable bounds yield a not-applicable verdict") {
    auto broken = load_problem_text(embedded_problem_text("example2"));
    broken.spec.constants.tau[0] = 0.05;  // too small for f1 on the box
    const auto weak_sys = SystemOperator(broken.spec, sys.grid(), broken.solver);
    const auto weak_constants = gather_constants(weak_sys, {});
    CHECK_FALSE(weak_constants.bounds_verified[0]);
    const auto cert = certify_nonexistence(weak_sys, weak_constants);
    CHECK(cert.verdict == "not-applicable");
  }

  SUBCASE("missing tau/xi raises MissingConstant") {
    auto e1 = example_system("example1", 1.0 / 16.0);
    const auto c1 = gather_constants(e1, {});
    try {
      certify_nonexistence(e1, c1);
      FAIL_CHECK("expected MissingConstant");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingConstant);
    }
  }
}

TEST_CASE("parameter sweeps") {
  auto sys = example_system("example1", 1.0 / 32.0);
  CertifyOptions options;
  const auto constants = gather_constants(sys, options);

  SUBCASE("existence sweep matches the closed-form half-plane") {
    std::vector<SweepAxis> axes{{"lambda1", {0.25, 0.5, 0.5, 2.0}},
                                {"eta1", {0.1, 0.3, 0.5, 0.1}}};
    // Row-major lattice: verify three hand-picked points.
    const auto sweep = sweep_region(sys, constants, "existence", axes, options);
    REQUIRE(sweep.rows.size() == 16);
    auto row_at = [&](double l, double e) -> const SweepRow& {
      for (const auto& row : sweep.rows)
        if (row.values[0] == l && row.values[1] == e) return row;
      FAIL("row not found");
      static SweepRow dummy;
      return dummy;
    };
    const double mu_over_delta = sys.op(0).spectral().mu / constants.delta;
    // (0.5, 0.3): inside the half-plane and above the spectral threshold.
    CHECK(0.5 >= mu_over_delta);
    CHECK(constants.M[0].value * 0.25 * 0.5 + constants.H[0].value * 0.3 < kRho);
    CHECK(row_at(0.5, 0.3).verdict == "advisory");
    // (0.5, 0.5): violates the box inequality of component 1.
    CHECK(constants.M[0].value * 0.25 * 0.5 + constants.H[0].value * 0.5 > kRho);
    CHECK(row_at(0.5, 0.5).verdict == "fail");
    CHECK(row_at(0.5, 0.5).binding == "d2.box_inequality_1");
    // (0.25, 0.1): fails the spectral lower bound.
    CHECK(0.25 < mu_over_delta);
    CHECK(row_at(0.25, 0.1).verdict == "fail");
    CHECK(row_at(0.25, 0.1).binding == "d1.spectral_lower_bound");
  }

  SUBCASE("monotonicity: decreasing lambda or eta never flips satisfied to violated") {
    std::vector<SweepAxis> axes{{"eta1", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}}};
    const auto sweep = sweep_region(sys, constants, "existence", axes, options);
    bool seen_fail = false;
    for (const auto& row : sweep.rows) {
      // d2 margins shrink monotonically along increasing eta.
      if (seen_fail) CHECK(row.verdict == "fail");
      if (row.verdict == "fail") seen_fail = true;
    }
  }

  SUBCASE("empty axes yield an empty table") {
    std::vector<SweepAxis> axes{{"lambda1", {}}};
    CHECK(sweep_region(sys, constants, "existence", axes, options).rows.empty());
  }

  SUBCASE("sweeps are deterministic and thread-count independent") {
    std::vector<SweepAxis> axes{{"lambda1", {0.1, 0.5, 0.9, 1.3}}, {"eta2", {0.0, 0.1}}};
    const auto a = sweep_region(sys, constants, "existence", axes, options, 0);
    const auto b = sweep_region(sys, constants, "existence", axes, options, 4);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t k = 0; k < a.rows.size(); ++k) {
      CHECK(a.rows[k].verdict == b.rows[k].verdict);
      CHECK(a.rows[k].binding == b.rows[k].binding);
      CHECK(a.rows[k].values == b.rows[k].values);
    }
  }
}

TEST_CASE("non-existence sweep is a half-plane in lambda") {
  auto sys = example_system("example2", 1.0 / 16.0);
  const auto constants = gather_constants(sys, {});
  std::vector<SweepAxis> axes{{"lambda1", {0.5, 2.0, 3.5, 4.0, 5.0}}};
  const auto sweep = sweep_region(sys, constants, "nonexistence", axes, {});
  // eta1 = 0.1 from the bundled file; the flip happens at
  // lambda1* = (1 - eta1 xi1) / (tau1 ||K1||) ~ 3.78.
  const double xi1 = M_PI / 2.0 + 1.0;
  const double flip = (1.0 - 0.1 * xi1 * constants.gamma_norm[0]) /
                      (M_PI / 4.0 * constants.k1_norm[0]);
  for (const auto& row : sweep.rows) {
    const bool expect_pass = row.values[0] < flip;
    CHECK(row.verdict == (expect_pass ? "pass" : "fail"));
  }
}

TEST_CASE("gap consistency: no parameter point certifies both ways") {
  // Same abstract system, both constant sets: user M, H, tau, xi for the
  // non-existence example's nonlinearities on a shared sweep lattice.
  auto problem = load_problem_text(embedded_problem_text("example2"));
  problem.spec.constants.M[0] = std::pow(M_PI / 4.0, 2);           // max u1^2 sin u2
  problem.spec.constants.M[1] = std::pow(M_PI / 2.0, 4);           // max u2^4 cos u1
  problem.spec.constants.H[0] = M_PI / 4.0 + std::pow(M_PI / 2.0, 2);
  problem.spec.constants.H[1] = M_PI / 4.0 + std::pow(M_PI / 2.0, 3);
  const auto sys = problem.build(1.0 / 16.0);
  const auto constants = gather_constants(sys, {});

  std::vector<SweepAxis> axes{{"lambda1", {0.0, 0.2, 0.4, 0.8, 1.6}},
                              {"eta1", {0.0, 0.05, 0.1, 0.2}}};
  const auto exist = sweep_region(sys, constants, "existence", axes, {});
  const auto nonexist = sweep_region(sys, constants, "nonexistence", axes, {});
  REQUIRE(exist.rows.size() == nonexist.rows.size());
  for (size_t k = 0; k < exist.rows.size(); ++k) {
    const bool both = exist.rows[k].verdict == "pass" && nonexist.rows[k].verdict == "pass";
    CHECK_FALSE(both);
  }
}
