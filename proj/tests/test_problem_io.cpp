#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "conecert/problem.hpp"

using namespace conecert;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string problems_dir() { return CONECERT_PROBLEMS_DIR; }

}  // namespace

TEST_CASE("bundled example1 loads into the expected system") {
  const auto problem = load_problem(problems_dir() + "/example1.json");
  const auto& spec = problem.spec;
  CHECK(spec.name == "example1");
  CHECK(spec.n == 2);
  CHECK(spec.domain.kind == DomainSpec::Kind::Disk);
  CHECK(spec.domain.radius == 1.0);
  CHECK(problem.grid.h == doctest::Approx(1.0 / 64.0));

  const double rho = 15.0 * M_PI / 64.0;
  CHECK(spec.components[0].rho == doctest::Approx(rho).epsilon(1e-15));
  CHECK(spec.components[1].rho == doctest::Approx(rho).epsilon(1e-15));
  CHECK(spec.components[0].lambda == 0.5);
  CHECK(spec.components[0].eta == 0.2);
  CHECK(spec.components[1].eta == 0.05);
  CHECK(spec.components[0].B.kind == BoundarySpec::Kind::Dirichlet);

  const auto sig = ExprSignature::nonlinearity(2);
  CHECK(spec.components[0].f == parse("sqrt(max(u1,u2)) + tan(max(u1,u2))", sig));
  CHECK(spec.components[1].f == parse("(1 - sin(u2)) * max(u1,u2)^2", sig));

  REQUIRE(spec.constants.M[0]);
  CHECK(*spec.constants.M[0] == doctest::Approx(std::sqrt(rho) + std::tan(rho)).epsilon(1e-15));
  REQUIRE(spec.constants.H[1]);
  CHECK(*spec.constants.H[1] ==
        doctest::Approx(std::pow(rho, 0.25) + std::pow(rho * M_PI, 2)).epsilon(1e-15));
  CHECK_FALSE(spec.constants.tau[0]);
}

TEST_CASE("bundled example2 loads with tau and xi") {
  const auto problem = load_problem(problems_dir() + "/example2.json");
  const auto& spec = problem.spec;
  CHECK(spec.n == 2);
  CHECK(spec.components[0].rho == doctest::Approx(M_PI / 4.0).epsilon(1e-15));
  CHECK(spec.components[1].rho == doctest::Approx(M_PI / 2.0).epsilon(1e-15));
  REQUIRE(spec.constants.tau[0]);
  CHECK(*spec.constants.tau[0] == doctest::Approx(M_PI / 4.0).epsilon(1e-15));
  REQUIRE(spec.constants.xi[1]);
  CHECK(*spec.constants.xi[1] == doctest::Approx(M_PI * M_PI / 4.0 + 1.0).epsilon(1e-15));
}

TEST_CASE("bundled files match the embedded copies exactly") {
  CHECK(slurp(problems_dir() + "/example1.json") == embedded_problem_text("example1"));
  CHECK(slurp(problems_dir() + "/example2.json") == embedded_problem_text("example2"));
  CHECK_THROWS_AS(embedded_problem_text("example3"), Error);
}

TEST_CASE("component count must match n") {
  const char* text = R"({
    "domain": {"type": "disk", "center": [0, 0], "radius": 1},
    "n": 2,
    "components": [
      {"L": {"diffusion": [["1","0"],["0","1"]], "advection": ["0","0"], "reaction": "0"},
       "B": {"kind": "dirichlet"},
       "f": "u1",
       "h": {"primitives": {"p": {"point": [0,0], "component": 1}}, "combiner": "p"},
       "rho": 1}
    ]
  })";
  try {
    load_problem_text(text);
    FAIL_CHECK("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ValidationError);
    CHECK(std::string(e.what()).find("/components") != std::string::npos);
  }
}

TEST_CASE("schema errors point at the offending key") {
  SUBCASE("missing domain") {
    try {
      load_problem_text(R"({"n": 1, "components": []})");
      FAIL_CHECK("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
      CHECK(std::string(e.what()).find("/domain") != std::string::npos);
    }
  }
  SUBCASE("unknown identifier in a nonlinearity") {
    const char* text = R"({
      "domain": {"type": "disk", "center": [0, 0], "radius": 1},
      "n": 1,
      "components": [
        {"L": {"diffusion": [["1","0"],["0","1"]], "advection": ["0","0"], "reaction": "0"},
         "B": {"kind": "dirichlet"},
         "f": "u3",
         "h": {"primitives": {"p": {"point": [0,0], "component": 1}}, "combiner": "p"},
         "rho": 1}
      ]
    })";
    try {
      load_problem_text(text);
      FAIL_CHECK("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
      CHECK(std::string(e.what()).find("/components/0/f") != std::string::npos);
    }
  }
  SUBCASE("invalid JSON") {
    CHECK_THROWS_AS(load_problem_text("{"), Error);
  }
  SUBCASE("functional point outside the domain") {
    const char* text = R"({
      "domain": {"type": "disk", "center": [0, 0], "radius": 1},
      "n": 1,
      "components": [
        {"L": {"diffusion": [["1","0"],["0","1"]], "advection": ["0","0"], "reaction": "0"},
         "B": {"kind": "dirichlet"},
         "f": "u1",
         "h": {"primitives": {"p": {"point": [3, 0], "component": 1}}, "combiner": "p"},
         "rho": 1}
      ]
    })";
    CHECK_THROWS_AS(load_problem_text(text), Error);
  }
}

TEST_CASE("save/load round trip preserves the system") {
  const auto original = load_problem(problems_dir() + "/example1.json");
  const auto doc = save_problem(original);
  const auto reloaded = load_problem_json(doc);

  CHECK(reloaded.spec.n == original.spec.n);
  CHECK(reloaded.spec.domain == original.spec.domain);
  CHECK(reloaded.grid.h == original.grid.h);
  CHECK(reloaded.solver.tolerance == original.solver.tolerance);
  for (int i = 0; i < original.spec.n; ++i) {
    const auto& a = original.spec.components[static_cast<size_t>(i)];
    const auto& b = reloaded.spec.components[static_cast<size_t>(i)];
    CHECK(a.f == b.f);
    CHECK(a.h.combiner == b.h.combiner);
    CHECK(a.L.diffusion[0][0] == b.L.diffusion[0][0]);
    CHECK(a.L.reaction == b.L.reaction);
    CHECK(a.rho == b.rho);
    CHECK(a.lambda == b.lambda);
    CHECK(a.eta == b.eta);
    REQUIRE(a.h.primitives.size() == b.h.primitives.size());
    for (size_t p = 0; p < a.h.primitives.size(); ++p)
      CHECK(a.h.primitives[p].name == b.h.primitives[p].name);
  }
  REQUIRE(reloaded.spec.constants.M[0]);
  CHECK(*reloaded.spec.constants.M[0] == *original.spec.constants.M[0]);
}

TEST_CASE("robin boundary specs round trip") {
  const char* text = R"({
    "domain": {"type": "rectangle", "lo": [0, 0], "hi": [2, 1]},
    "n": 1,
    "grid": {"h": 0.125},
    "components": [
      {"L": {"diffusion": [["1","0"],["0","1"]], "advection": ["0.5","0"], "reaction": "x1"},
       "B": {"kind": "robin", "b": "1 + x2"},
       "f": "u1",
       "h": {"primitives": {"p": {"point": [1.0, 0.5], "component": 1}}, "combiner": "p"},
       "rho": 2.0, "lambda": 0.1, "eta": 0.0}
    ]
  })";
  const auto problem = load_problem_text(text);
  CHECK(problem.spec.components[0].B.kind == BoundarySpec::Kind::Robin);
  const auto doc = save_problem(problem);
  const auto reloaded = load_problem_text(doc.dump());
  CHECK(reloaded.spec.components[0].B.kind == BoundarySpec::Kind::Robin);
  CHECK(*reloaded.spec.components[0].B.robin_b == *problem.spec.components[0].B.robin_b);
  // The loaded system builds and validates end to end.
  CHECK_NOTHROW(problem.build());
}
