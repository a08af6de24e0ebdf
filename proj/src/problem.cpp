#include "conecert/problem.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace conecert {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  raise(ErrorCode::SchemaError, path + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(path + "/" + key, "missing");
  return *it;
}

const json* optional_member(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) schema_fail(path, "expected a number");
  return j.get<double>();
}

int integer_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema_fail(path, "expected an integer");
  return j.get<int>();
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) schema_fail(path, "expected a string");
  return j.get<std::string>();
}

Point2 point_at(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) schema_fail(path, "expected [x, y]");
  return {number_at(j[0], path + "/0"), number_at(j[1], path + "/1")};
}

// A scalar given either as a number or as a constant expression string
// (e.g. "15*pi/64").
double scalar_at(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      const Expr e = parse(j.get<std::string>(), ExprSignature{false, 0, {}});
      return e.eval(ExprEnv{});
    } catch (const Error& err) {
      schema_fail(path, std::string("bad constant expression: ") + err.what());
    }
  }
  schema_fail(path, "expected a number or a constant expression string");
}

Expr expr_at(const json& j, const ExprSignature& sig, const std::string& path) {
  std::string text;
  if (j.is_string()) {
    text = j.get<std::string>();
  } else if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    text = os.str();
  } else {
    schema_fail(path, "expected an expression string");
  }
  try {
    return parse(text, sig);
  } catch (const Error& err) {
    schema_fail(path, err.what());
  }
}

DomainSpec domain_at(const json& j, const std::string& path) {
  const std::string type = string_at(member(j, "type", path), path + "/type");
  if (type == "disk") {
    return DomainSpec::disk(point_at(member(j, "center", path), path + "/center"),
                            scalar_at(member(j, "radius", path), path + "/radius"));
  }
  if (type == "rectangle") {
    return DomainSpec::rectangle(point_at(member(j, "lo", path), path + "/lo"),
                                 point_at(member(j, "hi", path), path + "/hi"));
  }
  schema_fail(path + "/type", "unknown domain type '" + type + "'");
}

EllipticSpec elliptic_at(const json& j, const std::string& path) {
  const auto sig = ExprSignature::coefficients();
  EllipticSpec spec;
  const json& diff = member(j, "diffusion", path);
  if (!diff.is_array() || diff.size() != 2) schema_fail(path + "/diffusion", "expected a 2x2 array");
  for (int r = 0; r < 2; ++r) {
    const json& row = diff[static_cast<size_t>(r)];
    const std::string rpath = path + "/diffusion/" + std::to_string(r);
    if (!row.is_array() || row.size() != 2) schema_fail(rpath, "expected two entries");
    for (int c = 0; c < 2; ++c)
      spec.diffusion[static_cast<size_t>(r)][static_cast<size_t>(c)] =
          expr_at(row[static_cast<size_t>(c)], sig, rpath + "/" + std::to_string(c));
  }
  const json& adv = member(j, "advection", path);
  if (!adv.is_array() || adv.size() != 2) schema_fail(path + "/advection", "expected two entries");
  for (int c = 0; c < 2; ++c)
    spec.advection[static_cast<size_t>(c)] =
        expr_at(adv[static_cast<size_t>(c)], sig, path + "/advection/" + std::to_string(c));
  spec.reaction = expr_at(member(j, "reaction", path), sig, path + "/reaction");
  return spec;
}

BoundarySpec boundary_at(const json& j, const std::string& path) {
  const std::string kind = string_at(member(j, "kind", path), path + "/kind");
  if (kind == "dirichlet") return BoundarySpec::dirichlet();
  if (kind == "neumann") return BoundarySpec::neumann();
  if (kind == "robin")
    return BoundarySpec::robin(
        expr_at(member(j, "b", path), ExprSignature::coefficients(), path + "/b"));
  schema_fail(path + "/kind", "unknown boundary kind '" + kind + "'");
}

FunctionalSpec functional_at(const json& j, int n, const std::string& path) {
  FunctionalSpec spec;
  const json& prims = member(j, "primitives", path);
  if (!prims.is_object()) schema_fail(path + "/primitives", "expected an object");
  for (auto it = prims.begin(); it != prims.end(); ++it) {
    const std::string ppath = path + "/primitives/" + it.key();
    FunctionalSpec::Primitive prim;
    prim.name = it.key();
    const json& pj = *it;
    if (optional_member(pj, "point")) {
      FunctionalSpec::PointEval pe;
      pe.point = point_at(member(pj, "point", ppath), ppath + "/point");
      pe.component = integer_at(member(pj, "component", ppath), ppath + "/component");
      if (pe.component < 1 || pe.component > n)
        schema_fail(ppath + "/component", "component out of range 1.." + std::to_string(n));
      prim.kind = pe;
    } else if (optional_member(pj, "integral")) {
      const json& ij = member(pj, "integral", ppath);
      FunctionalSpec::Integral in;
      in.component = integer_at(member(ij, "component", ppath + "/integral"),
                                ppath + "/integral/component");
      if (in.component < 1 || in.component > n)
        schema_fail(ppath + "/integral/component", "component out of range");
      in.weight = expr_at(member(ij, "weight", ppath + "/integral"),
                          ExprSignature::coefficients(), ppath + "/integral/weight");
      prim.kind = in;
    } else {
      schema_fail(ppath, "primitive must be a point evaluation or an integral");
    }
    spec.primitives.push_back(std::move(prim));
  }
  spec.combiner = expr_at(member(j, "combiner", path),
                          ExprSignature::combiner(spec.primitive_names()), path + "/combiner");
  return spec;
}

void constants_at(const json& j, int n, ConstantOverrides& out, const std::string& path) {
  out.resize(n);
  auto vec = [&](const char* key, std::vector<std::optional<double>>& slot) {
    const json* a = optional_member(j, key);
    if (!a) return;
    if (!a->is_array() || static_cast<int>(a->size()) != n)
      schema_fail(path + "/" + key, "expected an array of length n");
    for (int i = 0; i < n; ++i) {
      const json& e = (*a)[static_cast<size_t>(i)];
      if (e.is_null()) continue;
      slot[static_cast<size_t>(i)] = scalar_at(e, path + "/" + key + "/" + std::to_string(i));
    }
  };
  vec("M", out.M);
  vec("H", out.H);
  vec("tau", out.tau);
  vec("xi", out.xi);
  if (const json* d = optional_member(j, "delta")) out.delta = scalar_at(*d, path + "/delta");
  if (const json* r = optional_member(j, "rho0")) out.rho0 = scalar_at(*r, path + "/rho0");
  if (const json* i = optional_member(j, "i0")) out.i0 = integer_at(*i, path + "/i0");
}

}  // namespace

LoadedProblem load_problem_json(const json& doc) {
  LoadedProblem out;
  if (!doc.is_object()) schema_fail("", "problem file must be a JSON object");

  if (const json* name = optional_member(doc, "name"))
    out.spec.name = string_at(*name, "/name");
  out.spec.domain = domain_at(member(doc, "domain", ""), "/domain");
  out.spec.n = integer_at(member(doc, "n", ""), "/n");
  if (out.spec.n < 1) schema_fail("/n", "n must be at least 1");

  if (const json* g = optional_member(doc, "grid")) {
    if (const json* h = optional_member(*g, "h")) out.grid.h = scalar_at(*h, "/grid/h");
    if (const json* cf = optional_member(*g, "cut_floor"))
      out.grid.cut_floor = number_at(*cf, "/grid/cut_floor");
  }
  if (!(out.grid.h > 0.0)) schema_fail("/grid/h", "grid spacing must be positive");

  if (const json* s = optional_member(doc, "solver")) {
    if (const json* tol = optional_member(*s, "tolerance"))
      out.solver.tolerance = number_at(*tol, "/solver/tolerance");
    if (const json* mi = optional_member(*s, "max_iterations"))
      out.solver.max_iterations = integer_at(*mi, "/solver/max_iterations");
    if (const json* m = optional_member(*s, "method")) {
      const std::string name = string_at(*m, "/solver/method");
      if (name == "auto") out.solver.method = SolverConfig::Method::Auto;
      else if (name == "direct") out.solver.method = SolverConfig::Method::Direct;
      else if (name == "iterative") out.solver.method = SolverConfig::Method::Iterative;
      else schema_fail("/solver/method", "expected auto|direct|iterative");
    }
  }

  const json& comps = member(doc, "components", "");
  if (!comps.is_array()) schema_fail("/components", "expected an array");
  if (static_cast<int>(comps.size()) != out.spec.n)
    raise(ErrorCode::ValidationError,
          "/components: found " + std::to_string(comps.size()) + " components but n = " +
              std::to_string(out.spec.n));

  const auto f_sig = ExprSignature::nonlinearity(out.spec.n);
  for (int i = 0; i < out.spec.n; ++i) {
    const std::string cpath = "/components/" + std::to_string(i);
    const json& cj = comps[static_cast<size_t>(i)];
    ComponentSpec comp;
    comp.L = elliptic_at(member(cj, "L", cpath), cpath + "/L");
    comp.B = boundary_at(member(cj, "B", cpath), cpath + "/B");
    comp.f = expr_at(member(cj, "f", cpath), f_sig, cpath + "/f");
    comp.h = functional_at(member(cj, "h", cpath), out.spec.n, cpath + "/h");
    comp.rho = scalar_at(member(cj, "rho", cpath), cpath + "/rho");
    if (!(comp.rho > 0.0)) raise(ErrorCode::ValidationError, cpath + "/rho must be positive");
    if (const json* l = optional_member(cj, "lambda"))
      comp.lambda = scalar_at(*l, cpath + "/lambda");
    if (const json* e = optional_member(cj, "eta")) comp.eta = scalar_at(*e, cpath + "/eta");
    if (comp.lambda < 0.0 || comp.eta < 0.0)
      raise(ErrorCode::ValidationError, cpath + ": lambda and eta must be nonnegative");

    // Functional points must lie strictly inside the domain.
    for (const auto& prim : comp.h.primitives) {
      if (const auto* pe = std::get_if<FunctionalSpec::PointEval>(&prim.kind)) {
        if (!out.spec.domain.contains(pe->point))
          raise(ErrorCode::ValidationError,
                cpath + "/h/primitives/" + prim.name + ": point lies outside the domain");
      }
    }
    out.spec.components.push_back(std::move(comp));
  }

  out.spec.constants.resize(out.spec.n);
  if (const json* c = optional_member(doc, "constants"))
    constants_at(*c, out.spec.n, out.spec.constants, "/constants");
  if (out.spec.constants.i0 && (*out.spec.constants.i0 < 1 || *out.spec.constants.i0 > out.spec.n))
    raise(ErrorCode::ValidationError, "/constants/i0 out of range");

  return out;
}

LoadedProblem load_problem_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    raise(ErrorCode::SchemaError, std::string("invalid JSON: ") + err.what());
  }
  return load_problem_json(doc);
}

LoadedProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::SchemaError, "cannot open problem file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_problem_text(buf.str());
}

SystemOperator LoadedProblem::build(std::optional<double> h_override) const {
  auto g = build_grid(spec.domain, h_override.value_or(grid.h), grid.cut_floor);
  return SystemOperator(spec, g, solver);
}

nlohmann::json save_problem(const LoadedProblem& problem) {
  json doc;
  const auto& spec = problem.spec;
  if (!spec.name.empty()) doc["name"] = spec.name;
  if (spec.domain.kind == DomainSpec::Kind::Disk) {
    doc["domain"] = {{"type", "disk"},
                     {"center", {spec.domain.center.x, spec.domain.center.y}},
                     {"radius", spec.domain.radius}};
  } else {
    doc["domain"] = {{"type", "rectangle"},
                     {"lo", {spec.domain.lo.x, spec.domain.lo.y}},
                     {"hi", {spec.domain.hi.x, spec.domain.hi.y}}};
  }
  doc["n"] = spec.n;
  doc["grid"] = {{"h", problem.grid.h}, {"cut_floor", problem.grid.cut_floor}};
  const char* method = problem.solver.method == SolverConfig::Method::Direct   ? "direct"
                       : problem.solver.method == SolverConfig::Method::Iterative ? "iterative"
                                                                                  : "auto";
  doc["solver"] = {{"tolerance", problem.solver.tolerance},
                   {"max_iterations", problem.solver.max_iterations},
                   {"method", method}};

  doc["components"] = json::array();
  for (const auto& comp : spec.components) {
    json cj;
    json diffusion = json::array();
    diffusion.push_back(
        json::array({comp.L.diffusion[0][0].print(), comp.L.diffusion[0][1].print()}));
    diffusion.push_back(
        json::array({comp.L.diffusion[1][0].print(), comp.L.diffusion[1][1].print()}));
    cj["L"] = {{"diffusion", diffusion},
               {"advection", json::array({comp.L.advection[0].print(),
                                          comp.L.advection[1].print()})},
               {"reaction", comp.L.reaction.print()}};
    switch (comp.B.kind) {
      case BoundarySpec::Kind::Dirichlet: cj["B"] = {{"kind", "dirichlet"}}; break;
      case BoundarySpec::Kind::Neumann: cj["B"] = {{"kind", "neumann"}}; break;
      case BoundarySpec::Kind::Robin:
        cj["B"] = {{"kind", "robin"}, {"b", comp.B.robin_b->print()}};
        break;
    }
    cj["f"] = comp.f.print();
    json prims = json::object();
    for (const auto& prim : comp.h.primitives) {
      if (const auto* pe = std::get_if<FunctionalSpec::PointEval>(&prim.kind)) {
        prims[prim.name] = {{"point", {pe->point.x, pe->point.y}},
                            {"component", pe->component}};
      } else {
        const auto& in = std::get<FunctionalSpec::Integral>(prim.kind);
        prims[prim.name] = {
            {"integral", {{"component", in.component}, {"weight", in.weight.print()}}}};
      }
    }
    cj["h"] = {{"primitives", prims}, {"combiner", comp.h.combiner.print()}};
    cj["rho"] = comp.rho;
    cj["lambda"] = comp.lambda;
    cj["eta"] = comp.eta;
    doc["components"].push_back(cj);
  }

  json constants = json::object();
  auto vec = [&](const char* key, const std::vector<std::optional<double>>& slot) {
    bool any = false;
    json a = json::array();
    for (const auto& v : slot) {
      if (v) {
        a.push_back(*v);
        any = true;
      } else {
        a.push_back(nullptr);
      }
    }
    if (any) constants[key] = a;
  };
  vec("M", spec.constants.M);
  vec("H", spec.constants.H);
  vec("tau", spec.constants.tau);
  vec("xi", spec.constants.xi);
  if (spec.constants.delta) constants["delta"] = *spec.constants.delta;
  if (spec.constants.rho0) constants["rho0"] = *spec.constants.rho0;
  if (spec.constants.i0) constants["i0"] = *spec.constants.i0;
  if (!constants.empty()) doc["constants"] = constants;
  return doc;
}

const std::string& embedded_problem_text(const std::string& name) {
  static const std::map<std::string, std::string> kProblems{
      {"example1", R"json({
  "name": "example1",
  "domain": {"type": "disk", "center": [0.0, 0.0], "radius": 1.0},
  "n": 2,
  "grid": {"h": 0.015625},
  "solver": {"tolerance": 1e-10},
  "components": [
    {
      "L": {"diffusion": [["1", "0"], ["0", "1"]], "advection": ["0", "0"], "reaction": "0"},
      "B": {"kind": "dirichlet"},
      "f": "sqrt(max(u1,u2)) + tan(max(u1,u2))",
      "h": {
        "primitives": {
          "p1": {"point": [0.0, 0.0], "component": 1},
          "p2": {"point": [0.0, 0.0], "component": 2}
        },
        "combiner": "p1^2 + sqrt(p2)"
      },
      "rho": "15*pi/64",
      "lambda": 0.5,
      "eta": 0.2
    },
    {
      "L": {"diffusion": [["1", "0"], ["0", "1"]], "advection": ["0", "0"], "reaction": "0"},
      "B": {"kind": "dirichlet"},
      "f": "(1 - sin(u2)) * max(u1,u2)^2",
      "h": {
        "primitives": {
          "p1": {"point": [0.0, 0.0], "component": 1},
          "q2": {"integral": {"component": 2, "weight": "1"}}
        },
        "combiner": "p1^(1/4) + q2^2"
      },
      "rho": "15*pi/64",
      "lambda": 0.5,
      "eta": 0.05
    }
  ],
  "constants": {
    "M": ["sqrt(15*pi/64) + tan(15*pi/64)", "(15*pi/64)^2"],
    "H": ["(15*pi/64)^2 + sqrt(15*pi/64)", "(15*pi/64)^(1/4) + (15*pi/64*pi)^2"]
  }
}
)json"},
      {"example2", R"json({
  "name": "example2",
  "domain": {"type": "disk", "center": [0.0, 0.0], "radius": 1.0},
  "n": 2,
  "grid": {"h": 0.03125},
  "solver": {"tolerance": 1e-10},
  "components": [
    {
      "L": {"diffusion": [["1", "0"], ["0", "1"]], "advection": ["0", "0"], "reaction": "0"},
      "B": {"kind": "dirichlet"},
      "f": "u1^2 * sin(u2)",
      "h": {
        "primitives": {
          "p1": {"point": [0.0, 0.0], "component": 1},
          "p2": {"point": [0.0, 0.0], "component": 2}
        },
        "combiner": "p1 + p2^2"
      },
      "rho": "pi/4",
      "lambda": 0.5,
      "eta": 0.1
    },
    {
      "L": {"diffusion": [["1", "0"], ["0", "1"]], "advection": ["0", "0"], "reaction": "0"},
      "B": {"kind": "dirichlet"},
      "f": "u2^4 * cos(u1)",
      "h": {
        "primitives": {
          "p1": {"point": [0.0, 0.0], "component": 1},
          "p2": {"point": [0.0, 0.0], "component": 2}
        },
        "combiner": "p1 + p2^3"
      },
      "rho": "pi/2",
      "lambda": 0.2,
      "eta": 0.05
    }
  ],
  "constants": {
    "tau": ["pi/4", "pi^3/8"],
    "xi": ["pi/2 + 1", "pi^2/4 + 1"]
  }
}
)json"},
  };
  auto it = kProblems.find(name);
  if (it == kProblems.end())
    raise(ErrorCode::ValidationError, "unknown bundled problem '" + name + "'");
  return it->second;
}

}  // namespace conecert
