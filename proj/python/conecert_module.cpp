#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "conecert/certificates.hpp"
#include "conecert/problem.hpp"
#include "conecert/repro.hpp"

namespace py = pybind11;
using namespace conecert;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::array_t<double> vector_to_array(const Eigen::VectorXd& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

Eigen::VectorXd array_to_vector(const py::array_t<double>& a, int expected) {
  const auto buf = a.request();
  if (buf.ndim != 1 || buf.shape[0] != expected)
    throw py::value_error("expected a 1-d array of length " + std::to_string(expected));
  Eigen::VectorXd v(expected);
  const auto r = a.unchecked<1>();
  for (int k = 0; k < expected; ++k) v[k] = r(k);
  return v;
}

/// SystemOperator plus the options it was built from, exposed to Python.
struct Engine {
  std::shared_ptr<SystemOperator> sys;

  int n() const { return sys->n(); }
  double grid_h() const { return sys->grid()->spacing(); }
  int node_count() const { return sys->grid()->node_count(); }

  py::array_t<double> nodes() const {
    const auto& grid = *sys->grid();
    py::array_t<double> out({grid.node_count(), 2});
    auto w = out.mutable_unchecked<2>();
    for (int k = 0; k < grid.node_count(); ++k) {
      w(k, 0) = grid.node(k).x;
      w(k, 1) = grid.node(k).y;
    }
    return out;
  }

  py::array_t<double> k1(int i) const { return vector_to_array(sys->op(i - 1).K1().values); }
  py::array_t<double> gamma(int i) const {
    return vector_to_array(sys->op(i - 1).gamma().values);
  }
  py::array_t<double> phi(int i) const {
    return vector_to_array(sys->op(i - 1).spectral().phi.values);
  }

  py::array_t<double> apply_K(int i, const py::array_t<double>& g) const {
    const GridFunction gf(sys->grid(), array_to_vector(g, node_count()));
    return vector_to_array(sys->op(i - 1).apply(gf).values);
  }

  void set_parameters(const std::vector<double>& lambda, const std::vector<double>& eta) {
    if (static_cast<int>(lambda.size()) != n() || static_cast<int>(eta.size()) != n())
      throw py::value_error("lambda and eta must have length n");
    for (int i = 0; i < n(); ++i) {
      sys->mutable_spec().components[static_cast<size_t>(i)].lambda =
          lambda[static_cast<size_t>(i)];
      sys->mutable_spec().components[static_cast<size_t>(i)].eta = eta[static_cast<size_t>(i)];
    }
  }

  py::object operator_info() const {
    nlohmann::json report;
    report["grid"] = {{"h", grid_h()}, {"nodes", node_count()}};
    report["components"] = nlohmann::json::array();
    for (int i = 0; i < n(); ++i) {
      nlohmann::json cj;
      cj["K1_norm"] = sys->op(i).norm_K1();
      cj["gamma_norm"] = sys->op(i).norm_gamma();
      try {
        const auto& s = sys->op(i).spectral(1e-10, 2000);
        cj["r"] = s.r;
        cj["mu"] = s.mu;
        cj["eigen_residual"] = s.residual;
      } catch (const Error&) {
        cj["r"] = nullptr;
        cj["mu"] = nullptr;
      }
      report["components"].push_back(cj);
    }
    return json_to_py(report);
  }

  py::object certify(const std::string& kind, std::optional<int> i0,
                     std::optional<double> rho0, bool repro_rounding) const {
    CertifyOptions options;
    options.i0 = i0;
    options.rho0 = rho0;
    options.repro_rounding = repro_rounding;
    const auto constants = gather_constants(*sys, options);
    const Certificate cert = kind == "existence"
                                 ? certify_existence(*sys, constants, options)
                                 : certify_nonexistence(*sys, constants, options);
    return json_to_py(cert.to_json());
  }

  py::object solve(double theta, double tol, int max_iter, int starts, uint64_t seed) const {
    PicardOptions options{theta, tol, max_iter};
    const auto result = multi_start_solve(*sys, options, starts, seed);
    const size_t best = result.distinct_converged.empty() ? 0 : result.distinct_converged[0];
    const auto& run = result.runs[best];

    py::dict out;
    out["status"] = picard_status_name(run.status);
    out["residual"] = run.residual;
    out["norm"] = SystemOperator::product_norm(run.u);
    out["iterations"] = run.trace.size();
    out["clamp_events"] = run.clamp_events;
    out["distinct_fixed_points"] = result.distinct_converged.size();
    py::list fields;
    for (const auto& ui : run.u) fields.append(vector_to_array(ui.values));
    out["u"] = fields;
    return out;
  }

  py::object region(const std::string& kind,
                    const std::vector<std::pair<std::string, std::vector<double>>>& axes_in,
                    int threads) const {
    std::vector<SweepAxis> axes;
    for (const auto& [name, values] : axes_in) axes.push_back({name, values});
    CertifyOptions options;
    const auto constants = gather_constants(*sys, options);
    const auto sweep = sweep_region(*sys, constants, kind, axes, options, threads);
    py::list rows;
    for (const auto& row : sweep.rows) {
      py::dict r;
      for (size_t a = 0; a < sweep.axes.size(); ++a)
        r[py::str(sweep.axes[a].name)] = row.values[a];
      r["verdict"] = row.verdict;
      r["binding"] = row.binding;
      rows.append(r);
    }
    return rows;
  }
};

struct Problem {
  LoadedProblem loaded;

  Engine build(std::optional<double> h) const {
    return Engine{std::make_shared<SystemOperator>(loaded.build(h))};
  }
  int n() const { return loaded.spec.n; }
  double default_h() const { return loaded.grid.h; }
  std::string name() const { return loaded.spec.name; }
  py::object to_json() const { return json_to_py(save_problem(loaded)); }
};

double eval_expr(const std::string& text, const std::vector<double>& u, double x1, double x2) {
  const Expr e = parse(text, ExprSignature::nonlinearity(static_cast<int>(u.size())));
  ExprEnv env;
  env.x1 = x1;
  env.x2 = x2;
  env.u = u;
  return e.eval(env);
}

}  // namespace

PYBIND11_MODULE(_conecert, m) {
  m.doc() = "Elliptic systems with functional boundary conditions: discrete solution "
            "operators, fixed-point solver and existence/non-existence certificates";

  py::register_exception<Error>(m, "ConecertError");

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("n", &Problem::n)
      .def_property_readonly("default_h", &Problem::default_h)
      .def_property_readonly("name", &Problem::name)
      .def("build", &Problem::build, py::arg("h") = std::nullopt,
           "Build the grid and assemble all component operators")
      .def("to_json", &Problem::to_json);

  py::class_<Engine>(m, "Engine")
      .def_property_readonly("n", &Engine::n)
      .def_property_readonly("grid_h", &Engine::grid_h)
      .def_property_readonly("node_count", &Engine::node_count)
      .def("nodes", &Engine::nodes, "Interior node coordinates, shape (N, 2)")
      .def("k1", &Engine::k1, py::arg("component"), "K(1) field of one component")
      .def("gamma", &Engine::gamma, py::arg("component"))
      .def("phi", &Engine::phi, py::arg("component"),
           "Principal eigenfunction (requires the sign-certified operator)")
      .def("apply_K", &Engine::apply_K, py::arg("component"), py::arg("g"))
      .def("set_parameters", &Engine::set_parameters, py::arg("lam"), py::arg("eta"))
      .def("operator_info", &Engine::operator_info)
      .def("certify", &Engine::certify, py::arg("kind"), py::arg("i0") = std::nullopt,
           py::arg("rho0") = std::nullopt, py::arg("repro_rounding") = false)
      .def("solve", &Engine::solve, py::arg("theta") = 0.5, py::arg("tol") = 1e-8,
           py::arg("max_iter") = 2000, py::arg("starts") = 3, py::arg("seed") = 1)
      .def("region", &Engine::region, py::arg("kind"), py::arg("axes"),
           py::arg("threads") = 0);

  m.def("load_problem", [](const std::string& path) { return Problem{load_problem(path)}; },
        py::arg("path"), "Load and validate a problem file");
  m.def("load_problem_text",
        [](const std::string& text) { return Problem{load_problem_text(text)}; },
        py::arg("text"));
  m.def("load_example",
        [](const std::string& name) { return Problem{load_problem_text(embedded_problem_text(name))}; },
        py::arg("name"), "Load one of the bundled worked examples");
  m.def("repro",
        [](const std::string& name, std::optional<double> h) {
          return json_to_py(repro(name, h).to_json());
        },
        py::arg("name"), py::arg("h") = std::nullopt,
        "Recompute a bundled example's constants table");
  m.def("eval_expr", &eval_expr, py::arg("text"), py::arg("u"), py::arg("x1") = 0.0,
        py::arg("x2") = 0.0, "Evaluate an expression of x1, x2, u1..un");

  m.attr("__version__") = "0.1.0";
}
