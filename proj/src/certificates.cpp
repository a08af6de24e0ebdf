#include "conecert/certificates.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace conecert {

namespace {

nlohmann::json constant_json(const Constant& c) {
  if (!c.present) return nullptr;
  return {{"value", c.value}, {"provenance", provenance_name(c.provenance)}};
}

double maybe_round(double v, bool repro) { return repro ? round_up_3(v) : v; }

}  // namespace

nlohmann::json ConstantsReport::to_json() const {
  nlohmann::json j;
  auto arr = [](const std::vector<Constant>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : v) a.push_back(constant_json(c));
    return a;
  };
  j["M"] = arr(M);
  j["H"] = arr(H);
  j["tau"] = arr(tau);
  j["xi"] = arr(xi);
  j["bounds_verified"] = bounds_verified;
  j["bounds_slack"] = bounds_slack;
  j["delta"] = {{"value", delta}, {"provenance", provenance_name(delta_provenance)}};
  j["rho0"] = rho0;
  j["i0"] = i0;
  j["k1_norm"] = k1_norm;
  j["gamma_norm"] = gamma_norm;
  j["grid_h"] = grid_h;
  return j;
}

ConstantsReport gather_constants(const SystemOperator& sys, const CertifyOptions& options) {
  const auto& spec = sys.spec();
  const auto box = spec.box();
  ConstantsReport rep;
  rep.grid_h = sys.grid()->spacing();
  rep.i0 = options.i0.value_or(spec.constants.i0.value_or(1));
  if (rep.i0 < 1 || rep.i0 > spec.n)
    raise(ErrorCode::ValidationError, "i0 out of range");
  rep.rho0 = options.rho0.value_or(spec.constants.rho0.value_or(0.01 * spec.min_rho()));

  for (int i = 0; i < spec.n; ++i) {
    const auto& comp = spec.components[static_cast<size_t>(i)];
    const auto& ov = spec.constants;

    Constant M;
    M.present = true;
    if (i < static_cast<int>(ov.M.size()) && ov.M[static_cast<size_t>(i)]) {
      M.value = *ov.M[static_cast<size_t>(i)];
      M.provenance = Provenance::User;
      // Condition (a) still needs the sampled sign check.
      estimate_M(comp.f, box, *sys.grid(), options.samples_per_axis);
    } else {
      M.value = estimate_M(comp.f, box, *sys.grid(), options.samples_per_axis).value;
      M.provenance = Provenance::Sampled;
    }
    rep.M.push_back(M);

    Constant H;
    H.present = true;
    if (i < static_cast<int>(ov.H.size()) && ov.H[static_cast<size_t>(i)]) {
      H.value = *ov.H[static_cast<size_t>(i)];
      H.provenance = Provenance::User;
    } else {
      H.value = estimate_H(comp.h, box, sys.grid(), options.samples_per_axis).value;
      H.provenance = Provenance::Sampled;
    }
    rep.H.push_back(H);

    Constant tau, xi;
    if (i < static_cast<int>(ov.tau.size()) && ov.tau[static_cast<size_t>(i)]) {
      tau.present = true;
      tau.value = *ov.tau[static_cast<size_t>(i)];
      tau.provenance = Provenance::User;
    }
    if (i < static_cast<int>(ov.xi.size()) && ov.xi[static_cast<size_t>(i)]) {
      xi.present = true;
      xi.value = *ov.xi[static_cast<size_t>(i)];
      xi.provenance = Provenance::User;
    }
    rep.tau.push_back(tau);
    rep.xi.push_back(xi);

    if (tau.present && xi.present) {
      const auto check = verify_linear_bounds(comp.f, i + 1, tau.value, comp.h, xi.value, box,
                                              sys.grid(), options.bound_samples_per_axis);
      rep.bounds_verified.push_back(check.verified);
      rep.bounds_slack.push_back(check.min_slack);
    } else {
      rep.bounds_verified.push_back(false);
      rep.bounds_slack.push_back(std::numeric_limits<double>::quiet_NaN());
    }

    rep.k1_norm.push_back(sys.op(i).norm_K1());
    rep.gamma_norm.push_back(sys.op(i).norm_gamma());
  }

  if (spec.constants.delta) {
    rep.delta = *spec.constants.delta;
    rep.delta_provenance = Provenance::User;
  } else {
    rep.delta = find_delta(spec.components[static_cast<size_t>(rep.i0 - 1)].f, rep.i0,
                           rep.rho0, spec.n, *sys.grid(), options.samples_per_axis);
    rep.delta_provenance = Provenance::Sampled;
  }
  return rep;
}

bool Certificate::all_conditions_satisfied() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const Condition& c) { return c.satisfied; });
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["verdict"] = verdict;
  j["system"] = system;
  j["lambda"] = lambda;
  j["eta"] = eta;
  j["constants"] = constants.to_json();
  j["conditions"] = nlohmann::json::array();
  for (const auto& c : conditions) {
    nlohmann::json cj{{"name", c.name}, {"satisfied", c.satisfied}};
    if (c.numeric) {
      cj["lhs"] = c.lhs;
      cj["rhs"] = c.rhs;
      cj["margin"] = c.margin;
    }
    if (!c.note.empty()) cj["note"] = c.note;
    j["conditions"].push_back(cj);
  }
  j["caveats"] = caveats;
  if (kind == "existence") {
    j["mu_i0"] = mu_i0;
    j["spectral"] = {{"grid_h", constants.grid_h},
                     {"r_h", r_h},
                     {"r_2h", r_2h},
                     {"r_extrapolated", r_extrapolated}};
    if (!localization.empty()) j["localization"] = localization;
  } else {
    j["contraction_factor"] = contraction_factor;
  }
  return j;
}

namespace {

void attach_common(Certificate& cert, const SystemOperator& sys,
                   const ConstantsReport& constants) {
  cert.system = sys.spec().name;
  cert.constants = constants;
  for (const auto& comp : sys.spec().components) {
    cert.lambda.push_back(comp.lambda);
    cert.eta.push_back(comp.eta);
  }
  if (sys.outside_paper_geometry())
    cert.caveats.push_back("geometry outside paper hypotheses (rectangle corners)");
}

std::string verdict_for(const Certificate& cert, bool any_sampled) {
  if (!cert.all_conditions_satisfied()) return "fail";
  return any_sampled ? "advisory" : "pass";
}

}  // namespace

Certificate certify_existence(const SystemOperator& sys, const ConstantsReport& constants,
                              const CertifyOptions& options) {
  const auto& spec = sys.spec();
  Certificate cert;
  cert.kind = "existence";
  attach_common(cert, sys, constants);

  const int n = spec.n;
  if (static_cast<int>(constants.M.size()) != n || static_cast<int>(constants.H.size()) != n)
    raise(ErrorCode::MissingConstant, "constants report does not cover every component");
  for (int i = 0; i < n; ++i) {
    if (!constants.M[static_cast<size_t>(i)].present)
      raise(ErrorCode::MissingConstant, "M" + std::to_string(i + 1) + " missing");
    if (!constants.H[static_cast<size_t>(i)].present)
      raise(ErrorCode::MissingConstant, "H" + std::to_string(i + 1) + " missing");
  }

  const bool repro = options.repro_rounding;
  bool any_sampled = constants.delta_provenance == Provenance::Sampled;

  // (a) f_i >= 0 on the sampled box: gather_constants raises on violation, so
  // reaching this point means the sampled check passed.
  for (int i = 0; i < n; ++i) {
    Condition c;
    c.name = "a.nonneg_f" + std::to_string(i + 1);
    c.satisfied = true;
    c.numeric = false;
    c.note = "sampled sign check";
    cert.conditions.push_back(c);
  }

  // (b) delta > 0 with 0 < rho0 < min rho.
  {
    Condition c;
    c.name = "b.delta_positive";
    c.lhs = 0.0;
    c.rhs = constants.delta;
    c.margin = constants.delta;
    c.satisfied = constants.delta > 0.0;
    c.note = std::string("delta ") + provenance_name(constants.delta_provenance) +
             " on [0, rho0]^n";
    cert.conditions.push_back(c);

    Condition r;
    r.name = "b.rho0_range";
    r.lhs = constants.rho0;
    r.rhs = spec.min_rho();
    r.margin = r.rhs - r.lhs;
    r.satisfied = constants.rho0 > 0.0 && constants.rho0 < spec.min_rho();
    cert.conditions.push_back(r);
  }

  // (c) H_i finite and nonnegative.
  for (int i = 0; i < n; ++i) {
    const auto& H = constants.H[static_cast<size_t>(i)];
    Condition c;
    c.name = "c.H" + std::to_string(i + 1) + "_finite";
    c.satisfied = std::isfinite(H.value) && H.value >= 0.0;
    c.numeric = false;
    c.note = std::string(provenance_name(H.provenance)) + " value " + std::to_string(H.value);
    any_sampled = any_sampled || H.provenance == Provenance::Sampled;
    cert.conditions.push_back(c);
  }

  // (d1) mu_{i0} / delta <= lambda_{i0}.
  const int i0 = constants.i0;
  const auto& spectral = sys.op(i0 - 1).spectral(options.spectral_tol, options.spectral_max_iter);
  cert.mu_i0 = spectral.mu;
  cert.r_h = spectral.r;
  if (options.spectral_refine) {
    const auto coarse_grid = build_grid(spec.domain, 2.0 * sys.grid()->spacing());
    const auto& comp = spec.components[static_cast<size_t>(i0 - 1)];
    SolutionOperator coarse(assemble(comp.L, comp.B, coarse_grid), sys.solver_config());
    cert.r_2h = coarse.spectral(options.spectral_tol, options.spectral_max_iter).r;
    cert.r_extrapolated = cert.r_h + (cert.r_h - cert.r_2h) / 3.0;
  } else {
    cert.r_2h = 0.0;
    cert.r_extrapolated = cert.r_h;
  }
  {
    Condition c;
    c.name = "d1.spectral_lower_bound";
    c.lhs = constants.delta > 0.0 ? cert.mu_i0 / constants.delta
                                  : std::numeric_limits<double>::infinity();
    c.rhs = spec.components[static_cast<size_t>(i0 - 1)].lambda;
    c.margin = c.rhs - c.lhs;
    c.satisfied = c.lhs <= c.rhs;
    c.note = "mu_" + std::to_string(i0) + " = " + std::to_string(cert.mu_i0) +
             " at h = " + std::to_string(constants.grid_h);
    cert.conditions.push_back(c);
  }

  // (d2) lambda_i M_i ||K_i(1)|| + eta_i H_i ||gamma_i|| <= rho_i.
  for (int i = 0; i < n; ++i) {
    const auto& comp = spec.components[static_cast<size_t>(i)];
    const double M = maybe_round(constants.M[static_cast<size_t>(i)].value, repro);
    const double H = maybe_round(constants.H[static_cast<size_t>(i)].value, repro);
    const double k1 = constants.k1_norm[static_cast<size_t>(i)];
    const double gn = constants.gamma_norm[static_cast<size_t>(i)];
    Condition c;
    c.name = "d2.box_inequality_" + std::to_string(i + 1);
    c.lhs = comp.lambda * M * k1 + comp.eta * H * gn;
    c.rhs = comp.rho;
    c.margin = c.rhs - c.lhs;
    c.satisfied = c.lhs <= c.rhs;
    any_sampled = any_sampled || constants.M[static_cast<size_t>(i)].provenance ==
                                     Provenance::Sampled;
    cert.conditions.push_back(c);
  }

  if (repro) cert.caveats.push_back("constants rounded up at the third decimal (repro mode)");
  cert.caveats.push_back("operator norms and mu are discrete values at h = " +
                         std::to_string(constants.grid_h));
  cert.caveats.push_back("continuity of h_i on P_I is assumed, not machine-checked");

  cert.verdict = verdict_for(cert, any_sampled);
  if (cert.verdict == "pass" || cert.verdict == "advisory") {
    std::string rho_list;
    for (int i = 0; i < n; ++i)
      rho_list += (i ? ", " : "") +
                  std::to_string(spec.components[static_cast<size_t>(i)].rho);
    cert.localization = "predicted nonzero solution with " + std::to_string(constants.rho0) +
                        " <= ||u|| and ||u_i|| <= (" + rho_list + ")";
  }
  return cert;
}

Certificate certify_nonexistence(const SystemOperator& sys, const ConstantsReport& constants,
                                 const CertifyOptions& options) {
  (void)options;
  const auto& spec = sys.spec();
  Certificate cert;
  cert.kind = "nonexistence";
  attach_common(cert, sys, constants);

  const int n = spec.n;
  for (int i = 0; i < n; ++i) {
    if (i >= static_cast<int>(constants.tau.size()) ||
        !constants.tau[static_cast<size_t>(i)].present ||
        !constants.xi[static_cast<size_t>(i)].present)
      raise(ErrorCode::MissingConstant,
            "tau/xi must be supplied for component " + std::to_string(i + 1));
  }

  bool bounds_ok = true;
  for (int i = 0; i < n; ++i) {
    Condition c;
    c.name = "linear_bounds_" + std::to_string(i + 1);
    c.satisfied = constants.bounds_verified[static_cast<size_t>(i)];
    c.numeric = true;
    c.lhs = 0.0;
    c.rhs = constants.bounds_slack[static_cast<size_t>(i)];
    c.margin = c.rhs;
    c.note = "min slack of 0 <= f <= tau u and h <= xi ||u||";
    bounds_ok = bounds_ok && c.satisfied;
    cert.conditions.push_back(c);
  }
  if (!bounds_ok) {
    cert.verdict = "not-applicable";
    cert.caveats.push_back("linear bounds tau/xi not verified; theorem hypotheses unmet");
    return cert;
  }

  double factor = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& comp = spec.components[static_cast<size_t>(i)];
    const double tau = constants.tau[static_cast<size_t>(i)].value;
    const double xi = constants.xi[static_cast<size_t>(i)].value;
    const double k1 = constants.k1_norm[static_cast<size_t>(i)];
    const double gn = constants.gamma_norm[static_cast<size_t>(i)];
    Condition c;
    c.name = "contraction_inequality_" + std::to_string(i + 1);
    c.lhs = comp.lambda * tau * k1 + comp.eta * xi * gn;
    c.rhs = 1.0;
    c.margin = c.rhs - c.lhs;
    c.satisfied = c.lhs < c.rhs;  // strict
    factor = std::max(factor, c.lhs);
    cert.conditions.push_back(c);
  }
  cert.contraction_factor = factor;
  cert.caveats.push_back("operator norms are discrete values at h = " +
                         std::to_string(constants.grid_h));

  cert.verdict = verdict_for(cert, /*any_sampled=*/false);
  if (cert.verdict == "pass")
    cert.localization = "at most the zero solution in the box P_I";
  return cert;
}

SweepResult sweep_region(const SystemOperator& sys, const ConstantsReport& constants,
                         const std::string& kind, std::vector<SweepAxis> axes,
                         const CertifyOptions& options, int threads) {
  if (kind != "existence" && kind != "nonexistence")
    raise(ErrorCode::ValidationError, "sweep kind must be existence or nonexistence");

  SweepResult out;
  out.axes = axes;
  size_t total = axes.empty() ? 0 : 1;
  for (const auto& ax : axes) total *= ax.values.size();
  if (total == 0) return out;
  out.rows.resize(total);

  // Map an axis name onto the lambda/eta slot it drives.
  struct Slot {
    bool is_lambda;
    int comp;  // 0-based
  };
  std::vector<Slot> slots;
  for (const auto& ax : axes) {
    bool is_lambda = ax.name.rfind("lambda", 0) == 0;
    bool is_eta = ax.name.rfind("eta", 0) == 0;
    if (!is_lambda && !is_eta)
      raise(ErrorCode::ValidationError, "sweep axis must be lambda<k> or eta<k>: " + ax.name);
    const int comp = std::atoi(ax.name.c_str() + (is_lambda ? 6 : 3)) - 1;
    if (comp < 0 || comp >= sys.n())
      raise(ErrorCode::ValidationError, "sweep axis component out of range: " + ax.name);
    slots.push_back({is_lambda, comp});
  }

  // The spectral cache is populated once up front; worker threads only read it.
  double mu_i0 = 0.0;
  if (kind == "existence")
    mu_i0 = sys.op(constants.i0 - 1)
                .spectral(options.spectral_tol, options.spectral_max_iter)
                .mu;

  auto evaluate = [&](size_t flat) {
    // Decode the lattice point, first axis fastest.
    std::vector<double> values(axes.size());
    size_t rest = flat;
    for (size_t a = 0; a < axes.size(); ++a) {
      const size_t m = axes[a].values.size();
      values[a] = axes[a].values[rest % m];
      rest /= m;
    }
    // Certificates only read lambda/eta from the spec; operators, constants
    // and evaluators are shared. Work on a copy of the spec's parameters.
    SystemSpec probe = sys.spec();
    for (size_t a = 0; a < axes.size(); ++a) {
      auto& comp = probe.components[static_cast<size_t>(slots[a].comp)];
      (slots[a].is_lambda ? comp.lambda : comp.eta) = values[a];
    }

    // Inline evaluation of the parameter-dependent inequalities.
    std::string verdict;
    std::string binding = "none";
    double min_margin = std::numeric_limits<double>::infinity();
    bool all_ok = true;
    if (kind == "existence") {
      const int i0 = constants.i0;
      const double d1_lhs = constants.delta > 0.0
                                ? mu_i0 / constants.delta
                                : std::numeric_limits<double>::infinity();
      const double d1_margin =
          probe.components[static_cast<size_t>(i0 - 1)].lambda - d1_lhs;
      if (d1_margin < min_margin) {
        min_margin = d1_margin;
        binding = "d1.spectral_lower_bound";
      }
      all_ok = all_ok && d1_margin >= 0.0 && constants.delta > 0.0;
      for (int i = 0; i < sys.n(); ++i) {
        const auto& comp = probe.components[static_cast<size_t>(i)];
        const double M = maybe_round(constants.M[static_cast<size_t>(i)].value,
                                     options.repro_rounding);
        const double H = maybe_round(constants.H[static_cast<size_t>(i)].value,
                                     options.repro_rounding);
        const double lhs = comp.lambda * M * constants.k1_norm[static_cast<size_t>(i)] +
                           comp.eta * H * constants.gamma_norm[static_cast<size_t>(i)];
        const double margin = comp.rho - lhs;
        if (margin < min_margin) {
          min_margin = margin;
          binding = "d2.box_inequality_" + std::to_string(i + 1);
        }
        all_ok = all_ok && margin >= 0.0;
      }
      bool any_sampled = constants.delta_provenance == Provenance::Sampled;
      for (int i = 0; i < sys.n(); ++i)
        any_sampled = any_sampled ||
                      constants.M[static_cast<size_t>(i)].provenance == Provenance::Sampled ||
                      constants.H[static_cast<size_t>(i)].provenance == Provenance::Sampled;
      verdict = !all_ok ? "fail" : (any_sampled ? "advisory" : "pass");
    } else {
      bool bounds_ok = true;
      for (int i = 0; i < sys.n(); ++i)
        bounds_ok = bounds_ok && i < static_cast<int>(constants.bounds_verified.size()) &&
                    constants.bounds_verified[static_cast<size_t>(i)];
      if (!bounds_ok) {
        verdict = "not-applicable";
        binding = "linear_bounds";
      } else {
        for (int i = 0; i < sys.n(); ++i) {
          const auto& comp = probe.components[static_cast<size_t>(i)];
          const double lhs =
              comp.lambda * constants.tau[static_cast<size_t>(i)].value *
                  constants.k1_norm[static_cast<size_t>(i)] +
              comp.eta * constants.xi[static_cast<size_t>(i)].value *
                  constants.gamma_norm[static_cast<size_t>(i)];
          const double margin = 1.0 - lhs;
          if (margin < min_margin) {
            min_margin = margin;
            binding = "contraction_inequality_" + std::to_string(i + 1);
          }
          all_ok = all_ok && lhs < 1.0;
        }
        verdict = all_ok ? "pass" : "fail";
      }
    }
    out.rows[flat] = SweepRow{std::move(values), std::move(verdict), std::move(binding)};
  };

  if (threads > 1) {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (size_t k = next.fetch_add(1); k < total; k = next.fetch_add(1)) evaluate(k);
      });
    }
    for (auto& th : pool) th.join();
  } else {
    for (size_t k = 0; k < total; ++k) evaluate(k);
  }
  return out;
}

}  // namespace conecert
