#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adamlab/config.hpp"
#include "adamlab/experiments.hpp"
#include "adamlab/io.hpp"
#include "adamlab/lyapunov.hpp"

namespace py = pybind11;
using namespace adamlab;

namespace {

ObjectivePtr objective_from_dict(const py::dict& d) {
  json j;
  for (const auto& item : d) {
    const auto key = py::cast<std::string>(item.first);
    if (py::isinstance<py::str>(item.second))
      j[key] = py::cast<std::string>(item.second);
    else if (py::isinstance<py::int_>(item.second))
      j[key] = py::cast<long>(item.second);
    else if (py::isinstance<py::float_>(item.second))
      j[key] = py::cast<double>(item.second);
    else
      j[key] = json::parse(py::cast<std::string>(py::repr(item.second)));
  }
  return objective_from_json(j);
}

py::array_t<double> measure_to_array(const EmpiricalMeasure& ens) {
  py::array_t<double> out({ens.n, ens.row_width()});
  auto buf = out.mutable_unchecked<2>();
  for (int i = 0; i < ens.n; ++i) {
    const auto r = ens.row(i);
    for (int j = 0; j < ens.row_width(); ++j) buf(i, j) = r[j];
  }
  return out;
}

State state_from_tuple(const Vec& x, const Vec& z, const Vec& y) { return State(x, z, y); }

}  // namespace

PYBIND11_MODULE(_adamlab, m) {
  m.doc() = "continuous-time models of bias-corrected adaptive optimizers: simulation, "
            "Lyapunov drift certificates, degeneracy analysis, control skeletons, and "
            "invariant-measure diagnostics";

  py::register_exception<ParamError>(m, "ParamError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<ControlError>(m, "ControlError", PyExc_RuntimeError);
  py::register_exception<SearchError>(m, "SearchError", PyExc_RuntimeError);

  py::class_<State>(m, "State")
      .def(py::init(&state_from_tuple), py::arg("x"), py::arg("z"), py::arg("y"))
      .def_readwrite("x", &State::x)
      .def_readwrite("z", &State::z)
      .def_readwrite("y", &State::y)
      .def_property_readonly("dim", &State::dim);

  py::class_<HyperParams>(m, "HyperParams")
      .def(py::init([](double a, double b, double gamma, double sigma, double eps) {
             HyperParams hp{a, b, gamma, sigma, eps};
             hp.validate();
             return hp;
           }),
           py::arg("a") = 1.0, py::arg("b") = 1.0, py::arg("gamma") = 1.0, py::arg("sigma") = 1.0,
           py::arg("eps") = 0.5)
      .def_readwrite("a", &HyperParams::a)
      .def_readwrite("b", &HyperParams::b)
      .def_readwrite("gamma", &HyperParams::gamma)
      .def_readwrite("sigma", &HyperParams::sigma)
      .def_readwrite("eps", &HyperParams::eps);

  py::class_<Objective, ObjectivePtr>(m, "Objective")
      .def_property_readonly("dim", &Objective::dim)
      .def_property_readonly("kind", &Objective::kind)
      .def_property_readonly("lipschitz", &Objective::lipschitz)
      .def_property_readonly("dissipativity", &Objective::dissipativity)
      .def_property_readonly("min_value", &Objective::min_value)
      .def("value", [](const Objective& o, const Vec& x) { return o.value(std::span<const double>(x)); })
      .def("gradient",
           [](const Objective& o, const Vec& x) {
             Vec g(o.dim());
             o.gradient(x, g);
             return g;
           })
      .def("hessian", [](const Objective& o, const Vec& x) { return o.hess(x); });

  m.def("make_objective", &objective_from_dict, py::arg("descriptor"),
        "Build a builtin objective from a descriptor like {'kind': 'quad_cosine', 'm_q': 1.0, 's': 0.5, 'dim': 2}");
  m.def(
      "evaluate",
      [](const Objective& obj, const Vec& x, int order) -> py::object {
        const auto res = evaluate(obj, x, order);
        if (order == 0) return py::float_(std::get<double>(res));
        if (order == 1) return py::cast(std::get<Vec>(res));
        return py::cast(std::get<Eigen::MatrixXd>(res));
      },
      py::arg("objective"), py::arg("x"), py::arg("order"));
  m.def(
      "check_conditions",
      [](const Objective& obj, int n, double box, std::uint64_t seed) {
        const auto rep = check_conditions(obj, n, box, seed);
        return py::dict(py::arg("violation") = rep.violation(),
                        py::arg("max_lipschitz_ratio") = rep.max_lipschitz_ratio,
                        py::arg("min_dissipativity_slack") = rep.min_dissipativity_slack,
                        py::arg("max_hessian_asymmetry") = rep.max_hessian_asymmetry);
      },
      py::arg("objective"), py::arg("n_samples") = 1000, py::arg("box_radius") = 5.0, py::arg("seed") = 0);

  m.def(
      "bias_factors", [](long k, double h, double a, double b) { return bias_factors(k, h, a, b); }, py::arg("k"),
      py::arg("h"), py::arg("a"), py::arg("b"),
      "Bias-correction prefactors (theta_a, theta_b) at step k");
  m.def(
      "bias_coefficient", [](char which, double t, const HyperParams& hp) { return bias_coefficient(which, t, hp); },
      py::arg("which"), py::arg("t"), py::arg("hp"));

  m.def(
      "run_discrete",
      [](const Objective& obj, const HyperParams& hp, double h, long steps, const std::string& mode,
         const State& init, std::uint64_t seed, std::uint32_t trajectory_id) {
        DiscreteParams dp;
        dp.h = h;
        dp.steps = steps;
        dp.noise_mode = mode == "exact_square" ? NoiseMode::exact_square
                        : mode == "noiseless"  ? NoiseMode::noiseless
                                               : NoiseMode::closure;
        dp.init = init;
        dp.seed = seed;
        const auto trace = run_discrete(obj, hp, dp, trajectory_id);
        py::array_t<double> states({static_cast<int>(trace.states.size()), 3 * obj.dim()});
        auto buf = states.mutable_unchecked<2>();
        for (std::size_t k = 0; k < trace.states.size(); ++k) {
          const auto& s = trace.states[k];
          for (int i = 0; i < obj.dim(); ++i) {
            buf(k, i) = s.x[i];
            buf(k, obj.dim() + i) = s.z[i];
            buf(k, 2 * obj.dim() + i) = s.y[i];
          }
        }
        return py::make_tuple(trace.times, states);
      },
      py::arg("objective"), py::arg("hp"), py::arg("h"), py::arg("steps"), py::arg("noise_mode") = "closure",
      py::arg("init"), py::arg("seed") = 0, py::arg("trajectory_id") = 0,
      "Returns (times, states) with states laid out as rows (x_1..x_m, z_1..z_m, y_1..y_m)");

  m.def(
      "simulate_terminal",
      [](const Objective& obj, const HyperParams& hp, const std::string& system, double dt, double horizon,
         const State& init, std::uint64_t seed, double delta_start, const std::string& integrator,
         std::uint32_t trajectory_id) {
        SdeConfig cfg;
        cfg.system = system == "inhomogeneous" ? SystemKind::inhomogeneous : SystemKind::homogeneous;
        cfg.integrator = integrator == "euler_maruyama" ? Integrator::euler_maruyama : Integrator::exp_y;
        cfg.dt = dt;
        cfg.horizon = horizon;
        cfg.delta_start = delta_start;
        cfg.seed = seed;
        const auto traj = simulate(cfg, obj, hp, init, trajectory_id);
        return py::make_tuple(traj.terminal(), traj.clamp_count);
      },
      py::arg("objective"), py::arg("hp"), py::arg("system"), py::arg("dt"), py::arg("horizon"), py::arg("init"),
      py::arg("seed") = 0, py::arg("delta_start") = 0.01, py::arg("integrator") = "exp_y",
      py::arg("trajectory_id") = 0);

  m.def(
      "simulate_ensemble",
      [](const Objective& obj, const HyperParams& hp, const std::string& system, double dt, const State& init, int n,
         const Vec& checkpoints, std::uint64_t seed, double delta_start, int workers) {
        SdeConfig cfg;
        cfg.system = system == "inhomogeneous" ? SystemKind::inhomogeneous : SystemKind::homogeneous;
        cfg.dt = dt;
        cfg.delta_start = delta_start;
        cfg.seed = seed;
        const auto series = simulate_ensemble(cfg, obj, hp, point_init(init), n, checkpoints, workers);
        py::list out;
        for (const auto& ens : series) out.append(measure_to_array(ens));
        return out;
      },
      py::arg("objective"), py::arg("hp"), py::arg("system"), py::arg("dt"), py::arg("init"), py::arg("n"),
      py::arg("checkpoints"), py::arg("seed") = 0, py::arg("delta_start") = 0.01, py::arg("workers") = 0,
      "List of (n x 3m) snapshot arrays, one per checkpoint");

  py::class_<LyapunovParams>(m, "LyapunovParams")
      .def_readwrite("theta", &LyapunovParams::theta)
      .def_readwrite("beta", &LyapunovParams::beta)
      .def_readwrite("delta_y", &LyapunovParams::delta_y)
      .def_readwrite("upsilon", &LyapunovParams::upsilon)
      .def_readwrite("shift", &LyapunovParams::shift)
      .def_readwrite("lambda_", &LyapunovParams::lambda)
      .def_readwrite("big_k", &LyapunovParams::big_k)
      .def_readwrite("level_m", &LyapunovParams::level_m);

  m.def("select_lyapunov_params", &select_params, py::arg("objective"), py::arg("hp"), py::arg("safety") = 0.5,
        py::arg("box_radius") = 50.0, py::arg("eta") = -1.0, py::arg("seed") = 20240901);
  m.def(
      "eval_V", [](const LyapunovParams& p, const State& s, const Objective& obj) { return eval_V(p, s, obj); },
      py::arg("params"), py::arg("state"), py::arg("objective"));
  m.def("closed_form_LV", &closed_form_LV, py::arg("params"), py::arg("state"), py::arg("objective"), py::arg("hp"),
        py::arg("eps_reg") = 0.0);
  m.def(
      "drift_check",
      [](const LyapunovParams& p, const Objective& obj, const HyperParams& hp, double box, long n,
         std::uint64_t seed, double eta, double eps_reg, int workers) {
        const auto rep = drift_check(p, obj, hp, DriftSampler{box, n, seed}, eta, eps_reg, workers);
        return py::dict(py::arg("n") = rep.n, py::arg("violation_count") = rep.violation_count,
                        py::arg("max_outside_slack") = rep.max_outside_slack,
                        py::arg("max_inside_slack") = rep.max_inside_slack, py::arg("lambda_") = rep.lambda,
                        py::arg("big_k") = rep.big_k, py::arg("level_m") = rep.level_m);
      },
      py::arg("params"), py::arg("objective"), py::arg("hp"), py::arg("box_radius") = 50.0, py::arg("n") = 10000,
      py::arg("seed") = 1, py::arg("eta") = 0.5, py::arg("eps_reg") = 0.0, py::arg("workers") = 0);

  m.def(
      "matrix_A", [](const Vec& x, const Objective& obj) { return matrix_A(x, obj); }, py::arg("x"),
      py::arg("objective"));
  m.def(
      "classify",
      [](const Vec& x, const Objective& obj, double tol_row, double tol_det) {
        const auto rep = classify(x, obj, tol_row, tol_det);
        const char* name = rep.cls == DegenClass::regular          ? "regular"
                           : rep.cls == DegenClass::row_degenerate ? "row_degenerate"
                                                                   : "rank_degenerate";
        return py::dict(py::arg("cls") = name, py::arg("min_row_norm") = rep.min_row_norm,
                        py::arg("abs_det") = rep.abs_det);
      },
      py::arg("x"), py::arg("objective"), py::arg("tol_row") = 1e-10, py::arg("tol_det") = 1e-10);
  m.def(
      "lie_bracket",
      [](int order, int i, const State& s, const Objective& obj, const HyperParams& hp) {
        Vec out;
        lie_bracket_closed_form(order, i, s, obj, hp, out);
        return out;
      },
      py::arg("order"), py::arg("i"), py::arg("state"), py::arg("objective"), py::arg("hp"));
  m.def(
      "find_regular_point",
      [](const Objective& obj, double box, int tries, double margin, std::uint64_t seed) {
        const auto cert = find_regular_point(obj, box, tries, margin, seed);
        return py::dict(py::arg("x_star") = cert.x_star, py::arg("radius") = cert.radius,
                        py::arg("margin") = cert.margin, py::arg("grid_min") = cert.grid_min);
      },
      py::arg("objective"), py::arg("box_radius") = 2.0, py::arg("n_tries") = 1000, py::arg("margin") = 0.05,
      py::arg("seed") = 0);

  m.def(
      "plan_control",
      [](const Objective& obj, const HyperParams& hp, const State& u0, const State& target, double box, int tries,
         double margin, std::uint64_t seed, double tol) {
        const auto cert = find_regular_point(obj, box, tries, margin, seed);
        const auto geom = plan_geometry(cert, obj, hp);
        const auto plan = plan_full(u0, target, obj, hp, geom, {}, tol);
        return py::dict(py::arg("success") = plan.success, py::arg("analytic_error") = plan.analytic_error,
                        py::arg("replay_error") = plan.replay_error, py::arg("x_c") = plan.x_c,
                        py::arg("alpha_star") = plan.alpha_star, py::arg("t1") = plan.t1, py::arg("S") = plan.big_s,
                        py::arg("delta_f") = plan.delta_f);
      },
      py::arg("objective"), py::arg("hp"), py::arg("start"), py::arg("target"), py::arg("box_radius") = 2.0,
      py::arg("n_tries") = 1000, py::arg("margin") = 0.05, py::arg("seed") = 0, py::arg("tol") = 1e-4);
  m.def(
      "control_batch",
      [](const Objective& obj, const HyperParams& hp, int n_plans, std::uint64_t seed, double box, double tol) {
        ControlBlock blk;
        blk.n_plans = n_plans;
        blk.tol = tol;
        blk.box_radius = box;
        const auto res = control_batch(obj, hp, blk, seed);
        return py::dict(py::arg("n_total") = res.n_total, py::arg("n_success") = res.n_success,
                        py::arg("success_rate") = res.success_rate(),
                        py::arg("max_analytic_error") = res.max_analytic_error,
                        py::arg("max_replay_error") = res.max_replay_error);
      },
      py::arg("objective"), py::arg("hp"), py::arg("n_plans") = 10, py::arg("seed") = 0,
      py::arg("box_radius") = 2.0, py::arg("tol") = 1e-4);

  m.def(
      "sliced_w2",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
         py::array_t<double, py::array::c_style | py::array::forcecast> b, int n_proj, std::uint64_t seed) {
        auto to_measure = [](const py::array_t<double>& arr) {
          if (arr.ndim() != 2 || arr.shape(1) % 3 != 0) throw std::invalid_argument("expected an (n, 3m) array");
          EmpiricalMeasure ens(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1) / 3));
          auto buf = arr.unchecked<2>();
          for (int i = 0; i < ens.n; ++i) {
            auto row = ens.row(i);
            for (int j = 0; j < ens.row_width(); ++j) row[j] = buf(i, j);
          }
          return ens;
        };
        const auto sw = sliced_w2(to_measure(a), to_measure(b), n_proj, seed);
        return py::make_tuple(sw.estimate, sw.std_error);
      },
      py::arg("mu"), py::arg("nu"), py::arg("n_projections") = 64, py::arg("seed") = 17,
      "Sliced Wasserstein-2 between two (n, 3m) sample arrays; returns (estimate, stderr)");
}
