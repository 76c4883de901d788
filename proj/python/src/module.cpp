#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wnlab/bench.hpp"
#include "wnlab/bounds.hpp"
#include "wnlab/cli.hpp"
#include "wnlab/errors.hpp"
#include "wnlab/invariants.hpp"
#include "wnlab/oracle.hpp"

namespace py = pybind11;
using namespace wnlab;

namespace {

ProblemInstance make_instance(const Mat& A, const Vec& b) {
  ProblemInstance inst;
  inst.A = A;
  inst.b = b;
  inst.validate();
  return inst;
}

py::dict solution_dict(const OracleSolution& s) {
  py::dict d;
  d["status"] = to_string(s.status);
  d["iterations"] = s.iterations;
  if (s.status == LpStatus::Optimal) {
    d["objective"] = s.objective;
    d["z"] = s.z;
  } else {
    d["objective"] = py::none();
    d["z"] = py::none();
  }
  return d;
}

StepPolicy step_from(const py::object& step) {
  if (step.is_none()) return FixedStep{};
  if (py::isinstance<py::str>(step)) return parse_step_policy(step.cast<std::string>());
  return FixedStep{step.cast<double>()};
}

py::dict integrate_py(const Mat& A, const Vec& b, const std::string& variant, int depth, double eta_ratio,
                      double r0, std::uint64_t seed, const py::object& step, long max_iters, double loss_tol,
                      long snapshot_stride, const std::optional<Vec>& x0) {
  const ProblemInstance inst = make_instance(A, b);
  FlowConfig c;
  c.variant = parse_variant(variant);
  c.depth = depth;
  c.eta_ratio = eta_ratio;
  c.step = step_from(step);
  c.max_iters = max_iters;
  c.loss_tol = loss_tol;
  c.snapshot_stride = snapshot_stride;
  c.init = x0 ? InitSpec::explicit_vector(*x0) : InitSpec::random_positive(r0, seed);
  TrajectoryRecord traj;
  {
    py::gil_scoped_release release;
    traj = integrate(c, inst);
  }
  py::dict d;
  d["variant"] = to_string(traj.variant);
  d["reason"] = to_string(traj.terminal.reason);
  d["iters"] = traj.terminal.iters;
  d["t"] = traj.terminal.t;
  d["final_loss"] = traj.terminal.final_loss;
  d["xtilde"] = traj.terminal.final_xtilde;
  d["step"] = traj.step_h;
  d["positivity_violations"] = traj.positivity_violations;
  d["loss_history"] = traj.loss_history;
  std::vector<long> iters;
  std::vector<Vec> xt;
  for (const auto& s : traj.snapshots) {
    iters.push_back(s.iter);
    xt.push_back(effective_xtilde(s.state, traj.depth));
  }
  d["snapshot_iters"] = iters;
  d["snapshot_xtilde"] = xt;
  return d;
}

py::list campaign_py(const std::string& spec_json) {
  const ExperimentSpec spec = spec_from_json(nlohmann::json::parse(spec_json));
  std::vector<TrialResult> results;
  {
    py::gil_scoped_release release;
    results = run_campaign(spec);
  }
  py::list out;
  for (const auto& r : results) {
    py::dict d;
    d["point"] = r.point;
    d["trial"] = r.trial;
    d["variant"] = to_string(r.variant);
    d["r0"] = r.r0;
    d["eta"] = r.eta_ratio;
    d["eps1"] = r.eps1 ? py::cast(*r.eps1) : py::none();
    d["eps2"] = r.eps2 ? py::cast(*r.eps2) : py::none();
    d["Q"] = r.Q;
    d["final_loss"] = r.final_loss;
    d["iters"] = r.iters;
    d["reason"] = to_string(r.reason);
    d["error"] = r.error;
    out.append(d);
  }
  return out;
}

py::tuple cli_py(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weight-normalized diagonal linear networks: flows, invariants, bounds and the l1 oracle.";

  // Later registrations are tried first, so the subclasses go last.
  auto base = py::register_exception<Error>(m, "WnlabError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.def("gen_instance", [](long N, long M, const std::string& ground_truth, long sparsity, std::uint64_t seed) {
        const ProblemInstance inst = gen_instance(N, M, parse_ground_truth(ground_truth), sparsity, seed);
        return py::make_tuple(inst.A, inst.b, *inst.x_star);
      },
      py::arg("N"), py::arg("M"), py::arg("ground_truth") = "gaussian_abs", py::arg("sparsity") = 10,
      py::arg("seed") = 0, "Random instance; returns (A, b, x_star).");

  m.def("loss", [](const Vec& x, const Mat& A, const Vec& b, int depth) {
        return loss(x, make_instance(A, b), depth);
      },
      py::arg("x"), py::arg("A"), py::arg("b"), py::arg("depth") = 2);
  m.def("grad_loss", [](const Vec& x, const Mat& A, const Vec& b, int depth) {
        return grad_loss(x, make_instance(A, b), depth);
      },
      py::arg("x"), py::arg("A"), py::arg("b"), py::arg("depth") = 2);

  m.def("integrate", &integrate_py, py::arg("A"), py::arg("b"), py::arg("variant") = "wn-constant",
        py::arg("depth") = 2, py::arg("eta_ratio") = 0.1, py::arg("r0") = 1.0, py::arg("seed") = 0,
        py::arg("step") = py::none(), py::arg("max_iters") = 200000, py::arg("loss_tol") = 1e-12,
        py::arg("snapshot_stride") = 100, py::arg("x0") = py::none(),
        "Discrete flow. `step` is a float, None for the default step, or a policy string such as 'linesearch'.");

  m.def("min_weighted_l1_nonneg", [](const Mat& A, const Vec& b, const std::optional<Vec>& w) {
        return solution_dict(min_weighted_l1_nonneg(make_instance(A, b), w));
      },
      py::arg("A"), py::arg("b"), py::arg("w") = py::none());
  m.def("min_l1_signed", [](const Mat& A, const Vec& b) { return solution_dict(min_l1_signed(make_instance(A, b))); },
        py::arg("A"), py::arg("b"));
  m.def("positive_kernel_witness", [](const Mat& A) -> std::optional<Vec> {
        const KernelWitness k = positive_kernel_lp(A);
        if (!k.exists) return std::nullopt;
        return k.v;
      },
      py::arg("A"));

  m.def("kernel_orthant_probability", &kernel_orthant_probability, py::arg("N"), py::arg("K"));
  m.def("rho", [](double r0, double eta_ratio, const Mat& A, const Vec& b, int depth) {
        const ProblemInstance inst = make_instance(A, b);
        return rho(r0, eta_ratio, inst, projectors(inst), depth);
      },
      py::arg("r0"), py::arg("eta_ratio"), py::arg("A"), py::arg("b"), py::arg("depth") = 2);
  m.def("h0", [](const Vec& x, const Mat& A, int depth) { return h0(x, projectors(A), depth); }, py::arg("x"),
        py::arg("A"), py::arg("depth") = 2);

  m.def("_run_campaign", &campaign_py, py::arg("spec_json"));
  m.def("cli", &cli_py, py::arg("args"), "Runs a wnlab subcommand; returns (exit_code, stdout, stderr).");
}
