#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwerlim/distributions.hpp"
#include "fwerlim/errors.hpp"
#include "fwerlim/estimators.hpp"
#include "fwerlim/gaussian_model.hpp"
#include "fwerlim/limits.hpp"
#include "fwerlim/procedures.hpp"

namespace py = pybind11;
using namespace fwerlim;

namespace {

Direction parse_direction(const std::string& name) {
  if (name == "stepdown") return Direction::StepDown;
  if (name == "stepup") return Direction::StepUp;
  throw UsageError("unknown direction '" + name + "' (expected stepdown or stepup)");
}

Procedure make_procedure(const std::string& name, double alpha,
                         const std::optional<std::string>& direction) {
  if (!direction || name == "hommel") return Procedure::from_name(name, alpha);
  return Procedure::stepwise(parse_family(name), parse_direction(*direction), alpha);
}

std::vector<double> cutoffs(const std::string& family, std::size_t n, double alpha) {
  const auto u = make_critical_values(parse_family(family), n, alpha);
  return {u.values().begin(), u.values().end()};
}

py::dict to_dict(const MonteCarloEstimate& e) {
  py::dict d;
  d["metric"] = std::string(to_string(e.metric));
  d["estimate"] = e.estimate;
  d["std_error"] = e.std_error;
  d["ci_low"] = e.ci_low;
  d["ci_high"] = e.ci_high;
  d["replicates"] = e.replicates;
  d["seed"] = e.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the fwerlim C++ library.";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);

  m.def("normal_cdf", &normal_cdf, py::arg("x"));
  m.def("normal_sf", &normal_sf, py::arg("x"));
  m.def("normal_quantile", &normal_quantile, py::arg("p"));

  m.def("critical_values", &cutoffs, py::arg("family"), py::arg("n"), py::arg("alpha"),
        "Cutoffs u_1 <= ... <= u_n of a named family.");

  m.def(
      "step_down",
      [](std::vector<double> p, std::vector<double> u) {
        return step_down(PValueVector(std::move(p)), CriticalValues(std::move(u))).rejected;
      },
      py::arg("p"), py::arg("cutoffs"));
  m.def(
      "step_up",
      [](std::vector<double> p, std::vector<double> u) {
        return step_up(PValueVector(std::move(p)), CriticalValues(std::move(u))).rejected;
      },
      py::arg("p"), py::arg("cutoffs"));
  m.def(
      "hommel",
      [](std::vector<double> p, double alpha) {
        return hommel(PValueVector(std::move(p)), alpha).rejected;
      },
      py::arg("p"), py::arg("alpha"));
  m.def(
      "reject",
      [](const std::string& procedure, std::vector<double> p, double alpha,
         std::optional<std::string> direction) {
        return make_procedure(procedure, alpha, direction).apply(PValueVector(std::move(p))).rejected;
      },
      py::arg("procedure"), py::arg("p"), py::arg("alpha") = 0.05,
      py::arg("direction") = py::none(),
      "Rejection flags of a named procedure, in input order.");

  m.def(
      "validate_cutoffs",
      [](std::vector<double> u, double alpha, const std::string& direction) {
        std::vector<std::tuple<std::size_t, double, double>> out;
        for (const auto& v :
             validate_fwer_cutoffs(CriticalValues(std::move(u)), alpha, parse_direction(direction))) {
          out.emplace_back(v.index, v.value, v.bound);
        }
        return out;
      },
      py::arg("cutoffs"), py::arg("alpha"), py::arg("direction") = "stepdown",
      "Violations as (rank, cutoff, bound) tuples; empty when the cutoffs are valid.");

  m.def(
      "estimate",
      [](const std::string& procedure, std::size_t n, double rho, double alpha,
         const std::string& metric, std::size_t n_false, double mu,
         std::optional<std::vector<double>> means, std::size_t replicates, std::uint64_t seed,
         unsigned threads, std::optional<std::string> direction) {
        auto model = CorrelationModel::equicorrelated(rho);
        const auto config = means ? HypothesisConfig(std::move(*means), std::move(model))
                                  : HypothesisConfig::with_false_nulls(n, n_false, mu, std::move(model));
        const auto proc = make_procedure(procedure, alpha, direction);
        MonteCarloEstimate e;
        {
          py::gil_scoped_release release;
          e = estimate(proc, config, parse_metric(metric), replicates, seed, threads);
        }
        return to_dict(e);
      },
      py::arg("procedure"), py::arg("n") = 0, py::arg("rho") = 0.0, py::arg("alpha") = 0.05,
      py::arg("metric") = "fwer", py::arg("n_false") = 0, py::arg("mu") = 0.0,
      py::arg("means") = py::none(), py::arg("replicates") = kDefaultReplicates,
      py::arg("seed") = 1, py::arg("threads") = 0, py::arg("direction") = py::none(),
      "Monte Carlo estimate under the equicorrelated normal model. Pass either n "
      "(with n_false, mu) or an explicit list of means.");

  m.def("s_objective", &s_objective, py::arg("t"), py::arg("alpha"), py::arg("rho"));
  m.def(
      "limiting_bh_fdr",
      [](double alpha, double rho, std::size_t grid_points, double tolerance) {
        const auto r = limiting_bh_fdr(alpha, rho, LimitOptions{grid_points, tolerance});
        py::dict d;
        d["value"] = r.value;
        d["minimizer_t"] = r.minimizer_t ? py::cast(*r.minimizer_t) : py::none();
        d["objective_at_minimizer"] = r.objective_at_minimizer;
        d["grid_points"] = r.grid_points;
        d["refinement_tolerance"] = r.refinement_tolerance;
        return d;
      },
      py::arg("alpha"), py::arg("rho"), py::arg("grid_points") = 10000,
      py::arg("tolerance") = 1e-10);
  m.def(
      "class_bound", [](double alpha, double rho) { return stepup_class_bound(alpha, rho); },
      py::arg("alpha"), py::arg("rho"));
  m.def(
      "reference_limit",
      [](const std::string& procedure, double rho, double alpha,
         std::optional<std::string> direction) {
        const auto r = reference_limit(make_procedure(procedure, alpha, direction), rho);
        return std::make_pair(r.low, r.high);
      },
      py::arg("procedure"), py::arg("rho"), py::arg("alpha") = 0.05,
      py::arg("direction") = py::none(),
      "(low, high) bounds on the n -> infinity FWER; low == high for a point limit.");
}
