#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geoparc/acceptance.hpp"
#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"
#include "geoparc/law_io.hpp"
#include "geoparc/manifest.hpp"
#include "geoparc/oracle.hpp"
#include "geoparc/series.hpp"
#include "geoparc/simulation.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace geoparc;

namespace {

ArrivalLaw law_from_dict(const py::dict& d) {
  auto json_mod = py::module_::import("json");
  std::string text = py::str(json_mod.attr("dumps")(d));
  return ArrivalLaw::from_spec(law_spec_from_json(nlohmann::json::parse(text)));
}

py::dict phase_dict(const PhaseReport& r) {
  py::dict d;
  d["t_c"] = r.threshold.t_c;
  d["kind"] = std::string(to_string(r.threshold.kind));
  d["criterion"] = r.criterion;
  d["q"] = r.q;
  d["q_value"] = r.q_value;
  d["phase"] = std::string(to_string(r.phase));
  d["boundary"] = r.boundary;
  d["q_c"] = r.q_c ? py::cast(*r.q_c) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_geoparc, m) {
  m.doc() = "Parking on geometric Galton-Watson trees";
  m.attr("__version__") = version_string();

  // Messages start with the error code, e.g. "BadParam: ...".
  py::register_exception<Error>(m, "GeoparcError", PyExc_ValueError);

  py::class_<ArrivalLaw>(m, "ArrivalLaw")
      .def_static("binary", py::overload_cast<double>(&ArrivalLaw::binary), "alpha"_a)
      .def_static("geometric", py::overload_cast<double>(&ArrivalLaw::geometric), "alpha"_a)
      .def_static("poisson", &ArrivalLaw::poisson, "alpha"_a)
      .def_static("custom", py::overload_cast<std::vector<double>>(&ArrivalLaw::custom), "coeffs"_a)
      .def_static("stable", &ArrivalLaw::stable, "P"_a, "C"_a, "rho"_a, "alpha_s"_a)
      .def_static("from_dict", &law_from_dict, "spec"_a)
      .def_static("load", &load_law, "path"_a)
      .def_property_readonly("family", [](const ArrivalLaw& l) { return std::string(to_string(l.family())); })
      .def_property_readonly("alpha", &ArrivalLaw::alpha)
      .def_property_readonly("radius", &ArrivalLaw::radius)
      .def_property_readonly("is_exact", &ArrivalLaw::is_exact)
      .def("coeff", &ArrivalLaw::coeff, "k"_a)
      .def("coeffs", &ArrivalLaw::coeffs, "count"_a)
      .def("G", &ArrivalLaw::G, "t"_a, "order"_a = 0)
      .def("mean", &ArrivalLaw::mean)
      .def("variance", &ArrivalLaw::variance)
      .def("__repr__", &ArrivalLaw::describe);

  m.def("discriminant", &discriminant, "law"_a, "t"_a);
  m.def(
      "find_tc",
      [](const ArrivalLaw& law) {
        auto th = find_tc(law);
        return py::make_tuple(th.t_c, std::string(to_string(th.kind)));
      },
      "law"_a);
  m.def("phi", &phi, "law"_a, "y"_a);
  m.def("classify", [](const ArrivalLaw& law, double q) { return phase_dict(classify(law, q)); }, "law"_a, "q"_a);
  m.def("x_hat", py::overload_cast<const ArrivalLaw&, double>(&x_hat), "law"_a, "Y"_a);
  m.def("F_at_one", py::overload_cast<const ArrivalLaw&, double>(&F_at_one), "law"_a, "Y"_a);
  m.def("F_at_zero", &F_at_zero, "law"_a, "Y"_a);
  m.def("radius_of_F", py::overload_cast<const ArrivalLaw&>(&radius_of_F), "law"_a);
  m.def(
      "solve_p_circ",
      [](const ArrivalLaw& law, double q) -> py::object {
        auto fp = solve_p_circ(law, q);
        if (!fp) return py::none();
        return py::dict("p_circ"_a = fp->p_circ, "x_circ"_a = fp->x_circ, "residual"_a = fp->residual,
                        "boundary"_a = fp->boundary);
      },
      "law"_a, "q"_a);
  m.def(
      "iterate_rde",
      [](const ArrivalLaw& law, double q, int iters, int cutoff) {
        auto r = iterate_rde(law, q, iters, cutoff);
        return py::dict("visits"_a = r.visits, "flux"_a = r.flux, "escaped"_a = r.escaped);
      },
      "law"_a, "q"_a, "iters"_a, "cutoff"_a);
  m.def(
      "threshold_curve",
      [](const std::string& family, const std::vector<double>& alphas) {
        py::list out;
        for (const auto& r : threshold_curve(family_from_string(family), alphas, resolve_threads(0))) {
          out.append(py::make_tuple(r.alpha, r.t_c ? py::cast(*r.t_c) : py::none(),
                                    r.criterion ? py::cast(*r.criterion) : py::none(),
                                    r.q_c ? py::cast(*r.q_c) : py::none()));
        }
        return out;
      },
      "family"_a, "alphas"_a);
  m.def(
      "construct_stable_law",
      [](double rho, double alpha_s) {
        auto s = construct_stable_law(rho, alpha_s);
        return py::make_tuple(s.law, py::dict("C"_a = s.search.C, "P"_a = s.search.P,
                                              "criterion"_a = s.search.criterion, "q_c"_a = s.search.q_c));
      },
      "rho"_a, "alpha_s"_a);
  m.def(
      "tail_exponent_fit",
      [](const ArrivalLaw& law, int n_min, int n_max) {
        auto f = tail_exponent_fit(law, n_min, n_max);
        return py::dict("slope"_a = f.slope, "intercept"_a = f.intercept, "r_squared"_a = f.r_squared);
      },
      "law"_a, "n_min"_a, "n_max"_a);

  // Rows c[n][0..k_max] for n = 0..n_max; exact tables come back as fraction strings.
  m.def(
      "tutte_solve",
      [](const ArrivalLaw& law, int n_max, int k_max, const std::string& mode) {
        auto sm = scalar_mode_from_string(mode);
        auto F = tutte_solve(law, n_max, k_max, {sm});
        py::list rows;
        for (int n = 0; n <= n_max; ++n) {
          py::list row;
          for (int k = 0; k <= k_max; ++k) {
            if (sm == ScalarMode::rational) {
              row.append(to_string(F.exact_coeff(n, k)));
            } else {
              row.append(F.coeff(n, k));
            }
          }
          rows.append(row);
        }
        return rows;
      },
      "law"_a, "n_max"_a, "k_max"_a, "mode"_a = "float");
  m.def(
      "oracle_compare",
      [](const ArrivalLaw& law, int n_max, int k_max, const std::string& mode) {
        auto r = oracle_compare(law, n_max, k_max, scalar_mode_from_string(mode));
        return py::dict("passed"_a = r.passed, "max_delta"_a = r.max_delta, "rows"_a = r.rows.size());
      },
      "law"_a, "n_max"_a, "k_max"_a, "mode"_a = "rational");
  m.def("enum_plane_trees", [](int n) {
    std::vector<std::vector<int>> out;
    for (const auto& t : enum_plane_trees(n)) out.push_back(t.children);
    return out;
  });
  m.def(
      "run_experiment",
      [](const ArrivalLaw& law, double q, long long samples, int cap_height, int K, std::uint64_t seed) {
        SimConfig c;
        c.samples = samples;
        c.cap_height = cap_height;
        c.K = K;
        c.seed = seed;
        auto s = run_experiment(law, q, c);
        return py::dict("p_visits"_a = s.p_visits, "se_visits"_a = s.se_visits, "survival"_a = s.survival,
                        "survival_se"_a = s.survival_se, "median_flux"_a = s.median_flux,
                        "conservation_violations"_a = s.conservation_violations, "csv"_a = s.to_csv());
      },
      "law"_a, "q"_a, "samples"_a = 100000, "cap_height"_a = kDefaultCapHeight, "K"_a = 10, "seed"_a = 1);
  m.def(
      "run_criterion",
      [](int id, bool quick) {
        AcceptanceOptions opt;
        opt.quick = quick;
        auto r = run_criterion(id, opt);
        return py::dict("id"_a = r.id, "name"_a = r.name, "passed"_a = r.passed, "detail"_a = r.detail,
                        "seconds"_a = r.seconds);
      },
      "id"_a, "quick"_a = true);
}
