#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "osgrf/config.hpp"
#include "osgrf/errors.hpp"
#include "osgrf/graph_field.hpp"
#include "osgrf/limit_field.hpp"
#include "osgrf/montecarlo.hpp"
#include "osgrf/qtable.hpp"
#include "osgrf/regime.hpp"
#include "osgrf/spectral_model.hpp"

namespace py = pybind11;
using namespace osgrf;

namespace {

// Reports go through their JSON form so Python sees the same keys as the CLI.
py::object as_python(const Json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

RegimeReport regime_of(const std::vector<double>& alphas, std::optional<std::vector<double>> alpha_primes)
{
    return classify(alphas, alpha_primes ? *alpha_primes : alphas);
}

std::vector<std::int64_t> shape_of(const std::vector<std::int64_t>& extents)
{
    // colex storage, axis 0 fastest: numpy shape is the reversed extents
    return {extents.rbegin(), extents.rend()};
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Operator-scaling Gaussian random fields from long-range ancestor graphs";
    m.attr("__version__") = OSGRF_VERSION;

    auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<ResourceError>(m, "ResourceError", PyExc_MemoryError);
    (void)base;

    py::class_<SpectralModel>(m, "SpectralModel")
        .def_static("product_pareto", &SpectralModel::product_pareto, py::arg("alphas"), py::arg("p") = 0.5,
                    py::arg("gammas") = std::vector<double>{})
        .def_static(
            "custom",
            [](std::vector<double> alphas, const std::vector<std::pair<std::vector<std::int64_t>, double>>& pmf, double p) {
                std::vector<PmfEntry> table;
                for (const auto& [k, prob] : pmf) {
                    if (k.size() != alphas.size()) throw ConfigError("pmf point has the wrong dimension");
                    PmfEntry e;
                    for (std::size_t a = 0; a < k.size(); ++a) e.k[a] = k[a];
                    e.prob = prob;
                    table.push_back(e);
                }
                return SpectralModel::custom(std::move(alphas), {}, std::move(table), p);
            },
            py::arg("alphas"), py::arg("pmf"), py::arg("p") = 0.5)
        .def_property_readonly("dim", &SpectralModel::dim)
        .def_property_readonly("p", &SpectralModel::p)
        .def_property_readonly("gammas", [](const SpectralModel& s) { return std::vector<double>(s.gammas().begin(), s.gammas().end()); })
        .def("log_psi", [](const SpectralModel& s, const std::vector<double>& x) { return s.log_psi(x); })
        .def("one_minus_P", [](const SpectralModel& s, const std::vector<double>& x) { return s.one_minus_P(std::span<const double>(x)); })
        .def("tail_mass_outside_box", &SpectralModel::tail_mass_outside_box);

    m.def(
        "classify",
        [](const std::vector<double>& alphas, std::optional<std::vector<double>> alpha_primes) {
            return as_python(to_json(regime_of(alphas, alpha_primes)));
        },
        py::arg("alphas"), py::arg("alpha_primes") = py::none(),
        "Regime report for E = diag(1/alpha), E' = diag(1/alpha'); alpha' defaults to alpha.");

    m.def(
        "sheet_case",
        [](double a1, double a2, double a2p) {
            const auto r = sheet_case(a1, a2, a2p);
            py::dict d;
            d["case"] = to_string(r.case_id);
            d["beta"] = r.beta;
            d["H1"] = r.H1;
            d["H2"] = r.H2;
            return d;
        },
        py::arg("alpha1"), py::arg("alpha2"), py::arg("alpha2_prime"));

    m.def(
        "qtable",
        [](const SpectralModel& model, std::int64_t extent) {
            const QTable t = build_qtable(model, extent);
            std::vector<std::int64_t> shape(t.dim, t.side());
            py::array_t<double> values(shape);
            std::copy(t.values.begin(), t.values.end(), values.mutable_data());
            py::dict d;
            d["values"] = values;
            d["sum_sq"] = t.sum_sq;
            d["sigma_x2"] = sigma_x2(t, model.p());
            d["pmf_tail_mass"] = t.pmf_tail_mass;
            return d;
        },
        py::arg("model"), py::arg("extent"),
        "q_k on [0, extent]^d; array axes are reversed (last axis is coordinate 1).");

    m.def(
        "exact_sum_sq", [](const SpectralModel& model) { return exact_sum_sq(model).value; }, py::arg("model"));
    m.def("sigma_x2_from_sum_sq", &sigma_x2_from_sum_sq, py::arg("sum_sq"), py::arg("p"));
    m.def("C_H", &C_H, py::arg("H"));

    m.def(
        "cov_W",
        [](const SpectralModel& model, std::optional<std::vector<double>> alpha_primes, double sigma_x2,
           const std::vector<double>& t, const std::vector<double>& s) {
            const std::vector<double> a(model.exponent().alphas.begin(), model.exponent().alphas.end());
            const auto r = cov_W(regime_of(a, alpha_primes), model, sigma_x2, t, s);
            return py::make_tuple(r.value, r.error);
        },
        py::arg("model"), py::arg("alpha_primes"), py::arg("sigma_x2"), py::arg("t"), py::arg("s"),
        "Limit covariance Cov(W(t), W(s)) by quadrature; returns (value, error estimate).");

    m.def(
        "closed_form_cov",
        [](const SpectralModel& model, std::optional<std::vector<double>> alpha_primes, double sigma_x2,
           const std::vector<double>& t, const std::vector<double>& s) {
            const std::vector<double> a(model.exponent().alphas.begin(), model.exponent().alphas.end());
            return closed_form_cov(regime_of(a, alpha_primes), model, sigma_x2, t, s);
        },
        py::arg("model"), py::arg("alpha_primes"), py::arg("sigma_x2"), py::arg("t"), py::arg("s"));

    m.def(
        "simulate_window",
        [](const SpectralModel& model, const std::vector<std::int64_t>& extents, std::uint64_t seed,
           std::int64_t buffer_depth) {
            WindowOptions opt;
            opt.buffer_depth = buffer_depth;
            FieldWindow w;
            {
                py::gil_scoped_release release;
                w = simulate_window(model, extents, seed, opt);
            }
            py::array_t<std::int8_t> values(shape_of(extents));
            std::copy(w.values.begin(), w.values.end(), values.mutable_data());
            py::array_t<std::uint32_t> ids(shape_of(extents));
            std::copy(w.component_id.begin(), w.component_id.end(), ids.mutable_data());
            py::dict d;
            d["values"] = values;
            d["component_id"] = ids;
            d["total_components"] = w.total_components;
            d["truncated_components"] = w.truncated_components;
            d["buffer_depth"] = w.buffer_depth;
            return d;
        },
        py::arg("model"), py::arg("extents"), py::arg("seed"), py::arg("buffer_depth") = 0,
        "One +-1 field on the window; arrays have reversed axes (last axis is coordinate 1).");

    m.def(
        "synthesize_W",
        [](const SpectralModel& model, std::optional<std::vector<double>> alpha_primes, double sigma_x2,
           const std::vector<std::vector<double>>& t_grid, std::uint64_t seed, std::size_t realizations) {
            const std::vector<double> a(model.exponent().alphas.begin(), model.exponent().alphas.end());
            SynthesisResult r;
            {
                py::gil_scoped_release release;
                r = synthesize_W(regime_of(a, alpha_primes), model, sigma_x2, t_grid, {}, seed, realizations);
            }
            py::array_t<double> out({r.realizations, r.t_grid.size()});
            std::copy(r.values.begin(), r.values.end(), out.mutable_data());
            return out;
        },
        py::arg("model"), py::arg("alpha_primes"), py::arg("sigma_x2"), py::arg("t_grid"), py::arg("seed"),
        py::arg("realizations"), "Samples of W on t_grid, shape (realizations, points).");

    m.def(
        "verify_identities",
        [](const SpectralModel& model, std::size_t replicas, std::uint64_t seed) {
            IdentityConfig c;
            c.replicas = replicas;
            c.seed = seed;
            IdentityReport r;
            {
                py::gil_scoped_release release;
                r = verify_identities(model, c);
            }
            return as_python(to_json(r));
        },
        py::arg("model"), py::arg("replicas") = 10000, py::arg("seed") = 0);
}
