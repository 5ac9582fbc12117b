#include "skex/cluster.hpp"
#include "skex/config.hpp"
#include "skex/data.hpp"
#include "skex/error.hpp"
#include "skex/geometry.hpp"
#include "skex/grid.hpp"
#include "skex/iter.hpp"
#include "skex/metrics.hpp"
#include "skex/theory.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>

namespace py = pybind11;
using namespace skex;

namespace {

class PyPredictor : public Predictor {
public:
    using Predictor::Predictor;

    std::vector<double> predict(std::span<const Point> batch) const override {
        std::vector<Point> copy(batch.begin(), batch.end());
        return predict_list(copy);
    }

    virtual std::vector<double> predict_list(const std::vector<Point>& batch) const {
        PYBIND11_OVERRIDE_PURE_NAME(std::vector<double>, PyPredictor, "predict", predict_list, batch);
    }
};

RunConfig to_config(const std::map<std::string, py::object>& options) {
    RunConfig config;
    for (const auto& [key, value] : options) {
        config.set(key, py::str(value).cast<std::string>());
    }
    return config;
}

py::dict report_dict(const EvaluationReport& r) {
    py::dict d;
    d["method"] = r.method;
    d["rule_count"] = r.rule_count;
    d["fidelity_mae"] = r.fidelity_mae;
    d["fidelity_mse"] = r.fidelity_mse;
    d["fidelity_r2"] = r.fidelity_r2;
    d["predictive_mae"] = r.predictive_mae;
    d["coverage"] = r.coverage;
    return d;
}

std::vector<std::pair<double, double>> cube_pairs(const Hypercube& cube) {
    std::vector<std::pair<double, double>> out;
    for (const auto& iv : cube.bounds()) {
        out.emplace_back(iv.lo, iv.hi);
    }
    return out;
}

Theory extract(const std::string& method, const Dataset& data, const Predictor& oracle,
               const std::map<std::string, py::object>& options) {
    const RunConfig config = to_config(options);
    if (method == "iter") {
        return extract_iter(data, oracle, config.iter());
    }
    if (method == "grid" || method == "gridex" || method == "gridrex") {
        GridConfig grid = config.grid();
        if (method != "grid") {
            grid.output_kind = method == "gridex" ? OutputKind::constant : OutputKind::linear;
        }
        return extract_grid(data, oracle, grid);
    }
    if (method == "cluster") {
        return extract_clustered(data, oracle, config.cluster());
    }
    throw ConfigError("unknown method '" + method + "'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hypercube rule extraction from black-box regressors";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](const std::vector<Point>& x, const std::vector<double>& y,
                         std::vector<std::string> names) {
                 if (x.size() != y.size()) {
                     throw ContractError("Dataset: x and y lengths differ");
                 }
                 if (x.empty()) {
                     throw ContractError("Dataset: at least one sample required");
                 }
                 if (names.empty()) {
                     names = default_feature_names(x.front().size());
                 }
                 std::vector<Sample> samples;
                 for (std::size_t i = 0; i < x.size(); ++i) {
                     samples.push_back({x[i], y[i]});
                 }
                 return Dataset(std::move(samples), std::move(names));
             }),
             py::arg("x"), py::arg("y"), py::arg("feature_names") = std::vector<std::string>{})
        .def("__len__", &Dataset::size)
        .def_property_readonly("dim", &Dataset::dim)
        .def_property_readonly("x", &Dataset::inputs)
        .def_property_readonly("y", &Dataset::targets)
        .def_property_readonly("feature_names", &Dataset::feature_names)
        .def_property_readonly("domain", [](const Dataset& d) { return cube_pairs(d.domain().bounds); })
        .def("to_csv", [](const Dataset& d) { return to_csv(d); })
        .def("write_csv", [](const Dataset& d, const std::string& path) { write_csv(d, path); })
        .def_static("read_csv", [](const std::string& path) { return read_csv(path); })
        .def_static("parse_csv", &parse_csv);

    m.def(
        "generate",
        [](const std::string& spec, std::size_t n, double noise, std::uint64_t seed) {
            return generate(benchmark_spec(spec), n, noise, seed);
        },
        py::arg("spec"), py::arg("n") = 100, py::arg("noise") = 0.0, py::arg("seed") = 42,
        "Generate a built-in benchmark dataset.");
    m.def("benchmark_names", &benchmark_names);

    py::class_<Predictor, PyPredictor>(m, "Predictor")
        .def(py::init<>())
        .def("predict", [](const Predictor& p, const std::vector<Point>& batch) { return p.predict(batch); });

    py::class_<ExactPiecewise, Predictor>(m, "ExactOracle")
        .def(py::init([](const std::string& spec) { return ExactPiecewise(benchmark_spec(spec)); }),
             py::arg("spec"));

    py::class_<KNNRegressor, Predictor>(m, "KNNOracle")
        .def(py::init<const Dataset&, std::size_t>(), py::arg("training"), py::arg("k") = 5)
        .def_property_readonly("k", &KNNRegressor::k);

    py::class_<Theory>(m, "Theory")
        .def_property_readonly("rule_count", [](const Theory& t) { return t.rules.size(); })
        .def("predict", [](const Theory& t, const Point& x) { return predict_theory(t, x); })
        .def("predict_batch",
             [](const Theory& t, const std::vector<Point>& xs) { return predict_theory(t, xs); })
        .def("match", [](const Theory& t, const Point& x) { return t.match(x); })
        .def("render", &render, py::arg("precision") = 3)
        .def("to_json", [](const Theory& t) { return theory_to_json(t); })
        .def_static("from_json", &theory_from_json)
        .def("__str__", [](const Theory& t) { return render(t, 3); });

    m.def("extract", &extract, py::arg("method"), py::arg("dataset"), py::arg("oracle"),
          py::arg("config") = std::map<std::string, py::object>{},
          "Run one extractor ('iter', 'grid', 'gridex', 'gridrex', 'cluster') with flat config keys.");

    m.def(
        "evaluate",
        [](const Theory& t, const Dataset& d, const Predictor& o) { return report_dict(evaluate(t, d, o)); },
        py::arg("theory"), py::arg("dataset"), py::arg("oracle"));

    m.def(
        "compare",
        [](const Dataset& d, const Predictor& o, const std::map<std::string, py::object>& options) {
            py::list out;
            for (const auto& r : compare_methods(d, o, to_config(options).methods())) {
                out.append(report_dict(r));
            }
            return out;
        },
        py::arg("dataset"), py::arg("oracle"), py::arg("config") = std::map<std::string, py::object>{});

    m.def(
        "select_k",
        [](const Dataset& d, const Predictor& o, const std::map<std::string, py::object>& options) {
            return select_k(d, o, to_config(options).cluster());
        },
        py::arg("dataset"), py::arg("oracle"), py::arg("config") = std::map<std::string, py::object>{});

    m.def(
        "enclosing_cube",
        [](const std::vector<Point>& points, double trim) { return cube_pairs(enclosing_cube(points, trim)); },
        py::arg("points"), py::arg("trim_fraction") = 0.0);

    m.def(
        "fit_linear",
        [](const std::vector<Point>& xs, const std::vector<double>& ys) {
            const RuleOutput out = fit_linear(xs, ys);
            py::dict d;
            if (const auto* c = std::get_if<ConstantOutput>(&out)) {
                d["kind"] = "constant";
                d["value"] = c->value;
            } else {
                const auto& lin = std::get<LinearOutput>(out);
                d["kind"] = "linear";
                d["intercept"] = lin.intercept;
                d["coefficients"] = lin.coefficients;
            }
            return d;
        },
        py::arg("xs"), py::arg("ys"));

#ifdef SKEX_VERSION
    m.attr("__version__") = SKEX_VERSION;
#else
    m.attr("__version__") = "0.1.0";
#endif
}
