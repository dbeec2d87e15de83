#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hottbandit/acceptance.hpp"
#include "hottbandit/errors.hpp"
#include "hottbandit/harness.hpp"

namespace py = pybind11;
namespace hb = hottbandit;

namespace {

hb::RegretMode metric_of(const std::string& s) {
    if (s == "simple") return hb::RegretMode::simple;
    if (s == "general") return hb::RegretMode::general;
    throw hb::ParameterError("metric must be 'simple' or 'general'");
}

std::vector<std::pair<std::string, std::string>> stringify(const py::dict& params) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto [k, v] : params) {
        std::string value;
        if (py::isinstance<py::bool_>(v))
            value = v.cast<bool>() ? "true" : "false";
        else
            value = py::str(v).cast<std::string>();
        out.emplace_back(py::str(k).cast<std::string>(), value);
    }
    return out;
}

py::dict trace_dict(const hb::Cell& c) {
    py::dict d;
    d["policy"] = c.policy;
    d["seed"] = c.seed;
    d["rounds"] = c.rounds;
    d["general"] = c.trace.general;
    d["simple"] = c.trace.simple;
    d["phase"] = c.trace.phase;
    d["seconds"] = c.seconds;
    return d;
}

py::dict curve_dict(const hb::PolicyCurve& c) {
    py::dict d;
    d["policy"] = c.policy;
    d["replicates"] = c.replicates;
    d["rounds"] = c.rounds;
    d["mean_general"] = c.mean_general;
    d["se_general"] = c.se_general;
    d["mean_simple"] = c.mean_simple;
    d["se_simple"] = c.se_simple;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Collaborative bandits with hott items: instances, policies, experiments";

    py::register_exception<hb::ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<hb::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<hb::ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);
    py::register_exception<hb::GenerationError>(m, "GenerationError", PyExc_RuntimeError);

    py::class_<hb::RewardModel>(m, "RewardModel")
        .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd, std::vector<int>, double, bool>(),
             py::arg("U"), py::arg("V"), py::arg("hott"), py::arg("sigma2") = 0.0,
             py::arg("unnormalized") = false)
        .def_property_readonly("users", &hb::RewardModel::users)
        .def_property_readonly("items", &hb::RewardModel::items)
        .def_property_readonly("rank", &hb::RewardModel::rank)
        .def_property_readonly("U", &hb::RewardModel::U)
        .def_property_readonly("V", &hb::RewardModel::V)
        .def_property_readonly("rewards", &hb::RewardModel::rewards)
        .def_property_readonly("hott", &hb::RewardModel::hott)
        .def_property_readonly("sigma2", &hb::RewardModel::sigma2)
        .def_property_readonly("unnormalized", &hb::RewardModel::unnormalized)
        .def("rescaled", &hb::RewardModel::rescaled)
        .def("with_noise", &hb::RewardModel::with_noise, py::arg("sigma2"))
        .def("save", [](const hb::RewardModel& self, const std::string& path) {
            hb::save_instance(path, self);
        })
        .def("__eq__", [](const hb::RewardModel& a, const hb::RewardModel& b) { return a == b; })
        .def("__repr__", [](const hb::RewardModel& self) {
            std::ostringstream s;
            s << "<RewardModel M=" << self.users() << " N=" << self.items() << " r=" << self.rank()
              << " sigma2=" << self.sigma2() << ">";
            return s.str();
        });

    m.def("block_instance", &hb::generate_block_instance, py::arg("M"), py::arg("N"),
          py::arg("r"), py::arg("seed"), py::arg("sigma2") = 0.0);
    m.def(
        "simplex_instance",
        [](int M, int N, int r, std::uint64_t seed, double margin, double sigma2,
           const std::string& fill) {
            if (fill != "face" && fill != "interior")
                throw hb::ParameterError("fill must be 'face' or 'interior'");
            return hb::generate_simplex_instance(
                M, N, r, seed, margin, sigma2,
                fill == "face" ? hb::SimplexFill::face : hb::SimplexFill::interior);
        },
        py::arg("M"), py::arg("N"), py::arg("r"), py::arg("seed"), py::arg("margin") = 0.2,
        py::arg("sigma2") = 0.0, py::arg("fill") = "face");
    m.def("eq7_instance", &hb::eq7_instance, py::arg("p") = 0.5, py::arg("eps") = 0.2,
          py::arg("replicas") = 1, py::arg("sigma2") = 0.0);
    m.def("load_instance", &hb::load_instance, py::arg("path"));

    m.def(
        "compute_gaps",
        [](const hb::RewardModel& model, double cap) {
            const auto g = hb::compute_gaps(model, cap);
            py::dict d;
            d["delta"] = g.delta;
            d["delta_hott"] = g.delta_hott;
            d["delta_det"] = g.delta_det;
            d["kappa"] = g.kappa;
            d["cluster_sizes"] = g.cluster_sizes;
            d["opinionated_users"] = g.opinionated_users;
            d["degenerate"] = g.degenerate;
            return d;
        },
        py::arg("model"), py::arg("enumeration_cap") = 1e6);
    m.def(
        "verify_hott",
        [](const hb::RewardModel& model) {
            const auto h = hb::verify_hott(model);
            return py::make_tuple(h.ok, h.first_infeasible);
        },
        py::arg("model"));
    m.def(
        "best_worst_items",
        [](const hb::RewardModel& model) {
            std::vector<std::pair<int, int>> out;
            for (const auto& bw : hb::best_worst_items(model)) out.emplace_back(bw.best, bw.worst);
            return out;
        },
        py::arg("model"));

    m.def(
        "simulate",
        [](const hb::RewardModel& model, const std::string& kind, int horizon,
           std::uint64_t seed, const py::dict& params, int stride) {
            const auto policy = hb::make_policy(kind, kind, stringify(params));
            hb::Cell cell;
            {
                py::gil_scoped_release release;
                cell = hb::run_policy(policy, model, seed, horizon, stride);
            }
            return trace_dict(cell);
        },
        py::arg("model"), py::arg("policy"), py::arg("horizon"), py::arg("seed") = 0,
        py::arg("params") = py::dict(), py::arg("stride") = 1,
        "Runs one policy (pce, detelim, etc, am, pes) and returns its regret trace.");

    m.def(
        "run_config",
        [](const std::string& text, int threads, const std::string& csv_path) {
            std::istringstream in(text);
            const auto cfg = hb::parse_config(in);
            hb::RunResult res;
            {
                py::gil_scoped_release release;
                res = hb::run_experiment(cfg, threads);
            }
            if (!csv_path.empty()) hb::emit_csv(res, csv_path);
            py::dict d;
            d["run_id"] = res.run_id;
            py::list cells, curves;
            for (const auto& c : res.cells) {
                auto t = trace_dict(c);
                t["error"] = c.error;
                cells.append(t);
            }
            for (const auto& c : res.curves) curves.append(curve_dict(c));
            d["cells"] = cells;
            d["curves"] = curves;
            d["seconds"] = res.seconds;
            return d;
        },
        py::arg("text"), py::arg("threads") = 1, py::arg("csv_path") = "",
        "Parses a config given as text, runs it and returns traces and curves.");

    m.def(
        "plot_csv",
        [](const std::string& csv_path, const std::string& svg_path, const std::string& metric) {
            std::string run_id;
            const auto cells = hb::load_csv(csv_path, &run_id);
            hb::RunResult res;
            res.run_id = run_id;
            res.curves = hb::aggregate(cells);
            hb::emit_plot(res, svg_path, metric_of(metric));
        },
        py::arg("csv_path"), py::arg("svg_path"), py::arg("metric") = "simple");

    m.def(
        "accept",
        [](const std::vector<int>& only, int threads) {
            hb::AcceptanceOptions opt;
            opt.only.insert(only.begin(), only.end());
            opt.threads = threads;
            std::vector<hb::CriterionResult> results;
            {
                py::gil_scoped_release release;
                results = hb::run_acceptance(opt);
            }
            py::list out;
            for (const auto& r : results) {
                py::dict d;
                d["id"] = r.id;
                d["name"] = r.name;
                d["passed"] = r.pass;
                d["detail"] = r.detail;
                d["seconds"] = r.seconds;
                out.append(d);
            }
            return out;
        },
        py::arg("only") = std::vector<int>{}, py::arg("threads") = 1);
}
