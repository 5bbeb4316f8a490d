#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "socsit/metrics.hpp"
#include "socsit/mobility.hpp"
#include "socsit/opinion.hpp"
#include "socsit/protocol.hpp"
#include "socsit/scenario.hpp"
#include "socsit/trace_io.hpp"

namespace py = pybind11;
using namespace socsit;

namespace {

using Blocks = std::vector<std::vector<std::uint64_t>>;

Partition to_partition(const Blocks& raw) {
    std::vector<std::vector<AgentId>> blocks;
    for (const auto& b : raw) {
        std::vector<AgentId> ids;
        for (auto v : b) ids.emplace_back(v);
        blocks.push_back(std::move(ids));
    }
    return Partition(std::move(blocks));
}

Blocks from_partition(const Partition& p) {
    Blocks out;
    for (const auto& b : p.blocks()) {
        auto& row = out.emplace_back();
        for (auto id : b) row.push_back(id.value);
    }
    return out;
}

py::dict run_result(const RunResult& r) {
    py::list metrics;
    for (const auto& m : r.metrics) {
        py::dict row;
        row["time"] = to_seconds(m.time);
        row["rand"] = m.rand;
        row["ari"] = m.ari;
        row["jaccard"] = m.jaccard;
        row["n_situations_truth"] = m.truth_situations;
        row["n_situations_protocol"] = m.protocol_situations;
        row["false_positive_pairs"] = m.false_positive_pairs;
        metrics.append(row);
    }
    py::list partitions;
    for (const auto& [t, p] : r.partitions) partitions.append(py::make_tuple(to_seconds(t), from_partition(p)));
    py::dict out;
    out["metrics"] = metrics;
    out["partitions"] = partitions;
    out["messages"] = r.log.emissions.size();
    return out;
}

}  // namespace

PYBIND11_MODULE(_socsit, m) {
    m.doc() = "Social-situation consensus simulator";

    py::register_exception<OpinionError>(m, "OpinionError", PyExc_ValueError);
    py::register_exception<MetricsError>(m, "MetricsError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

    py::class_<Opinion>(m, "Opinion")
        .def(py::init(&Opinion::make), py::arg("belief"), py::arg("disbelief"), py::arg("uncertainty"),
             py::arg("base_rate") = 0.5)
        .def_readonly("belief", &Opinion::belief)
        .def_readonly("disbelief", &Opinion::disbelief)
        .def_readonly("uncertainty", &Opinion::uncertainty)
        .def_readonly("base_rate", &Opinion::base_rate)
        .def("expectation", &expectation)
        .def("__eq__", [](const Opinion& a, const Opinion& b) { return a == b; })
        .def("__repr__", [](const Opinion& op) { return "Opinion(" + format_opinion(op) + ")"; });

    m.def("expectation", &expectation);
    m.def("fuse_cumulative", &fuse_cumulative);
    m.def("fuse_averaging", &fuse_averaging);
    m.def("fuse_averaging_multi", [](const std::vector<Opinion>& ops) { return fuse_averaging_multi(ops); });
    m.def("floor_uncertainty", &floor_uncertainty, py::arg("opinion"), py::arg("u_min"));
    m.def("decide", &decide, py::arg("opinion"), py::arg("threshold"));

    m.def("resolve_conflict", [](std::uint64_t a, std::uint64_t b) {
        return resolve_conflict(AgentId{a}, AgentId{b}).value;
    });

    m.def("rand_index", [](const Blocks& p, const Blocks& q) { return rand_index(to_partition(p), to_partition(q)); });
    m.def("adjusted_rand_index",
          [](const Blocks& p, const Blocks& q) { return adjusted_rand_index(to_partition(p), to_partition(q)); });
    m.def("jaccard_index",
          [](const Blocks& p, const Blocks& q) { return jaccard_index(to_partition(p), to_partition(q)); });

    m.def(
        "force_step",
        [](const std::vector<std::pair<double, double>>& pts, std::pair<double, double> center, double k_center,
           double k_repel, double dt, double max_step) {
            std::vector<Point> in;
            for (auto [x, y] : pts) in.push_back({x, y});
            std::vector<std::pair<double, double>> out;
            for (const auto& p : force_step(in, {center.first, center.second}, {k_center, k_repel, dt, max_step})) {
                out.emplace_back(p.x, p.y);
            }
            return out;
        },
        py::arg("points"), py::arg("center"), py::arg("k_center") = 1.0, py::arg("k_repel") = 0.5,
        py::arg("dt") = 0.1, py::arg("max_step") = 0.14);

    // frames: [(time_s, [(id, x, y, angle), ...]), ...]; truth: one block list per frame
    m.def(
        "generate",
        [](std::size_t n_agents, double duration, double dt, std::uint64_t seed, double moving_group_ratio) {
            MobilityConfig cfg;
            cfg.n_agents = n_agents;
            cfg.seed = seed;
            cfg.moving_group_ratio = moving_group_ratio;
            const Trace t = generate(cfg, duration, dt);
            py::list frames, truth;
            for (const auto& f : t.frames) {
                py::list agents;
                for (const auto& a : f.agents) agents.append(py::make_tuple(a.id.value, a.x, a.y, a.shoulder_angle));
                frames.append(py::make_tuple(to_seconds(f.time), agents));
            }
            for (const auto& p : t.truth) truth.append(from_partition(p));
            return py::make_tuple(frames, truth);
        },
        py::arg("n_agents"), py::arg("duration"), py::arg("dt") = 0.2, py::arg("seed") = 1,
        py::arg("moving_group_ratio") = 0.3);

    m.def(
        "run_scenario",
        [](const std::string& text, const std::string& base_dir) {
            const Scenario sc = parse_scenario(text, base_dir);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(sc);
            }
            return run_result(r);
        },
        py::arg("text"), py::arg("base_dir") = "");
    m.def("run_scenario_file", [](const std::string& path) {
        const Scenario sc = load_scenario(path);
        RunResult r;
        {
            py::gil_scoped_release release;
            r = run(sc);
        }
        return run_result(r);
    });
}
