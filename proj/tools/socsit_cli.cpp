// socsit: run social-situation consensus experiments.
//
//   socsit simulate --config scenarios/crowd.conf --out-dir out
//   socsit replay   --config scenarios/triad_replay.conf --out-dir out
//   socsit sweep    --config scenarios/crowd.conf --param n_agents --values 10,20,30
//   socsit metrics  --protocol out/partitions.csv --truth truth.csv [--trace trace.csv]
//
// Exit codes: 0 ok, 1 configuration or input error, 2 runtime error.

#include <CLI11.hpp>
#include <iostream>
#include <set>

#include "socsit/log.hpp"
#include "socsit/scenario.hpp"
#include "socsit/trace_io.hpp"
#include "socsit/wire.hpp"

namespace {

using namespace socsit;

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string format = "csv";
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
    auto* opt = cmd->add_option("--config", c.config, "scenario file (key = value)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "override the scenario seed");
    cmd->add_option("--out-dir", c.out_dir, "output directory");
    cmd->add_option("--format", c.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_flag("--verbose,-v", c.verbose, "diagnostics on stderr");
}

OutputFormat format_of(const Common& c) { return c.format == "jsonl" ? OutputFormat::Jsonl : OutputFormat::Csv; }

Scenario load(const Common& c) {
    Scenario sc = load_scenario(c.config);
    if (c.seed) sc.seed = *c.seed;
    return sc;
}

int cmd_run(const Common& c, SourceKind expected) {
    Scenario sc = load(c);
    if (sc.source != expected) {
        throw ConfigError(c.config + ": source is '" +
                          (sc.source == SourceKind::Replay ? "replay" : "synthetic") + "', expected '" +
                          (expected == SourceKind::Replay ? "replay" : "synthetic") + "'");
    }
    const RunResult r = run(sc);
    write_outputs(r, c.out_dir, format_of(c));
    log_record("wrote " + std::to_string(r.metrics.size()) + " samples to " + c.out_dir);
    return 0;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::string cell;
    std::istringstream in(text);
    while (std::getline(in, cell, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(cell, &pos));
            if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ConfigError("bad sweep value '" + cell + "'");
        }
    }
    return out;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values) {
    const Scenario sc = load(c);
    const SweepParameter p = parse_sweep_parameter(param);
    const auto rows = sweep(sc, p, parse_values(values));
    std::filesystem::create_directories(c.out_dir);
    const auto name = std::string("sweep_") + to_string(p) + (c.format == "jsonl" ? ".jsonl" : ".csv");
    write_file_atomic(std::filesystem::path(c.out_dir) / name, sweep_text(rows, p, format_of(c)));
    return 0;
}

// Offline comparison of two partition files in the truth schema. The
// universe per time is the trace frame when given, else every id named in
// either file at that time.
int cmd_metrics(const Common& c, const std::string& protocol, const std::string& truth,
                const std::string& trace) {
    const auto proto_rows = read_partition_rows(protocol);
    const auto truth_rows = read_partition_rows(truth);
    std::map<Time, std::set<AgentId>> universe;
    if (!trace.empty()) {
        for (const auto& f : ingest_trace(trace, std::nullopt).frames) {
            for (const auto& a : f.agents) universe[f.time].insert(a.id);
        }
    } else {
        for (const auto* rows : {&proto_rows, &truth_rows}) {
            for (const auto& [t, blocks] : *rows) {
                for (const auto& b : blocks) universe[t].insert(b.begin(), b.end());
            }
        }
    }
    auto build = [&](const std::map<Time, std::vector<std::vector<AgentId>>>& rows, Time t,
                     const std::set<AgentId>& ids) {
        std::vector<std::vector<AgentId>> blocks;
        std::set<AgentId> placed;
        if (auto it = rows.find(t); it != rows.end()) {
            for (const auto& b : it->second) {
                blocks.push_back(b);
                placed.insert(b.begin(), b.end());
            }
        }
        for (AgentId a : ids) {
            if (!placed.contains(a)) blocks.push_back({a});
        }
        return Partition(std::move(blocks));
    };

    std::vector<MetricsRow> out;
    for (const auto& [t, ids] : universe) {
        const Partition p = build(proto_rows, t, ids);
        const Partition q = build(truth_rows, t, ids);
        if (p.element_count() != q.element_count()) {
            throw ConfigError("time " + format_time(t) + ": partitions cover different agents");
        }
        MetricsRow row;
        row.time = t;
        row.rand = rand_index(p, q);
        row.ari = adjusted_rand_index(p, q);
        row.jaccard = jaccard_index(p, q);
        row.truth_situations = q.situation_count();
        row.protocol_situations = p.situation_count();
        row.false_positive_pairs = pair_counts(p, q).only_first;
        out.push_back(row);
    }
    std::cout << metrics_text(out, format_of(c));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Social-situation consensus simulator"};
    app.require_subcommand(1);

    Common sim_opts, replay_opts, sweep_opts, metrics_opts;
    auto* sim = app.add_subcommand("simulate", "run a synthetic scenario");
    add_common(sim, sim_opts, true);
    auto* replay = app.add_subcommand("replay", "replay a recorded trace");
    add_common(replay, replay_opts, true);

    auto* sw = app.add_subcommand("sweep", "one run per parameter value");
    add_common(sw, sweep_opts, true);
    std::string param, values;
    sw->add_option("--param", param, "moving_group_ratio | n_agents | loss | noise")->required();
    sw->add_option("--values", values, "comma-separated values")->required();

    auto* met = app.add_subcommand("metrics", "compare partition files offline");
    add_common(met, metrics_opts, false);
    std::string protocol_file, truth_file, trace_file;
    met->add_option("--protocol", protocol_file)->required()->check(CLI::ExistingFile);
    met->add_option("--truth", truth_file)->required()->check(CLI::ExistingFile);
    met->add_option("--trace", trace_file)->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    const Common* active = sim->parsed()      ? &sim_opts
                            : replay->parsed() ? &replay_opts
                            : sw->parsed()     ? &sweep_opts
                                               : &metrics_opts;
    if (active->verbose) {
        set_log_sink([](std::string_view msg) { std::cerr << msg << '\n'; });
    }

    try {
        if (sim->parsed()) return cmd_run(sim_opts, SourceKind::Synthetic);
        if (replay->parsed()) return cmd_run(replay_opts, SourceKind::Replay);
        if (sw->parsed()) return cmd_sweep(sweep_opts, param, values);
        return cmd_metrics(metrics_opts, protocol_file, truth_file, trace_file);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SchemaError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
