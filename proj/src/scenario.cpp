#include "socsit/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "socsit/log.hpp"
#include "socsit/trace_io.hpp"
#include "socsit/wire.hpp"

namespace socsit {

namespace fs = std::filesystem;

namespace {

// Per-subsystem seed salts, so one scenario seed drives independent streams.
constexpr std::uint64_t kNetSalt = 0x6e657473696d0001ULL;
constexpr std::uint64_t kPerceptSalt = 0x7065726365707402ULL;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, sep)) out.push_back(trim(cell));
    return out;
}

struct Parser {
    std::string name;
    std::size_t line = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(name, line, what); }

    double number(const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos == v.size() && std::isfinite(x)) return x;
        } catch (const std::exception&) {
        }
        fail("not a number: '" + v + "'");
    }

    std::uint64_t integer(const std::string& v) const {
        try {
            std::size_t pos = 0;
            const auto x = std::stoull(v, &pos, 0);
            if (pos == v.size() && v.front() != '-') return x;
        } catch (const std::exception&) {
        }
        fail("not a non-negative integer: '" + v + "'");
    }

    bool boolean(const std::string& v) const {
        if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "off" || v == "no") return false;
        fail("not a boolean: '" + v + "'");
    }

    Duration seconds(const std::string& v) const {
        const double s = number(v);
        if (s < 0.0) fail("duration must be non-negative");
        return seconds_to_duration(s);
    }

    std::vector<double> numbers(const std::string& v) const {
        std::vector<double> out;
        for (const auto& cell : split(v, ',')) out.push_back(number(cell));
        return out;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string opt_cell(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

template <class T>
std::string opt_int(const std::optional<T>& v) {
    return v ? std::to_string(*v) : std::string();
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

ConfigError::ConfigError(const std::string& where, std::size_t line, const std::string& what)
    : std::runtime_error(where + ":" + std::to_string(line) + ": " + what), line_(line) {}

void Scenario::validate() const {
    try {
        protocol.validate();
        net.validate();
        percept.validate();
        if (source == SourceKind::Synthetic) mobility.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (percept.observation_radius > net.comm_range) {
        throw ConfigError("percept.observation_radius exceeds net.comm_range");
    }
    if (dt <= Duration::zero()) throw ConfigError("dt must be positive");
    if (protocol.period.count() % dt.count() != 0) {
        throw ConfigError("dt must divide the protocol period");
    }
    if (sampling() <= Duration::zero()) throw ConfigError("sample_interval must be positive");
    if (source == SourceKind::Synthetic && !(duration >= 0.0)) {
        throw ConfigError("duration must be non-negative");
    }
    if (source == SourceKind::Replay) {
        if (trace_path.empty()) throw ConfigError("replay scenario needs a trace file");
        if (!fs::exists(trace_path)) throw ConfigError("trace file not found: " + trace_path);
        if (truth_path && !fs::exists(*truth_path)) {
            throw ConfigError("ground-truth file not found: " + *truth_path);
        }
    }
}

Scenario parse_scenario(const std::string& text, const fs::path& base_dir, const std::string& name) {
    Scenario sc;
    Parser p{name, 0};
    std::optional<Duration> denial, head_ttl, opinion_ttl;
    std::optional<double> base_rate;
    std::set<std::string> seen;

    auto resolve = [&](const std::string& v) {
        const fs::path path(v);
        return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).string();
    };

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++p.line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) p.fail("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (key.empty()) p.fail("empty key");
        if (v.empty()) p.fail("empty value for '" + key + "'");
        if (!seen.insert(key).second) p.fail("duplicate key '" + key + "'");

        auto& m = sc.mobility;
        auto& pc = sc.protocol;
        auto& pe = sc.percept;

        if (key == "source") {
            if (v == "synthetic") sc.source = SourceKind::Synthetic;
            else if (v == "replay") sc.source = SourceKind::Replay;
            else p.fail("source must be 'synthetic' or 'replay'");
        } else if (key == "trace") {
            sc.trace_path = resolve(v);
        } else if (key == "truth") {
            sc.truth_path = resolve(v);
        } else if (key == "duration") {
            sc.duration = p.number(v);
        } else if (key == "dt") {
            sc.dt = p.seconds(v);
        } else if (key == "sample_interval") {
            sc.sample_interval = p.seconds(v);
        } else if (key == "seed") {
            sc.seed = p.integer(v);
        } else if (key == "protocol.period") {
            pc.period = p.seconds(v);
        } else if (key == "protocol.request_threshold") {
            pc.request_threshold = p.number(v);
        } else if (key == "protocol.accept_threshold") {
            pc.accept_threshold = p.number(v);
        } else if (key == "protocol.social_distance") {
            pc.social_distance = p.number(v);
        } else if (key == "protocol.denial_ttl") {
            denial = p.seconds(v);
        } else if (key == "protocol.head_knowledge_ttl") {
            head_ttl = p.seconds(v);
        } else if (key == "protocol.opinion_ttl") {
            opinion_ttl = p.seconds(v);
        } else if (key == "protocol.u_min") {
            pc.u_min = p.number(v);
        } else if (key == "protocol.base_rate") {
            base_rate = p.number(v);
        } else if (key == "protocol.detach_extension") {
            pc.detach_extension = p.boolean(v);
        } else if (key == "protocol.stable_handover") {
            pc.stable_handover = p.boolean(v);
        } else if (key == "protocol.direct_to_head_routing") {
            pc.direct_to_head_routing = p.boolean(v);
        } else if (key == "net.comm_range") {
            sc.net.comm_range = p.number(v);
        } else if (key == "net.loss") {
            sc.net.loss_probability = p.number(v);
        } else if (key == "net.latency_ticks") {
            sc.net.latency_ticks = static_cast<int>(p.integer(v));
        } else if (key == "percept.model") {
            if (v == "parametric") pe.model = PerceptModel::Parametric;
            else if (v == "gmm") pe.model = PerceptModel::GaussianMixture;
            else p.fail("percept.model must be 'parametric' or 'gmm'");
        } else if (key == "percept.gmm_file") {
            std::ifstream gin(resolve(v));
            if (!gin) p.fail("cannot open GMM file '" + v + "'");
            std::stringstream buf;
            buf << gin.rdbuf();
            try {
                pe.gmm = GmmModel::from_json(buf.str());
            } catch (const DegenerateData& e) {
                p.fail(e.what());
            }
        } else if (key == "percept.distance_midpoint") {
            pe.distance_midpoint = p.number(v);
        } else if (key == "percept.distance_steepness") {
            pe.distance_steepness = p.number(v);
        } else if (key == "percept.facing_weight") {
            pe.facing_weight = p.number(v);
        } else if (key == "percept.base_uncertainty") {
            pe.base_uncertainty = p.number(v);
        } else if (key == "percept.noise_pos") {
            pe.noise_sigma_pos = p.number(v);
        } else if (key == "percept.noise_angle") {
            pe.noise_sigma_angle = p.number(v);
        } else if (key == "percept.observation_radius") {
            pe.observation_radius = p.number(v);
        } else if (key == "mobility.width") {
            m.width = p.number(v);
        } else if (key == "mobility.height") {
            m.height = p.number(v);
        } else if (key == "mobility.n_agents") {
            m.n_agents = p.integer(v);
        } else if (key == "mobility.alpha") {
            m.gauss_markov_alpha = p.number(v);
        } else if (key == "mobility.heading_sigma") {
            m.heading_sigma = p.number(v);
        } else if (key == "mobility.speed_sigma") {
            m.speed_sigma = p.number(v);
        } else if (key == "mobility.formation_rate") {
            m.group_formation_rate = p.number(v);
        } else if (key == "mobility.group_sizes") {
            m.group_size_distribution.clear();
            for (const auto& cell : split(v, ',')) {
                const auto parts = split(cell, ':');
                if (parts.size() != 2) p.fail("group_sizes entries are 'size:probability'");
                m.group_size_distribution.emplace_back(p.integer(parts[0]), p.number(parts[1]));
            }
        } else if (key == "mobility.speeds") {
            m.speed_chain.speeds = p.numbers(v);
        } else if (key == "mobility.speed_transition") {
            m.speed_chain.transition.clear();
            for (const auto& row : split(v, ';')) m.speed_chain.transition.push_back(p.numbers(row));
        } else if (key == "mobility.resting_min") {
            m.resting_duration_min = p.number(v);
        } else if (key == "mobility.resting_max") {
            m.resting_duration_max = p.number(v);
        } else if (key == "mobility.moving_group_ratio") {
            m.moving_group_ratio = p.number(v);
        } else if (key == "mobility.group_speed") {
            m.group_speed = p.number(v);
        } else if (key == "mobility.k_center") {
            m.force_k_center = p.number(v);
        } else if (key == "mobility.k_repel") {
            m.force_k_repel = p.number(v);
        } else if (key == "mobility.interaction_distance") {
            m.interaction_distance = p.number(v);
        } else if (key == "mobility.angle_jitter") {
            m.angle_jitter_sigma = p.number(v);
        } else if (key == "mobility.label_waiting_phase") {
            m.label_waiting_phase = p.boolean(v);
        } else if (key.starts_with("agent.")) {
            const AgentId id{p.integer(key.substr(6))};
            try {
                sc.kinds[id] = parse_agent_kind(v);
            } catch (const ProtocolError& e) {
                p.fail(e.what());
            }
        } else if (key.starts_with("depart.")) {
            sc.departures[AgentId{p.integer(key.substr(7))}] = p.seconds(v);
        } else {
            p.fail("unknown key '" + key + "'");
        }
    }

    const Duration period = sc.protocol.period;
    sc.protocol.denial_ttl = denial.value_or(10 * period);
    sc.protocol.head_knowledge_ttl = head_ttl.value_or(5 * period);
    sc.protocol.opinion_ttl = opinion_ttl.value_or(3 * period);
    if (base_rate) {
        sc.protocol.base_rate = *base_rate;
        sc.percept.base_rate = *base_rate;
    }
    if (sc.percept.model == PerceptModel::GaussianMixture && !sc.percept.gmm) {
        throw ConfigError(name, p.line, "percept.model = gmm needs percept.gmm_file");
    }
    sc.validate();
    return sc;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.parent_path(), path.string());
}

Partition protocol_partition(const Network& net) {
    std::vector<std::vector<AgentId>> blocks;
    std::set<AgentId> placed;
    for (const auto& [id, agent] : net.agents()) {
        const auto& s = agent.state();
        if (s.kind != AgentKind::HumanLinked || s.role != Role::ClusterHead) continue;
        std::vector<AgentId> block{id};
        for (AgentId m : s.human_members) {
            if (m == id || placed.contains(m) || !net.has_agent(m)) continue;
            const auto& ms = net.agent(m).state();
            const bool agreed = ms.kind == AgentKind::HumanLinked && ms.role == Role::Member &&
                                ms.head_id == id && s.members.contains(m);
            const bool detached = ms.kind == AgentKind::HumanWithoutAgent;
            if (agreed || detached) block.push_back(m);
        }
        placed.insert(block.begin(), block.end());
        blocks.push_back(std::move(block));
    }
    for (const auto& [id, agent] : net.agents()) {
        if (agent.state().kind == AgentKind::OpinionProvider || placed.contains(id)) continue;
        blocks.push_back({id});
    }
    return Partition(std::move(blocks));
}

Partition restrict_partition(const Partition& p, const std::vector<AgentId>& universe) {
    const std::set<AgentId> keep(universe.begin(), universe.end());
    std::vector<std::vector<AgentId>> blocks;
    for (const auto& b : p.blocks()) {
        std::vector<AgentId> kept;
        for (AgentId a : b) {
            if (keep.contains(a)) kept.push_back(a);
        }
        if (!kept.empty()) blocks.push_back(std::move(kept));
    }
    return Partition(std::move(blocks));
}

RunResult run_trace(const Scenario& scenario, const Trace& trace) {
    RunResult result;
    NetConfig netcfg = scenario.net;
    netcfg.seed = scenario.seed ^ kNetSalt;
    Network net(netcfg, scenario.dt, scenario.protocol.period);
    std::mt19937_64 percept_rng(scenario.seed ^ kPerceptSalt);

    auto kind_of = [&](AgentId id) {
        auto it = scenario.kinds.find(id);
        return it == scenario.kinds.end() ? AgentKind::HumanLinked : it->second;
    };
    auto next_boundary = [](Time now, Duration step) {
        return Time((now.count() / step.count() + 1) * step.count());
    };

    const Duration period = scenario.protocol.period;
    const Duration sampling = scenario.sampling();
    std::optional<Time> next_percept;
    std::optional<Time> next_sample;
    std::set<AgentId> departed;

    for (std::size_t f = 0; f < trace.frames.size(); ++f) {
        const TraceFrame& frame = trace.frames[f];
        const Time now = frame.time;

        for (const auto& [id, when] : scenario.departures) {
            if (when <= now && departed.insert(id).second) net.remove_agent(id, now);
        }
        std::set<AgentId> present;
        for (const auto& pose : frame.agents) {
            if (!departed.contains(pose.id)) present.insert(pose.id);
        }
        std::vector<AgentId> gone;
        for (const auto& [id, agent] : net.agents()) {
            if (!present.contains(id)) gone.push_back(id);
        }
        for (AgentId id : gone) net.remove_agent(id, now);
        for (const auto& pose : frame.agents) {
            if (!present.contains(pose.id)) continue;
            const Position pos{pose.x, pose.y};
            if (!net.has_agent(pose.id)) {
                net.add_agent(Agent(pose.id, kind_of(pose.id), scenario.protocol, now), pos);
            } else {
                net.set_position(pose.id, pos);
            }
        }

        if (!next_percept || now >= *next_percept) {
            next_percept = next_boundary(now, period);
            for (const auto& [id, agent] : net.agents()) {
                if (agent.state().kind == AgentKind::HumanWithoutAgent) continue;
                PerceptUpdate update;
                update.opinions = observe(frame, id, scenario.percept, percept_rng);
                const Position self = net.positions().at(id);
                for (const auto& [other, pos] : net.positions()) {
                    if (other == id) continue;
                    const double d = distance(self, pos);
                    if (d <= netcfg.comm_range) {
                        update.neighbors.push_back(Neighbor{other, d, net.agent(other).state().kind});
                    }
                }
                net.apply_percept(id, update, now);
            }
        }

        net.step(now);

        if (!next_sample || now >= *next_sample) {
            next_sample = next_boundary(now, sampling);
            std::vector<AgentId> universe;
            for (const auto& [id, agent] : net.agents()) {
                if (agent.state().kind != AgentKind::OpinionProvider) universe.push_back(id);
            }
            if (universe.empty()) continue;
            const Partition proto = protocol_partition(net);
            MetricsRow row;
            row.time = now;
            row.protocol_situations = proto.situation_count();
            if (f < trace.truth.size()) {
                const Partition truth = restrict_partition(trace.truth[f], universe);
                row.rand = rand_index(proto, truth);
                row.ari = adjusted_rand_index(proto, truth);
                row.jaccard = jaccard_index(proto, truth);
                row.truth_situations = truth.situation_count();
                row.false_positive_pairs = pair_counts(proto, truth).only_first;
            }
            result.metrics.push_back(row);
            result.partitions.emplace_back(now, proto);
        }
    }
    result.log = net.log();
    return result;
}

RunResult run(const Scenario& scenario) {
    scenario.validate();
    if (scenario.source == SourceKind::Replay) {
        const Trace trace = ingest_trace(scenario.trace_path, scenario.truth_path, scenario.dt);
        return run_trace(scenario, trace);
    }
    MobilityConfig m = scenario.mobility;
    m.seed = scenario.seed;
    Trace trace;
    if (m.n_agents > 0 && scenario.duration > 0.0) {
        trace = generate(m, scenario.duration, to_seconds(scenario.dt));
    }
    RunResult result = run_trace(scenario, trace);
    result.trace = std::move(trace);
    return result;
}

std::string metrics_text(const std::vector<MetricsRow>& rows, OutputFormat format) {
    std::string out;
    if (format == OutputFormat::Csv) {
        out = "time,rand,ari,jaccard,n_situations_truth,n_situations_protocol,false_positive_pairs\n";
        for (const auto& r : rows) {
            out += format_time(r.time) + ',' + opt_cell(r.rand) + ',' + opt_cell(r.ari) + ',' +
                   opt_cell(r.jaccard) + ',' + opt_int(r.truth_situations) + ',' +
                   std::to_string(r.protocol_situations) + ',' + opt_int(r.false_positive_pairs) + '\n';
        }
        return out;
    }
    for (const auto& r : rows) {
        nlohmann::json j;
        j["time"] = to_seconds(r.time);
        j["rand"] = opt_json(r.rand);
        j["ari"] = opt_json(r.ari);
        j["jaccard"] = opt_json(r.jaccard);
        j["n_situations_truth"] = opt_json(r.truth_situations);
        j["n_situations_protocol"] = r.protocol_situations;
        j["false_positive_pairs"] = opt_json(r.false_positive_pairs);
        out += j.dump() + '\n';
    }
    return out;
}

std::string partitions_text(const std::vector<std::pair<Time, Partition>>& rows) {
    std::ostringstream out;
    bool header = true;
    for (const auto& [t, p] : rows) {
        write_partition_rows(out, t, p, header);
        header = false;
    }
    if (header) write_partition_rows(out, Time{0}, Partition{}, true);
    return out.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_outputs(const RunResult& result, const fs::path& dir, OutputFormat format) {
    fs::create_directories(dir);
    const bool csv = format == OutputFormat::Csv;
    write_file_atomic(dir / (csv ? "metrics.csv" : "metrics.jsonl"), metrics_text(result.metrics, format));
    write_file_atomic(dir / "partitions.csv", partitions_text(result.partitions));
    write_file_atomic(dir / "messages.log", result.log.emissions_text());
    write_file_atomic(dir / "deliveries.log", result.log.deliveries_text());
    if (result.trace) {
        std::ostringstream trace, truth;
        write_trace_csv(trace, *result.trace);
        write_truth_csv(truth, *result.trace);
        write_file_atomic(dir / "trace.csv", trace.str());
        write_file_atomic(dir / "truth.csv", truth.str());
    }
}

SweepParameter parse_sweep_parameter(const std::string& name) {
    if (name == "moving_group_ratio") return SweepParameter::MovingGroupRatio;
    if (name == "n_agents") return SweepParameter::NAgents;
    if (name == "loss") return SweepParameter::Loss;
    if (name == "noise") return SweepParameter::Noise;
    throw ConfigError("unknown sweep parameter '" + name + "'");
}

const char* to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::MovingGroupRatio:
            return "moving_group_ratio";
        case SweepParameter::NAgents:
            return "n_agents";
        case SweepParameter::Loss:
            return "loss";
        case SweepParameter::Noise:
            return "noise";
    }
    return "?";
}

std::vector<SweepRow> sweep(const Scenario& base, SweepParameter param, const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    if ((param == SweepParameter::MovingGroupRatio || param == SweepParameter::NAgents) &&
        base.source != SourceKind::Synthetic) {
        throw ConfigError(std::string("sweeping ") + to_string(param) + " needs a synthetic scenario");
    }
    std::vector<SweepRow> rows;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double v = values[k];
        Scenario sc = base;
        sc.seed = base.seed ^ static_cast<std::uint64_t>(k);
        switch (param) {
            case SweepParameter::MovingGroupRatio:
                sc.mobility.moving_group_ratio = v;
                break;
            case SweepParameter::NAgents:
                if (v < 0.0 || v != std::floor(v)) throw ConfigError("n_agents values must be integers");
                sc.mobility.n_agents = static_cast<std::size_t>(v);
                break;
            case SweepParameter::Loss:
                sc.net.loss_probability = v;
                break;
            case SweepParameter::Noise:
                sc.percept.noise_sigma_pos = v;
                break;
        }
        log_record(std::string("sweep ") + to_string(param) + "=" + fmt(v) + " seed " +
                   std::to_string(sc.seed));
        const RunResult r = run(sc);

        SweepRow row;
        row.value = v;
        row.seed = sc.seed;
        std::vector<double> ri, ari, jac;
        for (const auto& m : r.metrics) {
            if (!m.rand) continue;
            ri.push_back(*m.rand);
            ari.push_back(*m.ari);
            jac.push_back(*m.jaccard);
            row.false_positive_pairs += *m.false_positive_pairs;
        }
        row.samples = ri.size();
        if (!ri.empty()) {
            row.rand = series_summary(ri);
            row.ari = series_summary(ari);
            row.jaccard = series_summary(jac);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_text(const std::vector<SweepRow>& rows, SweepParameter param, OutputFormat format) {
    std::string out;
    if (format == OutputFormat::Csv) {
        out = std::string(to_string(param)) +
              ",seed,samples,rand_mean,rand_std,ari_mean,ari_std,jaccard_mean,jaccard_std,"
              "false_positive_pairs\n";
        for (const auto& r : rows) {
            out += fmt(r.value) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.samples);
            for (const auto* s : {&r.rand, &r.ari, &r.jaccard}) {
                out += r.samples ? ',' + fmt(s->mean) + ',' + fmt(s->stddev) : std::string(",,");
            }
            out += ',' + std::to_string(r.false_positive_pairs) + '\n';
        }
        return out;
    }
    for (const auto& r : rows) {
        nlohmann::json j;
        j[to_string(param)] = r.value;
        j["seed"] = r.seed;
        j["samples"] = r.samples;
        const std::pair<const char*, const SeriesSummary*> stats[] = {
            {"rand", &r.rand}, {"ari", &r.ari}, {"jaccard", &r.jaccard}};
        for (const auto& [name, s] : stats) {
            j[std::string(name) + "_mean"] = r.samples ? nlohmann::json(s->mean) : nlohmann::json(nullptr);
            j[std::string(name) + "_std"] = r.samples ? nlohmann::json(s->stddev) : nlohmann::json(nullptr);
        }
        j["false_positive_pairs"] = r.false_positive_pairs;
        out += j.dump() + '\n';
    }
    return out;
}

}  // namespace socsit
