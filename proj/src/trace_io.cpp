#include "socsit/trace_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "socsit/log.hpp"
#include "socsit/wire.hpp"

namespace socsit {

namespace {

constexpr const char* kTraceHeader = "time,agent_id,x,y,shoulder_angle";
constexpr const char* kTruthHeader = "time,situation_id,member_ids";

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& text, const std::string& file, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(file, line, "not a number: '" + text + "'");
    }
}

std::uint64_t parse_id(const std::string& text, const std::string& file, std::size_t line) {
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(text, &pos);
        if (pos != text.size() || text.empty() || !std::isdigit(static_cast<unsigned char>(text[0]))) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(file, line, "not an agent id: '" + text + "'");
    }
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

SchemaError::SchemaError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << kTraceHeader << '\n';
    for (const auto& f : trace.frames) {
        const std::string t = format_time(f.time);
        for (const auto& a : f.agents) {
            out << t << ',' << a.id.value << ',' << fmt_double(a.x) << ',' << fmt_double(a.y) << ','
                << fmt_double(a.shoulder_angle) << '\n';
        }
    }
}

void write_partition_rows(std::ostream& out, Time time, const Partition& partition, bool header) {
    if (header) out << kTruthHeader << '\n';
    std::size_t situation = 0;
    for (const auto& block : partition.blocks()) {
        if (block.size() < 2) continue;
        out << format_time(time) << ',' << situation++ << ',';
        for (std::size_t k = 0; k < block.size(); ++k) {
            if (k) out << ';';
            out << block[k].value;
        }
        out << '\n';
    }
}

void write_truth_csv(std::ostream& out, const Trace& trace) {
    out << kTruthHeader << '\n';
    for (std::size_t f = 0; f < trace.truth.size() && f < trace.frames.size(); ++f) {
        write_partition_rows(out, trace.frames[f].time, trace.truth[f], false);
    }
}

namespace {

struct Row {
    std::size_t line = 0;
    std::vector<AgentId> block;
};

std::map<Time, std::vector<Row>> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path, 0, "cannot open partition file");
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != kTruthHeader) {
        throw SchemaError(path, 1, std::string("expected header '") + kTruthHeader + "'");
    }
    std::map<Time, std::vector<Row>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3) throw SchemaError(path, lineno, "expected 3 columns");
        const Time t = seconds_to_duration(parse_double(cells[0], path, lineno));
        std::vector<AgentId> block;
        std::istringstream ids(cells[2]);
        std::string id;
        while (std::getline(ids, id, ';')) block.push_back(AgentId{parse_id(id, path, lineno)});
        if (block.empty()) throw SchemaError(path, lineno, "empty situation");
        rows[t].push_back(Row{lineno, std::move(block)});
    }
    return rows;
}

}  // namespace

std::map<Time, std::vector<std::vector<AgentId>>> read_partition_rows(const std::string& path) {
    std::map<Time, std::vector<std::vector<AgentId>>> out;
    for (auto& [t, rows] : read_rows(path)) {
        for (auto& r : rows) out[t].push_back(std::move(r.block));
    }
    return out;
}

Trace ingest_trace(const std::string& trace_path, const std::optional<std::string>& truth_path,
                   std::optional<Duration> dt) {
    std::ifstream in(trace_path);
    if (!in) throw SchemaError(trace_path, 0, "cannot open trace file");

    std::map<Time, std::map<AgentId, AgentPose>> by_time;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || strip_cr(line) != kTraceHeader) {
        throw SchemaError(trace_path, 1, std::string("expected header '") + kTraceHeader + "'");
    }
    lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5) throw SchemaError(trace_path, lineno, "expected 5 columns");
        const Time t = seconds_to_duration(parse_double(cells[0], trace_path, lineno));
        AgentPose pose;
        pose.id = AgentId{parse_id(cells[1], trace_path, lineno)};
        pose.x = parse_double(cells[2], trace_path, lineno);
        pose.y = parse_double(cells[3], trace_path, lineno);
        const double angle = parse_double(cells[4], trace_path, lineno);
        pose.shoulder_angle = normalize_angle(angle);
        if (angle < 0.0 || angle >= 2.0 * std::numbers::pi) {
            log_record(trace_path + ":" + std::to_string(lineno) + ": angle " + cells[4] +
                       " normalized to [0, 2pi)");
        }
        if (!by_time[t].emplace(pose.id, pose).second) {
            throw SchemaError(trace_path, lineno, "duplicate agent " + cells[1] + " in frame");
        }
    }

    std::vector<TraceFrame> raw;
    for (auto& [t, agents] : by_time) {
        TraceFrame f;
        f.time = t;
        for (auto& [id, pose] : agents) f.agents.push_back(pose);
        raw.push_back(std::move(f));
    }

    // ground truth rows, keyed by original frame time
    std::map<Time, std::vector<std::vector<AgentId>>> truth_rows;
    if (truth_path) {
        for (auto& [t, rows] : read_rows(*truth_path)) {
            auto frame = by_time.find(t);
            for (auto& row : rows) {
                if (frame == by_time.end()) {
                    throw SchemaError(*truth_path, row.line, "no trace frame at time " + format_time(t));
                }
                for (AgentId a : row.block) {
                    if (!frame->second.contains(a)) {
                        throw SchemaError(*truth_path, row.line, "agent " + to_string(a) + " absent from frame");
                    }
                }
                truth_rows[t].push_back(std::move(row.block));
            }
        }
    }

    auto truth_for = [&](const TraceFrame& f) {
        std::vector<std::vector<AgentId>> blocks;
        std::set<AgentId> placed;
        if (auto it = truth_rows.find(f.time); it != truth_rows.end()) {
            for (const auto& b : it->second) {
                blocks.push_back(b);
                placed.insert(b.begin(), b.end());
            }
        }
        for (const auto& a : f.agents) {
            if (!placed.contains(a.id)) blocks.push_back({a.id});
        }
        try {
            return Partition(std::move(blocks));
        } catch (const MetricsError& e) {
            throw SchemaError(*truth_path, 0, "frame " + format_time(f.time) + ": " + e.what());
        }
    };

    Trace trace;
    if (raw.empty()) return trace;

    Duration step = dt.value_or(Duration::zero());
    if (step <= Duration::zero()) {
        step = Duration::max();
        for (std::size_t k = 1; k < raw.size(); ++k) step = std::min(step, raw[k].time - raw[k - 1].time);
        if (raw.size() == 1) step = Duration(1000);
    }
    bool regular = true;
    for (std::size_t k = 1; k < raw.size(); ++k) {
        if (raw[k].time - raw[k - 1].time != step) regular = false;
    }
    if (regular && raw.front().time.count() % step.count() == 0) {
        trace.frames = std::move(raw);
    } else {
        log_record(trace_path + ": irregular timestep, resampling to " + format_time(step) + " s");
        std::size_t k = 0;
        for (Time t = raw.front().time; t <= raw.back().time; t += step) {
            while (k + 1 < raw.size() && (raw[k + 1].time - t) <= (t - raw[k].time)) ++k;
            TraceFrame f = raw[k];
            f.time = t;
            trace.frames.push_back(std::move(f));
        }
        // truth follows the source frame of each resampled frame
        if (truth_path) {
            std::map<Time, std::vector<std::vector<AgentId>>> resampled;
            std::size_t j = 0;
            for (const auto& f : trace.frames) {
                while (j + 1 < raw.size() && (raw[j + 1].time - f.time) <= (f.time - raw[j].time)) ++j;
                if (auto it = truth_rows.find(raw[j].time); it != truth_rows.end()) {
                    resampled[f.time] = it->second;
                }
            }
            truth_rows = std::move(resampled);
        }
    }
    if (truth_path) {
        for (const auto& f : trace.frames) trace.truth.push_back(truth_for(f));
    }
    return trace;
}

}  // namespace socsit
