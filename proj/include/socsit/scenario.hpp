#pragma once

// Experiment plumbing: scenario configuration, the mobility/replay ->
// percept -> network+protocol -> metrics pipeline, sweeps and result files.
//
// Scenario files are `key = value` lines; `#` starts a comment. See
// scenarios/*.conf and README.md for the full key list.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "socsit/metrics.hpp"
#include "socsit/mobility.hpp"
#include "socsit/netsim.hpp"
#include "socsit/percept.hpp"
#include "socsit/protocol.hpp"

namespace socsit {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, std::size_t line, const std::string& what);
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

enum class SourceKind { Synthetic, Replay };

struct Scenario {
    SourceKind source = SourceKind::Synthetic;
    MobilityConfig mobility;
    std::string trace_path;
    std::optional<std::string> truth_path;

    ProtocolConfig protocol;
    NetConfig net;
    PerceptConfig percept;

    double duration = 900.0;  // s, synthetic only
    Duration dt{200};
    std::optional<Duration> sample_interval;  // default: protocol period
    std::uint64_t seed = 1;

    std::map<AgentId, AgentKind> kinds;  // default HumanLinked
    std::map<AgentId, Time> departures;

    Duration sampling() const { return sample_interval.value_or(protocol.period); }
    /// Throws ConfigError.
    void validate() const;
};

/// Parses scenario text; relative file paths resolve against `base_dir`.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {},
                        const std::string& name = "<config>");
Scenario load_scenario(const std::filesystem::path& path);

struct MetricsRow {
    Time time{0};
    std::optional<double> rand;
    std::optional<double> ari;
    std::optional<double> jaccard;
    std::optional<std::size_t> truth_situations;
    std::size_t protocol_situations = 0;
    std::optional<std::uint64_t> false_positive_pairs;
};

struct RunResult {
    std::vector<MetricsRow> metrics;
    std::vector<std::pair<Time, Partition>> partitions;
    DeliveryLog log;
    std::optional<Trace> trace;  // synthetic runs only
};

/// Agreed partition of the live network over its non-provider agents: a
/// head's block holds the members that also name it as their head; agents
/// in a transient state count as singletons.
Partition protocol_partition(const Network& net);

/// Drops the elements outside `universe`.
Partition restrict_partition(const Partition& p, const std::vector<AgentId>& universe);

RunResult run(const Scenario& scenario);
/// Runs the pipeline on a prepared trace; `run` funnels both sources here.
RunResult run_trace(const Scenario& scenario, const Trace& trace);

enum class OutputFormat { Csv, Jsonl };

/// Writes metrics, partitions, messages.log and deliveries.log (plus
/// trace/truth for synthetic runs) into `dir`, each file atomically.
void write_outputs(const RunResult& result, const std::filesystem::path& dir, OutputFormat format);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

enum class SweepParameter { MovingGroupRatio, NAgents, Loss, Noise };

SweepParameter parse_sweep_parameter(const std::string& name);
const char* to_string(SweepParameter p);

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    SeriesSummary rand;
    SeriesSummary ari;
    SeriesSummary jaccard;
    std::uint64_t false_positive_pairs = 0;  // summed over samples
};

/// One run per value with seed = base.seed XOR index.
std::vector<SweepRow> sweep(const Scenario& base, SweepParameter param, const std::vector<double>& values);

std::string sweep_text(const std::vector<SweepRow>& rows, SweepParameter param, OutputFormat format);
std::string metrics_text(const std::vector<MetricsRow>& rows, OutputFormat format);
std::string partitions_text(const std::vector<std::pair<Time, Partition>>& rows);

}  // namespace socsit
