#pragma once

// CSV trace files.
//   trace: time,agent_id,x,y,shoulder_angle
//   truth: time,situation_id,member_ids      (member ids ';'-separated;
//          individuals absent from a frame's rows are singletons)

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "socsit/mobility.hpp"

namespace socsit {

class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& file, std::size_t line, const std::string& what);

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_truth_csv(std::ostream& out, const Trace& trace);
/// Partition rows (non-singleton blocks) in the truth schema.
void write_partition_rows(std::ostream& out, Time time, const Partition& partition, bool header);

/// Rows of a file in the truth schema, grouped by time.
std::map<Time, std::vector<std::vector<AgentId>>> read_partition_rows(const std::string& path);

/// Loads a trace and optional ground truth. Irregular timesteps are
/// resampled to `dt` (or the smallest observed step) by nearest frame;
/// angles outside [0, 2*pi) are normalized with a log record.
Trace ingest_trace(const std::string& trace_path, const std::optional<std::string>& truth_path,
                   std::optional<Duration> dt = std::nullopt);

}  // namespace socsit
