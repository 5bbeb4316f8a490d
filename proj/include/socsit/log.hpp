#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace socsit {

using LogSink = std::function<void(std::string_view)>;

// Process-wide diagnostic sink. Defaults to discarding records; the CLI
// routes it to stderr with --verbose.
void set_log_sink(LogSink sink);
void log_record(std::string_view message);

}  // namespace socsit
