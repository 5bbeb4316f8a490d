#include "socsit/log.hpp"

#include <mutex>

namespace socsit {

namespace {
std::mutex sink_mutex;
LogSink current_sink;
}  // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(sink_mutex);
    current_sink = std::move(sink);
}

void log_record(std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (current_sink) {
        current_sink(message);
    }
}

}  // namespace socsit
