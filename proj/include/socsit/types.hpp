#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace socsit {

/// Unique, scenario-stable identifier of an agent or human individual.
struct AgentId {
    std::uint64_t value = 0;

    constexpr AgentId() = default;
    constexpr explicit AgentId(std::uint64_t v) : value(v) {}

    friend constexpr auto operator<=>(const AgentId&, const AgentId&) = default;
};

inline std::string to_string(AgentId id) { return std::to_string(id.value); }

/// Planar position in meters.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

// Simulation clock. Integer milliseconds keep period arithmetic exact.
using Duration = std::chrono::milliseconds;
using Time = std::chrono::milliseconds;

inline Duration seconds_to_duration(double s) {
    return Duration(static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5)));
}

inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

}  // namespace socsit

template <>
struct std::hash<socsit::AgentId> {
    std::size_t operator()(const socsit::AgentId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
