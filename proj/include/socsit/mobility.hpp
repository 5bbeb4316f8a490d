#pragma once

// Social-aware synthetic scenario generator: Gauss-Markov individual walks,
// Poisson-scheduled group formation, force-model arrangement of resting
// groups, and moving groups, with ground-truth situation labels.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "socsit/metrics.hpp"
#include "socsit/types.hpp"

namespace socsit {

class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Markov chain over walking speed levels (m/s); transitions once per second.
struct SpeedChain {
    std::vector<double> speeds{0.0, 0.7, 1.4};
    std::vector<std::vector<double>> transition{
        {0.80, 0.15, 0.05},
        {0.10, 0.70, 0.20},
        {0.05, 0.15, 0.80},
    };
};

struct MobilityConfig {
    double width = 50.0;
    double height = 50.0;
    std::size_t n_agents = 10;
    SpeedChain speed_chain;
    double gauss_markov_alpha = 0.85;  // per second
    double heading_sigma = 0.6;        // rad
    double speed_sigma = 0.15;         // m/s
    double group_formation_rate = 0.02;  // events/s
    std::vector<std::pair<std::size_t, double>> group_size_distribution{{2, 0.5}, {3, 0.3}, {4, 0.2}};
    double resting_duration_min = 60.0;   // s
    double resting_duration_max = 180.0;  // s
    double moving_group_ratio = 0.3;
    double group_speed = 0.8;  // m/s, moving groups
    double force_k_center = 1.0;
    double force_k_repel = 0.5;
    double interaction_distance = 1.0;  // arrival radius around the meeting point
    double angle_jitter_sigma = 0.2;    // rad
    bool label_waiting_phase = false;
    std::uint64_t seed = 1;

    void validate() const;
    double walk_speed() const;
};

struct AgentPose {
    AgentId id;
    double x = 0.0;
    double y = 0.0;
    double shoulder_angle = 0.0;  // [0, 2*pi)

    friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

struct TraceFrame {
    Time time{0};
    std::vector<AgentPose> agents;  // ascending id

    friend bool operator==(const TraceFrame&, const TraceFrame&) = default;
};

/// Frames plus, when known, one ground-truth partition per frame.
struct Trace {
    std::vector<TraceFrame> frames;
    std::vector<Partition> truth;

    bool has_truth() const { return !truth.empty(); }
};

Trace generate(const MobilityConfig& config, double duration, double dt);

struct ForceParams {
    double k_center = 1.0;
    double k_repel = 0.5;
    double dt = 0.1;
    double max_step = 0.14;  // walk speed * dt
};

inline constexpr double kRepelClamp = 0.01;

/// One explicit Euler step of the o-space arrangement: attraction to the
/// group center plus repulsion from each agent's two nearest neighbors,
/// with repulsion distance clamped below kRepelClamp.
std::vector<Point> force_step(std::span<const Point> members, Point center, const ForceParams& params);

double normalize_angle(double radians);

}  // namespace socsit
