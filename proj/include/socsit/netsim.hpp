#pragma once

// Deterministic discrete-event broadcast network. Agents are stepped in
// ascending id order; deliveries are applied in (deliver_time, sequence)
// order unless a test scheduler reorders same-time deliveries.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "socsit/protocol.hpp"
#include "socsit/wire.hpp"

namespace socsit {

struct NetConfig {
    double comm_range = 25.0;  // meters
    double loss_probability = 0.0;
    int latency_ticks = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

using Position = Point;

double distance(const Position& a, const Position& b);

enum class DeliveryOutcome { Delivered, Lost, OutOfRange };

struct DeliveryRecord {
    Time time{0};
    MessageType type = MessageType::Member;
    AgentId from;
    AgentId to;
    DeliveryOutcome outcome = DeliveryOutcome::Delivered;
};

struct DeliveryLog {
    Duration period{1000};
    std::vector<WireRecord> emissions;
    std::vector<DeliveryRecord> deliveries;
    // Agent -> (time, in-range neighbor count) at every change.
    std::map<AgentId, std::vector<std::pair<Time, std::size_t>>> in_range;

    std::string emissions_text() const;
    std::string deliveries_text() const;
};

struct QueuedDelivery {
    Time deliver_time{0};
    std::uint64_t sequence = 0;
    AgentId from;
    AgentId to;
    Message message;
};

class Network {
public:
    /// Picks which of the ready deliveries (all due now) is applied next.
    using Scheduler = std::function<std::size_t(std::span<const QueuedDelivery>)>;

    Network(NetConfig config, Duration tick, Duration protocol_period);

    void add_agent(Agent agent, Position position);
    /// Departure. A head with stable handover nominates its replacement
    /// first; the broadcast is sent from the departing agent's position.
    void remove_agent(AgentId id, Time now);
    void set_position(AgentId id, Position position);
    void apply_percept(AgentId id, const PerceptUpdate& update, Time now);

    /// One simulation tick: every agent's main loop runs, then all due
    /// deliveries are applied (including replies they trigger).
    void step(Time now);

    /// Applies due deliveries only.
    void flush(Time now);

    /// Injects an emission as if `from` had produced it at `now`.
    void emit(AgentId from, const Emission& emission, Time now);

    void set_scheduler(Scheduler scheduler) { scheduler_ = std::move(scheduler); }

    bool has_agent(AgentId id) const { return agents_.contains(id); }
    const Agent& agent(AgentId id) const { return agents_.at(id); }
    Agent& agent(AgentId id) { return agents_.at(id); }
    const std::map<AgentId, Agent>& agents() const { return agents_; }
    const std::map<AgentId, Position>& positions() const { return positions_; }
    const DeliveryLog& log() const { return log_; }
    std::size_t in_flight() const { return queue_.size(); }
    const NetConfig& config() const { return config_; }

private:
    void record_neighbor_counts(Time now);
    void enqueue(AgentId from, AgentId to, const Message& msg, Time now);
    bool lost();

    NetConfig config_;
    Duration tick_;
    std::map<AgentId, Agent> agents_;
    std::map<AgentId, Position> positions_;
    std::vector<QueuedDelivery> queue_;  // kept sorted by (deliver_time, sequence)
    std::uint64_t next_sequence_ = 0;
    std::mt19937_64 rng_;
    Scheduler scheduler_;
    DeliveryLog log_;
};

struct BoundEntry {
    AgentId agent;
    Time window_start{0};
    std::size_t messages = 0;
    std::size_t peak_neighbors = 0;
    std::size_t cycles = 0;
    std::size_t bound = 0;

    bool violated() const { return messages > bound; }
};

struct BoundReport {
    std::vector<BoundEntry> entries;

    std::size_t violations() const;
    bool empty() const { return entries.empty(); }
};

/// Counts emitted messages per agent in aligned windows and checks them
/// against (2n + 1) per protocol cycle, n being the agent's peak number of
/// in-range agents during the window.
BoundReport audit_message_bound(const DeliveryLog& log, Duration window);

}  // namespace socsit
