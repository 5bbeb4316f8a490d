#include "socsit/netsim.hpp"

#include <algorithm>
#include <cmath>

#include "socsit/log.hpp"

namespace socsit {

void NetConfig::validate() const {
    if (!(comm_range > 0.0)) throw std::invalid_argument("comm_range must be positive");
    if (loss_probability < 0.0 || loss_probability >= 1.0) {
        throw std::invalid_argument("loss_probability must lie in [0,1)");
    }
    if (latency_ticks < 0) throw std::invalid_argument("latency must be non-negative");
}

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

const char* outcome_code(DeliveryOutcome o) {
    switch (o) {
        case DeliveryOutcome::Delivered:
            return "ok";
        case DeliveryOutcome::Lost:
            return "lost";
        case DeliveryOutcome::OutOfRange:
            return "range";
    }
    return "?";
}

}  // namespace

std::string DeliveryLog::emissions_text() const {
    std::string out;
    for (const auto& rec : emissions) {
        out += encode_record(rec);
        out += '\n';
    }
    return out;
}

std::string DeliveryLog::deliveries_text() const {
    std::string out;
    for (const auto& d : deliveries) {
        out += format_time(d.time) + ';' + type_code(d.type) + ';' + to_string(d.from) + ';' +
               to_string(d.to) + ';' + outcome_code(d.outcome) + '\n';
    }
    return out;
}

Network::Network(NetConfig config, Duration tick, Duration protocol_period)
    : config_(config), tick_(tick), rng_(config.seed) {
    config_.validate();
    if (tick_ <= Duration::zero()) throw std::invalid_argument("tick must be positive");
    log_.period = protocol_period;
}

void Network::add_agent(Agent agent, Position position) {
    const AgentId id = agent.id();
    if (agent.state().config.social_distance > config_.comm_range) {
        log_record("agent " + to_string(id) + ": social distance exceeds communication range");
    }
    agents_.insert_or_assign(id, std::move(agent));
    positions_[id] = position;
}

void Network::remove_agent(AgentId id, Time now) {
    auto it = agents_.find(id);
    if (it == agents_.end()) return;
    Emission farewell;
    const auto& s = it->second.state();
    if (s.role == Role::ClusterHead && s.members.size() >= 2) {
        farewell = it->second.handover_head(now);
    }
    emit(id, farewell, now);
    agents_.erase(it);
    positions_.erase(id);
    log_.in_range[id].emplace_back(now, 0);
    flush(now);
}

void Network::set_position(AgentId id, Position position) { positions_[id] = position; }

void Network::apply_percept(AgentId id, const PerceptUpdate& update, Time now) {
    auto it = agents_.find(id);
    if (it != agents_.end()) it->second.apply_percept(update, now);
}

bool Network::lost() {
    if (config_.loss_probability <= 0.0) return false;
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < config_.loss_probability;
}

void Network::enqueue(AgentId from, AgentId to, const Message& msg, Time now) {
    const MessageType type = message_type(msg);
    auto target = agents_.find(to);
    auto from_pos = positions_.find(from);
    auto to_pos = positions_.find(to);
    if (target == agents_.end() || from_pos == positions_.end() || to_pos == positions_.end() ||
        distance(from_pos->second, to_pos->second) > config_.comm_range) {
        log_.deliveries.push_back({now, type, from, to, DeliveryOutcome::OutOfRange});
        return;
    }
    if (lost()) {
        log_.deliveries.push_back({now, type, from, to, DeliveryOutcome::Lost});
        return;
    }
    QueuedDelivery q{now + config_.latency_ticks * tick_, next_sequence_++, from, to, msg};
    auto pos = std::upper_bound(queue_.begin(), queue_.end(), q, [](const auto& a, const auto& b) {
        return std::tie(a.deliver_time, a.sequence) < std::tie(b.deliver_time, b.sequence);
    });
    queue_.insert(pos, std::move(q));
}

void Network::emit(AgentId from, const Emission& emission, Time now) {
    for (const auto& out : emission) {
        log_.emissions.push_back(WireRecord{now, out.message, from, out.target});
        if (out.target) {
            enqueue(from, *out.target, out.message, now);
            continue;
        }
        for (const auto& [id, agent] : agents_) {
            if (id != from) enqueue(from, id, out.message, now);
        }
    }
}

void Network::record_neighbor_counts(Time now) {
    for (const auto& [id, pos] : positions_) {
        std::size_t n = 0;
        for (const auto& [other, opos] : positions_) {
            if (other != id && distance(pos, opos) <= config_.comm_range) ++n;
        }
        auto& series = log_.in_range[id];
        if (series.empty() || series.back().second != n) series.emplace_back(now, n);
    }
}

void Network::step(Time now) {
    record_neighbor_counts(now);
    for (auto& [id, agent] : agents_) {
        emit(id, agent.tick(now), now);
    }
    flush(now);
}

void Network::flush(Time now) {
    while (!queue_.empty() && queue_.front().deliver_time <= now) {
        std::size_t ready = 0;
        while (ready < queue_.size() && queue_[ready].deliver_time <= now) ++ready;
        std::size_t pick = 0;
        if (scheduler_ && ready > 1) {
            pick = std::min(scheduler_(std::span<const QueuedDelivery>(queue_.data(), ready)),
                            ready - 1);
        }
        QueuedDelivery q = std::move(queue_[pick]);
        queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(pick));
        auto it = agents_.find(q.to);
        if (it == agents_.end()) {
            log_.deliveries.push_back(
                {now, message_type(q.message), q.from, q.to, DeliveryOutcome::OutOfRange});
            continue;
        }
        log_.deliveries.push_back(
            {now, message_type(q.message), q.from, q.to, DeliveryOutcome::Delivered});
        emit(q.to, it->second.handle(Received{q.message, q.from, now}), now);
    }
}

std::size_t BoundReport::violations() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.violated(); }));
}

BoundReport audit_message_bound(const DeliveryLog& log, Duration window) {
    BoundReport report;
    if (window <= Duration::zero()) throw std::invalid_argument("window must be positive");
    std::map<std::pair<AgentId, std::int64_t>, std::size_t> counts;
    for (const auto& rec : log.emissions) {
        ++counts[{rec.from, rec.time.count() / window.count()}];
    }
    const std::size_t cycles = static_cast<std::size_t>(
        (window.count() + log.period.count() - 1) / log.period.count());

    for (const auto& [key, messages] : counts) {
        const auto& [agent, index] = key;
        const Time start(index * window.count());
        const Time end = start + window;
        std::size_t peak = 0;
        auto series = log.in_range.find(agent);
        if (series != log.in_range.end()) {
            const auto& s = series->second;
            // value in force at window start, then every change inside it
            for (std::size_t k = 0; k < s.size(); ++k) {
                const bool in_force_at_start =
                    s[k].first <= start && (k + 1 == s.size() || s[k + 1].first > start);
                if (in_force_at_start || (s[k].first > start && s[k].first < end)) {
                    peak = std::max(peak, s[k].second);
                }
            }
        }
        report.entries.push_back(
            BoundEntry{agent, start, messages, peak, cycles, (2 * peak + 1) * cycles});
    }
    return report;
}

}  // namespace socsit
