#pragma once

// Per-agent consensus state machine. An Agent consumes events (timer ticks,
// received messages, percept updates) and returns the messages it emits; it
// performs no I/O of its own.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "socsit/opinion.hpp"
#include "socsit/types.hpp"

namespace socsit {

class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class AgentKind { HumanLinked, OpinionProvider, HumanWithoutAgent };
enum class Role { ClusterHead, Member };

const char* to_string(AgentKind kind);
AgentKind parse_agent_kind(const std::string& text);

using IdSet = std::set<AgentId>;

struct ProtocolConfig {
    Duration period{1000};  // T = 1 / f_min
    double request_threshold = 0.5;
    double accept_threshold = 0.5;
    double social_distance = 10.0;  // meters
    Duration denial_ttl{10000};
    Duration head_knowledge_ttl{5000};
    Duration opinion_ttl{3000};
    double u_min = 0.0;
    double base_rate = 0.5;
    bool detach_extension = false;
    bool stable_handover = false;
    bool direct_to_head_routing = false;

    /// Defaults with every TTL expressed as its usual multiple of `period`.
    static ProtocolConfig with_period(Duration period);
    void validate() const;
};

struct PairOpinion {
    AgentId i;
    AgentId j;
    Opinion opinion;

    friend bool operator==(const PairOpinion&, const PairOpinion&) = default;
};

/// m_cm: pairwise opinions of `sender` plus the head it believes in.
struct MemberMsg {
    AgentId sender;
    AgentId head;
    bool provider = false;
    std::vector<PairOpinion> opinions;

    friend bool operator==(const MemberMsg&, const MemberMsg&) = default;
};

/// m_ch = (ch, c_a, c_h). human_members equals agent_members unless the
/// detach extension is on.
struct HeadMsg {
    AgentId head;
    IdSet agent_members;
    IdSet human_members;

    friend bool operator==(const HeadMsg&, const HeadMsg&) = default;
};

/// m_req = (p, c).
struct RequestMsg {
    AgentId head;
    IdSet members;

    friend bool operator==(const RequestMsg&, const RequestMsg&) = default;
};

/// m_res. A member declining carries a referral to its head.
struct ResponseMsg {
    AgentId responder;
    bool accepted = false;
    std::optional<AgentId> forward_to;
    IdSet forward_members;

    friend bool operator==(const ResponseMsg&, const ResponseMsg&) = default;
};

using Message = std::variant<MemberMsg, HeadMsg, RequestMsg, ResponseMsg>;

/// A message leaving an agent; no target means local broadcast.
struct Outgoing {
    Message message;
    std::optional<AgentId> target;
};

using Emission = std::vector<Outgoing>;

struct Neighbor {
    AgentId id;
    double distance = 0.0;
    AgentKind kind = AgentKind::HumanLinked;
};

/// Output of the agent's logical sensor for one observation instant.
struct PerceptUpdate {
    std::vector<PairOpinion> opinions;
    std::vector<Neighbor> neighbors;
};

struct TimerTick {
    Time now;
};
struct Received {
    Message message;
    AgentId from;
    Time now;
};
struct PerceptEvent {
    PerceptUpdate update;
    Time now;
};
using Event = std::variant<TimerTick, Received, PerceptEvent>;

/// Unordered pair key, smaller id first.
using PairKey = std::pair<AgentId, AgentId>;
inline PairKey make_pair_key(AgentId a, AgentId b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }

struct StoredOpinion {
    Opinion opinion;
    Time updated{0};
};

struct PendingRequest {
    AgentId target;
    Time sent{0};
};

struct ObservedHead {
    AgentId head;
    Time expiry{0};
};

struct AgentState {
    AgentId id;
    AgentKind kind = AgentKind::HumanLinked;
    Role role = Role::ClusterHead;
    AgentId head_id;
    IdSet members;
    IdSet human_members;
    // pair -> reporting agent -> latest opinion of that agent about the pair
    std::map<PairKey, std::map<AgentId, StoredOpinion>> opinion_store;
    std::optional<PendingRequest> pending_request;
    std::map<AgentId, Time> denial_cache;  // value: expiry
    std::map<AgentId, ObservedHead> observed_heads;
    Time last_ch_received{0};

    // Head bookkeeping.
    std::map<AgentId, Time> member_last_seen;
    std::map<AgentId, Time> member_since;
    IdSet inconsistent_members;

    // Latest percept.
    std::map<AgentId, Neighbor> neighbors;
    IdSet known_providers;

    std::optional<AgentId> next_candidate;
    Time next_period{0};
    Time next_request_at{0};
    Time cycle_start{0};
    std::size_t requests_this_cycle = 0;

    ProtocolConfig config;
};

class Agent {
public:
    Agent(AgentId id, AgentKind kind, ProtocolConfig config, Time start = Time{0});

    const AgentState& state() const { return state_; }
    AgentState& mutable_state() { return state_; }
    AgentId id() const { return state_.id; }

    Emission handle(const Event& event);

    /// Main loop step. Periodic work runs at period boundaries; request
    /// sending may progress on any call.
    Emission tick(Time now);

    void apply_percept(const PerceptUpdate& update, Time now);

    std::optional<AgentId> get_candidate(Time now) const;

    /// Throws ProtocolError if a request is already pending or the agent is
    /// not a cluster head.
    Emission send_request(AgentId target, Time now);

    Emission handle_request(const RequestMsg& req, Time now);
    bool check_for_social_situation(const RequestMsg& req) const;
    Emission handle_response(const ResponseMsg& res, Time now);
    void handle_member_msg(const MemberMsg& msg, Time now);
    void recompute_membership(Time now);
    Emission handle_head_msg(const HeadMsg& msg, AgentId from, Time now);

    /// Nominates a replacement head before this agent departs. Empty when
    /// stable handover is disabled; throws ProtocolError for a unary cluster.
    Emission handover_head(Time now);

    /// Averaging fusion over all stored opinions between members of `xs`
    /// and `ys` (x != y), each floored at u_min. Pairs without any stored
    /// opinion contribute a vacuous opinion.
    Opinion group_opinion(const IdSet& xs, const IdSet& ys) const;

    /// Number of stored opinions between `xs` and `ys`.
    std::size_t evidence_count(const IdSet& xs, const IdSet& ys) const;

private:
    void become_singleton(Time now);
    void become_member_of(AgentId head, Time now);
    void evict_expired(Time now);
    HeadMsg make_head_msg() const;
    std::optional<MemberMsg> make_member_msg() const;
    bool denied(AgentId id, Time now) const;
    bool can_join(AgentId id) const;

    AgentState state_;
};

/// FNV-1a 64 over the big-endian concatenation lo||hi of the sorted ids.
std::uint64_t conflict_hash(AgentId a, AgentId b);

/// Designated head when two heads request each other simultaneously:
/// the id closer (ring distance) to conflict_hash(a, b); ties go to the
/// smaller id. Symmetric in its arguments.
AgentId resolve_conflict(AgentId a, AgentId b);

}  // namespace socsit
