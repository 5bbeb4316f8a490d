#include "socsit/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "socsit/log.hpp"

namespace socsit {

const char* to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::HumanLinked:
            return "human";
        case AgentKind::OpinionProvider:
            return "provider";
        case AgentKind::HumanWithoutAgent:
            return "human_without_agent";
    }
    return "?";
}

AgentKind parse_agent_kind(const std::string& text) {
    if (text == "human") return AgentKind::HumanLinked;
    if (text == "provider") return AgentKind::OpinionProvider;
    if (text == "human_without_agent") return AgentKind::HumanWithoutAgent;
    throw ProtocolError("unknown agent kind '" + text + "'");
}

ProtocolConfig ProtocolConfig::with_period(Duration period) {
    ProtocolConfig c;
    c.period = period;
    c.denial_ttl = 10 * period;
    c.head_knowledge_ttl = 5 * period;
    c.opinion_ttl = 3 * period;
    return c;
}

void ProtocolConfig::validate() const {
    auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (period <= Duration::zero()) throw ProtocolError("period must be positive");
    if (!open_unit(request_threshold) || !open_unit(accept_threshold)) {
        throw ProtocolError("thresholds must lie in (0,1)");
    }
    if (!(social_distance > 0.0)) throw ProtocolError("social_distance must be positive");
    if (u_min < 0.0 || u_min > 1.0) throw ProtocolError("u_min must lie in [0,1]");
    if (base_rate < 0.0 || base_rate > 1.0) throw ProtocolError("base_rate must lie in [0,1]");
    if (denial_ttl < Duration::zero() || head_knowledge_ttl < Duration::zero() ||
        opinion_ttl < Duration::zero()) {
        throw ProtocolError("TTLs must be non-negative");
    }
}

Agent::Agent(AgentId id, AgentKind kind, ProtocolConfig config, Time start) {
    config.validate();
    state_.id = id;
    state_.kind = kind;
    state_.head_id = id;
    state_.config = config;
    state_.last_ch_received = start;
    state_.next_period = start;
    state_.next_request_at = start;
    state_.cycle_start = start;
    if (kind == AgentKind::HumanLinked) {
        state_.members = {id};
        state_.human_members = {id};
        state_.member_since[id] = start;
    }
}

Emission Agent::handle(const Event& event) {
    return std::visit(
        [this](const auto& ev) -> Emission {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, TimerTick>) {
                return tick(ev.now);
            } else if constexpr (std::is_same_v<T, PerceptEvent>) {
                apply_percept(ev.update, ev.now);
                return {};
            } else {
                return std::visit(
                    [&](const auto& msg) -> Emission {
                        using M = std::decay_t<decltype(msg)>;
                        if constexpr (std::is_same_v<M, MemberMsg>) {
                            handle_member_msg(msg, ev.now);
                            return {};
                        } else if constexpr (std::is_same_v<M, HeadMsg>) {
                            return handle_head_msg(msg, ev.from, ev.now);
                        } else if constexpr (std::is_same_v<M, RequestMsg>) {
                            return handle_request(msg, ev.now);
                        } else {
                            return handle_response(msg, ev.now);
                        }
                    },
                    ev.message);
            }
        },
        event);
}

Emission Agent::tick(Time now) {
    Emission out;
    auto& s = state_;
    if (s.kind == AgentKind::HumanWithoutAgent) {
        return out;
    }
    evict_expired(now);

    if (now >= s.next_period) {
        s.cycle_start = now;
        s.requests_this_cycle = 0;
        while (s.next_period <= now) {
            s.next_period += s.config.period;
        }
        if (s.kind == AgentKind::OpinionProvider) {
            if (auto msg = make_member_msg()) {
                out.push_back({std::move(*msg), std::nullopt});
            }
            return out;
        }
        if (s.role == Role::Member && now - s.last_ch_received > s.config.period) {
            log_record("agent " + to_string(s.id) + ": head " + to_string(s.head_id) +
                       " silent, cluster broken");
            become_singleton(now);
        }
        if (s.role == Role::ClusterHead) {
            recompute_membership(now);
            out.push_back({make_head_msg(), std::nullopt});
        } else if (auto msg = make_member_msg()) {
            out.push_back({std::move(*msg), std::nullopt});
        }
    }
    if (s.kind != AgentKind::HumanLinked) {
        return out;
    }

    if (s.pending_request && now - s.pending_request->sent > s.config.period) {
        // No reply within a period: remember briefly so the next attempt
        // picks someone else.
        s.denial_cache[s.pending_request->target] = now + s.config.period;
        s.pending_request.reset();
    }

    const std::size_t budget = std::max<std::size_t>(1, s.neighbors.size());
    if (s.role == Role::ClusterHead && !s.pending_request && now >= s.next_request_at &&
        s.requests_this_cycle < budget) {
        std::optional<AgentId> target;
        if (s.next_candidate) {
            if (can_join(*s.next_candidate) && !denied(*s.next_candidate, now)) {
                target = s.next_candidate;
            }
            s.next_candidate.reset();
        }
        if (!target) {
            target = get_candidate(now);
        }
        if (target) {
            auto sent = send_request(*target, now);
            out.insert(out.end(), sent.begin(), sent.end());
        } else {
            s.next_request_at = now + s.config.period;
        }
    }
    return out;
}

void Agent::apply_percept(const PerceptUpdate& update, Time now) {
    auto& s = state_;
    s.neighbors.clear();
    for (const auto& nb : update.neighbors) {
        if (nb.id != s.id) {
            s.neighbors[nb.id] = nb;
        }
    }
    for (const auto& po : update.opinions) {
        if (po.i == po.j) continue;
        if (std::abs(po.opinion.base_rate - s.config.base_rate) > Opinion::kTolerance) continue;
        s.opinion_store[make_pair_key(po.i, po.j)][s.id] = StoredOpinion{po.opinion, now};
    }
}

bool Agent::denied(AgentId id, Time now) const {
    auto it = state_.denial_cache.find(id);
    return it != state_.denial_cache.end() && it->second > now;
}

bool Agent::can_join(AgentId id) const {
    const auto& s = state_;
    if (id == s.id || s.members.contains(id) || s.known_providers.contains(id)) return false;
    auto nb = s.neighbors.find(id);
    return nb == s.neighbors.end() || nb->second.kind == AgentKind::HumanLinked;
}

Opinion Agent::group_opinion(const IdSet& xs, const IdSet& ys) const {
    const auto& cfg = state_.config;
    std::vector<Opinion> ops;
    for (AgentId x : xs) {
        for (AgentId y : ys) {
            if (x == y) continue;
            auto it = state_.opinion_store.find(make_pair_key(x, y));
            if (it == state_.opinion_store.end() || it->second.empty()) {
                ops.push_back(Opinion::vacuous(cfg.base_rate));
                continue;
            }
            for (const auto& [sender, stored] : it->second) {
                ops.push_back(floor_uncertainty(stored.opinion, cfg.u_min));
            }
        }
    }
    if (ops.empty()) {
        return Opinion::vacuous(cfg.base_rate);
    }
    return fuse_averaging_multi(ops);
}

std::size_t Agent::evidence_count(const IdSet& xs, const IdSet& ys) const {
    std::size_t n = 0;
    for (AgentId x : xs) {
        for (AgentId y : ys) {
            if (x == y) continue;
            auto it = state_.opinion_store.find(make_pair_key(x, y));
            if (it != state_.opinion_store.end()) n += it->second.size();
        }
    }
    return n;
}

std::optional<AgentId> Agent::get_candidate(Time now) const {
    const auto& s = state_;
    if (s.role != Role::ClusterHead || s.pending_request || s.kind != AgentKind::HumanLinked) {
        return std::nullopt;
    }
    std::optional<AgentId> best;
    double best_e = -1.0;
    for (const auto& [id, nb] : s.neighbors) {
        if (nb.distance > s.config.social_distance || !can_join(id) || denied(id, now)) continue;
        const IdSet candidate{id};
        if (evidence_count(s.members, candidate) == 0) continue;
        const Opinion group = group_opinion(s.members, candidate);
        if (!decide(group, s.config.request_threshold)) continue;
        const double e = expectation(group);
        // neighbors iterate in ascending id order, so strict > keeps the
        // smaller id on ties.
        if (e > best_e) {
            best_e = e;
            best = id;
        }
    }
    if (best && s.config.direct_to_head_routing) {
        auto it = s.observed_heads.find(*best);
        if (it != s.observed_heads.end() && it->second.expiry > now) {
            const AgentId head = it->second.head;
            if (head != *best && can_join(head) && !denied(head, now)) {
                return head;
            }
        }
    }
    return best;
}

Emission Agent::send_request(AgentId target, Time now) {
    auto& s = state_;
    if (s.pending_request) {
        throw ProtocolError("request already pending for agent " + to_string(s.id));
    }
    if (s.role != Role::ClusterHead) {
        throw ProtocolError("only cluster heads send requests");
    }
    s.pending_request = PendingRequest{target, now};
    ++s.requests_this_cycle;
    return {Outgoing{RequestMsg{s.id, s.members}, target}};
}

bool Agent::check_for_social_situation(const RequestMsg& req) const {
    IdSet theirs = req.members;
    theirs.insert(req.head);
    return decide(group_opinion(state_.members, theirs), state_.config.accept_threshold);
}

Emission Agent::handle_request(const RequestMsg& req, Time now) {
    auto& s = state_;
    if (s.kind != AgentKind::HumanLinked) {
        return {};
    }
    if (s.role == Role::Member) {
        return {Outgoing{ResponseMsg{s.id, false, s.head_id, s.members}, req.head}};
    }
    if (s.pending_request && s.pending_request->target == req.head) {
        // Mutual simultaneous requests: only the designated head decides.
        if (resolve_conflict(s.id, req.head) != s.id) {
            return {};
        }
        s.pending_request.reset();
    }
    if (!check_for_social_situation(req)) {
        return {Outgoing{ResponseMsg{s.id, false, std::nullopt, {}}, req.head}};
    }
    IdSet joining = req.members;
    joining.insert(req.head);
    for (AgentId m : joining) {
        if (s.members.insert(m).second) {
            s.member_since[m] = now;
        }
        s.human_members.insert(m);
        s.member_last_seen[m] = now;
        s.inconsistent_members.erase(m);
    }
    return {Outgoing{ResponseMsg{s.id, true, std::nullopt, {}}, req.head}};
}

Emission Agent::handle_response(const ResponseMsg& res, Time now) {
    auto& s = state_;
    if (!s.pending_request || s.pending_request->target != res.responder) {
        log_record("agent " + to_string(s.id) + ": unmatched response from " +
                   to_string(res.responder) + " ignored");
        return {};
    }
    s.pending_request.reset();
    if (res.accepted) {
        become_member_of(res.responder, now);
        return {};
    }
    if (res.forward_to) {
        const AgentId head = *res.forward_to;
        IdSet theirs = res.forward_members;
        theirs.insert(head);
        if (can_join(head) &&
            decide(group_opinion(s.members, theirs), s.config.request_threshold)) {
            s.next_candidate = head;
            return {};
        }
    }
    s.denial_cache[res.responder] = now + s.config.denial_ttl;
    return {};
}

void Agent::handle_member_msg(const MemberMsg& msg, Time now) {
    auto& s = state_;
    if (msg.sender == s.id) return;
    for (const auto& po : msg.opinions) {
        if (po.i == po.j) continue;
        if (std::abs(po.opinion.base_rate - s.config.base_rate) > Opinion::kTolerance) {
            log_record("agent " + to_string(s.id) + ": opinion with foreign base rate dropped");
            continue;
        }
        s.opinion_store[make_pair_key(po.i, po.j)][msg.sender] = StoredOpinion{po.opinion, now};
    }
    if (msg.provider) {
        s.known_providers.insert(msg.sender);
        s.observed_heads.erase(msg.sender);
        return;
    }
    if (msg.head != msg.sender) {
        s.observed_heads[msg.sender] = ObservedHead{msg.head, now + s.config.head_knowledge_ttl};
    }
    if (s.role == Role::ClusterHead && s.members.contains(msg.sender)) {
        if (msg.head == s.id || s.members.contains(msg.head)) {
            // A member still following a head that merged into us is in
            // transition, not inconsistent.
            s.member_last_seen[msg.sender] = now;
            s.inconsistent_members.erase(msg.sender);
        } else {
            log_record("agent " + to_string(s.id) + ": member " + to_string(msg.sender) +
                       " follows foreign head " + to_string(msg.head));
            s.inconsistent_members.insert(msg.sender);
        }
    }
}

void Agent::recompute_membership(Time now) {
    auto& s = state_;
    if (s.role != Role::ClusterHead || s.kind != AgentKind::HumanLinked) return;
    std::vector<AgentId> dropped;
    for (AgentId m : s.members) {
        if (m == s.id) continue;
        auto seen = s.member_last_seen.find(m);
        bool keep = seen != s.member_last_seen.end() && now - seen->second <= s.config.period &&
                    !s.inconsistent_members.contains(m);
        if (keep) {
            IdSet others = s.members;
            others.erase(m);
            keep = decide(group_opinion(others, IdSet{m}), s.config.accept_threshold);
        }
        if (!keep) dropped.push_back(m);
    }
    for (AgentId m : dropped) {
        s.members.erase(m);
        s.member_last_seen.erase(m);
        s.member_since.erase(m);
        s.inconsistent_members.erase(m);
    }

    s.human_members = s.members;
    if (s.config.detach_extension) {
        for (const auto& [id, nb] : s.neighbors) {
            if (nb.kind != AgentKind::HumanWithoutAgent) continue;
            const IdSet human{id};
            if (evidence_count(s.members, human) == 0) continue;
            if (decide(group_opinion(s.members, human), s.config.accept_threshold)) {
                s.human_members.insert(id);
            }
        }
    }
}

Emission Agent::handle_head_msg(const HeadMsg& msg, AgentId from, Time now) {
    auto& s = state_;
    if (s.kind != AgentKind::HumanLinked || (msg.head == s.id && s.role == Role::ClusterHead)) {
        return {};
    }
    s.observed_heads.erase(msg.head);
    for (AgentId m : msg.agent_members) {
        if (m != msg.head && m != s.id) {
            s.observed_heads[m] = ObservedHead{msg.head, now + s.config.head_knowledge_ttl};
        }
    }
    const bool listed = msg.agent_members.contains(s.id);

    if (s.role == Role::Member && msg.head == s.head_id) {
        if (listed) {
            s.last_ch_received = now;
            s.members = msg.agent_members;
            s.human_members = msg.human_members;
        } else {
            log_record("agent " + to_string(s.id) + ": excluded by head " + to_string(msg.head));
            become_singleton(now);
        }
        return {};
    }

    if (s.role == Role::Member && from == s.head_id) {
        // Our head hands the cluster over before leaving.
        if (msg.head == s.id) {
            s.role = Role::ClusterHead;
            s.head_id = s.id;
            s.members = msg.agent_members;
            s.members.insert(s.id);
            s.human_members = msg.human_members;
            s.human_members.insert(s.id);
            s.member_last_seen.clear();
            s.member_since.clear();
            s.inconsistent_members.clear();
            for (AgentId m : s.members) {
                s.member_last_seen[m] = now;
                s.member_since[m] = now;
            }
            s.next_request_at = now;
            return {Outgoing{make_head_msg(), std::nullopt}};
        }
        if (listed) {
            s.head_id = msg.head;
            s.last_ch_received = now;
            s.members = msg.agent_members;
            s.human_members = msg.human_members;
            return {};
        }
    }

    if (listed) {
        if (s.role == Role::Member && msg.agent_members.contains(s.head_id)) {
            // Our head merged into msg.head's cluster and took us along.
            s.head_id = msg.head;
            s.last_ch_received = now;
            s.members = msg.agent_members;
            s.human_members = msg.human_members;
        } else if (s.role == Role::ClusterHead &&
                   std::includes(msg.agent_members.begin(), msg.agent_members.end(),
                                 s.members.begin(), s.members.end())) {
            become_member_of(msg.head, now);
            s.members = msg.agent_members;
            s.human_members = msg.human_members;
        }
        return {};
    }

    if (s.role == Role::Member && msg.agent_members.contains(s.head_id)) {
        log_record("agent " + to_string(s.id) + ": head " + to_string(s.head_id) +
                   " joined " + to_string(msg.head) + " without us");
        become_singleton(now);
    }
    return {};
}

Emission Agent::handover_head(Time now) {
    auto& s = state_;
    if (!s.config.stable_handover) {
        return {};
    }
    if (s.role != Role::ClusterHead) {
        throw ProtocolError("only cluster heads hand over");
    }
    if (s.members.size() < 2) {
        throw ProtocolError("unary cluster has no member to hand over to");
    }
    std::optional<AgentId> replacement;
    Time oldest = Time::max();
    for (AgentId m : s.members) {
        if (m == s.id) continue;
        auto it = s.member_since.find(m);
        const Time since = it == s.member_since.end() ? now : it->second;
        if (since < oldest) {
            oldest = since;
            replacement = m;
        }
    }
    HeadMsg msg{*replacement, s.members, s.human_members};
    msg.agent_members.erase(s.id);
    msg.human_members.erase(s.id);
    return {Outgoing{std::move(msg), std::nullopt}};
}

void Agent::become_singleton(Time now) {
    auto& s = state_;
    s.role = Role::ClusterHead;
    s.head_id = s.id;
    s.members = {s.id};
    s.human_members = {s.id};
    s.member_last_seen.clear();
    s.member_since = {{s.id, now}};
    s.inconsistent_members.clear();
    s.next_candidate.reset();
    s.next_request_at = now;
}

void Agent::become_member_of(AgentId head, Time now) {
    auto& s = state_;
    s.role = Role::Member;
    s.head_id = head;
    s.members = {s.id, head};
    s.human_members = s.members;
    s.last_ch_received = now;
    s.member_last_seen.clear();
    s.member_since.clear();
    s.inconsistent_members.clear();
    s.next_candidate.reset();
    s.pending_request.reset();
}

void Agent::evict_expired(Time now) {
    auto& s = state_;
    std::erase_if(s.denial_cache, [now](const auto& kv) { return kv.second <= now; });
    std::erase_if(s.observed_heads, [now](const auto& kv) { return kv.second.expiry <= now; });
    const Duration ttl = s.config.opinion_ttl;
    for (auto it = s.opinion_store.begin(); it != s.opinion_store.end();) {
        std::erase_if(it->second, [&](const auto& kv) { return now - kv.second.updated > ttl; });
        it = it->second.empty() ? s.opinion_store.erase(it) : std::next(it);
    }
}

HeadMsg Agent::make_head_msg() const {
    const auto& s = state_;
    HeadMsg msg{s.id, s.members, s.config.detach_extension ? s.human_members : s.members};
    return msg;
}

std::optional<MemberMsg> Agent::make_member_msg() const {
    const auto& s = state_;
    auto in_social_range = [&](AgentId a) {
        if (a == s.id) return true;
        auto it = s.neighbors.find(a);
        return it != s.neighbors.end() && it->second.distance <= s.config.social_distance;
    };
    MemberMsg msg;
    msg.sender = s.id;
    msg.head = s.kind == AgentKind::OpinionProvider ? s.id : s.head_id;
    msg.provider = s.kind == AgentKind::OpinionProvider;
    for (const auto& [key, by_sender] : s.opinion_store) {
        auto own = by_sender.find(s.id);
        if (own == by_sender.end()) continue;
        if (in_social_range(key.first) || in_social_range(key.second)) {
            msg.opinions.push_back(PairOpinion{key.first, key.second, own->second.opinion});
        }
    }
    if (msg.opinions.empty()) {
        return std::nullopt;
    }
    return msg;
}

std::uint64_t conflict_hash(AgentId a, AgentId b) {
    const auto [lo, hi] = make_pair_key(a, b);
    std::array<unsigned char, 16> bytes{};
    for (int k = 0; k < 8; ++k) {
        bytes[static_cast<std::size_t>(k)] =
            static_cast<unsigned char>(lo.value >> (56 - 8 * k));
        bytes[static_cast<std::size_t>(8 + k)] =
            static_cast<unsigned char>(hi.value >> (56 - 8 * k));
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

AgentId resolve_conflict(AgentId a, AgentId b) {
    const std::uint64_t h = conflict_hash(a, b);
    auto ring_distance = [h](AgentId x) { return std::min(x.value - h, h - x.value); };
    const auto [lo, hi] = make_pair_key(a, b);
    return ring_distance(hi) < ring_distance(lo) ? hi : lo;
}

}  // namespace socsit
