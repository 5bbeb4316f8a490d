#include <doctest.h>

#include <random>

#include "socsit/protocol.hpp"

using namespace socsit;
using namespace std::chrono_literals;

namespace {

const ProtocolConfig kCfg = ProtocolConfig::with_period(1000ms);

AgentId id(std::uint64_t v) { return AgentId{v}; }

Opinion strong(double b) { return {b, 0.95 - b, 0.05, 0.5}; }

PerceptUpdate percept(std::vector<PairOpinion> ops, std::vector<std::uint64_t> neighbors,
                      double dist = 1.0) {
    PerceptUpdate u;
    u.opinions = std::move(ops);
    for (auto n : neighbors) u.neighbors.push_back({id(n), dist, AgentKind::HumanLinked});
    return u;
}

template <class T>
const T* first_of(const Emission& out) {
    for (const auto& o : out) {
        if (auto* m = std::get_if<T>(&o.message)) return m;
    }
    return nullptr;
}

bool role_coherent(const Agent& a) {
    const auto& s = a.state();
    return (s.role == Role::ClusterHead) == (s.head_id == s.id);
}

// Agent `who` as member of head `head`, with cluster view `members`.
void make_member(Agent& a, AgentId head, IdSet members, Time now) {
    auto& s = a.mutable_state();
    s.role = Role::Member;
    s.head_id = head;
    s.members = members;
    s.human_members = members;
    s.last_ch_received = now;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(kCfg.validate());
    auto c = kCfg;
    c.period = 0ms;
    CHECK_THROWS_AS(c.validate(), ProtocolError);
    c = kCfg;
    c.request_threshold = 1.0;
    CHECK_THROWS_AS(c.validate(), ProtocolError);
    c = kCfg;
    c.social_distance = 0.0;
    CHECK_THROWS_AS(c.validate(), ProtocolError);
    CHECK(kCfg.denial_ttl == 10000ms);
    CHECK(kCfg.head_knowledge_ttl == 5000ms);
    CHECK(kCfg.opinion_ttl == 3000ms);
}

TEST_CASE("fresh agent emits its unary cluster") {
    Agent a(id(1), AgentKind::HumanLinked, kCfg);
    const auto out = a.tick(0ms);
    const auto* head = first_of<HeadMsg>(out);
    REQUIRE(head != nullptr);
    CHECK(head->head == id(1));
    CHECK(head->agent_members == IdSet{id(1)});
    CHECK(head->human_members == IdSet{id(1)});
    CHECK(role_coherent(a));
}

TEST_CASE("member times out after a silent period") {
    Agent a(id(2), AgentKind::HumanLinked, kCfg);
    make_member(a, id(1), {id(1), id(2)}, 0ms);
    a.mutable_state().next_period = 1000ms;
    a.tick(1000ms);
    CHECK(a.state().role == Role::Member);  // exactly T: not yet broken
    const auto out = a.tick(2000ms);
    CHECK(a.state().role == Role::ClusterHead);
    CHECK(a.state().members == IdSet{id(2)});
    CHECK(first_of<HeadMsg>(out) != nullptr);
    CHECK(role_coherent(a));
}

TEST_CASE("member message carries in-range pair opinions") {
    Agent a(id(2), AgentKind::HumanLinked, kCfg);
    make_member(a, id(1), {id(1), id(2)}, 0ms);
    a.apply_percept(percept({{id(2), id(3), strong(0.9)},
                             {id(3), id(4), strong(0.8)},
                             {id(1), id(4), strong(0.7)},
                             {id(8), id(9), strong(0.6)}},
                            {3, 4, 1}),
                    0ms);
    // 8 and 9 are beyond social distance.
    a.mutable_state().neighbors[id(8)] = {id(8), 40.0, AgentKind::HumanLinked};
    a.mutable_state().neighbors[id(9)] = {id(9), 45.0, AgentKind::HumanLinked};
    const auto out = a.tick(0ms);
    const auto* msg = first_of<MemberMsg>(out);
    REQUIRE(msg != nullptr);
    CHECK(msg->sender == id(2));
    CHECK(msg->head == id(1));
    CHECK(msg->opinions.size() == 3);
}

TEST_CASE("member without opinions stays silent") {
    Agent a(id(2), AgentKind::HumanLinked, kCfg);
    make_member(a, id(1), {id(1), id(2)}, 0ms);
    CHECK(a.tick(0ms).empty());
}

TEST_CASE("get_candidate") {
    Agent a(id(1), AgentKind::HumanLinked, kCfg);
    CHECK_FALSE(a.get_candidate(0ms).has_value());

    a.apply_percept(percept({{id(1), id(2), {0.9, 0.05, 0.05, 0.5}}}, {2}), 0ms);
    REQUIRE(a.get_candidate(0ms).has_value());
    CHECK(*a.get_candidate(0ms) == id(2));

    a.mutable_state().denial_cache[id(2)] = 5000ms;
    CHECK_FALSE(a.get_candidate(0ms).has_value());
    CHECK(*a.get_candidate(5000ms) == id(2));  // expired entry no longer blocks
}

TEST_CASE("get_candidate prefers the best, ties to the smaller id") {
    Agent a(id(1), AgentKind::HumanLinked, kCfg);
    a.apply_percept(percept({{id(1), id(3), strong(0.8)},
                             {id(1), id(4), strong(0.9)},
                             {id(1), id(2), strong(0.9)},
                             {id(1), id(5), strong(0.1)}},
                            {2, 3, 4, 5}),
                    0ms);
    CHECK(*a.get_candidate(0ms) == id(2));
}

TEST_CASE("get_candidate respects social distance and providers") {
    Agent a(id(1), AgentKind::HumanLinked, kCfg);
    auto u = percept({{id(1), id(2), strong(0.9)}, {id(1), id(3), strong(0.9)}}, {});
    u.neighbors.push_back({id(2), 12.0, AgentKind::HumanLinked});
    u.neighbors.push_back({id(3), 2.0, AgentKind::OpinionProvider});
    a.apply_percept(u, 0ms);
    CHECK_FALSE(a.get_candidate(0ms).has_value());
}

TEST_CASE("direct-to-head routing") {
    auto cfg = kCfg;
    cfg.direct_to_head_routing = true;
    Agent a(id(1), AgentKind::HumanLinked, cfg);
    a.apply_percept(percept({{id(1), id(4), strong(0.9)}}, {3, 4, 8}), 0ms);
    a.handle_head_msg(HeadMsg{id(3), {id(3), id(4), id(8)}, {id(3), id(4), id(8)}}, id(3), 0ms);
    CHECK(a.state().observed_heads.at(id(4)).head == id(3));
    CHECK(a.state().observed_heads.at(id(8)).head == id(3));
    CHECK(*a.get_candidate(0ms) == id(3));
}

TEST_CASE("send_request") {
    Agent a(id(5), AgentKind::HumanLinked, kCfg);
    auto out = a.send_request(id(9), 100ms);
    REQUIRE(out.size() == 1);
    CHECK(out[0].target == id(9));
    CHECK(std::get<RequestMsg>(out[0].message) == RequestMsg{id(5), {id(5)}});
    CHECK(a.state().pending_request->target == id(9));
    CHECK(a.state().pending_request->sent == 100ms);
    CHECK_THROWS_AS(a.send_request(id(10), 100ms), ProtocolError);

    Agent b(id(5), AgentKind::HumanLinked, kCfg);
    b.mutable_state().members = {id(5), id(7)};
    CHECK(std::get<RequestMsg>(b.send_request(id(9), 0ms)[0].message).members == IdSet{id(5), id(7)});
}

TEST_CASE("handle_request: member forwards to its head") {
    Agent m(id(7), AgentKind::HumanLinked, kCfg);
    make_member(m, id(5), {id(5), id(7)}, 0ms);
    const auto out = m.handle_request(RequestMsg{id(9), {id(9)}}, 0ms);
    REQUIRE(out.size() == 1);
    CHECK(out[0].target == id(9));
    const auto& res = std::get<ResponseMsg>(out[0].message);
    CHECK_FALSE(res.accepted);
    CHECK(res.forward_to == id(5));
    CHECK(res.forward_members == IdSet{id(5), id(7)});
}

TEST_CASE("handle_request: head accepts or declines on the group opinion") {
    Agent h(id(5), AgentKind::HumanLinked, kCfg);
    h.apply_percept(percept({{id(5), id(9), {0.75, 0.15, 0.1, 0.5}}}, {9}), 0ms);
    const auto out = h.handle_request(RequestMsg{id(9), {id(9)}}, 0ms);
    CHECK(std::get<ResponseMsg>(out[0].message).accepted);
    CHECK(h.state().members == IdSet{id(5), id(9)});
    CHECK(h.state().role == Role::ClusterHead);

    Agent g(id(5), AgentKind::HumanLinked, kCfg);
    g.apply_percept(percept({{id(5), id(9), {0.15, 0.75, 0.1, 0.5}}}, {9}), 0ms);
    const auto no = g.handle_request(RequestMsg{id(9), {id(9)}}, 0ms);
    const auto& res = std::get<ResponseMsg>(no[0].message);
    CHECK_FALSE(res.accepted);
    CHECK_FALSE(res.forward_to.has_value());
    CHECK(g.state().members == IdSet{id(5)});
}

TEST_CASE("check_for_social_situation") {
    SUBCASE("vacuous opinions fall back to the base rate") {
        auto cfg = kCfg;
        cfg.base_rate = 0.1;
        Agent h(id(1), AgentKind::HumanLinked, cfg);
        CHECK_FALSE(h.check_for_social_situation(RequestMsg{id(2), {id(2)}}));
    }
    SUBCASE("four strong believers outweigh one doubter") {
        // Fused by n-ary averaging: b = 74/90, u = 5/90 -> E ~ 0.85.
        Agent h(id(1), AgentKind::HumanLinked, kCfg);
        auto& store = h.mutable_state().opinion_store[make_pair_key(id(1), id(2))];
        for (std::uint64_t s = 10; s < 14; ++s) store[id(s)] = {{0.9, 0.05, 0.05, 0.5}, 0ms};
        store[id(20)] = {{0.2, 0.7, 0.1, 0.5}, 0ms};
        CHECK(h.check_for_social_situation(RequestMsg{id(2), {id(2)}}));
        CHECK(expectation(h.group_opinion({id(1)}, {id(2)})) == doctest::Approx(0.85).epsilon(1e-9));
    }
    SUBCASE("singleton cluster matches the single opinion") {
        Agent h(id(1), AgentKind::HumanLinked, kCfg);
        h.apply_percept(percept({{id(1), id(2), {0.6, 0.3, 0.1, 0.5}}}, {2}), 0ms);
        CHECK(h.check_for_social_situation(RequestMsg{id(2), {id(2)}}) ==
              decide({0.6, 0.3, 0.1, 0.5}, 0.5));
    }
}

TEST_CASE("late discretization differs from majority voting") {
    // One confident yes and four hesitant noes. Averaging: b = 23/(100/3),
    // u = 5/(100/3) -> E = 0.765; per-opinion votes: 1 of 5 pass.
    const std::vector<Opinion> ops{{0.95, 0.0, 0.05, 0.5},
                                   {0.3, 0.4, 0.3, 0.5},
                                   {0.3, 0.4, 0.3, 0.5},
                                   {0.3, 0.4, 0.3, 0.5},
                                   {0.3, 0.4, 0.3, 0.5}};
    Agent h(id(1), AgentKind::HumanLinked, kCfg);
    auto& store = h.mutable_state().opinion_store[make_pair_key(id(1), id(2))];
    std::uint64_t sender = 10;
    int votes = 0;
    for (const auto& op : ops) {
        store[id(sender++)] = {op, 0ms};
        votes += decide(op, 0.5) ? 1 : 0;
    }
    const bool majority = votes * 2 > static_cast<int>(ops.size());
    CHECK_FALSE(majority);
    CHECK(h.check_for_social_situation(RequestMsg{id(2), {id(2)}}));
    CHECK(expectation(h.group_opinion({id(1)}, {id(2)})) == doctest::Approx(0.765));
}

TEST_CASE("u_min floors stored opinions before fusion") {
    auto cfg = kCfg;
    cfg.u_min = 0.5;
    Agent h(id(1), AgentKind::HumanLinked, cfg);
    h.apply_percept(percept({{id(1), id(2), {1.0, 0.0, 0.0, 0.5}}}, {2}), 0ms);
    const auto g = h.group_opinion({id(1)}, {id(2)});
    CHECK(g.uncertainty == doctest::Approx(0.5));
    CHECK(g.belief == doctest::Approx(0.5));
}

TEST_CASE("handle_response") {
    SUBCASE("accepted") {
        Agent a(id(5), AgentKind::HumanLinked, kCfg);
        a.send_request(id(9), 0ms);
        a.handle_response(ResponseMsg{id(9), true, std::nullopt, {}}, 0ms);
        CHECK(a.state().role == Role::Member);
        CHECK(a.state().head_id == id(9));
        CHECK_FALSE(a.state().pending_request.has_value());
        CHECK(role_coherent(a));
    }
    SUBCASE("forward to a feasible head") {
        Agent a(id(5), AgentKind::HumanLinked, kCfg);
        a.apply_percept(percept({{id(5), id(3), strong(0.9)}, {id(5), id(7), strong(0.9)}}, {3, 7}), 0ms);
        a.send_request(id(7), 0ms);
        a.handle_response(ResponseMsg{id(7), false, id(3), {id(3), id(7)}}, 0ms);
        CHECK(a.state().next_candidate == id(3));
        CHECK_FALSE(a.state().pending_request.has_value());
        CHECK_FALSE(a.state().denial_cache.contains(id(7)));
    }
    SUBCASE("forward to an infeasible head") {
        Agent a(id(5), AgentKind::HumanLinked, kCfg);
        a.apply_percept(percept({{id(5), id(3), strong(0.05)}, {id(5), id(7), strong(0.3)}}, {3, 7}), 0ms);
        a.send_request(id(7), 0ms);
        a.handle_response(ResponseMsg{id(7), false, id(3), {id(3), id(7)}}, 0ms);
        CHECK_FALSE(a.state().next_candidate.has_value());
        CHECK(a.state().denial_cache.at(id(7)) == kCfg.denial_ttl);
    }
    SUBCASE("flat decline") {
        Agent a(id(5), AgentKind::HumanLinked, kCfg);
        a.send_request(id(9), 2000ms);
        a.handle_response(ResponseMsg{id(9), false, std::nullopt, {}}, 2500ms);
        CHECK(a.state().denial_cache.at(id(9)) == 2500ms + kCfg.denial_ttl);
        CHECK_FALSE(a.state().pending_request.has_value());
    }
    SUBCASE("unmatched response is ignored") {
        Agent a(id(5), AgentKind::HumanLinked, kCfg);
        a.handle_response(ResponseMsg{id(9), true, std::nullopt, {}}, 0ms);
        CHECK(a.state().role == Role::ClusterHead);
    }
}

TEST_CASE("pending request times out after one period") {
    Agent a(id(1), AgentKind::HumanLinked, kCfg);
    a.apply_percept(percept({{id(1), id(2), strong(0.9)}}, {2}), 0ms);
    const auto out = a.tick(0ms);
    REQUIRE(first_of<RequestMsg>(out) != nullptr);
    a.tick(1000ms);
    CHECK(a.state().pending_request.has_value());
    a.tick(1200ms);
    CHECK_FALSE(a.state().pending_request.has_value());
    CHECK(a.state().denial_cache.at(id(2)) == 2200ms);
}

TEST_CASE("handle_member_msg") {
    Agent h(id(1), AgentKind::HumanLinked, kCfg);
    h.mutable_state().members = {id(1), id(7)};
    h.mutable_state().member_last_seen[id(7)] = 0ms;

    h.handle_member_msg(MemberMsg{id(7), id(1), false, {{id(1), id(7), strong(0.9)}}}, 800ms);
    CHECK(h.state().member_last_seen.at(id(7)) == 800ms);
    CHECK(h.state().opinion_store.at(make_pair_key(id(1), id(7))).contains(id(7)));

    h.handle_member_msg(MemberMsg{id(7), id(4), false, {{id(1), id(7), strong(0.9)}}}, 900ms);
    CHECK(h.state().inconsistent_members.contains(id(7)));
    h.recompute_membership(1000ms);
    CHECK_FALSE(h.state().members.contains(id(7)));
    CHECK(h.state().observed_heads.at(id(7)).head == id(4));
}

TEST_CASE("opinion providers never enter clusters") {
    Agent h(id(1), AgentKind::HumanLinked, kCfg);
    h.handle_member_msg(MemberMsg{id(50), id(50), true, {{id(2), id(3), strong(0.9)}}}, 0ms);
    CHECK(h.state().opinion_store.at(make_pair_key(id(2), id(3))).contains(id(50)));
    CHECK(h.state().known_providers.contains(id(50)));
    h.mutable_state().opinion_store[make_pair_key(id(1), id(50))][id(1)] = {strong(0.9), 0ms};
    h.mutable_state().neighbors[id(50)] = {id(50), 1.0, AgentKind::OpinionProvider};
    CHECK_FALSE(h.get_candidate(0ms).has_value());

    Agent p(id(50), AgentKind::OpinionProvider, kCfg);
    CHECK(p.state().members.empty());
    CHECK(p.handle_request(RequestMsg{id(1), {id(1)}}, 0ms).empty());
    p.apply_percept(percept({{id(2), id(3), strong(0.9)}}, {2, 3}), 0ms);
    const auto out = p.tick(0ms);
    REQUIRE(out.size() == 1);
    CHECK(std::get<MemberMsg>(out[0].message).provider);
}

TEST_CASE("humans without agents never send") {
    Agent x(id(3), AgentKind::HumanWithoutAgent, kCfg);
    x.apply_percept(percept({{id(2), id(3), strong(0.9)}}, {2}), 0ms);
    CHECK(x.tick(0ms).empty());
    CHECK(x.handle_request(RequestMsg{id(1), {id(1)}}, 0ms).empty());
}

TEST_CASE("recompute_membership") {
    auto fresh_head = [] {
        Agent h(id(1), AgentKind::HumanLinked, kCfg);
        auto& s = h.mutable_state();
        s.members = {id(1), id(2), id(3)};
        for (auto m : {2, 3}) {
            s.member_last_seen[id(m)] = 900ms;
            s.opinion_store[make_pair_key(id(1), id(m))][id(1)] = {strong(0.9), 900ms};
        }
        s.opinion_store[make_pair_key(id(2), id(3))][id(2)] = {strong(0.9), 900ms};
        return h;
    };
    SUBCASE("all fresh and positive") {
        auto h = fresh_head();
        h.recompute_membership(1000ms);
        CHECK(h.state().members == IdSet{id(1), id(2), id(3)});
    }
    SUBCASE("silent member") {
        auto h = fresh_head();
        h.mutable_state().member_last_seen[id(3)] = -200ms;
        h.recompute_membership(1000ms);
        CHECK(h.state().members == IdSet{id(1), id(2)});
    }
    SUBCASE("opinion decays") {
        auto h = fresh_head();
        auto& s = h.mutable_state();
        s.opinion_store[make_pair_key(id(1), id(3))][id(1)] = {{0.15, 0.75, 0.1, 0.5}, 900ms};
        s.opinion_store[make_pair_key(id(2), id(3))][id(2)] = {{0.15, 0.75, 0.1, 0.5}, 900ms};
        h.recompute_membership(1000ms);
        CHECK(h.state().members == IdSet{id(1), id(2)});
    }
}

TEST_CASE("handle_head_msg") {
    SUBCASE("own head lists self") {
        Agent m(id(2), AgentKind::HumanLinked, kCfg);
        make_member(m, id(1), {id(1), id(2)}, 0ms);
        m.handle_head_msg(HeadMsg{id(1), {id(1), id(2), id(3)}, {id(1), id(2), id(3)}}, id(1), 700ms);
        CHECK(m.state().last_ch_received == 700ms);
        CHECK(m.state().members == IdSet{id(1), id(2), id(3)});
    }
    SUBCASE("own head omits self") {
        Agent m(id(2), AgentKind::HumanLinked, kCfg);
        make_member(m, id(1), {id(1), id(2)}, 0ms);
        m.handle_head_msg(HeadMsg{id(1), {id(1), id(3)}, {id(1), id(3)}}, id(1), 700ms);
        CHECK(m.state().role == Role::ClusterHead);
        CHECK(m.state().members == IdSet{id(2)});
        CHECK(role_coherent(m));
    }
    SUBCASE("foreign head") {
        Agent a(id(1), AgentKind::HumanLinked, kCfg);
        a.handle_head_msg(HeadMsg{id(3), {id(3), id(4), id(8)}, {id(3), id(4), id(8)}}, id(3), 0ms);
        CHECK(a.state().observed_heads.at(id(4)).head == id(3));
        CHECK(a.state().observed_heads.at(id(8)).head == id(3));
        CHECK(a.state().role == Role::ClusterHead);
    }
    SUBCASE("head merged elsewhere takes its members along") {
        Agent m(id(2), AgentKind::HumanLinked, kCfg);
        make_member(m, id(5), {id(2), id(5)}, 0ms);
        m.handle_head_msg(HeadMsg{id(9), {id(2), id(5), id(9)}, {id(2), id(5), id(9)}}, id(9), 500ms);
        CHECK(m.state().head_id == id(9));
        CHECK(m.state().role == Role::Member);
    }
    SUBCASE("head merged elsewhere without us") {
        Agent m(id(2), AgentKind::HumanLinked, kCfg);
        make_member(m, id(5), {id(2), id(5)}, 0ms);
        m.handle_head_msg(HeadMsg{id(9), {id(5), id(9)}, {id(5), id(9)}}, id(9), 500ms);
        CHECK(m.state().role == Role::ClusterHead);
    }
}

TEST_CASE("handover_head") {
    auto cfg = kCfg;
    cfg.stable_handover = true;
    Agent h(id(1), AgentKind::HumanLinked, cfg);
    auto& s = h.mutable_state();
    s.members = {id(1), id(2), id(3)};
    s.member_since = {{id(1), 0ms}, {id(2), 1000ms}, {id(3), 4000ms}};
    const auto out = h.handover_head(9000ms);
    REQUIRE(out.size() == 1);
    const auto& msg = std::get<HeadMsg>(out[0].message);
    CHECK(msg.head == id(2));
    CHECK(msg.agent_members == IdSet{id(2), id(3)});

    // replacement takes over and announces itself immediately
    Agent r(id(2), AgentKind::HumanLinked, cfg);
    make_member(r, id(1), {id(1), id(2), id(3)}, 8000ms);
    const auto announce = r.handle_head_msg(msg, id(1), 9000ms);
    CHECK(r.state().role == Role::ClusterHead);
    REQUIRE(first_of<HeadMsg>(announce) != nullptr);
    CHECK(first_of<HeadMsg>(announce)->agent_members == IdSet{id(2), id(3)});

    Agent o(id(3), AgentKind::HumanLinked, cfg);
    make_member(o, id(1), {id(1), id(2), id(3)}, 8000ms);
    o.handle_head_msg(msg, id(1), 9000ms);
    CHECK(o.state().head_id == id(2));

    Agent u(id(4), AgentKind::HumanLinked, cfg);
    CHECK_THROWS_AS(u.handover_head(0ms), ProtocolError);

    Agent off(id(1), AgentKind::HumanLinked, kCfg);
    off.mutable_state().members = {id(1), id(2)};
    CHECK(off.handover_head(0ms).empty());
}

TEST_CASE("handover ties go to the smaller id") {
    auto cfg = kCfg;
    cfg.stable_handover = true;
    Agent h(id(1), AgentKind::HumanLinked, cfg);
    auto& s = h.mutable_state();
    s.members = {id(1), id(4), id(6)};
    s.member_since = {{id(1), 0ms}, {id(4), 1000ms}, {id(6), 1000ms}};
    CHECK(std::get<HeadMsg>(h.handover_head(2000ms)[0].message).head == id(4));
}

TEST_CASE("conflict resolution") {
    CHECK(resolve_conflict(id(5), id(9)) == resolve_conflict(id(9), id(5)));
    // Pinned from an independent FNV-1a computation over 00..05 00..09.
    CHECK(conflict_hash(id(5), id(9)) == 0xa70c7de579f8a551ULL);
    CHECK(resolve_conflict(id(5), id(9)) == id(5));
    CHECK(resolve_conflict(id(2), id(3)) == id(3));
    CHECK(resolve_conflict(id(100), id(7)) == id(7));

    std::mt19937_64 rng(1);
    for (int k = 0; k < 1000; ++k) {
        const AgentId a{rng()}, b{rng()};
        const AgentId w = resolve_conflict(a, b);
        CHECK((w == a || w == b));
        CHECK(w == resolve_conflict(b, a));
    }
}

TEST_CASE("mutual requests: only the designated head answers") {
    const AgentId win = resolve_conflict(id(5), id(9));
    const AgentId lose = win == id(5) ? id(9) : id(5);
    Agent w(win, AgentKind::HumanLinked, kCfg);
    Agent l(lose, AgentKind::HumanLinked, kCfg);
    for (auto* a : {&w, &l}) {
        a->apply_percept(percept({{id(5), id(9), strong(0.9)}}, {5, 9}), 0ms);
    }
    w.send_request(lose, 0ms);
    l.send_request(win, 0ms);
    CHECK(l.handle_request(RequestMsg{win, {win}}, 0ms).empty());
    const auto out = w.handle_request(RequestMsg{lose, {lose}}, 0ms);
    REQUIRE(out.size() == 1);
    CHECK(std::get<ResponseMsg>(out[0].message).accepted);
    CHECK_FALSE(w.state().pending_request.has_value());
    l.handle_response(std::get<ResponseMsg>(out[0].message), 0ms);
    CHECK(l.state().head_id == win);
    CHECK(w.state().members == IdSet{id(5), id(9)});
}

TEST_CASE("state stays bounded") {
    Agent a(id(1), AgentKind::HumanLinked, kCfg);
    std::mt19937_64 rng(3);
    std::size_t peak = 0;
    for (int t = 0; t < 2000; ++t) {
        const Time now(t * 200);
        if (t % 5 == 0) {
            std::vector<PairOpinion> ops;
            const std::uint64_t base = 2 + rng() % 20;
            for (std::uint64_t j = base; j < base + 4; ++j) ops.push_back({id(1), id(j), strong(0.3)});
            a.apply_percept(percept(ops, {base, base + 1, base + 2, base + 3}), now);
        }
        a.tick(now);
        const auto& s = a.state();
        peak = std::max(peak, s.opinion_store.size() + s.denial_cache.size() + s.observed_heads.size());
    }
    // 4 neighbors per observation, kept for at most 3 periods, plus denials.
    CHECK(peak <= 60);
}
