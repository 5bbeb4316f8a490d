#include "socsit/wire.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <vector>

namespace socsit {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw WireError("bad integer '" + std::string(text) + "'");
    }
    return v;
}

AgentId parse_id(std::string_view text) { return AgentId{parse_u64(text)}; }

std::string join_ids(const IdSet& ids) {
    std::string out;
    for (AgentId id : ids) {
        if (!out.empty()) out += ',';
        out += to_string(id);
    }
    return out;
}

IdSet parse_ids(std::string_view text) {
    IdSet ids;
    if (text.empty()) return ids;
    for (auto part : split(text, ',')) {
        ids.insert(parse_id(part));
    }
    return ids;
}

// key=value tokens; repeated keys (op=) keep their order.
std::vector<std::pair<std::string_view, std::string_view>> tokens(std::string_view payload) {
    std::vector<std::pair<std::string_view, std::string_view>> out;
    for (auto tok : split(payload, ' ')) {
        if (tok.empty()) continue;
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) {
            throw WireError("payload token without '=': '" + std::string(tok) + "'");
        }
        out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return out;
}

std::string_view require(const std::map<std::string_view, std::string_view>& kv,
                         std::string_view key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw WireError("payload missing '" + std::string(key) + "'");
    return it->second;
}

}  // namespace

MessageType message_type(const Message& msg) {
    return static_cast<MessageType>(msg.index());
}

const char* type_code(MessageType type) {
    switch (type) {
        case MessageType::Member:
            return "cm";
        case MessageType::Head:
            return "ch";
        case MessageType::Request:
            return "req";
        case MessageType::Response:
            return "res";
    }
    return "?";
}

MessageType parse_type_code(std::string_view code) {
    if (code == "cm") return MessageType::Member;
    if (code == "ch") return MessageType::Head;
    if (code == "req") return MessageType::Request;
    if (code == "res") return MessageType::Response;
    throw WireError("unknown message type '" + std::string(code) + "'");
}

std::string encode_payload(const Message& msg) {
    return std::visit(
        [](const auto& m) -> std::string {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MemberMsg>) {
                std::string out = "o=" + to_string(m.sender) + " p=" + to_string(m.head) +
                                  " prov=" + (m.provider ? "1" : "0");
                for (const auto& po : m.opinions) {
                    out += " op=" + to_string(po.i) + ':' + to_string(po.j) + ':' +
                           format_opinion(po.opinion);
                }
                return out;
            } else if constexpr (std::is_same_v<M, HeadMsg>) {
                return "p=" + to_string(m.head) + " ca=" + join_ids(m.agent_members) +
                       " ch=" + join_ids(m.human_members);
            } else if constexpr (std::is_same_v<M, RequestMsg>) {
                return "p=" + to_string(m.head) + " c=" + join_ids(m.members);
            } else {
                std::string out = "r=" + to_string(m.responder) + " ok=" + (m.accepted ? "1" : "0");
                if (m.forward_to) {
                    out += " fwd=" + to_string(*m.forward_to) + " fc=" + join_ids(m.forward_members);
                }
                return out;
            }
        },
        msg);
}

Message decode_payload(MessageType type, std::string_view payload) {
    const auto toks = tokens(payload);
    std::map<std::string_view, std::string_view> kv;
    for (const auto& [k, v] : toks) {
        if (k != "op") kv[k] = v;
    }
    switch (type) {
        case MessageType::Member: {
            MemberMsg m;
            m.sender = parse_id(require(kv, "o"));
            m.head = parse_id(require(kv, "p"));
            m.provider = require(kv, "prov") == "1";
            for (const auto& [k, v] : toks) {
                if (k != "op") continue;
                const auto parts = split(v, ':');
                if (parts.size() != 3) throw WireError("bad opinion tuple '" + std::string(v) + "'");
                try {
                    m.opinions.push_back(PairOpinion{parse_id(parts[0]), parse_id(parts[1]),
                                                     parse_opinion(std::string(parts[2]))});
                } catch (const OpinionError& e) {
                    throw WireError(e.what());
                }
            }
            return m;
        }
        case MessageType::Head:
            return HeadMsg{parse_id(require(kv, "p")), parse_ids(require(kv, "ca")),
                           parse_ids(require(kv, "ch"))};
        case MessageType::Request:
            return RequestMsg{parse_id(require(kv, "p")), parse_ids(require(kv, "c"))};
        case MessageType::Response: {
            ResponseMsg r;
            r.responder = parse_id(require(kv, "r"));
            r.accepted = require(kv, "ok") == "1";
            if (kv.contains("fwd")) {
                r.forward_to = parse_id(kv.at("fwd"));
                r.forward_members = parse_ids(require(kv, "fc"));
            }
            return r;
        }
    }
    throw WireError("unreachable message type");
}

std::string format_time(Time t) {
    const auto ms = t.count();
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%03lld", ms < 0 ? "-" : "",
                  static_cast<long long>((ms < 0 ? -ms : ms) / 1000),
                  static_cast<long long>((ms < 0 ? -ms : ms) % 1000));
    return buf;
}

std::string encode_record(const WireRecord& rec) {
    return format_time(rec.time) + ';' + type_code(message_type(rec.message)) + ';' +
           to_string(rec.from) + ';' + (rec.to ? to_string(*rec.to) : std::string("*")) + ';' +
           encode_payload(rec.message);
}

WireRecord decode_record(std::string_view line) {
    const auto fields = split(line, ';');
    if (fields.size() != 5) {
        throw WireError("expected 5 ';'-separated fields in '" + std::string(line) + "'");
    }
    WireRecord rec;
    const auto dot = fields[0].find('.');
    if (dot == std::string_view::npos || fields[0].size() - dot != 4) {
        throw WireError("bad time '" + std::string(fields[0]) + "'");
    }
    rec.time = Time(static_cast<std::int64_t>(parse_u64(fields[0].substr(0, dot)) * 1000 +
                                              parse_u64(fields[0].substr(dot + 1))));
    rec.message = decode_payload(parse_type_code(fields[1]), fields[4]);
    rec.from = parse_id(fields[2]);
    if (fields[3] != "*") rec.to = parse_id(fields[3]);
    return rec;
}

}  // namespace socsit
