#pragma once

// Line-oriented log encoding: `time;type;from;to|*;payload`.
//
// payload per type (space separated key=value, sets comma separated):
//   cm   o=<sender> p=<head> prov=<0|1> op=<i>:<j>:<b,d,u,a> ...
//   ch   p=<head> ca=<ids> ch=<ids>
//   req  p=<head> c=<ids>
//   res  r=<responder> ok=<0|1> [fwd=<head> fc=<ids>]

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "socsit/protocol.hpp"

namespace socsit {

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MessageType { Member, Head, Request, Response };

MessageType message_type(const Message& msg);
const char* type_code(MessageType type);
MessageType parse_type_code(std::string_view code);

std::string encode_payload(const Message& msg);
Message decode_payload(MessageType type, std::string_view payload);

struct WireRecord {
    Time time{0};
    Message message;
    AgentId from;
    std::optional<AgentId> to;  // empty = broadcast

    friend bool operator==(const WireRecord&, const WireRecord&) = default;
};

std::string format_time(Time t);
std::string encode_record(const WireRecord& rec);
WireRecord decode_record(std::string_view line);

}  // namespace socsit
