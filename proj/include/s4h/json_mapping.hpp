#pragma once

// JSON form of bus messages, used by the WebSocket bridge and `s4h echo`.
// Integers map exactly; doubles are printed in shortest round-trip form.

#include <json.hpp>

#include "s4h/bus.hpp"
#include "s4h/messages.hpp"

namespace s4h {

nlohmann::json message_to_json(const Message& m);
// Inverse of message_to_json for the given schema. Throws
// Error{InvariantViolation} on missing or mistyped fields.
Message message_from_json(SchemaId schema, const nlohmann::json& j);

// {"op":"msg","topic":...,"schema":...,"bus_time_ns":...,"data":{...}}
nlohmann::json delivery_to_json(const Delivery& d);

nlohmann::json parameter_to_json(const ParameterValue& v);

}  // namespace s4h
