#pragma once

// JSON mappings for model entities. Encoders emit keys in a fixed order so the
// serialized text is canonical; decoders reject unknown keys and wrong types
// with Error("SCHEMA_ERROR").

#include <json.hpp>

#include "sdnaaa/model.hpp"

namespace sdnaaa {

using Json = nlohmann::ordered_json;

Json to_json(const PeerEntry& peer);
Json to_json(const RealmEntry& entry);
Json to_json(const TlsProfile& profile);
Json to_json(const AttributeRule& rule);
Json to_json(const ConfigDocument& doc);
Json to_json(const Violation& violation);
Json to_json(const Notification& note);
/// Node-to-node record: {"kind":"request"|"response","msg_id",...,"trace":[...]}.
Json to_json(const AaaMessage& message);

PeerEntry peer_from_json(const Json& j);
RealmEntry realm_entry_from_json(const Json& j);
TlsProfile tls_profile_from_json(const Json& j);
AttributeRule attribute_rule_from_json(const Json& j);
ConfigDocument document_from_json(const Json& j);
Violation violation_from_json(const Json& j);
Notification notification_from_json(const Json& j);
AaaMessage message_from_json(const Json& j);

/// Parses text, mapping syntax errors to Error("PARSE_ERROR").
Json parse_json(std::string_view text);

}  // namespace sdnaaa
