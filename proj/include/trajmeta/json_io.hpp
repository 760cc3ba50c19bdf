#pragma once
// Canonical JSONL serialization. One trajectory = a header line followed by
// one line per turn; a file holds any number of trajectories back to back.
// Writers always emit optional keys as null and rely on sorted object keys,
// which makes serialization byte-deterministic; readers accept missing
// optional keys and ignore unknown ones.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajmeta/model.hpp"

namespace trajmeta {

// Parses one JSON document; DataError carries the byte offset on failure.
nlohmann::json parse_json_text(std::string_view text);

nlohmann::json action_to_json(const Action&);
nlohmann::json observation_to_json(const Observation&);
nlohmann::json turn_to_json(const Turn&);
nlohmann::json header_to_json(const Trajectory&);

Action action_from_json(const nlohmann::json&);
Observation observation_from_json(const nlohmann::json&);
Turn turn_from_json(const nlohmann::json&);
Trajectory header_from_json(const nlohmann::json&);  // turns left empty

// A canonical line is a header iff it carries "trajectory_id".
bool is_header_object(const nlohmann::json&);

std::string to_canonical_jsonl(const Trajectory&);
std::string to_canonical_jsonl(const std::vector<Trajectory>&);

// Strict reader: any malformed line aborts with a DataError naming the line.
std::vector<Trajectory> parse_canonical_jsonl(const std::string& content);

// Splits into lines without their terminators; keeps empty lines out.
std::vector<std::pair<std::size_t, std::string_view>> split_jsonl_lines(std::string_view content);

}  // namespace trajmeta
