#include "trajmeta/json_io.hpp"

#include "trajmeta/errors.hpp"

namespace trajmeta {

using nlohmann::json;

json parse_json_text(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

namespace {

const json& require_key(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw DataError(std::string("missing key '") + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key) {
    const json& v = require_key(obj, key);
    if (!v.is_string()) throw DataError(std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw DataError(std::string("key '") + key + "' must be a string or null");
    return it->get<std::string>();
}

}  // namespace

json action_to_json(const Action& a) {
    json j;
    if (a.kind == ActionKind::bash) {
        j["kind"] = "bash";
        j["command"] = a.command;
    } else {
        j["kind"] = "tool_call";
        j["tool_name"] = a.tool_name;
        j["arguments"] = a.arguments;
    }
    return j;
}

json observation_to_json(const Observation& o) {
    json j;
    j["text"] = o.text;
    if (o.exit_code) j["exit_code"] = *o.exit_code;
    else j["exit_code"] = nullptr;
    return j;
}

json turn_to_json(const Turn& t) {
    json j;
    j["turn"] = t.index;
    if (t.thought) j["thought"] = *t.thought;
    else j["thought"] = nullptr;
    j["action"] = action_to_json(t.action);
    j["observation"] = observation_to_json(t.observation);
    return j;
}

json header_to_json(const Trajectory& t) {
    json j;
    j["trajectory_id"] = t.id;
    j["framework"] = t.config.framework;
    if (t.config.framework_version) j["framework_version"] = *t.config.framework_version;
    else j["framework_version"] = nullptr;
    j["llm"] = t.config.llm;
    j["llm_family"] = t.config.llm_family;
    j["outcome"] = std::string(to_string(t.outcome));
    return j;
}

Action action_from_json(const json& j) {
    if (!j.is_object()) throw DataError("action must be an object");
    Action a;
    const std::string kind = require_string(j, "kind");
    if (kind == "bash") {
        a.kind = ActionKind::bash;
        a.command = require_string(j, "command");
    } else if (kind == "tool_call") {
        a.kind = ActionKind::tool_call;
        a.tool_name = require_string(j, "tool_name");
        auto it = j.find("arguments");
        if (it != j.end()) {
            if (!it->is_null() && !it->is_object()) {
                throw DataError("key 'arguments' must be an object or null");
            }
            a.arguments = *it;
        }
    } else {
        throw DataError("unknown action kind '" + kind + "'");
    }
    return a;
}

Observation observation_from_json(const json& j) {
    if (!j.is_object()) throw DataError("observation must be an object");
    Observation o;
    o.text = require_string(j, "text");
    auto it = j.find("exit_code");
    if (it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw DataError("key 'exit_code' must be an integer or null");
        o.exit_code = it->get<int>();
    }
    return o;
}

Turn turn_from_json(const json& j) {
    if (!j.is_object()) throw DataError("turn must be an object");
    Turn t;
    const json& idx = require_key(j, "turn");
    if (!idx.is_number_integer() || idx.get<long long>() < 1) {
        throw DataError("key 'turn' must be an integer >= 1");
    }
    t.index = idx.get<int>();
    auto th = j.find("thought");
    if (th != j.end() && !th->is_null()) {
        if (!th->is_string()) throw DataError("key 'thought' must be a string or null");
        t.thought = th->get<std::string>();
    }
    t.action = action_from_json(require_key(j, "action"));
    t.observation = observation_from_json(require_key(j, "observation"));
    return t;
}

Trajectory header_from_json(const json& j) {
    if (!j.is_object()) throw DataError("header must be an object");
    Trajectory t;
    t.id = require_string(j, "trajectory_id");
    t.config.framework = require_string(j, "framework");
    t.config.framework_version = optional_string(j, "framework_version");
    t.config.llm = require_string(j, "llm");
    t.config.llm_family = require_string(j, "llm_family");
    const std::string outcome = require_string(j, "outcome");
    auto parsed = outcome_from_string(outcome);
    if (!parsed) throw DataError("outcome must be 'resolved' or 'failed', got '" + outcome + "'");
    t.outcome = *parsed;
    return t;
}

bool is_header_object(const json& j) {
    return j.is_object() && j.contains("trajectory_id");
}

std::string to_canonical_jsonl(const Trajectory& t) {
    std::string out = header_to_json(t).dump();
    out += '\n';
    for (const Turn& turn : t.turns) {
        out += turn_to_json(turn).dump();
        out += '\n';
    }
    return out;
}

std::string to_canonical_jsonl(const std::vector<Trajectory>& ts) {
    std::string out;
    for (const Trajectory& t : ts) out += to_canonical_jsonl(t);
    return out;
}

std::vector<std::pair<std::size_t, std::string_view>> split_jsonl_lines(std::string_view content) {
    std::vector<std::pair<std::size_t, std::string_view>> lines;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        ++line_no;
        std::string_view line = content.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.emplace_back(line_no, line);
        if (end == content.size()) break;
        pos = end + 1;
    }
    return lines;
}

std::vector<Trajectory> parse_canonical_jsonl(const std::string& content) {
    std::vector<Trajectory> out;
    bool open = false;
    for (const auto& [line_no, line] : split_jsonl_lines(content)) {
        json j;
        try {
            j = parse_json_text(line);
            if (is_header_object(j)) {
                out.push_back(header_from_json(j));
                open = true;
            } else {
                if (!open) throw DataError("turn line before any header");
                out.back().turns.push_back(turn_from_json(j));
            }
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace trajmeta
