#include "trajmeta/annotate.hpp"

#include <algorithm>
#include <cctype>

#include "trajmeta/errors.hpp"
#include "trajmeta/json_io.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

using nlohmann::json;

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

ActionCategory parse_category(const std::string& name, const std::string& context) {
    auto c = category_from_string(name);
    if (!c) throw DataError(context + ": unknown category '" + name + "'");
    return *c;
}

std::map<std::string, ActionCategory> parse_mapping(const json& obj, const std::string& context,
                                                    bool lowercase_keys) {
    if (!obj.is_object()) throw DataError(context + " must be an object");
    std::map<std::string, ActionCategory> out;
    for (const auto& [key, value] : obj.items()) {
        if (!value.is_string()) throw DataError(context + "." + key + " must be a string");
        const std::string name = lowercase_keys ? to_lower(key) : key;
        out[name] = parse_category(value.get<std::string>(), context + "." + key);
    }
    return out;
}

// Leading NAME=value tokens are environment assignments, not the command.
bool is_env_assignment(const std::string& token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos || eq == 0) return false;
    for (std::size_t i = 0; i < eq; ++i) {
        const unsigned char c = static_cast<unsigned char>(token[i]);
        if (!(std::isalnum(c) || c == '_')) return false;
    }
    return !(std::isdigit(static_cast<unsigned char>(token[0])) != 0);
}

}  // namespace

ClassifierRules classifier_rules_from_json(const json& j) {
    if (!j.is_object()) throw DataError("classifier rules must be a JSON object");
    ClassifierRules rules;
    if (!j.contains("version") || !j["version"].is_string()) {
        throw DataError("classifier rules: missing string key 'version'");
    }
    rules.version = j["version"].get<std::string>();
    if (!j.contains("bash_commands") || !j.contains("tool_signatures")) {
        throw DataError("classifier rules: need 'bash_commands' and 'tool_signatures'");
    }
    rules.bash_commands = parse_mapping(j["bash_commands"], "bash_commands", true);
    rules.tool_signatures = parse_mapping(j["tool_signatures"], "tool_signatures", false);
    return rules;
}

ErrorRules error_rules_from_json(const json& j) {
    if (!j.is_object()) throw DataError("error rules must be a JSON object");
    ErrorRules rules;
    if (!j.contains("version") || !j["version"].is_string()) {
        throw DataError("error rules: missing string key 'version'");
    }
    rules.version = j["version"].get<std::string>();
    if (!j.contains("categories") || !j["categories"].is_array() || j["categories"].empty()) {
        throw DataError("error rules: 'categories' must be a non-empty array");
    }
    for (const auto& cat : j["categories"]) {
        ErrorCategory out;
        if (!cat.is_object() || !cat.contains("type") || !cat["type"].is_string()) {
            throw DataError("error rules: each category needs a string 'type'");
        }
        out.type = cat["type"].get<std::string>();
        if (!cat.contains("patterns") || !cat["patterns"].is_array()) {
            throw DataError("error rules: category '" + out.type + "' needs a 'patterns' array");
        }
        for (const auto& pat : cat["patterns"]) {
            ErrorPattern p;
            if (pat.is_string()) {
                p.regex_text = pat.get<std::string>();
            } else if (pat.is_object() && pat.contains("regex") && pat["regex"].is_string()) {
                p.regex_text = pat["regex"].get<std::string>();
                if (pat.contains("literal")) {
                    if (!pat["literal"].is_string()) {
                        throw DataError("error rules: 'literal' must be a string");
                    }
                    p.literal = pat["literal"].get<std::string>();
                }
            } else {
                throw DataError("error rules: pattern entries must be strings or {regex, literal}");
            }
            try {
                p.compiled = std::regex(p.regex_text,
                                        std::regex::ECMAScript | std::regex::nosubs | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw DataError("error rules: invalid regex '" + p.regex_text + "': " + e.what());
            }
            out.patterns.push_back(std::move(p));
        }
        rules.categories.push_back(std::move(out));
    }
    return rules;
}

ClassifierRules load_classifier_rules(const std::filesystem::path& path) {
    try {
        return classifier_rules_from_json(parse_json_text(read_file(path)));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

ErrorRules load_error_rules(const std::filesystem::path& path) {
    try {
        return error_rules_from_json(parse_json_text(read_file(path)));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string bash_head_token(const std::string& command) {
    std::size_t pos = 0;
    const auto next_token = [&]() -> std::string {
        while (pos < command.size() && std::isspace(static_cast<unsigned char>(command[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < command.size() && !std::isspace(static_cast<unsigned char>(command[pos]))) ++pos;
        return command.substr(start, pos - start);
    };
    std::string token = next_token();
    while (!token.empty() && (is_env_assignment(token) || to_lower(token) == "sudo")) {
        token = next_token();
    }
    const std::size_t slash = token.find_last_of('/');
    if (slash != std::string::npos) token = token.substr(slash + 1);
    return token;
}

ActionCategory classify_action(const Action& action, const ClassifierRules& rules) {
    if (action.kind == ActionKind::bash) {
        const std::string head = to_lower(bash_head_token(action.command));
        auto it = rules.bash_commands.find(head);
        return it == rules.bash_commands.end() ? ActionCategory::unknown : it->second;
    }
    auto it = rules.tool_signatures.find(action.tool_name);
    return it == rules.tool_signatures.end() ? ActionCategory::unknown : it->second;
}

std::optional<std::string> detect_error(const Observation& obs, const ErrorRules& rules) {
    for (const ErrorCategory& cat : rules.categories) {
        for (const ErrorPattern& pat : cat.patterns) {
            if (!pat.literal.empty() && obs.text.find(pat.literal) == std::string::npos) continue;
            if (std::regex_search(obs.text, pat.compiled)) return cat.type;
        }
    }
    if (obs.exit_code && *obs.exit_code != 0) return std::string(kNonzeroExitType);
    return std::nullopt;
}

std::vector<Cascade> segment_cascades(const std::vector<bool>& error_flags, int min_len) {
    if (min_len < 1) throw DataError("cascade min_len must be >= 1");
    std::vector<Cascade> out;
    int run_start = -1;
    const int n = static_cast<int>(error_flags.size());
    for (int i = 0; i <= n; ++i) {
        const bool err = i < n && error_flags[static_cast<std::size_t>(i)];
        if (err && run_start < 0) run_start = i;
        if (!err && run_start >= 0) {
            const int len = i - run_start;
            if (len >= min_len) out.push_back({run_start + 1, len});
            run_start = -1;
        }
    }
    return out;
}

AnnotatedTrajectory annotate(const Trajectory& traj, const ClassifierRules& crules,
                             const ErrorRules& erules, int cascade_min_len) {
    AnnotatedTrajectory out;
    out.traj = traj;
    out.cascade_min_len = cascade_min_len;
    out.categories.reserve(traj.turns.size());
    out.error_types.reserve(traj.turns.size());
    std::vector<bool> flags;
    flags.reserve(traj.turns.size());
    for (const Turn& turn : traj.turns) {
        out.categories.push_back(classify_action(turn.action, crules));
        out.error_types.push_back(detect_error(turn.observation, erules));
        flags.push_back(out.error_types.back().has_value());
    }
    out.cascades = segment_cascades(flags, cascade_min_len);
    return out;
}

std::string to_annotated_jsonl(const AnnotatedTrajectory& at) {
    json header = header_to_json(at.traj);
    json cascades = json::array();
    for (const Cascade& c : at.cascades) cascades.push_back({c.start, c.length});
    header["cascades"] = cascades;
    header["cascade_min_len"] = at.cascade_min_len;
    std::string out = header.dump();
    out += '\n';
    for (std::size_t i = 0; i < at.traj.turns.size(); ++i) {
        json line = turn_to_json(at.traj.turns[i]);
        line["category"] = std::string(to_string(at.categories[i]));
        if (at.error_types[i]) line["error_type"] = *at.error_types[i];
        else line["error_type"] = nullptr;
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::string to_annotated_jsonl(const std::vector<AnnotatedTrajectory>& ats) {
    std::string out;
    for (const auto& at : ats) out += to_annotated_jsonl(at);
    return out;
}

std::vector<AnnotatedTrajectory> parse_annotated_jsonl(const std::string& content) {
    std::vector<AnnotatedTrajectory> out;
    bool open = false;
    for (const auto& [line_no, line] : split_jsonl_lines(content)) {
        try {
            json j = parse_json_text(line);
            if (is_header_object(j)) {
                AnnotatedTrajectory at;
                at.traj = header_from_json(j);
                if (!j.contains("cascades") || !j["cascades"].is_array()) {
                    throw DataError("missing key 'cascades'");
                }
                for (const auto& c : j["cascades"]) {
                    if (!c.is_array() || c.size() != 2) {
                        throw DataError("cascade entries must be [start, length]");
                    }
                    at.cascades.push_back({c[0].get<int>(), c[1].get<int>()});
                }
                if (j.contains("cascade_min_len") && j["cascade_min_len"].is_number_integer()) {
                    at.cascade_min_len = j["cascade_min_len"].get<int>();
                }
                out.push_back(std::move(at));
                open = true;
            } else {
                if (!open) throw DataError("turn line before any header");
                AnnotatedTrajectory& at = out.back();
                at.traj.turns.push_back(turn_from_json(j));
                if (!j.contains("category") || !j["category"].is_string()) {
                    throw DataError("missing key 'category'");
                }
                const std::string name = j["category"].get<std::string>();
                auto cat = category_from_string(name);
                if (!cat) throw DataError("unknown category '" + name + "'");
                at.categories.push_back(*cat);
                auto et = j.find("error_type");
                if (et == j.end()) throw DataError("missing key 'error_type'");
                if (et->is_null()) at.error_types.emplace_back(std::nullopt);
                else if (et->is_string()) at.error_types.emplace_back(et->get<std::string>());
                else throw DataError("key 'error_type' must be a string or null");
            }
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace trajmeta
