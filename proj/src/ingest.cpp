#include "trajmeta/ingest.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "trajmeta/errors.hpp"
#include "trajmeta/json_io.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::string_view first_nonblank_line(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) return line;
        pos = end + 1;
    }
    return {};
}

bool detect_canonical(std::string_view text) {
    const std::string_view line = first_nonblank_line(text);
    if (line.empty() || trim(line).front() != '{') return false;
    try {
        return is_header_object(parse_json_text(line));
    } catch (const DataError&) {
        return false;
    }
}

bool detect_react(std::string_view text) {
    return first_nonblank_line(text).starts_with("TRAJECTORY ");
}

bool detect_nested(std::string_view text) {
    const std::string_view body = trim(text);
    if (body.empty() || body.front() != '{') return false;
    try {
        const auto j = parse_json_text(text);
        return j.is_object() && j.contains("trajectories");
    } catch (const DataError&) {
        return false;
    }
}

[[noreturn]] void react_fail(std::size_t line_no, const std::string& message) {
    throw DataError("line " + std::to_string(line_no) + ": " + message);
}

struct ReactState {
    std::optional<Trajectory> traj;
    std::optional<Turn> turn;
    std::string thought;
    bool have_thought = false;
    enum class Append { none, thought, observation } append = Append::none;
    std::vector<Trajectory> done;

    void finish_turn(std::size_t line_no) {
        if (!turn) return;
        if (!traj) react_fail(line_no, "action before any TRAJECTORY header");
        turn->index = static_cast<int>(traj->turns.size()) + 1;
        traj->turns.push_back(std::move(*turn));
        turn.reset();
    }

    void finish_trajectory(std::size_t line_no) {
        finish_turn(line_no);
        if (traj) {
            done.push_back(std::move(*traj));
            traj.reset();
        }
        thought.clear();
        have_thought = false;
        append = Append::none;
    }
};

Trajectory parse_react_header(std::string_view line, std::size_t line_no) {
    Trajectory traj;
    std::map<std::string, std::string, std::less<>> fields;
    std::string_view rest = line.substr(std::string_view("TRAJECTORY ").size());
    while (!rest.empty()) {
        while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        if (rest.empty()) break;
        const std::size_t sp = rest.find(' ');
        const std::string_view token = rest.substr(0, sp);
        rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
        const std::size_t eq = token.find('=');
        if (eq == std::string_view::npos) {
            react_fail(line_no, "malformed header token '" + std::string(token) + "'");
        }
        fields.emplace(token.substr(0, eq), token.substr(eq + 1));
    }
    for (const char* key : {"id", "framework", "llm", "outcome"}) {
        if (!fields.contains(key)) {
            react_fail(line_no, std::string("trajectory header missing '") + key + "'");
        }
    }
    traj.id = fields["id"];
    traj.config.framework = fields["framework"];
    if (const auto it = fields.find("framework_version");
        it != fields.end() && it->second != "-") {
        traj.config.framework_version = it->second;
    }
    traj.config.llm = fields["llm"];
    if (const auto it = fields.find("llm_family"); it != fields.end()) {
        traj.config.llm_family = it->second;
    }
    const auto outcome = outcome_from_string(fields["outcome"]);
    if (!outcome) react_fail(line_no, "unknown outcome '" + fields["outcome"] + "'");
    traj.outcome = *outcome;
    return traj;
}

}  // namespace

std::vector<Trajectory> parse_react_text(std::string_view text) {
    ReactState state;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        const bool last = end >= text.size();
        pos = end + 1;

        if (trim(line).empty()) {
            state.append = ReactState::Append::none;
            if (last) break;
            continue;
        }

        if (line.starts_with("TRAJECTORY ")) {
            state.finish_trajectory(line_no);
            state.traj = parse_react_header(line, line_no);
        } else if (line.starts_with("THOUGHT:")) {
            if (!state.traj) react_fail(line_no, "thought before any TRAJECTORY header");
            state.thought = std::string(trim(line.substr(8)));
            state.have_thought = true;
            state.append = ReactState::Append::thought;
        } else if (line.starts_with("ACTION:") || line.starts_with("ACTION[")) {
            if (!state.traj) react_fail(line_no, "action before any TRAJECTORY header");
            state.finish_turn(line_no);
            Turn turn;
            if (line.starts_with("ACTION:")) {
                turn.action.kind = ActionKind::bash;
                turn.action.command = std::string(trim(line.substr(7)));
            } else {
                const std::size_t close = line.find("]:");
                if (close == std::string_view::npos) {
                    react_fail(line_no, "malformed tool action marker");
                }
                turn.action.kind = ActionKind::tool_call;
                turn.action.tool_name = std::string(line.substr(7, close - 7));
                const std::string_view args = trim(line.substr(close + 2));
                if (!args.empty()) {
                    nlohmann::json parsed;
                    try {
                        parsed = parse_json_text(args);
                    } catch (const DataError& e) {
                        react_fail(line_no, std::string("bad tool arguments: ") + e.what());
                    }
                    if (!parsed.is_object()) react_fail(line_no, "tool arguments must be an object");
                    turn.action.arguments = std::move(parsed);
                }
            }
            if (state.have_thought) {
                turn.thought = std::move(state.thought);
                state.thought.clear();
                state.have_thought = false;
            }
            state.turn = std::move(turn);
            state.append = ReactState::Append::none;
        } else if (line.starts_with("OBSERVATION:")) {
            if (!state.turn) react_fail(line_no, "observation before any action");
            state.turn->observation.text = std::string(trim(line.substr(12)));
            state.append = ReactState::Append::observation;
        } else if (line.starts_with("EXIT:")) {
            if (!state.turn) react_fail(line_no, "exit code before any action");
            try {
                state.turn->observation.exit_code = static_cast<int>(parse_int(trim(line.substr(5))));
            } catch (const DataError&) {
                react_fail(line_no, "bad exit code '" + std::string(trim(line.substr(5))) + "'");
            }
            state.append = ReactState::Append::none;
        } else if (state.append == ReactState::Append::thought) {
            state.thought += '\n';
            state.thought += line;
        } else if (state.append == ReactState::Append::observation) {
            state.turn->observation.text += '\n';
            state.turn->observation.text += line;
        } else {
            react_fail(line_no, "unexpected content '" + std::string(line.substr(0, 40)) + "'");
        }
        if (last) break;
    }
    state.finish_trajectory(line_no);
    if (state.done.empty()) throw DataError("no TRAJECTORY blocks found");
    return state.done;
}

std::vector<Trajectory> parse_nested_json_text(std::string_view text) {
    const auto root = parse_json_text(text);
    if (!root.is_object() || !root.contains("trajectories") ||
        !root.at("trajectories").is_array()) {
        throw DataError("expected a top-level object with a 'trajectories' array");
    }
    std::vector<Trajectory> out;
    std::size_t index = 0;
    for (const auto& item : root.at("trajectories")) {
        ++index;
        const std::string where = "trajectory " + std::to_string(index) + ": ";
        if (!item.is_object()) throw DataError(where + "not an object");
        for (const char* key : {"id", "metadata", "steps"}) {
            if (!item.contains(key)) throw DataError(where + "missing key '" + key + "'");
        }
        Trajectory traj;
        traj.id = item.at("id").get<std::string>();
        const auto& meta = item.at("metadata");
        for (const char* key : {"framework", "llm", "outcome"}) {
            if (!meta.contains(key)) throw DataError(where + "metadata missing key '" + key + "'");
        }
        traj.config.framework = meta.at("framework").get<std::string>();
        if (meta.contains("framework_version") && !meta.at("framework_version").is_null()) {
            traj.config.framework_version = meta.at("framework_version").get<std::string>();
        }
        traj.config.llm = meta.at("llm").get<std::string>();
        if (meta.contains("llm_family") && !meta.at("llm_family").is_null()) {
            traj.config.llm_family = meta.at("llm_family").get<std::string>();
        }
        const auto outcome = outcome_from_string(meta.at("outcome").get<std::string>());
        if (!outcome) {
            throw DataError(where + "unknown outcome '" +
                            meta.at("outcome").get<std::string>() + "'");
        }
        traj.outcome = *outcome;

        std::size_t step_no = 0;
        for (const auto& step : item.at("steps")) {
            ++step_no;
            const std::string step_where = where + "step " + std::to_string(step_no) + ": ";
            if (!step.is_object()) throw DataError(step_where + "not an object");
            Turn turn;
            turn.index = static_cast<int>(step_no);
            if (step.contains("reasoning") && !step.at("reasoning").is_null()) {
                turn.thought = step.at("reasoning").get<std::string>();
            }
            const bool has_command = step.contains("command") && !step.at("command").is_null();
            const bool has_tool = step.contains("tool") && !step.at("tool").is_null();
            if (has_command == has_tool) {
                throw DataError(step_where + "expected exactly one of 'command' or 'tool'");
            }
            if (has_command) {
                turn.action.kind = ActionKind::bash;
                turn.action.command = step.at("command").get<std::string>();
            } else {
                const auto& tool = step.at("tool");
                if (!tool.is_object() || !tool.contains("name")) {
                    throw DataError(step_where + "tool missing key 'name'");
                }
                turn.action.kind = ActionKind::tool_call;
                turn.action.tool_name = tool.at("name").get<std::string>();
                if (tool.contains("args") && !tool.at("args").is_null()) {
                    if (!tool.at("args").is_object()) {
                        throw DataError(step_where + "tool args must be an object");
                    }
                    turn.action.arguments = tool.at("args");
                }
            }
            if (step.contains("output") && !step.at("output").is_null()) {
                turn.observation.text = step.at("output").get<std::string>();
            }
            if (step.contains("exit_code") && !step.at("exit_code").is_null()) {
                turn.observation.exit_code = step.at("exit_code").get<int>();
            }
            traj.turns.push_back(std::move(turn));
        }
        out.push_back(std::move(traj));
    }
    return out;
}

const std::vector<FormatAdapter>& default_adapters() {
    static const std::vector<FormatAdapter> adapters = {
        {"canonical", detect_canonical,
         [](std::string_view text) { return parse_canonical_jsonl(std::string(text)); }},
        {"react", detect_react, [](std::string_view text) { return parse_react_text(text); }},
        {"nested", detect_nested,
         [](std::string_view text) { return parse_nested_json_text(text); }},
    };
    return adapters;
}

std::vector<FormatAdapter> select_adapters(std::span<const std::string> names) {
    std::vector<FormatAdapter> out;
    for (const auto& name : names) {
        const auto& all = default_adapters();
        const auto it = std::find_if(all.begin(), all.end(),
                                     [&](const FormatAdapter& a) { return a.name == name; });
        if (it == all.end()) throw UsageError("unknown adapter '" + name + "'");
        out.push_back(*it);
    }
    return out;
}

FamilyMap family_map_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("family map: expected an object of llm -> family");
    FamilyMap map;
    for (const auto& [llm, family] : j.items()) {
        if (!family.is_string()) throw DataError("family map: value for '" + llm + "' not a string");
        map[llm] = family.get<std::string>();
    }
    return map;
}

nlohmann::json ingest_report_to_json(const IngestReport& report) {
    nlohmann::json rejections = nlohmann::json::array();
    for (const auto& [file, reason] : report.rejection_reasons) {
        rejections.push_back({{"file", file}, {"reason", reason}});
    }
    return nlohmann::json{{"files_seen", report.files_seen},
                          {"trajectories_parsed", report.trajectories_parsed},
                          {"trajectories_rejected", report.trajectories_rejected},
                          {"rejections", std::move(rejections)}};
}

IngestResult ingest_path(const std::filesystem::path& root,
                         std::span<const FormatAdapter> adapters, const FamilyMap& family,
                         int jobs) {
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_regular_file(root, ec)) {
        files.push_back(root);
    } else if (std::filesystem::is_directory(root, ec)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
            return a.generic_string() < b.generic_string();
        });
    } else {
        throw DataError("cannot read '" + root.string() + "'");
    }

    struct FileOutcome {
        std::vector<Trajectory> trajectories;
        std::optional<std::string> failure;
    };
    std::vector<FileOutcome> outcomes(files.size());
    parallel_for(files.size(), jobs, [&](std::size_t i) {
        const std::string text = read_file(files[i]);
        const FormatAdapter* matched = nullptr;
        std::string matches;
        for (const auto& adapter : adapters) {
            if (!adapter.detect(text)) continue;
            if (matched) {
                matches = matched->name + ", " + adapter.name;
                matched = nullptr;
                break;
            }
            matched = &adapter;
        }
        if (!matches.empty()) {
            outcomes[i].failure = "matches multiple adapters: " + matches;
            return;
        }
        if (!matched) {
            outcomes[i].failure = "no format match";
            return;
        }
        try {
            outcomes[i].trajectories = matched->parse(text);
        } catch (const DataError& e) {
            outcomes[i].failure = std::string(matched->name) + ": " + e.what();
        }
    });

    IngestResult result;
    result.report.files_seen = static_cast<long>(files.size());
    std::set<std::string> seen_ids;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string file = files[i].generic_string();
        if (outcomes[i].failure) {
            result.report.rejection_reasons.emplace_back(file, *outcomes[i].failure);
            continue;
        }
        for (auto& traj : outcomes[i].trajectories) {
            if (traj.config.llm_family.empty()) {
                const auto it = family.find(traj.config.llm);
                if (it != family.end()) traj.config.llm_family = it->second;
            }
            std::string reason;
            const auto violations = validate_trajectory(traj);
            if (!violations.empty()) {
                reason = "trajectory '" + traj.id + "': " + violations.front();
                for (std::size_t v = 1; v < violations.size(); ++v) {
                    reason += "; " + violations[v];
                }
            } else if (traj.config.llm_family.empty()) {
                reason = "trajectory '" + traj.id + "': unknown llm family for '" +
                         traj.config.llm + "'";
            } else if (!seen_ids.insert(traj.id).second) {
                reason = "duplicate trajectory id '" + traj.id + "'";
            }
            if (!reason.empty()) {
                ++result.report.trajectories_rejected;
                result.report.rejection_reasons.emplace_back(file, reason);
                continue;
            }
            ++result.report.trajectories_parsed;
            result.trajectories.push_back(std::move(traj));
        }
    }
    return result;
}

}  // namespace trajmeta
