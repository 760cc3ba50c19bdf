#include "trajmeta/model.hpp"

namespace trajmeta {

std::string_view to_string(Outcome o) {
    return o == Outcome::resolved ? "resolved" : "failed";
}

std::string_view to_string(ActionCategory c) {
    return kCategoryNames[static_cast<std::size_t>(c)];
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
    if (s == "resolved") return Outcome::resolved;
    if (s == "failed") return Outcome::failed;
    return std::nullopt;
}

std::optional<ActionCategory> category_from_string(std::string_view s) {
    for (int i = 0; i < kCategoryCount; ++i) {
        if (kCategoryNames[static_cast<std::size_t>(i)] == s) {
            return static_cast<ActionCategory>(i);
        }
    }
    return std::nullopt;
}

std::string config_key(const ConfigurationId& c) {
    return c.framework + "\x1f" + c.llm;
}

std::vector<std::string> validate_trajectory(const Trajectory& t) {
    std::vector<std::string> violations;
    if (t.id.empty()) violations.push_back("empty trajectory id");
    if (t.config.framework.empty()) violations.push_back("empty framework");
    if (t.config.llm.empty()) violations.push_back("empty llm");
    if (t.turns.empty()) {
        violations.push_back("empty trajectory");
        return violations;
    }
    int expected = 1;
    for (const Turn& turn : t.turns) {
        if (turn.index != expected) {
            violations.push_back("non-contiguous index at turn " + std::to_string(turn.index));
            expected = turn.index;  // resync so one gap reports once
        }
        ++expected;
        const std::string at = "turn " + std::to_string(turn.index) + ": ";
        if (turn.action.kind == ActionKind::bash) {
            if (turn.action.command.empty()) {
                violations.push_back(at + "kind=bash requires non-empty command");
            }
        } else {
            if (turn.action.tool_name.empty()) {
                violations.push_back(at + "kind=tool_call requires non-empty tool_name");
            }
            if (!turn.action.arguments.is_null() && !turn.action.arguments.is_object()) {
                violations.push_back(at + "tool_call arguments must be an object or null");
            }
        }
    }
    return violations;
}

std::string action_string(const Action& a) {
    if (a.kind == ActionKind::bash) return "bash\x1f" + a.command;
    return "tool\x1f" + a.tool_name + "\x1f" + a.arguments.dump();
}

}  // namespace trajmeta
