#pragma once
// Canonical trajectory model: one agent run as an ordered sequence of
// (thought, action, observation) turns under a (framework, llm) configuration.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace trajmeta {

enum class Outcome { resolved, failed };

enum class ActionKind { bash, tool_call };

// Declaration order doubles as the deterministic tie-break order wherever a
// mode over categories has to pick one.
enum class ActionCategory { exploration, modification, test, navigation, utility, unknown };

inline constexpr int kCategoryCount = 6;
inline constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "exploration", "modification", "test", "navigation", "utility", "unknown"};

std::string_view to_string(Outcome);
std::string_view to_string(ActionCategory);
std::optional<Outcome> outcome_from_string(std::string_view);
std::optional<ActionCategory> category_from_string(std::string_view);

struct Action {
    ActionKind kind = ActionKind::bash;
    std::string command;        // bash: the shell command line
    std::string tool_name;      // tool_call: structured tool name
    nlohmann::json arguments;   // tool_call: argument object, or null
    bool operator==(const Action&) const = default;
};

struct Observation {
    std::string text;
    std::optional<int> exit_code;  // null when the runner reported none
    bool operator==(const Observation&) const = default;
};

struct Turn {
    int index = 1;  // 1-based, contiguous within a trajectory
    std::optional<std::string> thought;
    Action action;
    Observation observation;
    bool operator==(const Turn&) const = default;
};

struct ConfigurationId {
    std::string framework;
    std::optional<std::string> framework_version;
    std::string llm;
    std::string llm_family;
    bool operator==(const ConfigurationId&) const = default;
};

// Grouping key: (framework, llm). llm_family is a function of llm and
// framework_version is informational, so neither enters the key.
std::string config_key(const ConfigurationId&);

struct Trajectory {
    std::string id;
    ConfigurationId config;
    Outcome outcome = Outcome::failed;
    std::vector<Turn> turns;
    bool operator==(const Trajectory&) const = default;
};

// Structural checks; returns human-readable violations, empty when valid.
std::vector<std::string> validate_trajectory(const Trajectory&);

// Canonical identity of an action, used for verbatim-repetition detection.
std::string action_string(const Action&);

}  // namespace trajmeta
