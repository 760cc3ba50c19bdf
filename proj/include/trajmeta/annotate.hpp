#pragma once
// Action classification, error detection, and cascade segmentation. Both rule
// sets are versioned JSON data files so the mapping is auditable and swappable
// without recompiling.

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "trajmeta/model.hpp"

namespace trajmeta {

struct ClassifierRules {
    std::string version;
    // bash command names, stored lowercase; lookups are case-insensitive
    std::map<std::string, ActionCategory> bash_commands;
    // structured tool names; lookups are case-sensitive
    std::map<std::string, ActionCategory> tool_signatures;
};

struct ErrorPattern {
    std::string regex_text;
    std::string literal;  // cheap substring prefilter; empty = always run regex
    std::regex compiled;
};

struct ErrorCategory {
    std::string type;
    std::vector<ErrorPattern> patterns;
};

struct ErrorRules {
    std::string version;
    std::vector<ErrorCategory> categories;  // match order
};

// The error type forced by a non-zero exit code when no text pattern matches.
inline constexpr const char* kNonzeroExitType = "nonzero_exit";

ClassifierRules load_classifier_rules(const std::filesystem::path&);
ErrorRules load_error_rules(const std::filesystem::path&);
ClassifierRules classifier_rules_from_json(const nlohmann::json&);
ErrorRules error_rules_from_json(const nlohmann::json&);

// First whitespace token of a bash command after leading VAR=value assignments
// and sudo are stripped; path prefixes are dropped. Empty when no token.
std::string bash_head_token(const std::string& command);

ActionCategory classify_action(const Action&, const ClassifierRules&);

// First matching category in rule order; falls back to nonzero_exit when the
// exit code is present and non-zero but no text pattern fires.
std::optional<std::string> detect_error(const Observation&, const ErrorRules&);

struct Cascade {
    int start = 0;   // 1-based turn index
    int length = 0;  // consecutive error turns
    bool operator==(const Cascade&) const = default;
};

// Maximal runs of consecutive error turns with length >= min_len.
std::vector<Cascade> segment_cascades(const std::vector<bool>& error_flags, int min_len = 1);

struct AnnotatedTrajectory {
    Trajectory traj;
    std::vector<ActionCategory> categories;            // one per turn
    std::vector<std::optional<std::string>> error_types;  // one per turn
    std::vector<Cascade> cascades;
    int cascade_min_len = 1;

    int turn_count() const { return static_cast<int>(traj.turns.size()); }
    bool has_error(std::size_t i) const { return error_types[i].has_value(); }
};

AnnotatedTrajectory annotate(const Trajectory&, const ClassifierRules&, const ErrorRules&,
                             int cascade_min_len = 1);

// Annotated JSONL: canonical lines plus per-turn category/error_type and a
// header-level cascade list.
std::string to_annotated_jsonl(const AnnotatedTrajectory&);
std::string to_annotated_jsonl(const std::vector<AnnotatedTrajectory>&);
std::vector<AnnotatedTrajectory> parse_annotated_jsonl(const std::string& content);

}  // namespace trajmeta
