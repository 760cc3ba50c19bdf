#pragma once
// Binary strategy patterns P1..P7 and the threshold manifest they are judged
// against. Thresholds are an explicit input: they come from a calibration
// corpus (or are set by hand) and are never silently re-derived from the
// corpus under analysis.

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "trajmeta/annotate.hpp"

namespace trajmeta {

struct ThresholdManifest {
    double cascade_median = 0.0;       // median per-trajectory max cascade length
    double length_median = 0.0;        // median turn count
    double late_entropy_median = 0.0;  // median late-stage entropy
    double exploration_low = 0.30;     // inclusive band for P2
    double exploration_high = 0.50;
    int recovery_max_turns = 2;        // P4: first cascade length <= this
    std::string source;
};

// Medians over the given corpus; cascade_median is taken over trajectories
// that have at least one cascade (the sub-population P3 is defined on).
ThresholdManifest compute_thresholds(std::span<const AnnotatedTrajectory>, std::string source);

nlohmann::json thresholds_to_json(const ThresholdManifest&);
ThresholdManifest thresholds_from_json(const nlohmann::json&);  // missing key -> DataError
ThresholdManifest load_thresholds(const std::filesystem::path&);
void save_thresholds(const std::filesystem::path&, const ThresholdManifest&);

inline constexpr std::size_t kPatternCount = 7;
inline constexpr std::array<std::string_view, kPatternCount> kPatternNames = {
    "p1_explore_before_modify", "p2_balanced_exploration", "p3_short_cascades",
    "p4_quick_recovery",        "p5_short_trajectory",     "p6_low_late_entropy",
    "p7_test_after_modify",
};

// One slot per pattern; nullopt = pattern not defined for this trajectory
// (P1/P7: no Modification turn; P3: no error turn; P4: no cascade).
struct PatternVector {
    std::array<std::optional<bool>, kPatternCount> p{};
};

PatternVector detect_patterns(const AnnotatedTrajectory&, const ThresholdManifest&);

}  // namespace trajmeta
