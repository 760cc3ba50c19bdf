#pragma once
// Per-trajectory behavioral features and their per-configuration summaries.
//
// Boundary conventions, pinned once here:
//   - "first 25% of turns"  = indices i <= ceil(N/4)
//   - "final 25% of turns"  = indices i >  floor(3N/4)
//   - normalized position of turn i = (i - 1) / (N - 1), N > 1
//   - entropies use the natural log
//   - lookahead windows after turn i cover strictly later turns i+1 .. i+3,
//     truncated at the end of the trajectory

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "trajmeta/annotate.hpp"

namespace trajmeta {

inline constexpr std::size_t kFeatureCount = 16;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "exploration_ratio",
    "modification_ratio",
    "test_ratio",
    "navigation_ratio",
    "trajectory_length_log",
    "transition_entropy",
    "exploration_frontloading",
    "first_modification_timing",
    "phase_transition_point",
    "late_stage_entropy",
    "error_rate",
    "cascade_rate",
    "recovery_rate",
    "repetition_rate",
    "mean_cascade_length",
    "productive_turn_ratio",
};

struct FeatureVector {
    double exploration_ratio = 0.0;
    double modification_ratio = 0.0;
    double test_ratio = 0.0;
    double navigation_ratio = 0.0;
    double trajectory_length_log = 0.0;  // log(1 + N)
    double transition_entropy = 0.0;
    double exploration_frontloading = 0.0;  // 0 when there is no Exploration turn
    std::optional<double> first_modification_timing;  // absent: no Modification or N = 1
    std::optional<double> phase_transition_point;     // absent: windowed mode never shifts
    double late_stage_entropy = 0.0;
    double error_rate = 0.0;
    double cascade_rate = 0.0;   // errors with another error in their lookahead window
    double recovery_rate = 0.0;  // errors whose window opens with a clean turn
    double repetition_rate = 0.0;
    double mean_cascade_length = 0.0;  // 0 when there is no cascade
    double productive_turn_ratio = 0.0;

    std::array<std::optional<double>, kFeatureCount> as_array() const;
};

FeatureVector trajectory_features(const AnnotatedTrajectory&);

struct ConfigFeatureSummary {
    ConfigurationId config;
    int n_trajectories = 0;
    // Medians of the per-trajectory values (absent values excluded), except
    // trajectory_length_log = log(1 + median turn count). A slot is absent
    // when no trajectory defines it.
    std::array<std::optional<double>, kFeatureCount> features{};
    double mean_turns = 0.0;  // arithmetic mean of turn counts
};

ConfigFeatureSummary summarize_config(const ConfigurationId&, std::span<const FeatureVector>,
                                      std::span<const int> turn_counts);

}  // namespace trajmeta
