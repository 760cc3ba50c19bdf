#pragma once
// Diagnostics around a single meta-regression R^2: bootstrap percentile CI
// over configurations, permutation null over moderator labels, and exhaustive
// leave-one-level-out refits.

#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajmeta/meta.hpp"

namespace trajmeta {

// One feature's effects with the moderator labels the diagnostics act on.
struct ModeratorData {
    std::string feature;
    Moderator moderator = Moderator::framework;
    std::vector<double> effects;
    std::vector<double> variances;
    std::vector<std::string> labels;
};

// Slice of the estimates for one feature. Throws DataError when the feature
// is absent.
ModeratorData moderator_data(std::span<const EffectEstimate> estimates,
                             const std::string& feature, Moderator which);

struct BootstrapCi {
    double lo = 0.0;
    double hi = 0.0;
    int redraws = 0;  // degenerate resamples that were redrawn
};

// Resamples configurations with replacement and refits R^2 per resample.
// Degenerate resamples (moderator collapses to one level, or too few
// configurations per level) are redrawn deterministically; more redraws than
// half of n_boot aborts with DataError "moderator too sparse".
BootstrapCi bootstrap_r2_ci(const ModeratorData& data, int n_boot, std::uint64_t seed);

struct PermutationNull {
    double null_mean = 0.0;
    double null_p95 = 0.0;
    double p = 1.0;  // (1 + #{null >= observed}) / (1 + n_perm)
};

PermutationNull permutation_null(const ModeratorData& data, int n_perm, std::uint64_t seed);

struct LooEntry {
    std::string level;
    std::optional<double> r2;  // nullopt when the refit is infeasible
};

struct LooResult {
    std::vector<LooEntry> entries;                  // one per level, sorted
    std::optional<std::pair<double, double>> range;  // (min, max) over feasible refits
};

// Requires at least 3 moderator levels.
LooResult leave_one_level_out(const ModeratorData& data);

struct RobustnessReport {
    std::string feature;
    Moderator moderator = Moderator::framework;
    double r2_observed = 0.0;
    int n_boot = 0;
    BootstrapCi boot;
    int n_perm = 0;
    PermutationNull perm;
    LooResult loo;
    bool passes_chance_baseline = false;  // perm.p < 0.05
};

RobustnessReport robustness(const ModeratorData& data, int n_boot = 2000, int n_perm = 2000,
                            std::uint64_t seed = 0);

nlohmann::json robustness_to_json(const RobustnessReport& report);

}  // namespace trajmeta
