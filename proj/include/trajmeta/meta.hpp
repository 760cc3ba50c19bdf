#pragma once
// DerSimonian-Laird random-effects pooling across configurations, direction
// splits, heterogeneity classification, and single-moderator meta-regression
// with a method-of-moments residual tau^2 and pseudo-R^2.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajmeta/effects.hpp"

namespace trajmeta {

struct PooledEffect {
    int k = 0;
    double fixed_effect = 0.0;   // inverse-variance weighted mean
    double pooled_effect = 0.0;  // random-effects weighted mean
    double q = 0.0;
    double tau2 = 0.0;
    double i2 = 0.0;  // percent, [0, 100]
};

// Weights are 1/variance; Q and I^2 come from the fixed-effect fit, the
// point estimate is then recomputed with 1/(variance + tau^2) weights.
PooledEffect pool(std::span<const double> effects, std::span<const double> variances);

// universal (< 25), moderate ([25, 75)), config_specific (>= 75).
std::string_view heterogeneity_class(double i2);

struct DirectionSplit {
    int n_pos = 0;
    int n_neg = 0;
    int n_zero = 0;
};
// |effect| <= zero_band counts as zero.
DirectionSplit direction_split(std::span<const double> effects, double zero_band = 0.0);

enum class Moderator { framework, llm_family };
std::string_view to_string(Moderator);
Moderator moderator_from_string(std::string_view);
std::string moderator_value(const ConfigurationId&, Moderator);

struct ModeratorFit {
    Moderator moderator = Moderator::framework;
    std::vector<std::string> levels;        // sorted distinct labels
    std::vector<double> coefficients;       // per-level means, random-effects refit
    int k = 0;
    double tau2_null = 0.0;
    double tau2_residual = 0.0;
    double r2 = 0.0;
    int single_config_levels = 0;  // levels contributing no residual df
};

// Cell-means dummy coding (one column per level, no intercept), weighted
// least squares. Throws DataError when the moderator has a single level or
// when k < levels + 1 leaves no residual degrees of freedom.
ModeratorFit meta_regress(std::span<const double> effects, std::span<const double> variances,
                          std::span<const std::string> labels, Moderator which);
ModeratorFit meta_regress(std::span<const EffectEstimate> effects, Moderator which);

struct MetaRow {
    std::string feature;
    EffectKind kind = EffectKind::rank_biserial;
    PooledEffect pooled;
    DirectionSplit split;
    std::string classification;
};

// One row per feature with at least two surviving configurations; features
// with fewer are omitted. Input may be unsorted; rows come out sorted by
// feature name.
std::vector<MetaRow> meta_all(std::span<const EffectEstimate> estimates, double zero_band = 0.0);

struct FitRow {
    std::string feature;
    ModeratorFit fit;
};

// Per-feature regression for one moderator; features where the fit is
// infeasible (single level, too few configurations) are skipped.
std::vector<FitRow> meta_regress_all(std::span<const EffectEstimate> estimates, Moderator which);

}  // namespace trajmeta
