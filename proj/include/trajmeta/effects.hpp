#pragma once
// Per-configuration effect sizes: rank-biserial correlation for continuous
// features (positive = lower values associated with resolution) and signed
// Cramer's V for binary patterns (positive = presence associated with
// resolution). Plus the Kruskal-Wallis and paired Wilcoxon helpers used in
// reporting-level comparisons.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajmeta/model.hpp"

namespace trajmeta {

// Pair-count Mann-Whitney U: pairs where a > b count 1, ties count 1/2.
double mann_whitney_u_pairs(std::span<const double> a, std::span<const double> b);
// Same quantity via midrank sums; agrees with the pair count identically.
double mann_whitney_u_ranks(std::span<const double> a, std::span<const double> b);

struct RankBiserial {
    double r = 0.0;         // 1 - 2U/(n1*n2), U = resolved-greater pair count
    double u = 0.0;
    double variance = 0.0;  // (n1 + n2 + 1) / (3 n1 n2)
};
RankBiserial rank_biserial(std::span<const double> resolved, std::span<const double> unresolved);

struct SignedCramersV {
    double v = 0.0;         // sign(ad - bc) * sqrt(chi2 / n)
    double chi2 = 0.0;
    double variance = 0.0;  // 1/n convention
};
// Table rows = pattern present/absent, columns = resolved/failed:
//   a = present & resolved, b = present & failed,
//   c = absent & resolved,  d = absent & failed.
// nullopt when any marginal is zero.
std::optional<SignedCramersV> cramers_v_signed(long long a, long long b, long long c, long long d);

struct KruskalResult {
    double h = 0.0;     // tie-corrected statistic
    double eta2 = 0.0;  // max(0, (H - k + 1) / (n - k))
};
KruskalResult kruskal_eta2(std::span<const std::vector<double>> groups);
std::string eta2_label(double eta2);  // small / medium / large at 0.01 / 0.06 / 0.14

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    int n_used = 0;          // after zero differences are dropped
    double p_value = 0.0;    // two-sided
    bool exact = false;      // exact for n_used <= 25, normal approximation above
};
// Paired signed-rank test on differences a[i] - b[i].
WilcoxonResult paired_wilcoxon(std::span<const double> a, std::span<const double> b);

enum class EffectKind { rank_biserial, cramers_v };
std::string_view to_string(EffectKind);
EffectKind effect_kind_from_string(std::string_view);  // throws DataError

struct EffectEstimate {
    ConfigurationId config;
    std::string feature;
    EffectKind kind = EffectKind::rank_biserial;
    double effect = 0.0;
    double variance = 0.0;
    int n_resolved = 0;
    int n_unresolved = 0;
};

struct FilterPolicy {
    int min_total = 20;
    int min_resolved = 5;
    int min_unresolved = 5;
};

struct SkipRecord {
    ConfigurationId config;
    std::string feature;  // "*" when the whole configuration is skipped
    std::string reason;
};

// Long-format per-trajectory inputs.
struct ContinuousTable {
    std::vector<std::string> features;
    struct Row {
        std::string id;
        ConfigurationId config;
        Outcome outcome = Outcome::failed;
        std::vector<std::optional<double>> values;  // parallel to features
    };
    std::vector<Row> rows;
};

struct PatternTable {
    std::vector<std::string> patterns;
    struct Row {
        std::string id;
        ConfigurationId config;
        Outcome outcome = Outcome::failed;
        std::vector<std::optional<bool>> values;  // nullopt = pattern absent
    };
    std::vector<Row> rows;
};

enum class VarianceMode { normal, bootstrap };

struct EffectsResult {
    std::vector<EffectEstimate> estimates;  // sorted by (feature, framework, llm)
    std::vector<SkipRecord> skips;
};

EffectsResult per_config_effects(const ContinuousTable&, const PatternTable&, const FilterPolicy&,
                                 VarianceMode mode = VarianceMode::normal,
                                 std::uint64_t seed = 0, int bootstrap_reps = 1000);

}  // namespace trajmeta
