#include "trajmeta/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "trajmeta/errors.hpp"
#include "trajmeta/rng.hpp"
#include "trajmeta/stats.hpp"

namespace trajmeta {

namespace {

constexpr std::uint64_t kBootStream = 0x626f6f74ULL;  // "boot"
constexpr std::uint64_t kPermStream = 0x7065726dULL;  // "perm"

double refit_r2(const ModeratorData& data, std::span<const std::size_t> indices) {
    std::vector<double> y, v;
    std::vector<std::string> labels;
    y.reserve(indices.size());
    v.reserve(indices.size());
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        y.push_back(data.effects[i]);
        v.push_back(data.variances[i]);
        labels.push_back(data.labels[i]);
    }
    return meta_regress(y, v, labels, data.moderator).r2;
}

}  // namespace

ModeratorData moderator_data(std::span<const EffectEstimate> estimates,
                             const std::string& feature, Moderator which) {
    ModeratorData data;
    data.feature = feature;
    data.moderator = which;
    for (const auto& e : estimates) {
        if (e.feature != feature) continue;
        data.effects.push_back(e.effect);
        data.variances.push_back(e.variance);
        data.labels.push_back(moderator_value(e.config, which));
    }
    if (data.effects.empty()) throw DataError("no estimates for feature '" + feature + "'");
    return data;
}

BootstrapCi bootstrap_r2_ci(const ModeratorData& data, int n_boot, std::uint64_t seed) {
    if (n_boot < 1) throw DataError("bootstrap: n_boot must be positive");
    const std::size_t k = data.effects.size();
    std::vector<double> replicates;
    replicates.reserve(static_cast<std::size_t>(n_boot));

    BootstrapCi out;
    std::vector<std::size_t> indices(k);
    for (int b = 0; b < n_boot; ++b) {
        for (int attempt = 0;; ++attempt) {
            // Counter advances by n_boot per redraw so every attempt has its
            // own seed regardless of thread scheduling.
            const std::uint64_t counter =
                static_cast<std::uint64_t>(b) +
                static_cast<std::uint64_t>(attempt) * static_cast<std::uint64_t>(n_boot);
            Rng rng(derive_seed(seed, kBootStream, counter));
            for (auto& idx : indices) idx = rng.index(k);
            try {
                replicates.push_back(refit_r2(data, indices));
                break;
            } catch (const DataError&) {
                ++out.redraws;
                if (out.redraws * 2 > n_boot) {
                    throw DataError("bootstrap: moderator too sparse");
                }
            }
        }
    }

    std::sort(replicates.begin(), replicates.end());
    out.lo = percentile(replicates, 0.025);
    out.hi = percentile(replicates, 0.975);
    return out;
}

PermutationNull permutation_null(const ModeratorData& data, int n_perm, std::uint64_t seed) {
    if (n_perm < 1) throw DataError("permutation: n_perm must be positive");
    const double observed =
        meta_regress(data.effects, data.variances, data.labels, data.moderator).r2;

    std::vector<double> nulls;
    nulls.reserve(static_cast<std::size_t>(n_perm));
    int at_least = 0;
    std::vector<std::string> shuffled = data.labels;
    std::vector<double> y(data.effects.begin(), data.effects.end());
    std::vector<double> v(data.variances.begin(), data.variances.end());
    for (int p = 0; p < n_perm; ++p) {
        Rng rng(derive_seed(seed, kPermStream, static_cast<std::uint64_t>(p)));
        shuffled = data.labels;
        rng.shuffle(shuffled);
        const double r2 = meta_regress(y, v, shuffled, data.moderator).r2;
        nulls.push_back(r2);
        if (r2 >= observed) ++at_least;
    }

    PermutationNull out;
    out.null_mean = sample_mean(nulls);
    std::sort(nulls.begin(), nulls.end());
    out.null_p95 = percentile(nulls, 0.95);
    out.p = (1.0 + static_cast<double>(at_least)) / (1.0 + static_cast<double>(n_perm));
    return out;
}

LooResult leave_one_level_out(const ModeratorData& data) {
    std::vector<std::string> levels = data.labels;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() < 3) throw DataError("leave_one_level_out: need at least 3 levels");

    LooResult out;
    for (const auto& level : levels) {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < data.labels.size(); ++i) {
            if (data.labels[i] != level) kept.push_back(i);
        }
        LooEntry entry;
        entry.level = level;
        try {
            entry.r2 = refit_r2(data, kept);
        } catch (const DataError&) {
            entry.r2 = std::nullopt;
        }
        out.entries.push_back(std::move(entry));
    }

    for (const auto& entry : out.entries) {
        if (!entry.r2) continue;
        if (!out.range) {
            out.range = {*entry.r2, *entry.r2};
        } else {
            out.range->first = std::min(out.range->first, *entry.r2);
            out.range->second = std::max(out.range->second, *entry.r2);
        }
    }
    return out;
}

RobustnessReport robustness(const ModeratorData& data, int n_boot, int n_perm,
                            std::uint64_t seed) {
    RobustnessReport report;
    report.feature = data.feature;
    report.moderator = data.moderator;
    report.r2_observed = meta_regress(data.effects, data.variances, data.labels, data.moderator).r2;
    report.n_boot = n_boot;
    report.boot = bootstrap_r2_ci(data, n_boot, seed);
    report.n_perm = n_perm;
    report.perm = permutation_null(data, n_perm, seed);
    report.loo = leave_one_level_out(data);
    report.passes_chance_baseline = report.perm.p < 0.05;
    return report;
}

nlohmann::json robustness_to_json(const RobustnessReport& report) {
    nlohmann::json loo = nlohmann::json::array();
    for (const auto& entry : report.loo.entries) {
        nlohmann::json row;
        row["level"] = entry.level;
        row["r2"] = entry.r2 ? nlohmann::json(*entry.r2) : nlohmann::json(nullptr);
        row["skipped"] = !entry.r2.has_value();
        loo.push_back(std::move(row));
    }
    nlohmann::json j;
    j["feature"] = report.feature;
    j["moderator"] = std::string(to_string(report.moderator));
    j["r2_observed"] = report.r2_observed;
    j["n_boot"] = report.n_boot;
    j["boot_ci"] = {report.boot.lo, report.boot.hi};
    j["boot_redraws"] = report.boot.redraws;
    j["n_perm"] = report.n_perm;
    j["perm_null_mean"] = report.perm.null_mean;
    j["perm_null_p95"] = report.perm.null_p95;
    j["perm_p"] = report.perm.p;
    j["loo"] = std::move(loo);
    if (report.loo.range) {
        j["loo_range"] = {report.loo.range->first, report.loo.range->second};
    } else {
        j["loo_range"] = nullptr;
    }
    j["passes_chance_baseline"] = report.passes_chance_baseline;
    return j;
}

}  // namespace trajmeta
