#include "trajmeta/effects.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trajmeta/errors.hpp"
#include "trajmeta/rng.hpp"
#include "trajmeta/stats.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

double mann_whitney_u_pairs(std::span<const double> a, std::span<const double> b) {
    double u = 0.0;
    for (double x : a) {
        for (double y : b) {
            if (x > y) u += 1.0;
            else if (x == y) u += 0.5;
        }
    }
    return u;
}

double mann_whitney_u_ranks(std::span<const double> a, std::span<const double> b) {
    std::vector<double> combined(a.begin(), a.end());
    combined.insert(combined.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(combined);
    double r1 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r1 += ranks[i];
    const double n1 = static_cast<double>(a.size());
    return r1 - n1 * (n1 + 1.0) / 2.0;
}

RankBiserial rank_biserial(std::span<const double> resolved, std::span<const double> unresolved) {
    if (resolved.empty() || unresolved.empty()) {
        throw DataError("rank_biserial: both groups must be non-empty");
    }
    const double n1 = static_cast<double>(resolved.size());
    const double n2 = static_cast<double>(unresolved.size());
    RankBiserial out;
    out.u = mann_whitney_u_ranks(resolved, unresolved);
    out.r = 1.0 - 2.0 * out.u / (n1 * n2);
    out.variance = (n1 + n2 + 1.0) / (3.0 * n1 * n2);
    return out;
}

std::optional<SignedCramersV> cramers_v_signed(long long a, long long b, long long c,
                                               long long d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw DataError("cramers_v_signed: negative cell");
    const double r1 = static_cast<double>(a + b);
    const double r2 = static_cast<double>(c + d);
    const double c1 = static_cast<double>(a + c);
    const double c2 = static_cast<double>(b + d);
    if (r1 == 0.0 || r2 == 0.0 || c1 == 0.0 || c2 == 0.0) return std::nullopt;
    const double n = r1 + r2;
    const double delta = static_cast<double>(a) * static_cast<double>(d) -
                         static_cast<double>(b) * static_cast<double>(c);
    SignedCramersV out;
    out.chi2 = n * delta * delta / (r1 * r2 * c1 * c2);
    out.v = std::sqrt(out.chi2 / n);
    if (delta < 0) out.v = -out.v;
    out.variance = 1.0 / n;
    return out;
}

KruskalResult kruskal_eta2(std::span<const std::vector<double>> groups) {
    const std::size_t k = groups.size();
    if (k < 2) throw DataError("kruskal_eta2: need at least 2 groups");
    std::vector<double> combined;
    for (const auto& g : groups) {
        if (g.empty()) throw DataError("kruskal_eta2: empty group");
        combined.insert(combined.end(), g.begin(), g.end());
    }
    const double n = static_cast<double>(combined.size());
    if (combined.size() <= k) throw DataError("kruskal_eta2: need n > k observations");
    const std::vector<double> ranks = midranks(combined);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rsum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rsum += ranks[offset + i];
        h += rsum * rsum / static_cast<double>(g.size());
        offset += g.size();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    // Tie correction over the combined sample.
    std::vector<double> sorted = combined;
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    const double correction = 1.0 - tie_sum / (n * n * n - n);
    h = correction > 0.0 ? h / correction : 0.0;

    KruskalResult out;
    out.h = h;
    const double dk = static_cast<double>(k);
    out.eta2 = std::max(0.0, (h - dk + 1.0) / (n - dk));
    return out;
}

std::string eta2_label(double eta2) {
    if (eta2 >= 0.14) return "large";
    if (eta2 >= 0.06) return "medium";
    if (eta2 >= 0.01) return "small";
    return "negligible";
}

WilcoxonResult paired_wilcoxon(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("paired_wilcoxon: length mismatch");
    if (a.empty()) throw DataError("paired_wilcoxon: empty input");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw DataError("paired_wilcoxon: all differences zero");

    const std::size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
    const std::vector<double> ranks = midranks(abs_diffs);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w_plus += ranks[i];
    }
    const double total = static_cast<double>(n) * (static_cast<double>(n) + 1.0) / 2.0;
    WilcoxonResult out;
    out.w_plus = w_plus;
    out.statistic = std::min(w_plus, total - w_plus);
    out.n_used = static_cast<int>(n);

    if (n <= 25) {
        out.exact = true;
        // Midranks are half-integers; doubling them makes an integer knapsack.
        const int t2 = static_cast<int>(std::llround(2.0 * total));
        std::vector<double> count(static_cast<std::size_t>(t2) + 1, 0.0);
        count[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int r2 = static_cast<int>(std::llround(2.0 * ranks[i]));
            for (int s = t2; s >= r2; --s) {
                count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r2)];
            }
        }
        const double center2 = static_cast<double>(t2) / 2.0;
        const double dev = std::fabs(2.0 * w_plus - center2);
        double extreme = 0.0;
        for (int s = 0; s <= t2; ++s) {
            if (std::fabs(static_cast<double>(s) - center2) >= dev - 1e-9) {
                extreme += count[static_cast<std::size_t>(s)];
            }
        }
        out.p_value = extreme / std::pow(2.0, static_cast<double>(n));
    } else {
        const double dn = static_cast<double>(n);
        const double mean = dn * (dn + 1.0) / 4.0;
        // Tie correction over |d|.
        std::vector<double> sorted = abs_diffs;
        std::sort(sorted.begin(), sorted.end());
        double tie_sum = 0.0;
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_sum += t * t * t - t;
            i = j + 1;
        }
        const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_sum / 48.0;
        if (var <= 0.0) throw DataError("paired_wilcoxon: zero variance");
        const double z = (w_plus - mean) / std::sqrt(var);
        out.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(z))));
    }
    return out;
}

std::string_view to_string(EffectKind k) {
    return k == EffectKind::rank_biserial ? "rank_biserial" : "cramers_v";
}

EffectKind effect_kind_from_string(std::string_view s) {
    if (s == "rank_biserial") return EffectKind::rank_biserial;
    if (s == "cramers_v") return EffectKind::cramers_v;
    throw DataError("unknown effect kind '" + std::string(s) + "'");
}

namespace {

struct ConfigGroup {
    ConfigurationId config;
    std::vector<std::size_t> continuous_rows;
    std::vector<std::size_t> pattern_rows;
};

// Stratified resampling keeps outcome group sizes, so every replicate is
// well-defined.
double bootstrap_variance(const std::vector<double>& resolved,
                          const std::vector<double>& unresolved, std::uint64_t stream_seed,
                          int reps) {
    std::vector<double> replicates;
    replicates.reserve(static_cast<std::size_t>(reps));
    std::vector<double> res_sample(resolved.size());
    std::vector<double> unres_sample(unresolved.size());
    for (int b = 0; b < reps; ++b) {
        Rng rng(derive_seed(stream_seed, 0x626f6f74ULL, static_cast<std::uint64_t>(b)));
        for (auto& v : res_sample) v = resolved[rng.index(resolved.size())];
        for (auto& v : unres_sample) v = unresolved[rng.index(unresolved.size())];
        replicates.push_back(rank_biserial(res_sample, unres_sample).r);
    }
    return sample_variance(replicates);
}

}  // namespace

EffectsResult per_config_effects(const ContinuousTable& continuous, const PatternTable& patterns,
                                 const FilterPolicy& policy, VarianceMode mode, std::uint64_t seed,
                                 int bootstrap_reps) {
    std::map<std::string, ConfigGroup> groups;
    for (std::size_t i = 0; i < continuous.rows.size(); ++i) {
        auto& g = groups[config_key(continuous.rows[i].config)];
        if (g.continuous_rows.empty() && g.pattern_rows.empty()) {
            g.config = continuous.rows[i].config;
        }
        g.continuous_rows.push_back(i);
    }
    for (std::size_t i = 0; i < patterns.rows.size(); ++i) {
        auto& g = groups[config_key(patterns.rows[i].config)];
        if (g.continuous_rows.empty() && g.pattern_rows.empty()) {
            g.config = patterns.rows[i].config;
        }
        g.pattern_rows.push_back(i);
    }

    EffectsResult out;
    for (const auto& [key, group] : groups) {
        int n_resolved = 0;
        int n_unresolved = 0;
        if (!group.continuous_rows.empty()) {
            for (std::size_t idx : group.continuous_rows) {
                (continuous.rows[idx].outcome == Outcome::resolved ? n_resolved : n_unresolved)++;
            }
        } else {
            for (std::size_t idx : group.pattern_rows) {
                (patterns.rows[idx].outcome == Outcome::resolved ? n_resolved : n_unresolved)++;
            }
        }
        const int total = n_resolved + n_unresolved;
        std::string config_skip;
        if (total < policy.min_total) config_skip = "min_total";
        else if (n_resolved < policy.min_resolved) config_skip = "min_resolved";
        else if (n_unresolved < policy.min_unresolved) config_skip = "min_unresolved";
        if (!config_skip.empty()) {
            out.skips.push_back({group.config, "*", config_skip});
            continue;
        }

        for (std::size_t fi = 0; fi < continuous.features.size(); ++fi) {
            std::vector<double> resolved;
            std::vector<double> unresolved;
            for (std::size_t idx : group.continuous_rows) {
                const auto& row = continuous.rows[idx];
                if (!row.values[fi]) continue;
                (row.outcome == Outcome::resolved ? resolved : unresolved).push_back(*row.values[fi]);
            }
            if (resolved.empty() || unresolved.empty()) {
                out.skips.push_back({group.config, continuous.features[fi], "empty_group"});
                continue;
            }
            const RankBiserial rb = rank_biserial(resolved, unresolved);
            EffectEstimate est;
            est.config = group.config;
            est.feature = continuous.features[fi];
            est.kind = EffectKind::rank_biserial;
            est.effect = rb.r;
            est.variance = rb.variance;
            if (mode == VarianceMode::bootstrap) {
                const std::uint64_t stream =
                    derive_seed(seed, fnv1a64(key + "\x1f" + continuous.features[fi]));
                est.variance = bootstrap_variance(resolved, unresolved, stream, bootstrap_reps);
            }
            est.n_resolved = static_cast<int>(resolved.size());
            est.n_unresolved = static_cast<int>(unresolved.size());
            out.estimates.push_back(std::move(est));
        }

        for (std::size_t pi = 0; pi < patterns.patterns.size(); ++pi) {
            long long a = 0, b = 0, c = 0, d = 0;
            for (std::size_t idx : group.pattern_rows) {
                const auto& row = patterns.rows[idx];
                if (!row.values[pi]) continue;  // pattern not defined for this trajectory
                const bool present = *row.values[pi];
                const bool resolved = row.outcome == Outcome::resolved;
                if (present && resolved) ++a;
                else if (present) ++b;
                else if (resolved) ++c;
                else ++d;
            }
            const auto v = cramers_v_signed(a, b, c, d);
            if (!v) {
                out.skips.push_back({group.config, patterns.patterns[pi], "degenerate"});
                continue;
            }
            EffectEstimate est;
            est.config = group.config;
            est.feature = patterns.patterns[pi];
            est.kind = EffectKind::cramers_v;
            est.effect = v->v;
            est.variance = v->variance;
            est.n_resolved = static_cast<int>(a + c);
            est.n_unresolved = static_cast<int>(b + d);
            out.estimates.push_back(std::move(est));
        }
    }

    std::sort(out.estimates.begin(), out.estimates.end(),
              [](const EffectEstimate& x, const EffectEstimate& y) {
                  return std::tie(x.feature, x.config.framework, x.config.llm) <
                         std::tie(y.feature, y.config.framework, y.config.llm);
              });
    std::sort(out.skips.begin(), out.skips.end(), [](const SkipRecord& x, const SkipRecord& y) {
        return std::tie(x.config.framework, x.config.llm, x.feature) <
               std::tie(y.config.framework, y.config.llm, y.feature);
    });
    return out;
}

}  // namespace trajmeta
