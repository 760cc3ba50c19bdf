// Acceptance gate. Each criterion prints exactly one line:
//   criterion N: pass (...)  /  criterion N: fail (...)
// Run with a criterion number (1..10) or no argument for all of them.
// Criterion 9 drives the installed CLI named by TRAJMETA_CLI; rules come
// from TRAJMETA_RULES.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajmeta/annotate.hpp"
#include "trajmeta/cfg.hpp"
#include "trajmeta/effects.hpp"
#include "trajmeta/features.hpp"
#include "trajmeta/meta.hpp"
#include "trajmeta/patterns.hpp"
#include "trajmeta/rng.hpp"
#include "trajmeta/robustness.hpp"
#include "trajmeta/synth.hpp"
#include "trajmeta/taxonomy.hpp"
#include "trajmeta/util.hpp"
#include "helpers.hpp"

using namespace trajmeta;
using trajmeta::test::TempDir;
using trajmeta::test::make_annotated;

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

bool near_tol(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------
// criterion 1: six-turn motif-graph golden example

Verdict criterion1() {
    const auto start = Clock::now();
    const auto st = [](ActionCategory c, ErrorRegime e) {
        return ContextState{c, e, Phase::mid};
    };
    const std::vector<ContextState> states = {
        st(ActionCategory::exploration, ErrorRegime::clean),
        st(ActionCategory::modification, ErrorRegime::clean),
        st(ActionCategory::test, ErrorRegime::post_error),
        st(ActionCategory::modification, ErrorRegime::clean),
        st(ActionCategory::test, ErrorRegime::post_error),
        st(ActionCategory::modification, ErrorRegime::clean),
    };
    const MotifGraph graph = build_graph(states);
    const CfgFeatureSet f = cfg_features(graph);

    const double tol = 1e-12;
    if (graph.nodes.size() != 3) return {false, fmt("expected 3 motifs, got %zu", graph.nodes.size())};
    const std::map<std::pair<int, int>, int> want_edges = {{{0, 1}, 1}, {{1, 2}, 2}, {{2, 1}, 1}};
    if (graph.edges != want_edges) return {false, "edge multiplicities differ from (1,2,1)"};
    if (!near_tol(f.revisit_rate, 0.40, tol)) return {false, fmt("revisit_rate %.17g", f.revisit_rate)};
    if (!near_tol(f.backtrack_rate, 2.0 / 3.0, tol))
        return {false, fmt("backtrack_rate %.17g", f.backtrack_rate)};
    if (!near_tol(f.self_loop_rate, 0.0, tol))
        return {false, fmt("self_loop_rate %.17g", f.self_loop_rate)};
    if (!near_tol(f.post_error_motif_ratio, 0.80, tol))
        return {false, fmt("post_error_motif_ratio %.17g", f.post_error_motif_ratio)};
    const double elapsed = seconds_since(start);
    if (elapsed >= 1.0) return {false, fmt("took %.2fs, limit 1s", elapsed)};
    return {true, fmt("3 motifs, edges (1,2,1), rates exact to 1e-12, %.3fs", elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 2: effect sizes against brute-force oracles

Verdict criterion2() {
    const auto start = Clock::now();
    Rng rng(20260819);
    const double tol = 1e-12;

    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n1 = 2 + rng.index(29);
        const std::size_t n2 = 2 + rng.index(29);
        std::vector<double> a(n1), b(n2);
        for (auto& v : a) v = static_cast<double>(rng.index(10));
        for (auto& v : b) v = static_cast<double>(rng.index(10));

        double u_brute = 0.0;
        for (double x : a)
            for (double y : b) u_brute += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
        const double r_brute =
            1.0 - 2.0 * u_brute / (static_cast<double>(n1) * static_cast<double>(n2));

        const RankBiserial rb = rank_biserial(a, b);
        if (!near_tol(rb.u, u_brute, tol))
            return {false, fmt("trial %d: U rank-sum %.17g vs pair count %.17g", trial, rb.u, u_brute)};
        if (!near_tol(rb.r, r_brute, tol))
            return {false, fmt("trial %d: r %.17g vs brute %.17g", trial, rb.r, r_brute)};
        if (!near_tol(mann_whitney_u_ranks(a, b), mann_whitney_u_pairs(a, b), tol))
            return {false, fmt("trial %d: U definitions disagree", trial)};
    }

    for (int trial = 0; trial < 1000; ++trial) {
        long long cell[4];
        do {
            for (auto& c : cell) c = static_cast<long long>(rng.index(41));
        } while (cell[0] + cell[1] == 0 || cell[2] + cell[3] == 0 || cell[0] + cell[2] == 0 ||
                 cell[1] + cell[3] == 0);
        const auto [a, b, c, d] = std::array{cell[0], cell[1], cell[2], cell[3]};
        const double n = static_cast<double>(a + b + c + d);
        const double row[2] = {static_cast<double>(a + b), static_cast<double>(c + d)};
        const double col[2] = {static_cast<double>(a + c), static_cast<double>(b + d)};
        const double obs[2][2] = {{static_cast<double>(a), static_cast<double>(b)},
                                  {static_cast<double>(c), static_cast<double>(d)}};
        double chi2 = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double e = row[i] * col[j] / n;
                chi2 += (obs[i][j] - e) * (obs[i][j] - e) / e;
            }
        const double delta = static_cast<double>(a) * static_cast<double>(d) -
                             static_cast<double>(b) * static_cast<double>(c);
        const double sign = delta > 0 ? 1.0 : (delta < 0 ? -1.0 : 0.0);
        const double v_direct = sign * std::sqrt(chi2 / n);

        const auto got = cramers_v_signed(a, b, c, d);
        if (!got) return {false, fmt("trial %d: unexpected nullopt", trial)};
        if (!near_tol(got->v, v_direct, tol))
            return {false, fmt("trial %d: v %.17g vs direct %.17g", trial, got->v, v_direct)};
        if (!near_tol(got->chi2, chi2, 1e-9 * std::max(1.0, chi2)))
            return {false, fmt("trial %d: chi2 %.17g vs direct %.17g", trial, got->chi2, chi2)};
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 10.0) return {false, fmt("took %.2fs, limit 10s", elapsed)};
    return {true, fmt("1000 rank-biserial and 1000 Cramer fixtures within 1e-12, %.2fs", elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 3: pooling closed forms and scale equivariance

Verdict criterion3() {
    const std::vector<double> y = {0.5, 0.0, -0.5};
    const std::vector<double> v = {0.01, 0.01, 0.01};
    const PooledEffect golden = pool(y, v);
    if (!near_tol(golden.q, 50.0, 1e-12)) return {false, fmt("Q %.17g, expected 50", golden.q)};
    if (!near_tol(golden.i2, 96.0, 1e-12)) return {false, fmt("I2 %.17g, expected 96", golden.i2)};

    Rng rng(31415);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 3 + rng.index(8);
        std::vector<double> eff(k), var(k, 1.0);
        for (auto& e : eff) e = rng.normal();
        const double q0 = pool(eff, var).q;
        if (q0 <= 0.0) continue;
        const double scale = q0 / static_cast<double>(k - 1);
        for (auto& x : var) x *= scale;
        const PooledEffect p = pool(eff, var);
        if (!near_tol(p.i2, 0.0, 1e-10) || !near_tol(p.tau2, 0.0, 1e-10))
            return {false, fmt("Q=K-1 fixture %d: I2 %.17g tau2 %.17g", trial, p.i2, p.tau2)};
    }

    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.index(14);
        std::vector<double> eff(k), var(k);
        for (auto& e : eff) e = rng.uniform01() * 4.0 - 2.0;
        for (auto& x : var) x = 0.005 + rng.uniform01() * 0.5;
        const double c = 0.1 + rng.uniform01() * 9.9;
        std::vector<double> eff2(k), var2(k);
        for (std::size_t i = 0; i < k; ++i) {
            eff2[i] = eff[i] * c;
            var2[i] = var[i] * c * c;
        }
        const PooledEffect p1 = pool(eff, var);
        const PooledEffect p2 = pool(eff2, var2);
        if (!near_tol(p1.i2, p2.i2, 1e-10))
            return {false, fmt("equivariance %d: I2 %.17g vs %.17g", trial, p1.i2, p2.i2)};
        if (!near_tol(p1.q, p2.q, 1e-10 * std::max(1.0, p1.q)))
            return {false, fmt("equivariance %d: Q drifts", trial)};
        if (!near_tol(p2.pooled_effect, c * p1.pooled_effect,
                    1e-10 * std::max(1.0, std::fabs(c * p1.pooled_effect))))
            return {false, fmt("equivariance %d: pooled effect does not scale", trial)};
    }
    return {true, "Q=50/I2=96 exact, Q=K-1 fixtures, 200 equivariance trials at 1e-10"};
}

// ---------------------------------------------------------------------------
// criterion 4: classification boundaries

Verdict criterion4() {
    const std::array<std::pair<double, std::string_view>, 4> cases = {{
        {24.99, "universal"},
        {25.0, "moderate"},
        {74.99, "moderate"},
        {75.0, "config_specific"},
    }};
    for (const auto& [i2, want] : cases) {
        const auto got = heterogeneity_class(i2);
        if (got != want)
            return {false, fmt("I2=%.2f -> %.*s, expected %.*s", i2, static_cast<int>(got.size()),
                               got.data(), static_cast<int>(want.size()), want.data())};
    }
    return {true, "24.99/25/74.99/75 -> universal/moderate/moderate/config_specific"};
}

// ---------------------------------------------------------------------------
// shared synthetic-ecosystem helpers for criteria 5, 6, 8, 9

RegimeSpec planted_regime(bool lower_resolves, double strength) {
    RegimeSpec spec;
    spec.name = lower_resolves ? "planted_low" : "planted_high";
    spec.length_min = 3;
    spec.length_mode = 10.0;
    spec.length_max = 30;
    spec.action_mix = {0.35, 0.25, 0.20, 0.10, 0.05, 0.05};
    spec.error_prob = 0.15;
    spec.cascade_stickiness = 0.4;
    spec.repeat_prob = 0.1;
    spec.outcome.feature = "turns";
    spec.outcome.lower_resolves = lower_resolves;
    spec.outcome.strength = strength;
    return spec;
}

ConfigurationId make_config(const std::string& fw, const std::string& llm,
                            const std::string& family) {
    ConfigurationId c;
    c.framework = fw;
    c.llm = llm;
    c.llm_family = family;
    return c;
}

// The per-trajectory continuous table the pipeline's effects stage consumes:
// the 16 behavioral features plus the turn count as "mean_turns".
ContinuousTable features_table(const std::vector<AnnotatedTrajectory>& annotated) {
    ContinuousTable table;
    for (const auto name : kFeatureNames) table.features.emplace_back(name);
    table.features.emplace_back("mean_turns");
    table.rows.resize(annotated.size());
    parallel_for(annotated.size(), 8, [&](std::size_t i) {
        const auto& at = annotated[i];
        ContinuousTable::Row row;
        row.id = at.traj.id;
        row.config = at.traj.config;
        row.outcome = at.traj.outcome;
        const auto values = trajectory_features(at).as_array();
        row.values.assign(values.begin(), values.end());
        row.values.emplace_back(static_cast<double>(at.turn_count()));
        table.rows[i] = std::move(row);
    });
    return table;
}

std::vector<AnnotatedTrajectory> annotate_all(const std::vector<Trajectory>& trajectories,
                                              const ClassifierRules& classifier,
                                              const ErrorRules& errors) {
    std::vector<AnnotatedTrajectory> annotated(trajectories.size());
    parallel_for(trajectories.size(), 8, [&](std::size_t i) {
        annotated[i] = annotate(trajectories[i], classifier, errors, 1);
    });
    return annotated;
}

std::vector<EffectEstimate> turns_effects(const std::vector<EffectEstimate>& all) {
    std::vector<EffectEstimate> out;
    for (const auto& e : all)
        if (e.feature == "mean_turns") out.push_back(e);
    return out;
}

// ---------------------------------------------------------------------------
// criterion 5: planted direction split through the real pipeline stages

Verdict criterion5() {
    const auto start = Clock::now();
    const fs::path rules = trajmeta::test::rules_dir();
    const auto classifier = load_classifier_rules(rules / "classifier_rules.json");
    const auto error_rules = load_error_rules(rules / "error_rules.json");

    int successes = 0;
    double worst_i2 = 100.0;
    for (int s = 1; s <= 20; ++s) {
        std::vector<EcosystemEntry> entries;
        for (int i = 0; i < 20; ++i) {
            EcosystemEntry e;
            e.spec = planted_regime(i < 10, 2.5);
            e.config = make_config("fw" + std::to_string(i % 5), "m" + std::to_string(i),
                                   "fam" + std::to_string(i / 5));
            e.n = 300;
            entries.push_back(e);
        }
        const auto corpus = generate_ecosystem(entries, 1000 + static_cast<std::uint64_t>(s), 8);
        const auto annotated = annotate_all(corpus, classifier, error_rules);
        const auto result = per_config_effects(features_table(annotated), PatternTable{},
                                               FilterPolicy{});
        const auto turns = turns_effects(result.estimates);
        if (turns.size() != 20) continue;

        std::vector<double> effects, variances;
        for (const auto& e : turns) {
            effects.push_back(e.effect);
            variances.push_back(e.variance);
        }
        const PooledEffect pooled = pool(effects, variances);
        const DirectionSplit split = direction_split(effects);
        worst_i2 = std::min(worst_i2, pooled.i2);
        if (std::abs(split.n_pos - 10) <= 2 && std::abs(split.n_neg - 10) <= 2 &&
            pooled.i2 >= 75.0) {
            ++successes;
        }
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 120.0) return {false, fmt("took %.1fs, limit 120s", elapsed)};
    if (successes < 18)
        return {false, fmt("%d/20 seeds recovered the split, need 18, %.1fs", successes, elapsed)};
    return {true, fmt("%d/20 seeds within +-2 of (10,10) with I2 >= 75 (min I2 %.1f), %.1fs",
                      successes, worst_i2, elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 6: moderator attribution and alpha calibration

Verdict criterion6() {
    const auto start = Clock::now();
    int aligned_hits = 0;
    int shuffled_hits = 0;
    for (int s = 1; s <= 20; ++s) {
        std::vector<EcosystemEntry> entries;
        for (int i = 0; i < 20; ++i) {
            const bool positive = i < 10;
            EcosystemEntry e;
            e.spec = planted_regime(positive, 2.5);
            e.config = make_config(positive ? "fwA" : "fwB", "m" + std::to_string(i),
                                   "fam" + std::to_string(i % 4));
            e.n = 300;
            entries.push_back(e);
        }
        const std::uint64_t seed = 2000 + static_cast<std::uint64_t>(s);
        const auto corpus = generate_ecosystem(entries, seed, 8);

        ContinuousTable table;
        table.features = {"mean_turns"};
        for (const auto& t : corpus) {
            table.rows.push_back({t.id, t.config, t.outcome,
                                  {static_cast<double>(t.turns.size())}});
        }
        const auto result = per_config_effects(table, PatternTable{}, FilterPolicy{});
        const auto estimates = turns_effects(result.estimates);
        if (estimates.size() != 20) continue;
        const ModeratorData data =
            moderator_data(estimates, "mean_turns", Moderator::framework);

        const ModeratorFit fit =
            meta_regress(data.effects, data.variances, data.labels, data.moderator);
        const PermutationNull aligned =
            permutation_null(data, 199, derive_seed(seed, 0x70657261ULL));
        if (fit.r2 >= 0.8 && aligned.p < 0.05) ++aligned_hits;

        ModeratorData shuffled = data;
        Rng label_rng(derive_seed(seed, 0x73687566ULL, 1));
        label_rng.shuffle(shuffled.labels);
        const PermutationNull null_draw =
            permutation_null(shuffled, 199, derive_seed(seed, 0x7065726eULL, 1));
        if (null_draw.p < 0.05) ++shuffled_hits;
    }

    const double elapsed = seconds_since(start);
    if (aligned_hits < 18)
        return {false, fmt("aligned labels: %d/20 seeds with r2 >= 0.8 and p < 0.05", aligned_hits)};
    if (shuffled_hits > 2)
        return {false, fmt("shuffled labels passed in %d/20 seeds, allowed 2", shuffled_hits)};
    return {true, fmt("aligned %d/20 pass, shuffled %d/20 false positives, %.1fs", aligned_hits,
                      shuffled_hits, elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 7: high-cardinality moderator inflates the permutation null

Verdict criterion7() {
    // Effects carry mild true heterogeneity relative to the claimed sampling
    // variance (Q pinned at 1.2 * (k-1), so I2 is about 17%). In that regime
    // the residual moment estimator is noisy and a 43-level dummy absorbs a
    // material share of apparent heterogeneity under label permutation.
    const int k = 119;
    const double v = 0.01;
    Rng rng(777);
    std::vector<double> z(k);
    for (double& x : z) x = rng.normal();
    double mean = 0.0;
    for (double x : z) mean += x;
    mean /= k;
    double ss = 0.0;
    for (double x : z) ss += (x - mean) * (x - mean);
    const double scale = std::sqrt(1.2 * (k - 1) * v / ss);

    ModeratorData data;
    data.feature = "mean_turns";
    data.moderator = Moderator::framework;
    std::vector<std::string> labels;
    for (int i = 0; i < k; ++i) {
        data.effects.push_back((z[static_cast<std::size_t>(i)] - mean) * scale);
        data.variances.push_back(v);
        labels.push_back(fmt("L%02d", i % 43));
    }
    rng.shuffle(labels);
    data.labels = std::move(labels);

    const PermutationNull null = permutation_null(data, 400, 7);
    if (null.null_mean < 0.15)
        return {false, fmt("null mean R2 %.4f below 0.15", null.null_mean)};
    return {true, fmt("43 levels over 119 null configs: null mean R2 %.3f, p95 %.3f",
                      null.null_mean, null.null_p95)};
}

// ---------------------------------------------------------------------------
// criterion 8: taxonomy recovery of planted regimes

RegimeSpec regime_archetype(int which) {
    RegimeSpec spec;
    spec.name = "archetype" + std::to_string(which);
    spec.outcome.strength = 0.5;
    switch (which) {
        case 0:  // exploration-heavy, calm
            spec.length_min = 5, spec.length_mode = 12.0, spec.length_max = 25;
            spec.action_mix = {0.60, 0.15, 0.10, 0.10, 0.05, 0.00};
            spec.error_prob = 0.05, spec.cascade_stickiness = 0.2, spec.repeat_prob = 0.05;
            break;
        case 1:  // modification-heavy, long
            spec.length_min = 8, spec.length_mode = 18.0, spec.length_max = 35;
            spec.action_mix = {0.15, 0.55, 0.15, 0.05, 0.05, 0.05};
            spec.error_prob = 0.10, spec.cascade_stickiness = 0.3, spec.repeat_prob = 0.05;
            break;
        case 2:  // error-ridden, repetitive
            spec.length_min = 10, spec.length_mode = 25.0, spec.length_max = 45;
            spec.action_mix = {0.20, 0.30, 0.10, 0.10, 0.10, 0.20};
            spec.error_prob = 0.45, spec.cascade_stickiness = 0.8, spec.repeat_prob = 0.30;
            break;
        case 3:  // test-heavy, short
            spec.length_min = 4, spec.length_mode = 10.0, spec.length_max = 20;
            spec.action_mix = {0.10, 0.20, 0.55, 0.05, 0.05, 0.05};
            spec.error_prob = 0.15, spec.cascade_stickiness = 0.3, spec.repeat_prob = 0.10;
            break;
        default:  // navigation-heavy, brief and flaky
            spec.length_min = 3, spec.length_mode = 8.0, spec.length_max = 16;
            spec.action_mix = {0.15, 0.10, 0.05, 0.55, 0.10, 0.05};
            spec.error_prob = 0.25, spec.cascade_stickiness = 0.5, spec.repeat_prob = 0.15;
            break;
    }
    return spec;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, long long> cells;
    std::map<int, long long> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++cells[{a[i], b[i]}];
        ++rows[a[i]];
        ++cols[b[i]];
    }
    const auto comb2 = [](long long x) { return 0.5 * static_cast<double>(x) * (x - 1); };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : cells) sum_cells += comb2(count);
    for (const auto& [key, count] : rows) sum_rows += comb2(count);
    for (const auto& [key, count] : cols) sum_cols += comb2(count);
    const double total = comb2(static_cast<long long>(a.size()));
    const double expected = sum_rows * sum_cols / total;
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return 1.0;
    return (sum_cells - expected) / (maximum - expected);
}

std::vector<ConfigFeatureSummary> summarize_corpus(const std::vector<Trajectory>& corpus,
                                                   const std::vector<std::string>& key_order,
                                                   const ClassifierRules& classifier,
                                                   const ErrorRules& error_rules) {
    const auto annotated = annotate_all(corpus, classifier, error_rules);
    std::map<std::string, std::vector<FeatureVector>> vectors;
    std::map<std::string, std::vector<int>> turn_counts;
    std::map<std::string, ConfigurationId> ids;
    std::vector<FeatureVector> fvs(annotated.size());
    parallel_for(annotated.size(), 8,
                 [&](std::size_t i) { fvs[i] = trajectory_features(annotated[i]); });
    for (std::size_t i = 0; i < annotated.size(); ++i) {
        const std::string key = config_key(annotated[i].traj.config);
        vectors[key].push_back(fvs[i]);
        turn_counts[key].push_back(annotated[i].turn_count());
        ids.emplace(key, annotated[i].traj.config);
    }
    std::vector<ConfigFeatureSummary> summaries;
    for (const std::string& key : key_order) {
        summaries.push_back(summarize_config(ids.at(key), vectors.at(key), turn_counts.at(key)));
    }
    return summaries;
}

Verdict criterion8() {
    const auto start = Clock::now();
    const fs::path rules = trajmeta::test::rules_dir();
    const auto classifier = load_classifier_rules(rules / "classifier_rules.json");
    const auto error_rules = load_error_rules(rules / "error_rules.json");

    double min_ari = 1.0;
    int ari_ok = 0;
    int held_correct = 0, held_total = 0;
    for (int s = 1; s <= 10; ++s) {
        std::vector<EcosystemEntry> train;
        std::vector<std::string> train_keys;
        std::vector<int> planted;
        for (int r = 0; r < 5; ++r) {
            for (int j = 0; j < 10; ++j) {
                EcosystemEntry e;
                e.spec = regime_archetype(r);
                e.config = make_config(fmt("fw_r%d_%d", r, j), "m" + std::to_string(j),
                                       "fam" + std::to_string(j % 3));
                e.n = 40;
                train_keys.push_back(config_key(e.config));
                planted.push_back(r);
                train.push_back(std::move(e));
            }
        }
        const std::uint64_t seed = 3000 + static_cast<std::uint64_t>(s);
        const auto summaries = summarize_corpus(generate_ecosystem(train, seed, 8), train_keys,
                                                classifier, error_rules);
        const TaxonomyModel model = fit_taxonomy(summaries, 5, seed);
        std::vector<int> assigned;
        for (const auto& summary : summaries) assigned.push_back(assign_type(model, summary).type);

        const double ari = adjusted_rand_index(planted, assigned);
        min_ari = std::min(min_ari, ari);
        if (ari >= 0.9) ++ari_ok;

        std::array<int, 5> majority{};
        for (int r = 0; r < 5; ++r) {
            std::map<int, int> votes;
            for (int j = 0; j < 10; ++j) ++votes[assigned[r * 10 + j]];
            int best_type = 0, best_votes = -1;
            for (const auto& [type, count] : votes) {
                if (count > best_votes) best_type = type, best_votes = count;
            }
            majority[r] = best_type;
        }

        std::vector<EcosystemEntry> held;
        std::vector<std::string> held_keys;
        for (int r = 0; r < 5; ++r) {
            for (int j = 0; j < 3; ++j) {
                EcosystemEntry e;
                e.spec = regime_archetype(r);
                e.config = make_config(fmt("ho_r%d_%d", r, j), "hm" + std::to_string(j),
                                       "fam" + std::to_string(j % 3));
                e.n = 40;
                held_keys.push_back(config_key(e.config));
                held.push_back(std::move(e));
            }
        }
        const auto held_summaries = summarize_corpus(
            generate_ecosystem(held, 9000 + static_cast<std::uint64_t>(s), 8), held_keys,
            classifier, error_rules);
        for (std::size_t i = 0; i < held_summaries.size(); ++i) {
            ++held_total;
            if (assign_type(model, held_summaries[i]).type == majority[i / 3]) ++held_correct;
        }
    }

    const double held_rate = static_cast<double>(held_correct) / held_total;
    const double elapsed = seconds_since(start);
    if (ari_ok < 10) return {false, fmt("ARI >= 0.9 in only %d/10 seeds (min %.3f)", ari_ok, min_ari)};
    if (held_rate < 0.95)
        return {false, fmt("held-out assignment %.1f%% correct, need 95%%", held_rate * 100.0)};
    return {true, fmt("ARI >= 0.9 in 10/10 seeds (min %.3f), held-out %d/%d correct, %.1fs",
                      min_ari, held_correct, held_total, elapsed)};
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical reruns of the CLI pipeline, serial vs --jobs 8

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

std::map<std::string, std::string> collect_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        files[entry.path().lexically_relative(root).generic_string()] = read_file(entry.path());
    }
    return files;
}

Verdict criterion9() {
    const auto start = Clock::now();
    const char* cli = std::getenv("TRAJMETA_CLI");
    if (!cli) return {false, "TRAJMETA_CLI not set"};
    const fs::path rules = trajmeta::test::rules_dir();

    TempDir tmp("acceptance9");
    nlohmann::json configs = nlohmann::json::array();
    for (int f = 0; f < 5; ++f) {
        for (int l = 0; l < 4; ++l) {
            const int i = f * 4 + l;
            configs.push_back({
                {"framework", "fw" + std::to_string(f)},
                {"framework_version", "1.0"},
                {"llm", "llm" + std::to_string(l)},
                {"llm_family", "fam" + std::to_string(l)},
                {"n", 30},
                {"regime",
                 {{"name", "det"},
                  {"length", {{"min", 3}, {"mode", 9}, {"max", 22}}},
                  {"action_mix",
                   {{"exploration", 0.35}, {"modification", 0.3}, {"test", 0.2},
                    {"navigation", 0.15}}},
                  {"error_prob", 0.2},
                  {"cascade_stickiness", 0.5},
                  {"repeat_prob", 0.1},
                  {"outcome_model",
                   {{"feature", "turns"},
                    {"direction", i % 2 == 0 ? "lower" : "higher"},
                    {"strength", 1.0}}}}},
            });
        }
    }
    const fs::path spec = tmp.path() / "spec.json";
    atomic_write(spec, nlohmann::json{{"configs", configs}}.dump(2) + "\n");
    const fs::path corpus = tmp.path() / "corpus.jsonl";

    const std::string base = quoted(cli);
    const auto shell = [&](const std::string& cmd) {
        return std::system((cmd + " >/dev/null 2>&1").c_str());
    };
    if (shell(base + " --seed 99 synth --spec " + quoted(spec) + " --out " + quoted(corpus)) != 0)
        return {false, "synth subprocess failed"};

    const auto run_into = [&](const fs::path& dir, const std::string& extra) {
        return shell(base + " --seed 99 --out-dir " + quoted(dir) + extra + " run --in " +
                     quoted(corpus) + " --rules " + quoted(rules) +
                     " --n-boot 150 --n-perm 150");
    };
    const fs::path a = tmp.path() / "a";
    const fs::path b = tmp.path() / "b";
    const fs::path c = tmp.path() / "c";
    if (run_into(a, "") != 0) return {false, "first run failed"};
    if (run_into(b, "") != 0) return {false, "second run failed"};
    if (run_into(c, " --jobs 8") != 0) return {false, "--jobs 8 run failed"};

    const auto tree_a = collect_tree(a);
    const auto tree_b = collect_tree(b);
    const auto tree_c = collect_tree(c);
    if (tree_a.size() < 10) return {false, fmt("only %zu output files", tree_a.size())};
    if (!tree_a.count("manifest.json")) return {false, "manifest.json missing"};
    const auto diff = [](const std::map<std::string, std::string>& x,
                         const std::map<std::string, std::string>& y) -> std::string {
        for (const auto& [path, bytes] : x) {
            auto it = y.find(path);
            if (it == y.end()) return path + " missing";
            if (it->second != bytes) return path + " differs";
        }
        for (const auto& [path, bytes] : y)
            if (!x.count(path)) return path + " extra";
        return {};
    };
    if (const auto d = diff(tree_a, tree_b); !d.empty())
        return {false, "rerun not byte-identical: " + d};
    if (const auto d = diff(tree_a, tree_c); !d.empty())
        return {false, "--jobs 8 not byte-identical: " + d};
    return {true, fmt("%zu files byte-identical across rerun and --jobs 8, %.1fs", tree_a.size(),
                      seconds_since(start))};
}

// ---------------------------------------------------------------------------
// criterion 10: pattern semantics fixtures and absent-pattern exclusion

Verdict criterion10() {
    using AC = ActionCategory;
    const AC E = AC::exploration, M = AC::modification, T = AC::test;
    ThresholdManifest m;
    m.cascade_median = 2.0;
    m.length_median = 5.0;
    m.late_entropy_median = 0.1;
    m.source = "acceptance";

    int checked = 0;
    const auto expect = [&](std::optional<bool> got, std::optional<bool> want, const char* what)
        -> std::optional<std::string> {
        ++checked;
        if (got != want) return std::string(what);
        return std::nullopt;
    };

    {
        const auto p = detect_patterns(make_annotated({E, M, T}, {false, false, false}), m);
        if (auto e = expect(p.p[0], true, "[E,M,T] P1")) return {false, *e};
        if (auto e = expect(p.p[6], true, "[E,M,T] P7")) return {false, *e};
    }
    {
        const auto p = detect_patterns(make_annotated({M, T}, {false, false}), m);
        if (auto e = expect(p.p[0], false, "[M,T] P1")) return {false, *e};
        if (auto e = expect(p.p[6], true, "[M,T] P7")) return {false, *e};
    }
    {
        const auto p = detect_patterns(make_annotated({T, E}, {false, false}), m);
        if (auto e = expect(p.p[0], std::nullopt, "[T,E] P1 absent")) return {false, *e};
        if (auto e = expect(p.p[6], std::nullopt, "[T,E] P7 absent")) return {false, *e};
    }
    {
        // cascades at (2,2) and (5,1): max 2 is not < 2, first is <= 2 turns
        const auto p = detect_patterns(
            make_annotated({E, M, M, T, M, T}, {false, true, true, false, true, false}), m);
        if (auto e = expect(p.p[2], false, "cascades (2,2),(5,1) P3")) return {false, *e};
        if (auto e = expect(p.p[3], true, "cascades (2,2),(5,1) P4")) return {false, *e};
    }
    {
        const auto clean = detect_patterns(make_annotated({E, M}, {false, false}), m);
        if (auto e = expect(clean.p[2], std::nullopt, "clean P3 absent")) return {false, *e};
        if (auto e = expect(clean.p[3], std::nullopt, "clean P4 absent")) return {false, *e};
    }
    const auto ratio_traj = [&](int explore, int total) {
        std::vector<AC> cats(total, M);
        std::fill(cats.begin(), cats.begin() + explore, E);
        return make_annotated(cats, std::vector<bool>(total, false));
    };
    for (const auto& [explore, want] :
         std::vector<std::pair<int, bool>>{{3, true}, {5, true}, {2, false}, {6, false}}) {
        const auto p = detect_patterns(ratio_traj(explore, 10), m);
        if (auto e = expect(p.p[1], want, fmt("P2 at ratio %d/10", explore).c_str()))
            return {false, *e};
    }
    {
        const auto p4 = detect_patterns(ratio_traj(2, 4), m);  // 4 turns < median 5
        if (auto e = expect(p4.p[4], true, "P5 at 4 turns")) return {false, *e};
        const auto p5 = detect_patterns(ratio_traj(2, 5), m);
        if (auto e = expect(p5.p[4], false, "P5 at 5 turns")) return {false, *e};
    }
    {
        // late window of a 12-turn trajectory is turns 10..12, entropy over the
        // two transitions inside it: T->T twice vs T->M then M->T
        std::vector<AC> same = {E, E, E, E, E, M, M, M, M, T, T, T};
        std::vector<AC> split = {E, E, E, E, E, M, M, M, M, T, M, T};
        const auto low = detect_patterns(make_annotated(same, std::vector<bool>(12, false)), m);
        const auto high = detect_patterns(make_annotated(split, std::vector<bool>(12, false)), m);
        if (auto e = expect(low.p[5], true, "P6 uniform late window")) return {false, *e};
        if (auto e = expect(high.p[5], false, "P6 mixed late window")) return {false, *e};
    }

    // compute_thresholds worked examples: lengths {10,20,30,40} -> 25 and
    // max-cascade lengths {1,2,3} over the trajectories that cascade -> 2.
    {
        const auto with_length = [&](int n, const std::vector<int>& error_turns) {
            std::vector<AC> cats(n, M);
            std::vector<bool> errs(n, false);
            for (int t : error_turns) errs[t] = true;
            return make_annotated(cats, errs);
        };
        const std::vector<AnnotatedTrajectory> corpus = {
            with_length(10, {4}),
            with_length(20, {3, 4}),
            with_length(30, {5, 6, 7}),
            with_length(40, {}),
        };
        const ThresholdManifest derived = compute_thresholds(corpus, "acceptance");
        ++checked;
        if (!near_tol(derived.length_median, 25.0, 1e-12))
            return {false, fmt("length_median %.17g, expected 25", derived.length_median)};
        ++checked;
        if (!near_tol(derived.cascade_median, 2.0, 1e-12))
            return {false, fmt("cascade_median %.17g, expected 2", derived.cascade_median)};
    }

    // Absent patterns stay out of the contingency table: 5 of 30 trajectories
    // are undefined, so the effect is computed from the remaining 25.
    {
        PatternTable table;
        table.patterns = {"p1_explore_before_modify"};
        const auto config = make_config("fwX", "llmX", "famX");
        int next = 0;
        const auto add = [&](int count, std::optional<bool> value, Outcome outcome) {
            for (int i = 0; i < count; ++i) {
                table.rows.push_back({"t" + std::to_string(++next), config, outcome, {value}});
            }
        };
        add(10, true, Outcome::resolved);
        add(5, true, Outcome::failed);
        add(4, false, Outcome::resolved);
        add(6, false, Outcome::failed);
        add(3, std::nullopt, Outcome::resolved);
        add(2, std::nullopt, Outcome::failed);

        const auto result = per_config_effects(ContinuousTable{}, table, FilterPolicy{});
        ++checked;
        if (result.estimates.size() != 1)
            return {false, fmt("expected 1 pattern effect, got %zu", result.estimates.size())};
        const auto& est = result.estimates[0];
        const double chi2 = 25.0 * 40.0 * 40.0 / (15.0 * 10.0 * 14.0 * 11.0);
        const double want_v = std::sqrt(chi2 / 25.0);
        ++checked;
        if (!near_tol(est.effect, want_v, 1e-12))
            return {false, fmt("effect %.17g, expected %.17g from the 25 defined rows", est.effect,
                               want_v)};
        ++checked;
        if (est.n_resolved != 14 || est.n_unresolved != 11)
            return {false, fmt("counts (%d,%d), expected (14,11) after exclusion", est.n_resolved,
                               est.n_unresolved)};

        // A configuration where the pattern is always defined-present has a
        // zero marginal and is skipped as degenerate, not scored.
        PatternTable saturated;
        saturated.patterns = {"p1_explore_before_modify"};
        const auto sat_config = make_config("fwY", "llmY", "famY");
        for (int i = 0; i < 25; ++i) {
            saturated.rows.push_back({"s" + std::to_string(i), sat_config,
                                      i < 12 ? Outcome::resolved : Outcome::failed,
                                      {std::optional<bool>(true)}});
        }
        const auto sat = per_config_effects(ContinuousTable{}, saturated, FilterPolicy{});
        ++checked;
        if (!sat.estimates.empty() || sat.skips.size() != 1 || sat.skips[0].reason != "degenerate")
            return {false, "saturated pattern was not skipped as degenerate"};
    }

    return {true, fmt("%d fixture checks exact, absent rows excluded from contingency tables",
                      checked)};
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    if (argc > 1) {
        const int n = std::atoi(argv[1]);
        if (n < 1 || n > 10) {
            std::fprintf(stderr, "usage: acceptance [1..10]\n");
            return 2;
        }
        selected.push_back(n);
    } else {
        for (int n = 1; n <= 10; ++n) selected.push_back(n);
    }

    bool all_pass = true;
    for (int n : selected) {
        Verdict verdict;
        try {
            switch (n) {
                case 1: verdict = criterion1(); break;
                case 2: verdict = criterion2(); break;
                case 3: verdict = criterion3(); break;
                case 4: verdict = criterion4(); break;
                case 5: verdict = criterion5(); break;
                case 6: verdict = criterion6(); break;
                case 7: verdict = criterion7(); break;
                case 8: verdict = criterion8(); break;
                case 9: verdict = criterion9(); break;
                case 10: verdict = criterion10(); break;
            }
        } catch (const std::exception& e) {
            verdict = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s (%s)\n", n, verdict.pass ? "pass" : "fail",
                    verdict.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && verdict.pass;
    }
    return all_pass ? 0 : 1;
}
