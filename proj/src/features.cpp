#include "trajmeta/features.hpp"

#include <cmath>
#include <map>
#include <set>

#include "trajmeta/errors.hpp"
#include "trajmeta/stats.hpp"

namespace trajmeta {

namespace {

constexpr int kLookahead = 3;
constexpr int kModeWindow = 5;

// Mode of the trailing window ending at turn i (1-based); ties break toward
// the lowest category in declaration order.
ActionCategory windowed_mode(std::span<const ActionCategory> cats, int i) {
    std::array<int, kCategoryCount> counts{};
    const int lo = std::max(1, i - (kModeWindow - 1));
    for (int t = lo; t <= i; ++t) {
        ++counts[static_cast<std::size_t>(cats[static_cast<std::size_t>(t - 1)])];
    }
    int best = 0;
    for (int c = 1; c < kCategoryCount; ++c) {
        if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
    }
    return static_cast<ActionCategory>(best);
}

double transition_entropy_range(std::span<const ActionCategory> cats, int first, int last) {
    // Transitions (i, i+1) with both endpoints in [first, last].
    std::array<int, kCategoryCount * kCategoryCount> counts{};
    for (int i = first; i < last; ++i) {
        const auto a = static_cast<std::size_t>(cats[static_cast<std::size_t>(i - 1)]);
        const auto b = static_cast<std::size_t>(cats[static_cast<std::size_t>(i)]);
        ++counts[a * kCategoryCount + b];
    }
    return entropy_from_counts(counts);
}

}  // namespace

std::array<std::optional<double>, kFeatureCount> FeatureVector::as_array() const {
    return {exploration_ratio,
            modification_ratio,
            test_ratio,
            navigation_ratio,
            trajectory_length_log,
            transition_entropy,
            exploration_frontloading,
            first_modification_timing,
            phase_transition_point,
            late_stage_entropy,
            error_rate,
            cascade_rate,
            recovery_rate,
            repetition_rate,
            mean_cascade_length,
            productive_turn_ratio};
}

FeatureVector trajectory_features(const AnnotatedTrajectory& at) {
    const int n = at.turn_count();
    if (n == 0) throw DataError("features of an empty trajectory");
    const auto& cats = at.categories;
    FeatureVector f;

    std::array<int, kCategoryCount> counts{};
    for (ActionCategory c : cats) ++counts[static_cast<std::size_t>(c)];
    const double dn = static_cast<double>(n);
    f.exploration_ratio = counts[static_cast<std::size_t>(ActionCategory::exploration)] / dn;
    f.modification_ratio = counts[static_cast<std::size_t>(ActionCategory::modification)] / dn;
    f.test_ratio = counts[static_cast<std::size_t>(ActionCategory::test)] / dn;
    f.navigation_ratio = counts[static_cast<std::size_t>(ActionCategory::navigation)] / dn;

    f.trajectory_length_log = std::log(1.0 + dn);
    f.transition_entropy = transition_entropy_range(cats, 1, n);

    const int first_quarter_end = (n + 3) / 4;  // ceil(N/4)
    int explore_total = 0;
    int explore_early = 0;
    for (int i = 1; i <= n; ++i) {
        if (cats[static_cast<std::size_t>(i - 1)] == ActionCategory::exploration) {
            ++explore_total;
            if (i <= first_quarter_end) ++explore_early;
        }
    }
    f.exploration_frontloading =
        explore_total == 0 ? 0.0 : static_cast<double>(explore_early) / explore_total;

    if (n > 1) {
        for (int i = 1; i <= n; ++i) {
            if (cats[static_cast<std::size_t>(i - 1)] == ActionCategory::modification) {
                f.first_modification_timing = static_cast<double>(i - 1) / (dn - 1.0);
                break;
            }
        }
        const ActionCategory initial_mode = windowed_mode(cats, 1);
        for (int i = 2; i <= n; ++i) {
            if (windowed_mode(cats, i) != initial_mode) {
                f.phase_transition_point = static_cast<double>(i - 1) / (dn - 1.0);
                break;
            }
        }
    }

    const int late_start = (3 * n) / 4 + 1;  // first index past floor(3N/4)
    f.late_stage_entropy = late_start >= n ? 0.0 : transition_entropy_range(cats, late_start, n);

    std::vector<bool> err(static_cast<std::size_t>(n));
    int n_errors = 0;
    for (int i = 0; i < n; ++i) {
        err[static_cast<std::size_t>(i)] = at.has_error(static_cast<std::size_t>(i));
        if (err[static_cast<std::size_t>(i)]) ++n_errors;
    }
    f.error_rate = n_errors / dn;

    if (n_errors > 0) {
        int cascading = 0;
        int recovered = 0;
        for (int i = 1; i <= n; ++i) {
            if (!err[static_cast<std::size_t>(i - 1)]) continue;
            const int window_end = std::min(n, i + kLookahead);
            bool another = false;
            for (int j = i + 1; j <= window_end; ++j) {
                if (err[static_cast<std::size_t>(j - 1)]) {
                    another = true;
                    break;
                }
            }
            if (another) ++cascading;
            // Recovery: the window exists and opens with a clean turn.
            if (i + 1 <= n && !err[static_cast<std::size_t>(i)]) ++recovered;
        }
        f.cascade_rate = static_cast<double>(cascading) / n_errors;
        f.recovery_rate = static_cast<double>(recovered) / n_errors;
    }

    std::set<std::string> seen;
    std::vector<bool> repeat(static_cast<std::size_t>(n), false);
    int n_repeats = 0;
    for (int i = 0; i < n; ++i) {
        const std::string key = action_string(at.traj.turns[static_cast<std::size_t>(i)].action);
        if (!seen.insert(key).second) {
            repeat[static_cast<std::size_t>(i)] = true;
            ++n_repeats;
        }
    }
    f.repetition_rate = n_repeats / dn;

    if (!at.cascades.empty()) {
        double total = 0.0;
        for (const Cascade& c : at.cascades) total += c.length;
        f.mean_cascade_length = total / static_cast<double>(at.cascades.size());
    }

    int unproductive = 0;
    for (int i = 0; i < n; ++i) {
        if (err[static_cast<std::size_t>(i)] || repeat[static_cast<std::size_t>(i)]) ++unproductive;
    }
    f.productive_turn_ratio = 1.0 - unproductive / dn;

    return f;
}

ConfigFeatureSummary summarize_config(const ConfigurationId& config,
                                      std::span<const FeatureVector> features,
                                      std::span<const int> turn_counts) {
    if (features.empty()) throw DataError("config summary needs at least one trajectory");
    if (features.size() != turn_counts.size()) {
        throw InternalError("summarize_config: features/turn_counts size mismatch");
    }
    ConfigFeatureSummary out;
    out.config = config;
    out.n_trajectories = static_cast<int>(features.size());

    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        std::vector<double> values;
        values.reserve(features.size());
        for (const FeatureVector& f : features) {
            const auto v = f.as_array()[k];
            if (v) values.push_back(*v);
        }
        if (!values.empty()) out.features[k] = median_of(std::move(values));
    }

    std::vector<double> turns;
    turns.reserve(turn_counts.size());
    double total = 0.0;
    for (int t : turn_counts) {
        turns.push_back(static_cast<double>(t));
        total += t;
    }
    // Length is summarized on the turn scale, then transformed.
    out.features[4] = std::log(1.0 + median_of(std::move(turns)));
    out.mean_turns = total / static_cast<double>(turn_counts.size());
    return out;
}

}  // namespace trajmeta
