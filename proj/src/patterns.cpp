#include "trajmeta/patterns.hpp"

#include <algorithm>

#include "trajmeta/errors.hpp"
#include "trajmeta/features.hpp"
#include "trajmeta/json_io.hpp"
#include "trajmeta/stats.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

ThresholdManifest compute_thresholds(std::span<const AnnotatedTrajectory> corpus,
                                     std::string source) {
    if (corpus.empty()) throw DataError("threshold calibration needs a non-empty corpus");
    std::vector<double> max_cascades;
    std::vector<double> lengths;
    std::vector<double> late_entropies;
    for (const AnnotatedTrajectory& at : corpus) {
        lengths.push_back(static_cast<double>(at.turn_count()));
        late_entropies.push_back(trajectory_features(at).late_stage_entropy);
        if (!at.cascades.empty()) {
            int longest = 0;
            for (const Cascade& c : at.cascades) longest = std::max(longest, c.length);
            max_cascades.push_back(static_cast<double>(longest));
        }
    }
    if (max_cascades.empty()) {
        throw DataError("threshold calibration: corpus has no cascades to calibrate on");
    }
    ThresholdManifest m;
    m.cascade_median = median_of(std::move(max_cascades));
    m.length_median = median_of(std::move(lengths));
    m.late_entropy_median = median_of(std::move(late_entropies));
    m.source = std::move(source);
    return m;
}

nlohmann::json thresholds_to_json(const ThresholdManifest& m) {
    nlohmann::json j;
    j["cascade_median"] = m.cascade_median;
    j["length_median"] = m.length_median;
    j["late_entropy_median"] = m.late_entropy_median;
    j["exploration_band"] = {m.exploration_low, m.exploration_high};
    j["recovery_max_turns"] = m.recovery_max_turns;
    j["source"] = m.source;
    return j;
}

ThresholdManifest thresholds_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("threshold manifest must be a JSON object");
    for (const char* key : {"cascade_median", "length_median", "late_entropy_median",
                            "exploration_band", "recovery_max_turns", "source"}) {
        if (!j.contains(key)) {
            throw DataError(std::string("threshold manifest: missing key '") + key + "'");
        }
    }
    ThresholdManifest m;
    m.cascade_median = j["cascade_median"].get<double>();
    m.length_median = j["length_median"].get<double>();
    m.late_entropy_median = j["late_entropy_median"].get<double>();
    const auto& band = j["exploration_band"];
    if (!band.is_array() || band.size() != 2) {
        throw DataError("threshold manifest: exploration_band must be [low, high]");
    }
    m.exploration_low = band[0].get<double>();
    m.exploration_high = band[1].get<double>();
    if (m.exploration_low > m.exploration_high) {
        throw DataError("threshold manifest: exploration_band low > high");
    }
    m.recovery_max_turns = j["recovery_max_turns"].get<int>();
    m.source = j["source"].get<std::string>();
    return m;
}

ThresholdManifest load_thresholds(const std::filesystem::path& path) {
    try {
        return thresholds_from_json(parse_json_text(read_file(path)));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void save_thresholds(const std::filesystem::path& path, const ThresholdManifest& m) {
    atomic_write(path, thresholds_to_json(m).dump(2) + "\n");
}

PatternVector detect_patterns(const AnnotatedTrajectory& at, const ThresholdManifest& m) {
    const int n = at.turn_count();
    if (n == 0) throw DataError("patterns of an empty trajectory");
    PatternVector out;

    int first_modification = 0;  // 1-based; 0 = none
    bool explore_before_modify = false;
    bool test_after_modify = false;
    bool seen_exploration = false;
    bool seen_modification = false;
    for (int i = 1; i <= n; ++i) {
        const ActionCategory c = at.categories[static_cast<std::size_t>(i - 1)];
        if (c == ActionCategory::exploration && first_modification == 0) seen_exploration = true;
        if (c == ActionCategory::modification) {
            if (first_modification == 0) {
                first_modification = i;
                explore_before_modify = seen_exploration;
            }
            seen_modification = true;
        }
        if (c == ActionCategory::test && seen_modification) test_after_modify = true;
    }

    const FeatureVector f = trajectory_features(at);

    if (first_modification > 0) out.p[0] = explore_before_modify;
    out.p[1] = f.exploration_ratio >= m.exploration_low && f.exploration_ratio <= m.exploration_high;

    bool any_error = false;
    for (std::size_t i = 0; i < at.error_types.size(); ++i) {
        if (at.has_error(i)) {
            any_error = true;
            break;
        }
    }
    if (any_error) {
        int longest = 0;
        for (const Cascade& c : at.cascades) longest = std::max(longest, c.length);
        out.p[2] = static_cast<double>(longest) < m.cascade_median;
    }
    if (!at.cascades.empty()) {
        out.p[3] = at.cascades.front().length <= m.recovery_max_turns;
    }
    out.p[4] = static_cast<double>(n) < m.length_median;
    out.p[5] = f.late_stage_entropy < m.late_entropy_median;
    if (first_modification > 0) out.p[6] = test_after_modify;
    return out;
}

}  // namespace trajmeta
