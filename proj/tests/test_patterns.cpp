// Binary pattern semantics against a fixed threshold manifest, plus the
// calibration path that derives one from a corpus.

#include <optional>
#include <vector>

#include <doctest.h>

#include "trajmeta/errors.hpp"
#include "trajmeta/json_io.hpp"
#include "trajmeta/patterns.hpp"
#include "helpers.hpp"

using namespace trajmeta;
using trajmeta::test::make_annotated;
using trajmeta::test::TempDir;

namespace {

constexpr auto E = ActionCategory::exploration;
constexpr auto M = ActionCategory::modification;
constexpr auto T = ActionCategory::test;
constexpr auto U = ActionCategory::utility;

ThresholdManifest manifest() {
    ThresholdManifest m;
    m.cascade_median = 2.0;
    m.length_median = 5.0;
    m.late_entropy_median = 0.1;
    m.source = "unit";
    return m;
}

std::vector<bool> clean(std::size_t n) { return std::vector<bool>(n, false); }

}  // namespace

TEST_CASE("P1: exploration strictly before the first modification") {
    const auto m = manifest();
    CHECK(detect_patterns(make_annotated({E, M}, clean(2)), m).p[0] == true);
    CHECK(detect_patterns(make_annotated({M, E}, clean(2)), m).p[0] == false);
    CHECK(detect_patterns(make_annotated({E, T, M}, clean(3)), m).p[0] == true);
    // Exploration after the first modification does not count.
    CHECK(detect_patterns(make_annotated({M, E, M}, clean(3)), m).p[0] == false);
    // No modification turn: pattern undefined.
    CHECK(!detect_patterns(make_annotated({T, E}, clean(2)), m).p[0].has_value());
}

TEST_CASE("P2: exploration ratio band is inclusive at both ends") {
    const auto m = manifest();
    const auto ratio_fixture = [&](int explorations, int n) {
        std::vector<ActionCategory> cats(static_cast<std::size_t>(n), U);
        for (int i = 0; i < explorations; ++i) cats[static_cast<std::size_t>(i)] = E;
        return detect_patterns(make_annotated(cats, clean(static_cast<std::size_t>(n))), m);
    };
    CHECK(ratio_fixture(3, 10).p[1] == true);   // 0.30, low edge
    CHECK(ratio_fixture(5, 10).p[1] == true);   // 0.50, high edge
    CHECK(ratio_fixture(4, 10).p[1] == true);
    CHECK(ratio_fixture(2, 10).p[1] == false);
    CHECK(ratio_fixture(6, 10).p[1] == false);
    CHECK(ratio_fixture(0, 4).p[1] == false);
}

TEST_CASE("P3: longest cascade strictly below the median, errors required") {
    const auto m = manifest();  // cascade_median 2
    // Single isolated error: longest cascade 1 < 2.
    CHECK(detect_patterns(make_annotated({E, M, T}, {false, true, false}), m).p[2] == true);
    // Two-turn cascade: 2 < 2 fails.
    CHECK(detect_patterns(make_annotated({E, M, T}, {true, true, false}), m).p[2] == false);
    // No error turns: pattern undefined.
    CHECK(!detect_patterns(make_annotated({E, M, T}, clean(3)), m).p[2].has_value());
    // Errors present but below the cascade min length: longest counts as 0.
    const auto at = make_annotated({E, M, T}, {false, true, false}, 2);
    REQUIRE(at.cascades.empty());
    CHECK(detect_patterns(at, m).p[2] == true);
}

TEST_CASE("P4: first cascade short enough to recover from") {
    const auto m = manifest();  // recovery_max_turns 2
    CHECK(detect_patterns(make_annotated({E, M, T, T}, {true, true, false, false}), m).p[3] ==
          true);
    CHECK(detect_patterns(
              make_annotated({E, M, T, T}, {true, true, true, false}), m).p[3] == false);
    // Later cascades do not matter, only the first.
    CHECK(detect_patterns(
              make_annotated({E, M, T, T, T}, {true, false, true, true, true}), m)
              .p[3] == true);
    // No cascades at all: undefined.
    CHECK(!detect_patterns(make_annotated({E, M}, clean(2)), m).p[3].has_value());
    CHECK(!detect_patterns(make_annotated({E, M, T}, {false, true, false}, 2), m)
               .p[3]
               .has_value());
}

TEST_CASE("P5: trajectory strictly shorter than the median length") {
    const auto m = manifest();  // length_median 5
    CHECK(detect_patterns(make_annotated(std::vector<ActionCategory>(4, E), clean(4)), m)
              .p[4] == true);
    CHECK(detect_patterns(make_annotated(std::vector<ActionCategory>(5, E), clean(5)), m)
              .p[4] == false);
}

TEST_CASE("P6: late-stage entropy strictly below the median") {
    // A short uniform trajectory has late entropy 0.
    const auto at = make_annotated(std::vector<ActionCategory>(4, E), clean(4));
    auto m = manifest();
    m.late_entropy_median = 0.1;
    CHECK(detect_patterns(at, m).p[5] == true);
    m.late_entropy_median = 0.0;
    CHECK(detect_patterns(at, m).p[5] == false);
}

TEST_CASE("P7: a test turn after some modification") {
    const auto m = manifest();
    CHECK(detect_patterns(make_annotated({M, T}, clean(2)), m).p[6] == true);
    CHECK(detect_patterns(make_annotated({T, M}, clean(2)), m).p[6] == false);
    CHECK(detect_patterns(make_annotated({M, E, T}, clean(3)), m).p[6] == true);
    CHECK(!detect_patterns(make_annotated({T, E}, clean(2)), m).p[6].has_value());
}

TEST_CASE("detect_patterns rejects an empty trajectory") {
    AnnotatedTrajectory at;
    CHECK_THROWS_AS(detect_patterns(at, manifest()), DataError);
}

TEST_CASE("compute_thresholds takes medians over the calibration corpus") {
    std::vector<AnnotatedTrajectory> corpus;
    // Longest cascade 2, length 4.
    corpus.push_back(make_annotated({E, M, T, T}, {false, true, true, false}));
    // No cascades, length 2: contributes to lengths only.
    corpus.push_back(make_annotated({E, E}, clean(2)));
    // Longest cascade 1 (two isolated errors), length 6.
    corpus.push_back(
        make_annotated({M, T, M, T, M, T}, {true, false, false, true, false, false}));

    const auto m = compute_thresholds(corpus, "calib.jsonl");
    CHECK(m.cascade_median == doctest::Approx(1.5));
    CHECK(m.length_median == doctest::Approx(4.0));
    CHECK(m.late_entropy_median == doctest::Approx(0.0));
    CHECK(m.source == "calib.jsonl");
    // Band and recovery limit keep their defaults.
    CHECK(m.exploration_low == doctest::Approx(0.30));
    CHECK(m.exploration_high == doctest::Approx(0.50));
    CHECK(m.recovery_max_turns == 2);
}

TEST_CASE("compute_thresholds requires trajectories and cascades") {
    CHECK_THROWS_AS(compute_thresholds({}, "x"), DataError);
    std::vector<AnnotatedTrajectory> all_clean;
    all_clean.push_back(make_annotated({E, M}, clean(2)));
    CHECK_THROWS_AS(compute_thresholds(all_clean, "x"), DataError);
}

TEST_CASE("threshold manifest JSON round trip") {
    TempDir dir("thresholds");
    auto m = manifest();
    m.cascade_median = 3.5;
    m.recovery_max_turns = 4;
    const auto path = dir.path() / "thresholds.json";
    save_thresholds(path, m);
    const auto back = load_thresholds(path);
    CHECK(back.cascade_median == m.cascade_median);
    CHECK(back.length_median == m.length_median);
    CHECK(back.late_entropy_median == m.late_entropy_median);
    CHECK(back.exploration_low == m.exploration_low);
    CHECK(back.exploration_high == m.exploration_high);
    CHECK(back.recovery_max_turns == 4);
    CHECK(back.source == "unit");
}

TEST_CASE("threshold manifest validation") {
    auto j = thresholds_to_json(manifest());
    j.erase("length_median");
    CHECK_THROWS_WITH_AS(thresholds_from_json(j), doctest::Contains("length_median"),
                         DataError);

    auto bad_band = thresholds_to_json(manifest());
    bad_band["exploration_band"] = {0.3};
    CHECK_THROWS_AS(thresholds_from_json(bad_band), DataError);

    auto inverted = thresholds_to_json(manifest());
    inverted["exploration_band"] = {0.6, 0.4};
    CHECK_THROWS_WITH_AS(thresholds_from_json(inverted), doctest::Contains("low > high"),
                         DataError);

    CHECK_THROWS_AS(thresholds_from_json(nlohmann::json::array()), DataError);
    CHECK_THROWS_AS(load_thresholds("/nonexistent/thresholds.json"), DataError);
}
