// Context-state assignment, motif graph construction, and the six structural
// features. The six-turn golden fixture pins every derived quantity at once.

#include <cmath>
#include <vector>

#include <doctest.h>

#include "trajmeta/cfg.hpp"
#include "trajmeta/errors.hpp"
#include "trajmeta/rng.hpp"
#include "helpers.hpp"

using namespace trajmeta;
using trajmeta::test::make_annotated;

namespace {

ContextState state(ActionCategory c, ErrorRegime r = ErrorRegime::clean,
                   Phase p = Phase::mid) {
    return ContextState{c, r, p};
}

constexpr auto E = ActionCategory::exploration;
constexpr auto M = ActionCategory::modification;
constexpr auto T = ActionCategory::test;

}  // namespace

TEST_CASE("assign_states: phases split the turn index into thirds") {
    const auto s3 = assign_states(make_annotated({E, M, T}, {false, false, false}));
    REQUIRE(s3.size() == 3);
    CHECK(s3[0].phase == Phase::early);
    CHECK(s3[1].phase == Phase::mid);
    CHECK(s3[2].phase == Phase::late);

    // N=7: early covers 1..3, mid 4..5, late 6..7.
    const auto s7 = assign_states(
        make_annotated(std::vector<ActionCategory>(7, E), std::vector<bool>(7, false)));
    const std::vector<Phase> want7 = {Phase::early, Phase::early, Phase::early, Phase::mid,
                                      Phase::mid,   Phase::late,  Phase::late};
    for (std::size_t i = 0; i < 7; ++i) CHECK(s7[i].phase == want7[i]);

    const auto s1 = assign_states(make_annotated({M}, {true}));
    REQUIRE(s1.size() == 1);
    CHECK(s1[0].phase == Phase::early);
    CHECK(s1[0].regime == ErrorRegime::clean);
    CHECK(s1[0].category == M);
}

TEST_CASE("assign_states: post_error marks successors of error turns") {
    // Errors at turns 2 and 4: their successors carry post_error.
    const auto s = assign_states(
        make_annotated({E, M, M, M, M, M}, {false, true, false, true, false, false}));
    const std::vector<ErrorRegime> want = {ErrorRegime::clean,      ErrorRegime::clean,
                                           ErrorRegime::post_error, ErrorRegime::clean,
                                           ErrorRegime::post_error, ErrorRegime::clean};
    REQUIRE(s.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(s[i].regime == want[i]);
    // Categories pass through from annotation.
    CHECK(s[0].category == E);
    CHECK(s[1].category == M);

    AnnotatedTrajectory empty;
    CHECK_THROWS_AS(assign_states(empty), DataError);
}

TEST_CASE("build_graph: degenerate and tiny inputs") {
    CHECK(build_graph({}).nodes.empty());
    const std::vector<ContextState> one = {state(E)};
    CHECK(build_graph(one).nodes.empty());

    const std::vector<ContextState> two = {state(E), state(E)};
    const auto g = build_graph(two);
    CHECK(g.nodes.size() == 1);
    REQUIRE(g.instances.size() == 1);
    CHECK(g.instances[0] == 0);
    CHECK(g.edges.empty());
    CHECK(g.edge_instance_count() == 0);
}

TEST_CASE("build_graph: alternating pair A,B,A,B") {
    const ContextState a = state(E);
    const ContextState b = state(M);
    const std::vector<ContextState> states = {a, b, a, b};
    const auto g = build_graph(states);
    REQUIRE(g.nodes.size() == 2);
    CHECK(g.nodes[0] == Motif{a, b});
    CHECK(g.nodes[1] == Motif{b, a});
    CHECK(g.instances == std::vector<int>{0, 1, 0});
    // Three motif instances chain into two edge instances, one per direction.
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges.at({0, 1}) == 1);
    CHECK(g.edges.at({1, 0}) == 1);

    // Position 3 sees the same motif as position 1.
    const auto f = cfg_features(g);
    CHECK(f.backtrack_rate == doctest::Approx(1.0));
    CHECK(f.revisit_rate == doctest::Approx(1.0 - 2.0 / 3.0));
    CHECK(f.self_loop_rate == 0.0);
}

TEST_CASE("build_graph: A,B,A,B,A splits edge multiplicities 2 and 1") {
    const ContextState a = state(E);
    const ContextState b = state(M);
    const std::vector<ContextState> states = {a, b, a, b, a};
    const auto g = build_graph(states);
    CHECK(g.instances == std::vector<int>{0, 1, 0, 1});
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges.at({0, 1}) == 2);
    CHECK(g.edges.at({1, 0}) == 1);
}

TEST_CASE("build_graph: node order follows first appearance") {
    const ContextState a = state(E);
    const ContextState b = state(M);
    const ContextState c = state(T);
    const std::vector<ContextState> states = {c, a, b, c, a};
    const auto g = build_graph(states);
    REQUIRE(g.nodes.size() == 3);
    CHECK(g.nodes[0] == Motif{c, a});
    CHECK(g.nodes[1] == Motif{a, b});
    CHECK(g.nodes[2] == Motif{b, c});
    CHECK(g.instances == std::vector<int>{0, 1, 2, 0});
}

TEST_CASE("six-turn golden trajectory") {
    // Categories [E,M,T,M,T,M]; the turns after the two errors carry
    // post_error, so turns 2..6 alternate between two states and every
    // derived feature is known in closed form. The phase bucket is held
    // constant so that state repetition is possible at this length.
    const ContextState s1 = state(E, ErrorRegime::clean);
    const ContextState s2 = state(M, ErrorRegime::clean);
    const ContextState s3 = state(T, ErrorRegime::post_error);
    const std::vector<ContextState> states = {s1, s2, s3, s2, s3, s2};

    const auto g = build_graph(states);
    REQUIRE(g.nodes.size() == 3);
    CHECK(g.instances == std::vector<int>{0, 1, 2, 1, 2});
    REQUIRE(g.edges.size() == 3);
    CHECK(g.edges.at({0, 1}) == 1);
    CHECK(g.edges.at({1, 2}) == 2);
    CHECK(g.edges.at({2, 1}) == 1);
    CHECK(g.edge_instance_count() == 4);

    const auto f = cfg_features(g);
    const double tol = 1e-12;
    CHECK(std::abs(f.revisit_rate - 0.40) <= tol);
    CHECK(std::abs(f.backtrack_rate - 2.0 / 3.0) <= tol);
    CHECK(f.self_loop_rate == 0.0);
    CHECK(std::abs(f.post_error_motif_ratio - 0.80) <= tol);
    // Instance counts {1,2,2} over 5 and edge counts {1,2,1} over 4.
    const double ln2 = std::log(2.0);
    CHECK(std::abs(f.motif_entropy - (std::log(5.0) - 0.8 * ln2)) <= tol);
    CHECK(std::abs(f.transition_entropy - 1.5 * ln2) <= tol);

    const auto arr = cfg_as_array(f);
    CHECK(arr[0] == f.motif_entropy);
    CHECK(arr[1] == f.transition_entropy);
    CHECK(arr[5] == f.post_error_motif_ratio);
    CHECK(kCfgFeatureNames[1] == "cfg_transition_entropy");
}

TEST_CASE("cfg_features: all-identical states are one self-looping motif") {
    const std::vector<ContextState> states(5, state(M));
    const auto g = build_graph(states);
    CHECK(g.nodes.size() == 1);
    const auto f = cfg_features(g);
    CHECK(f.self_loop_rate == doctest::Approx(1.0));
    CHECK(f.motif_entropy == 0.0);
    CHECK(f.transition_entropy == 0.0);
    CHECK(f.revisit_rate == doctest::Approx(0.75));
    CHECK(f.backtrack_rate == doctest::Approx(1.0));
    CHECK(f.post_error_motif_ratio == 0.0);
}

TEST_CASE("cfg_features: fewer than two motif instances reports zeros") {
    const std::vector<ContextState> two = {state(E), state(M)};
    const auto f = cfg_features(build_graph(two));
    CHECK(f.motif_entropy == 0.0);
    CHECK(f.transition_entropy == 0.0);
    CHECK(f.self_loop_rate == 0.0);
    CHECK(f.revisit_rate == 0.0);
    CHECK(f.backtrack_rate == 0.0);
    CHECK(f.post_error_motif_ratio == 0.0);

    CHECK(cfg_features(MotifGraph{}).motif_entropy == 0.0);
}

TEST_CASE("cfg_features: post_error ratio counts motifs touching either end") {
    const std::vector<ContextState> states = {
        state(E, ErrorRegime::clean), state(M, ErrorRegime::post_error),
        state(T, ErrorRegime::clean)};
    const auto f = cfg_features(build_graph(states));
    // Both motifs contain the post_error state.
    CHECK(f.post_error_motif_ratio == doctest::Approx(1.0));

    const std::vector<ContextState> clean = {state(E), state(M), state(T)};
    CHECK(cfg_features(build_graph(clean)).post_error_motif_ratio == 0.0);
}

TEST_CASE("cfg_features: structural invariants on random sequences") {
    Rng rng(derive_seed(99, 1, 0));
    const std::vector<ActionCategory> cats = {E, M, T, ActionCategory::navigation};
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(20));
        std::vector<ContextState> states;
        for (int i = 0; i < n; ++i) {
            ContextState s;
            s.category = cats[rng.below(cats.size())];
            s.regime = rng.below(2) == 0 ? ErrorRegime::clean : ErrorRegime::post_error;
            s.phase = static_cast<Phase>(rng.below(3));
            states.push_back(s);
        }
        const auto g = build_graph(states);
        const auto f = cfg_features(g);

        int multiplicity_sum = 0;
        for (const auto& [edge, count] : g.edges) {
            multiplicity_sum += count;
            // Consecutive motifs overlap in their shared state.
            CHECK(g.nodes[static_cast<std::size_t>(edge.first)].to ==
                  g.nodes[static_cast<std::size_t>(edge.second)].from);
        }
        CHECK(multiplicity_sum == n - 2);
        CHECK(g.instance_count() == n - 1);

        const double expected_revisit =
            1.0 - static_cast<double>(g.nodes.size()) / static_cast<double>(n - 1);
        CHECK(std::abs(f.revisit_rate - expected_revisit) <= 1e-12);
        CHECK(f.motif_entropy <=
              std::log(static_cast<double>(g.nodes.size())) + 1e-12);
        CHECK(f.backtrack_rate >= 0.0);
        CHECK(f.backtrack_rate <= 1.0);
        CHECK(f.post_error_motif_ratio >= 0.0);
        CHECK(f.post_error_motif_ratio <= 1.0);
    }
}

TEST_CASE("assign_states feeds build_graph end to end") {
    // Five uniform turns, no errors: every state differs only by phase, so
    // the four motifs are distinct and nothing revisits.
    const auto states = assign_states(
        make_annotated(std::vector<ActionCategory>(5, E), std::vector<bool>(5, false)));
    const auto g = build_graph(states);
    CHECK(g.nodes.size() == 4);
    const auto f = cfg_features(g);
    CHECK(f.revisit_rate == 0.0);
    CHECK(f.backtrack_rate == 0.0);
    CHECK(std::abs(f.motif_entropy - std::log(4.0)) <= 1e-12);
}

TEST_CASE("to_dot renders nodes and weighted edges") {
    const std::vector<ContextState> states = {state(E), state(M), state(E), state(M)};
    const auto g = build_graph(states);
    const auto dot = to_dot(g, "traj-1");
    CHECK(dot.find("digraph motifs") != std::string::npos);
    CHECK(dot.find("label=\"traj-1\"") != std::string::npos);
    CHECK(dot.find("exploration|clean|mid -> modification|clean|mid") != std::string::npos);
    CHECK(dot.find("n0 -> n1 [label=\"1\"]") != std::string::npos);
    CHECK(dot.find("n1 -> n0 [label=\"1\"]") != std::string::npos);
}
