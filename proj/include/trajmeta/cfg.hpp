#pragma once
// Context-state motif graphs. Each turn maps to a state (category, error
// regime, phase); a motif is a consecutive state pair; motifs chain into a
// multigraph whose shape yields six structural features.
//
// Phase boundaries: early = index <= ceil(N/3), late = index > ceil(2N/3).
// The error regime of turn i is post_error iff turn i-1 had an error; the
// first turn is always clean.

#include <array>
#include <compare>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajmeta/annotate.hpp"

namespace trajmeta {

enum class ErrorRegime { clean, post_error };
enum class Phase { early, mid, late };

std::string_view to_string(ErrorRegime);
std::string_view to_string(Phase);

struct ContextState {
    ActionCategory category = ActionCategory::unknown;
    ErrorRegime regime = ErrorRegime::clean;
    Phase phase = Phase::early;
    auto operator<=>(const ContextState&) const = default;
};

std::string to_string(const ContextState&);

std::vector<ContextState> assign_states(const AnnotatedTrajectory&);

// A motif is an ordered pair of consecutive states.
struct Motif {
    ContextState from;
    ContextState to;
    auto operator<=>(const Motif&) const = default;
    bool touches_post_error() const {
        return from.regime == ErrorRegime::post_error || to.regime == ErrorRegime::post_error;
    }
};

struct MotifGraph {
    std::vector<Motif> nodes;           // distinct motifs, first-appearance order
    std::vector<int> instances;         // node index of motif instance t = 1..N-1
    std::map<std::pair<int, int>, int> edges;  // (from node, to node) -> multiplicity

    int instance_count() const { return static_cast<int>(instances.size()); }
    int edge_instance_count() const {
        return instances.size() < 2 ? 0 : static_cast<int>(instances.size()) - 1;
    }
};

MotifGraph build_graph(std::span<const ContextState>);

struct CfgFeatureSet {
    double motif_entropy = 0.0;       // over motif instances
    double transition_entropy = 0.0;  // over edge instances
    double self_loop_rate = 0.0;      // edge instances with from == to
    double revisit_rate = 0.0;        // 1 - distinct/instances
    double backtrack_rate = 0.0;      // positions t >= 3 with m_t == m_{t-2}
    double post_error_motif_ratio = 0.0;
};

inline constexpr std::size_t kCfgFeatureCount = 6;
// CSV/effects naming; transition entropy is prefixed to keep it distinct from
// the behavioral feature of the same name.
inline constexpr std::array<std::string_view, kCfgFeatureCount> kCfgFeatureNames = {
    "motif_entropy",   "cfg_transition_entropy", "self_loop_rate",
    "revisit_rate",    "backtrack_rate",         "post_error_motif_ratio",
};

// Fewer than two motif instances (N <= 2) reports every feature as zero.
CfgFeatureSet cfg_features(const MotifGraph&);

std::array<double, kCfgFeatureCount> cfg_as_array(const CfgFeatureSet&);

// Graphviz rendering of the motif multigraph.
std::string to_dot(const MotifGraph&, const std::string& title);

}  // namespace trajmeta
