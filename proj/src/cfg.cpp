#include "trajmeta/cfg.hpp"

#include <cmath>

#include "trajmeta/errors.hpp"
#include "trajmeta/stats.hpp"

namespace trajmeta {

std::string_view to_string(ErrorRegime r) {
    return r == ErrorRegime::clean ? "clean" : "post_error";
}

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::early: return "early";
        case Phase::mid: return "mid";
        default: return "late";
    }
}

std::string to_string(const ContextState& s) {
    std::string out(to_string(s.category));
    out += '|';
    out += to_string(s.regime);
    out += '|';
    out += to_string(s.phase);
    return out;
}

std::vector<ContextState> assign_states(const AnnotatedTrajectory& at) {
    const int n = at.turn_count();
    if (n == 0) throw DataError("states of an empty trajectory");
    const int early_end = (n + 2) / 3;       // ceil(N/3)
    const int mid_end = (2 * n + 2) / 3;     // ceil(2N/3)
    std::vector<ContextState> states;
    states.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        ContextState s;
        s.category = at.categories[static_cast<std::size_t>(i - 1)];
        s.regime = (i >= 2 && at.has_error(static_cast<std::size_t>(i - 2)))
                       ? ErrorRegime::post_error
                       : ErrorRegime::clean;
        s.phase = i <= early_end ? Phase::early : (i <= mid_end ? Phase::mid : Phase::late);
        states.push_back(s);
    }
    return states;
}

MotifGraph build_graph(std::span<const ContextState> states) {
    MotifGraph g;
    if (states.size() < 2) return g;
    std::map<Motif, int> index;
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        const Motif m{states[i], states[i + 1]};
        auto [it, inserted] = index.try_emplace(m, static_cast<int>(g.nodes.size()));
        if (inserted) g.nodes.push_back(m);
        g.instances.push_back(it->second);
    }
    for (std::size_t t = 0; t + 1 < g.instances.size(); ++t) {
        ++g.edges[{g.instances[t], g.instances[t + 1]}];
    }
    return g;
}

CfgFeatureSet cfg_features(const MotifGraph& g) {
    CfgFeatureSet f;
    const int m = g.instance_count();
    if (m < 2) return f;  // N <= 2: all features zero by convention

    std::vector<int> node_counts(g.nodes.size(), 0);
    for (int idx : g.instances) ++node_counts[static_cast<std::size_t>(idx)];
    f.motif_entropy = entropy_from_counts(node_counts);

    std::vector<int> edge_counts;
    edge_counts.reserve(g.edges.size());
    int self_loops = 0;
    for (const auto& [edge, count] : g.edges) {
        edge_counts.push_back(count);
        if (edge.first == edge.second) self_loops += count;
    }
    f.transition_entropy = entropy_from_counts(edge_counts);
    const int edge_instances = g.edge_instance_count();
    f.self_loop_rate =
        edge_instances == 0 ? 0.0 : static_cast<double>(self_loops) / edge_instances;

    f.revisit_rate = 1.0 - static_cast<double>(g.nodes.size()) / static_cast<double>(m);

    int eligible = 0;
    int backtracks = 0;
    for (int t = 3; t <= m; ++t) {
        ++eligible;
        if (g.instances[static_cast<std::size_t>(t - 1)] ==
            g.instances[static_cast<std::size_t>(t - 3)]) {
            ++backtracks;
        }
    }
    f.backtrack_rate = eligible == 0 ? 0.0 : static_cast<double>(backtracks) / eligible;

    int touching = 0;
    for (int idx : g.instances) {
        if (g.nodes[static_cast<std::size_t>(idx)].touches_post_error()) ++touching;
    }
    f.post_error_motif_ratio = static_cast<double>(touching) / m;
    return f;
}

std::array<double, kCfgFeatureCount> cfg_as_array(const CfgFeatureSet& f) {
    return {f.motif_entropy,  f.transition_entropy, f.self_loop_rate,
            f.revisit_rate,   f.backtrack_rate,     f.post_error_motif_ratio};
}

std::string to_dot(const MotifGraph& g, const std::string& title) {
    std::string out = "digraph motifs {\n";
    out += "  label=\"" + title + "\";\n";
    out += "  node [shape=box];\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        out += "  n" + std::to_string(i) + " [label=\"" + to_string(g.nodes[i].from) + " -> " +
               to_string(g.nodes[i].to) + "\"];\n";
    }
    for (const auto& [edge, count] : g.edges) {
        out += "  n" + std::to_string(edge.first) + " -> n" + std::to_string(edge.second) +
               " [label=\"" + std::to_string(count) + "\"];\n";
    }
    out += "}\n";
    return out;
}

}  // namespace trajmeta
