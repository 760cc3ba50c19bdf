#pragma once
// Shared fixtures for the test suite.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "trajmeta/annotate.hpp"
#include "trajmeta/model.hpp"

namespace trajmeta::test {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("trajmeta_test_" + tag + "_" + std::to_string(++counter) + "_" +
                 std::to_string(static_cast<long long>(stamp)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path rules_dir() {
    const char* env = std::getenv("TRAJMETA_RULES");
    return env ? std::filesystem::path(env) : std::filesystem::path("rules");
}

inline Turn bash_turn(int index, const std::string& command, const std::string& output = "",
                      std::optional<int> exit_code = 0) {
    Turn t;
    t.index = index;
    t.action.kind = ActionKind::bash;
    t.action.command = command;
    t.observation.text = output;
    t.observation.exit_code = exit_code;
    return t;
}

inline Trajectory make_trajectory(const std::string& id, const std::string& framework,
                                  const std::string& llm, Outcome outcome,
                                  const std::vector<Turn>& turns) {
    Trajectory t;
    t.id = id;
    t.config.framework = framework;
    t.config.llm = llm;
    t.config.llm_family = llm + "-family";
    t.outcome = outcome;
    t.turns = turns;
    return t;
}

// Annotated trajectory with explicit categories and error flags; commands are
// synthesized so that no two turns repeat unless requested.
inline AnnotatedTrajectory make_annotated(const std::vector<ActionCategory>& categories,
                                          const std::vector<bool>& errors,
                                          int cascade_min_len = 1) {
    AnnotatedTrajectory at;
    at.traj = make_trajectory("t-1", "fw", "llm", Outcome::resolved, {});
    for (std::size_t i = 0; i < categories.size(); ++i) {
        at.traj.turns.push_back(bash_turn(static_cast<int>(i) + 1,
                                          "cmd-" + std::to_string(i), "out",
                                          errors[i] ? 1 : 0));
        at.categories.push_back(categories[i]);
        if (errors[i]) {
            at.error_types.emplace_back("some_error");
        } else {
            at.error_types.emplace_back(std::nullopt);
        }
    }
    std::vector<bool> flags(errors.begin(), errors.end());
    at.cascade_min_len = cascade_min_len;
    at.cascades = segment_cascades(flags, cascade_min_len);
    return at;
}

}  // namespace trajmeta::test
