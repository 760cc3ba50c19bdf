#include "trajmeta/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "trajmeta/errors.hpp"
#include "trajmeta/rng.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

namespace {

constexpr std::uint64_t kTurnsStream = 0x7475726eULL;    // "turn"
constexpr std::uint64_t kOutcomeStream = 0x6f757463ULL;  // "outc"

constexpr std::array<std::array<const char*, 5>, kCategoryCount> kCommands{{
    {"cat README.md", "grep -rn handler src", "ls -la src", "find . -name '*.py'",
     "head -n 40 src/app.py"},
    {"sed -i 's/retry=1/retry=3/' src/client.py", "patch -p1 < fix.patch",
     "touch src/migrations/0042_add_index.py", "rm -f build/cache.lock",
     "cp config/base.yaml config/local.yaml"},
    {"pytest -x tests/test_api.py", "python -m pytest tests -q", "python3 tests/smoke.py",
     "tox -e py311", "pytest tests/test_client.py -q"},
    {"cd src", "pwd", "pushd tests", "cd ..", "popd"},
    {"git status", "git diff", "pip install -e .", "make build", "echo ready"},
    {"frobnicate --all", "zorp run", "blarg -v", "quuxify src", "wibble --check"},
}};

constexpr std::array<std::array<const char*, 3>, kCategoryCount> kCleanOutput{{
    {"src/main.py\nsrc/handlers.py\ntests/test_api.py", "162:    return normalize(payload)",
     "total 48\n-rw-r--r-- 1 dev dev 2411 app.py"},
    {"", "wrote src/handlers.py", ""},
    {"11 passed in 2.31s", "collected 24 items\n........................ 24 passed", "ok"},
    {"/workspace/project/src", "", "/workspace/project"},
    {"On branch fix/issue-41\nnothing to commit, working tree clean",
     "Successfully installed requests-2.31.0", "ready"},
    {"", "done", ""},
}};

// One template per default error-rule category; the benign-text entry relies
// on the nonzero-exit fallback.
constexpr std::array<const char*, 15> kErrorOutput{{
    "2 failed, 11 passed in 1.24s",
    "  File \"src/main.py\", line 14\n    def handler(:\nSyntaxError: invalid syntax",
    "Traceback (most recent call last):\n  File \"src/main.py\", line 2, in <module>\n"
    "ModuleNotFoundError: No module named 'requests'",
    "Traceback (most recent call last):\n  File \"tests/test_api.py\", line 52, in test_handler\n"
    "AssertionError: expected 200, got 500",
    "TypeError: unsupported operand type(s) for +: 'int' and 'str'",
    "ValueError: invalid literal for int() with base 10: 'x'",
    "cat: src/config.yaml: No such file or directory",
    "bash: /usr/local/bin/deploy: Permission denied",
    "Command timed out after 120 seconds",
    "bash: pytset: command not found",
    "error: patch failed: src/main.py:10\nerror: src/main.py: patch does not apply",
    "CONFLICT (content): Merge conflict in src/main.py",
    "Traceback (most recent call last):\n  File \"src/main.py\", line 30, in run\n"
    "    result = process(data)\nException: processing aborted",
    "",
    "ERROR: build step exited abnormally",
}};

enum class Driver { turns, exploration_ratio, error_rate, repetition_rate };

Driver driver_from_string(const std::string& name) {
    if (name == "turns") return Driver::turns;
    if (name == "exploration_ratio") return Driver::exploration_ratio;
    if (name == "error_rate") return Driver::error_rate;
    if (name == "repetition_rate") return Driver::repetition_rate;
    throw DataError("unknown outcome driver '" + name + "'");
}

struct Draft {
    Trajectory traj;
    double driver = 0.0;
};

Draft draw_trajectory(const RegimeSpec& spec, const ConfigurationId& config, Driver driver,
                      std::uint64_t seed, int index) {
    Rng rng(derive_seed(seed, kTurnsStream, static_cast<std::uint64_t>(index)));

    const double raw = rng.triangular(static_cast<double>(spec.length_min), spec.length_mode,
                                      static_cast<double>(spec.length_max));
    const int n = std::clamp(static_cast<int>(std::llround(raw)), spec.length_min,
                             spec.length_max);

    std::vector<bool> errored(static_cast<std::size_t>(n));
    bool prev = false;
    for (int i = 0; i < n; ++i) {
        prev = rng.bernoulli(prev ? spec.cascade_stickiness : spec.error_prob);
        errored[static_cast<std::size_t>(i)] = prev;
    }

    Draft out;
    out.traj.config = config;
    char id[32];
    std::snprintf(id, sizeof id, "-%05d", index + 1);
    out.traj.id = config.framework + "-" + config.llm + id;

    std::vector<ActionCategory> categories(static_cast<std::size_t>(n));
    int exploration_turns = 0, repeated_turns = 0, error_turns = 0;
    for (int i = 0; i < n; ++i) {
        Turn turn;
        turn.index = i + 1;
        turn.action.kind = ActionKind::bash;
        const bool repeat = i > 0 && rng.bernoulli(spec.repeat_prob);
        if (repeat) {
            const auto j = rng.index(static_cast<std::size_t>(i));
            turn.action = out.traj.turns[j].action;
            categories[static_cast<std::size_t>(i)] = categories[j];
            ++repeated_turns;
        } else {
            const double u = rng.uniform01();
            double acc = 0.0;
            int cat = kCategoryCount - 1;
            for (int c = 0; c < kCategoryCount; ++c) {
                acc += spec.action_mix[static_cast<std::size_t>(c)];
                if (u < acc) {
                    cat = c;
                    break;
                }
            }
            categories[static_cast<std::size_t>(i)] = static_cast<ActionCategory>(cat);
            const auto& pool = kCommands[static_cast<std::size_t>(cat)];
            turn.action.command = pool[rng.index(pool.size())];
        }
        if (categories[static_cast<std::size_t>(i)] == ActionCategory::exploration) {
            ++exploration_turns;
        }

        if (errored[static_cast<std::size_t>(i)]) {
            ++error_turns;
            turn.observation.text = kErrorOutput[rng.index(kErrorOutput.size())];
            turn.observation.exit_code = 1;
        } else {
            const auto& pool = kCleanOutput[static_cast<std::size_t>(
                static_cast<int>(categories[static_cast<std::size_t>(i)]))];
            turn.observation.text = pool[rng.index(pool.size())];
            turn.observation.exit_code = 0;
        }
        out.traj.turns.push_back(std::move(turn));
    }

    switch (driver) {
        case Driver::turns: out.driver = static_cast<double>(n); break;
        case Driver::exploration_ratio:
            out.driver = static_cast<double>(exploration_turns) / static_cast<double>(n);
            break;
        case Driver::error_rate:
            out.driver = static_cast<double>(error_turns) / static_cast<double>(n);
            break;
        case Driver::repetition_rate:
            out.driver = static_cast<double>(repeated_turns) / static_cast<double>(n);
            break;
    }
    return out;
}

}  // namespace

void validate_regime(const RegimeSpec& spec) {
    if (spec.length_min < 1) throw DataError("regime: length min must be at least 1");
    if (spec.length_mode < static_cast<double>(spec.length_min) ||
        spec.length_mode > static_cast<double>(spec.length_max)) {
        throw DataError("regime: length mode outside [min, max]");
    }
    double mix_sum = 0.0;
    for (double p : spec.action_mix) {
        if (p < 0.0 || p > 1.0) throw DataError("regime: action_mix entry outside [0, 1]");
        mix_sum += p;
    }
    if (std::fabs(mix_sum - 1.0) > 1e-6) throw DataError("regime: action_mix must sum to 1");
    for (double p : {spec.error_prob, spec.cascade_stickiness, spec.repeat_prob}) {
        if (p < 0.0 || p > 1.0) throw DataError("regime: probability outside [0, 1]");
    }
    if (spec.outcome.strength < 0.0) throw DataError("regime: outcome strength must be >= 0");
    driver_from_string(spec.outcome.feature);
}

std::vector<Trajectory> generate(const RegimeSpec& spec, int n, const ConfigurationId& config,
                                 std::uint64_t seed) {
    validate_regime(spec);
    if (n < 1) throw DataError("generate: n must be at least 1");
    const Driver driver = driver_from_string(spec.outcome.feature);

    std::vector<Draft> drafts;
    drafts.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) drafts.push_back(draw_trajectory(spec, config, driver, seed, t));

    double mean = 0.0;
    for (const auto& d : drafts) mean += d.driver;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& d : drafts) var += (d.driver - mean) * (d.driver - mean);
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;

    const double slope = spec.outcome.lower_resolves ? -spec.outcome.strength
                                                     : spec.outcome.strength;
    std::vector<Trajectory> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const double z = sd > 0.0 ? (drafts[static_cast<std::size_t>(t)].driver - mean) / sd : 0.0;
        const double p = 1.0 / (1.0 + std::exp(-slope * z));
        Rng rng(derive_seed(seed, kOutcomeStream, static_cast<std::uint64_t>(t)));
        drafts[static_cast<std::size_t>(t)].traj.outcome =
            rng.bernoulli(p) ? Outcome::resolved : Outcome::failed;
        out.push_back(std::move(drafts[static_cast<std::size_t>(t)].traj));
    }
    return out;
}

std::vector<Trajectory> generate_ecosystem(std::span<const EcosystemEntry> entries,
                                           std::uint64_t seed, int jobs) {
    std::set<std::string> keys;
    std::size_t total = 0;
    for (const auto& entry : entries) {
        if (entry.n < 1) throw DataError("ecosystem: n must be at least 1");
        validate_regime(entry.spec);
        if (!keys.insert(config_key(entry.config)).second) {
            throw DataError("ecosystem: duplicate configuration " + entry.config.framework + "/" +
                            entry.config.llm);
        }
        total += static_cast<std::size_t>(entry.n);
    }

    std::vector<std::size_t> offsets(entries.size());
    std::size_t acc = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        offsets[i] = acc;
        acc += static_cast<std::size_t>(entries[i].n);
    }

    std::vector<Trajectory> out(total);
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
        const auto& entry = entries[i];
        const std::uint64_t config_seed = derive_seed(seed, fnv1a64(config_key(entry.config)));
        auto batch = generate(entry.spec, entry.n, entry.config, config_seed);
        std::move(batch.begin(), batch.end(), out.begin() + static_cast<std::ptrdiff_t>(offsets[i]));
    });
    return out;
}

RegimeSpec regime_from_json(const nlohmann::json& j) {
    RegimeSpec spec;
    for (const char* key : {"name", "length", "action_mix", "error_prob", "cascade_stickiness",
                            "repeat_prob"}) {
        if (!j.contains(key)) throw DataError(std::string("regime: missing key '") + key + "'");
    }
    spec.name = j.at("name").get<std::string>();
    const auto& length = j.at("length");
    for (const char* key : {"min", "mode", "max"}) {
        if (!length.contains(key)) {
            throw DataError(std::string("regime: length missing key '") + key + "'");
        }
    }
    spec.length_min = length.at("min").get<int>();
    spec.length_mode = length.at("mode").get<double>();
    spec.length_max = length.at("max").get<int>();

    for (const auto& [name, value] : j.at("action_mix").items()) {
        const auto category = category_from_string(name);
        if (!category) throw DataError("regime: unknown action category '" + name + "'");
        spec.action_mix[static_cast<std::size_t>(static_cast<int>(*category))] =
            value.get<double>();
    }
    spec.error_prob = j.at("error_prob").get<double>();
    spec.cascade_stickiness = j.at("cascade_stickiness").get<double>();
    spec.repeat_prob = j.at("repeat_prob").get<double>();

    if (j.contains("outcome_model") && !j.at("outcome_model").is_null()) {
        const auto& om = j.at("outcome_model");
        for (const char* key : {"feature", "direction", "strength"}) {
            if (!om.contains(key)) {
                throw DataError(std::string("regime: outcome_model missing key '") + key + "'");
            }
        }
        spec.outcome.feature = om.at("feature").get<std::string>();
        const auto direction = om.at("direction").get<std::string>();
        if (direction == "lower") spec.outcome.lower_resolves = true;
        else if (direction == "higher") spec.outcome.lower_resolves = false;
        else throw DataError("regime: outcome direction must be 'lower' or 'higher'");
        spec.outcome.strength = om.at("strength").get<double>();
    }
    validate_regime(spec);
    return spec;
}

std::vector<EcosystemEntry> ecosystem_from_json(const nlohmann::json& j) {
    if (!j.contains("configs") || !j.at("configs").is_array()) {
        throw DataError("spec: missing 'configs' array");
    }
    std::vector<EcosystemEntry> entries;
    for (const auto& item : j.at("configs")) {
        for (const char* key : {"framework", "llm", "llm_family", "n", "regime"}) {
            if (!item.contains(key)) {
                throw DataError(std::string("spec: config missing key '") + key + "'");
            }
        }
        EcosystemEntry entry;
        entry.config.framework = item.at("framework").get<std::string>();
        if (item.contains("framework_version") && !item.at("framework_version").is_null()) {
            entry.config.framework_version = item.at("framework_version").get<std::string>();
        }
        entry.config.llm = item.at("llm").get<std::string>();
        entry.config.llm_family = item.at("llm_family").get<std::string>();
        entry.n = item.at("n").get<int>();
        entry.spec = regime_from_json(item.at("regime"));
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace trajmeta
