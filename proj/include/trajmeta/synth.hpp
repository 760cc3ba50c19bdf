#pragma once
// Synthetic trajectory generator with planted behavioral regimes and planted
// feature-to-outcome effects. Error observations are drawn from templates
// that the default error rules recognize, so the generated corpus exercises
// the real annotation path.

#include <array>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "trajmeta/model.hpp"

namespace trajmeta {

// Resolution probability is logistic(strength * z) where z is the driver
// feature z-scored within the generated batch; lower_resolves flips the sign
// so that lower driver values resolve.
struct OutcomeModel {
    std::string feature = "turns";  // turns | exploration_ratio | error_rate | repetition_rate
    bool lower_resolves = true;
    double strength = 0.0;
};

struct RegimeSpec {
    std::string name;
    int length_min = 1;
    double length_mode = 1.0;
    int length_max = 1;
    std::array<double, kCategoryCount> action_mix{};  // by ActionCategory order
    double error_prob = 0.0;
    double cascade_stickiness = 0.0;
    double repeat_prob = 0.0;
    OutcomeModel outcome;
};

// Throws DataError on out-of-range probabilities, a mix that does not sum to
// one, a bad length triple, or an unknown outcome driver.
void validate_regime(const RegimeSpec& spec);

std::vector<Trajectory> generate(const RegimeSpec& spec, int n, const ConfigurationId& config,
                                 std::uint64_t seed);

struct EcosystemEntry {
    RegimeSpec spec;
    ConfigurationId config;
    int n = 0;
};

// Each configuration gets its own seed stream derived from its key, so the
// corpus is independent of entry order and of jobs.
std::vector<Trajectory> generate_ecosystem(std::span<const EcosystemEntry> entries,
                                           std::uint64_t seed, int jobs = 1);

RegimeSpec regime_from_json(const nlohmann::json& j);
std::vector<EcosystemEntry> ecosystem_from_json(const nlohmann::json& j);

}  // namespace trajmeta
