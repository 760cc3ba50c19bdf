#pragma once
// CSV schemas for every pipeline artifact. Empty cells mean "absent" for
// optional values; doubles round-trip via the shortest-representation writer.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajmeta/cfg.hpp"
#include "trajmeta/csv.hpp"
#include "trajmeta/effects.hpp"
#include "trajmeta/features.hpp"
#include "trajmeta/meta.hpp"
#include "trajmeta/patterns.hpp"
#include "trajmeta/taxonomy.hpp"

namespace trajmeta {

struct TrajFeatureRow {
    std::string id;
    ConfigurationId config;
    Outcome outcome = Outcome::failed;
    int turns = 0;
    std::array<std::optional<double>, kFeatureCount> features{};
};

struct CfgFeatureRow {
    std::string id;
    ConfigurationId config;
    Outcome outcome = Outcome::failed;
    std::array<double, kCfgFeatureCount> features{};
};

struct PatternRow {
    std::string id;
    ConfigurationId config;
    Outcome outcome = Outcome::failed;
    PatternVector patterns;
};

// features.csv: one row per configuration.
CsvTable config_features_to_csv(std::span<const ConfigFeatureSummary> summaries);
std::vector<ConfigFeatureSummary> config_features_from_csv(const CsvTable& table);

// traj_features.csv / cfg_features.csv / patterns.csv: one row per trajectory.
CsvTable traj_features_to_csv(std::span<const TrajFeatureRow> rows);
CsvTable cfg_features_to_csv(std::span<const CfgFeatureRow> rows);
CsvTable patterns_to_csv(std::span<const PatternRow> rows);
PatternTable pattern_table_from_csv(const CsvTable& table);
PatternTable pattern_table_from_rows(std::span<const PatternRow> rows);

// Generic per-trajectory continuous reader: id + configuration + outcome
// columns, every remaining column a feature. A "turns" column becomes the
// feature "mean_turns" (the configuration-level name it pools under).
ContinuousTable continuous_from_csv(const CsvTable& table);
ContinuousTable continuous_from_rows(std::span<const TrajFeatureRow> rows);
// Joins parts on trajectory id; feature lists concatenate, rows missing from
// a part get absent values. Duplicate feature names or conflicting
// config/outcome for an id throw DataError.
ContinuousTable merge_continuous(std::vector<ContinuousTable> parts);

CsvTable effects_to_csv(std::span<const EffectEstimate> estimates);
std::vector<EffectEstimate> effects_from_csv(const CsvTable& table);
CsvTable skips_to_csv(std::span<const SkipRecord> skips);

CsvTable meta_to_csv(std::span<const MetaRow> rows);
std::vector<MetaRow> meta_from_csv(const CsvTable& table);

CsvTable fits_to_csv(std::span<const FitRow> rows);
struct FitSummary {
    std::string feature;
    std::string moderator;
    int levels = 0;
    int k = 0;
    double tau2_null = 0.0;
    double tau2_residual = 0.0;
    double r2 = 0.0;
    int single_config_levels = 0;
};
std::vector<FitSummary> fits_from_csv(const CsvTable& table);

CsvTable types_to_csv(std::span<const std::pair<ConfigurationId, TypeAssignment>> assignments);
CsvTable sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace trajmeta
