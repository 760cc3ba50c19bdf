#include "trajmeta/tables.hpp"

#include <algorithm>
#include <map>

#include "trajmeta/errors.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

namespace {

const std::vector<std::string> kConfigColumns = {"framework", "framework_version", "llm",
                                                 "llm_family"};

void append_config_header(std::vector<std::string>& header) {
    header.insert(header.end(), kConfigColumns.begin(), kConfigColumns.end());
}

void append_config_cells(std::vector<std::string>& row, const ConfigurationId& config) {
    row.push_back(config.framework);
    row.push_back(config.framework_version.value_or(""));
    row.push_back(config.llm);
    row.push_back(config.llm_family);
}

struct ConfigColumns {
    std::size_t framework, version, llm, family;
};

ConfigColumns config_columns(const CsvTable& table) {
    return {table.column("framework"), table.column("framework_version"), table.column("llm"),
            table.column("llm_family")};
}

ConfigurationId config_from_row(const std::vector<std::string>& row, const ConfigColumns& cols) {
    ConfigurationId config;
    config.framework = row[cols.framework];
    if (!row[cols.version].empty()) config.framework_version = row[cols.version];
    config.llm = row[cols.llm];
    config.llm_family = row[cols.family];
    return config;
}

Outcome outcome_from_cell(const std::string& cell, std::size_t row_no) {
    const auto outcome = outcome_from_string(cell);
    if (!outcome) {
        throw DataError("row " + std::to_string(row_no) + ": unknown outcome '" + cell + "'");
    }
    return *outcome;
}

std::string cell(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string{};
}

}  // namespace

CsvTable config_features_to_csv(std::span<const ConfigFeatureSummary> summaries) {
    CsvTable table;
    append_config_header(table.header);
    table.header.emplace_back("n_trajectories");
    for (const auto name : kFeatureNames) table.header.emplace_back(name);
    table.header.emplace_back("mean_turns");
    for (const auto& s : summaries) {
        std::vector<std::string> row;
        append_config_cells(row, s.config);
        row.push_back(std::to_string(s.n_trajectories));
        for (const auto& value : s.features) row.push_back(cell(value));
        row.push_back(format_double(s.mean_turns));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<ConfigFeatureSummary> config_features_from_csv(const CsvTable& table) {
    const auto cols = config_columns(table);
    const auto n_col = table.column("n_trajectories");
    const auto turns_col = table.column("mean_turns");
    std::array<std::size_t, kFeatureCount> feature_cols{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        feature_cols[f] = table.column(std::string(kFeatureNames[f]));
    }
    std::vector<ConfigFeatureSummary> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ConfigFeatureSummary s;
        s.config = config_from_row(row, cols);
        s.n_trajectories = static_cast<int>(parse_int(row[n_col]));
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            if (!row[feature_cols[f]].empty()) s.features[f] = parse_double(row[feature_cols[f]]);
        }
        s.mean_turns = parse_double(row[turns_col]);
        out.push_back(std::move(s));
    }
    return out;
}

CsvTable traj_features_to_csv(std::span<const TrajFeatureRow> rows) {
    CsvTable table;
    table.header.emplace_back("trajectory_id");
    append_config_header(table.header);
    table.header.emplace_back("outcome");
    table.header.emplace_back("turns");
    for (const auto name : kFeatureNames) table.header.emplace_back(name);
    for (const auto& r : rows) {
        std::vector<std::string> row;
        row.push_back(r.id);
        append_config_cells(row, r.config);
        row.emplace_back(to_string(r.outcome));
        row.push_back(std::to_string(r.turns));
        for (const auto& value : r.features) row.push_back(cell(value));
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable cfg_features_to_csv(std::span<const CfgFeatureRow> rows) {
    CsvTable table;
    table.header.emplace_back("trajectory_id");
    append_config_header(table.header);
    table.header.emplace_back("outcome");
    for (const auto name : kCfgFeatureNames) table.header.emplace_back(name);
    for (const auto& r : rows) {
        std::vector<std::string> row;
        row.push_back(r.id);
        append_config_cells(row, r.config);
        row.emplace_back(to_string(r.outcome));
        for (const double value : r.features) row.push_back(format_double(value));
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable patterns_to_csv(std::span<const PatternRow> rows) {
    CsvTable table;
    table.header.emplace_back("trajectory_id");
    append_config_header(table.header);
    table.header.emplace_back("outcome");
    for (const auto name : kPatternNames) table.header.emplace_back(name);
    for (const auto& r : rows) {
        std::vector<std::string> row;
        row.push_back(r.id);
        append_config_cells(row, r.config);
        row.emplace_back(to_string(r.outcome));
        for (const auto& value : r.patterns.p) {
            row.emplace_back(!value ? "" : (*value ? "true" : "false"));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

PatternTable pattern_table_from_csv(const CsvTable& table) {
    const auto id_col = table.column("trajectory_id");
    const auto cols = config_columns(table);
    const auto outcome_col = table.column("outcome");
    std::array<std::size_t, kPatternCount> pattern_cols{};
    for (std::size_t p = 0; p < kPatternCount; ++p) {
        pattern_cols[p] = table.column(std::string(kPatternNames[p]));
    }
    PatternTable out;
    for (const auto name : kPatternNames) out.patterns.emplace_back(name);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        PatternTable::Row entry;
        entry.id = row[id_col];
        entry.config = config_from_row(row, cols);
        entry.outcome = outcome_from_cell(row[outcome_col], r + 2);
        entry.values.resize(kPatternCount);
        for (std::size_t p = 0; p < kPatternCount; ++p) {
            const auto& value = row[pattern_cols[p]];
            if (value.empty()) continue;
            if (value == "true") entry.values[p] = true;
            else if (value == "false") entry.values[p] = false;
            else {
                throw DataError("row " + std::to_string(r + 2) + ": bad pattern cell '" + value +
                                "'");
            }
        }
        out.rows.push_back(std::move(entry));
    }
    return out;
}

PatternTable pattern_table_from_rows(std::span<const PatternRow> rows) {
    PatternTable out;
    for (const auto name : kPatternNames) out.patterns.emplace_back(name);
    for (const auto& r : rows) {
        PatternTable::Row entry;
        entry.id = r.id;
        entry.config = r.config;
        entry.outcome = r.outcome;
        entry.values.assign(r.patterns.p.begin(), r.patterns.p.end());
        out.rows.push_back(std::move(entry));
    }
    return out;
}

ContinuousTable continuous_from_csv(const CsvTable& table) {
    const auto id_col = table.column("trajectory_id");
    const auto cols = config_columns(table);
    const auto outcome_col = table.column("outcome");
    std::vector<std::pair<std::size_t, bool>> value_cols;  // (column, is_turns)
    ContinuousTable out;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const auto& name = table.header[c];
        if (c == id_col || c == cols.framework || c == cols.version || c == cols.llm ||
            c == cols.family || c == outcome_col) {
            continue;
        }
        const bool is_turns = name == "turns";
        out.features.push_back(is_turns ? "mean_turns" : name);
        value_cols.emplace_back(c, is_turns);
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ContinuousTable::Row entry;
        entry.id = row[id_col];
        entry.config = config_from_row(row, cols);
        entry.outcome = outcome_from_cell(row[outcome_col], r + 2);
        entry.values.reserve(value_cols.size());
        for (const auto& [c, is_turns] : value_cols) {
            (void)is_turns;
            entry.values.push_back(row[c].empty() ? std::optional<double>{}
                                                  : std::optional<double>{parse_double(row[c])});
        }
        out.rows.push_back(std::move(entry));
    }
    return out;
}

ContinuousTable continuous_from_rows(std::span<const TrajFeatureRow> rows) {
    ContinuousTable out;
    for (const auto name : kFeatureNames) out.features.emplace_back(name);
    out.features.emplace_back("mean_turns");
    for (const auto& r : rows) {
        ContinuousTable::Row entry;
        entry.id = r.id;
        entry.config = r.config;
        entry.outcome = r.outcome;
        entry.values.assign(r.features.begin(), r.features.end());
        entry.values.emplace_back(static_cast<double>(r.turns));
        out.rows.push_back(std::move(entry));
    }
    return out;
}

ContinuousTable merge_continuous(std::vector<ContinuousTable> parts) {
    if (parts.empty()) return {};
    if (parts.size() == 1) return std::move(parts.front());

    ContinuousTable out;
    std::map<std::string, std::size_t> row_of;
    std::vector<std::size_t> offsets(parts.size());
    std::size_t width = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        offsets[p] = width;
        for (const auto& feature : parts[p].features) {
            if (std::find(out.features.begin(), out.features.end(), feature) !=
                out.features.end()) {
                throw DataError("merge: duplicate feature column '" + feature + "'");
            }
            out.features.push_back(feature);
        }
        width += parts[p].features.size();
    }
    for (std::size_t p = 0; p < parts.size(); ++p) {
        for (const auto& row : parts[p].rows) {
            const auto [it, inserted] = row_of.try_emplace(row.id, out.rows.size());
            if (inserted) {
                ContinuousTable::Row entry;
                entry.id = row.id;
                entry.config = row.config;
                entry.outcome = row.outcome;
                entry.values.resize(width);
                out.rows.push_back(std::move(entry));
            }
            auto& target = out.rows[it->second];
            if (config_key(target.config) != config_key(row.config) ||
                target.outcome != row.outcome) {
                throw DataError("merge: conflicting metadata for trajectory '" + row.id + "'");
            }
            std::copy(row.values.begin(), row.values.end(),
                      target.values.begin() + static_cast<std::ptrdiff_t>(offsets[p]));
        }
    }
    return out;
}

CsvTable effects_to_csv(std::span<const EffectEstimate> estimates) {
    CsvTable table;
    table.header = {"framework", "llm",    "llm_family", "feature",    "kind",
                    "effect",    "variance", "n_resolved", "n_unresolved"};
    for (const auto& e : estimates) {
        table.rows.push_back({e.config.framework, e.config.llm, e.config.llm_family, e.feature,
                              std::string(to_string(e.kind)), format_double(e.effect),
                              format_double(e.variance), std::to_string(e.n_resolved),
                              std::to_string(e.n_unresolved)});
    }
    return table;
}

std::vector<EffectEstimate> effects_from_csv(const CsvTable& table) {
    const auto fw = table.column("framework");
    const auto llm = table.column("llm");
    const auto family = table.column("llm_family");
    const auto feature = table.column("feature");
    const auto kind = table.column("kind");
    const auto effect = table.column("effect");
    const auto variance = table.column("variance");
    const auto n_res = table.column("n_resolved");
    const auto n_unres = table.column("n_unresolved");
    std::vector<EffectEstimate> out;
    for (const auto& row : table.rows) {
        EffectEstimate e;
        e.config.framework = row[fw];
        e.config.llm = row[llm];
        e.config.llm_family = row[family];
        e.feature = row[feature];
        e.kind = effect_kind_from_string(row[kind]);
        e.effect = parse_double(row[effect]);
        e.variance = parse_double(row[variance]);
        e.n_resolved = static_cast<int>(parse_int(row[n_res]));
        e.n_unresolved = static_cast<int>(parse_int(row[n_unres]));
        out.push_back(std::move(e));
    }
    return out;
}

CsvTable skips_to_csv(std::span<const SkipRecord> skips) {
    CsvTable table;
    table.header = {"framework", "llm", "llm_family", "feature", "reason"};
    for (const auto& s : skips) {
        table.rows.push_back(
            {s.config.framework, s.config.llm, s.config.llm_family, s.feature, s.reason});
    }
    return table;
}

CsvTable meta_to_csv(std::span<const MetaRow> rows) {
    CsvTable table;
    table.header = {"feature", "kind",  "k",    "pooled_effect", "pooled_effect_fixed",
                    "q",       "tau2",  "i2",   "n_pos",         "n_neg",
                    "n_zero",  "classification"};
    for (const auto& r : rows) {
        table.rows.push_back({r.feature, std::string(to_string(r.kind)),
                              std::to_string(r.pooled.k), format_double(r.pooled.pooled_effect),
                              format_double(r.pooled.fixed_effect), format_double(r.pooled.q),
                              format_double(r.pooled.tau2), format_double(r.pooled.i2),
                              std::to_string(r.split.n_pos), std::to_string(r.split.n_neg),
                              std::to_string(r.split.n_zero), r.classification});
    }
    return table;
}

std::vector<MetaRow> meta_from_csv(const CsvTable& table) {
    const auto feature = table.column("feature");
    const auto kind = table.column("kind");
    const auto k = table.column("k");
    const auto pooled = table.column("pooled_effect");
    const auto fixed = table.column("pooled_effect_fixed");
    const auto q = table.column("q");
    const auto tau2 = table.column("tau2");
    const auto i2 = table.column("i2");
    const auto n_pos = table.column("n_pos");
    const auto n_neg = table.column("n_neg");
    const auto n_zero = table.column("n_zero");
    const auto classification = table.column("classification");
    std::vector<MetaRow> out;
    for (const auto& row : table.rows) {
        MetaRow r;
        r.feature = row[feature];
        r.kind = effect_kind_from_string(row[kind]);
        r.pooled.k = static_cast<int>(parse_int(row[k]));
        r.pooled.pooled_effect = parse_double(row[pooled]);
        r.pooled.fixed_effect = parse_double(row[fixed]);
        r.pooled.q = parse_double(row[q]);
        r.pooled.tau2 = parse_double(row[tau2]);
        r.pooled.i2 = parse_double(row[i2]);
        r.split.n_pos = static_cast<int>(parse_int(row[n_pos]));
        r.split.n_neg = static_cast<int>(parse_int(row[n_neg]));
        r.split.n_zero = static_cast<int>(parse_int(row[n_zero]));
        r.classification = row[classification];
        out.push_back(std::move(r));
    }
    return out;
}

CsvTable fits_to_csv(std::span<const FitRow> rows) {
    CsvTable table;
    table.header = {"feature", "moderator",     "levels", "k", "tau2_null",
                    "tau2_residual", "r2", "single_config_levels"};
    for (const auto& r : rows) {
        table.rows.push_back({r.feature, std::string(to_string(r.fit.moderator)),
                              std::to_string(r.fit.levels.size()), std::to_string(r.fit.k),
                              format_double(r.fit.tau2_null), format_double(r.fit.tau2_residual),
                              format_double(r.fit.r2), std::to_string(r.fit.single_config_levels)});
    }
    return table;
}

std::vector<FitSummary> fits_from_csv(const CsvTable& table) {
    const auto feature = table.column("feature");
    const auto moderator = table.column("moderator");
    const auto levels = table.column("levels");
    const auto k = table.column("k");
    const auto tau2_null = table.column("tau2_null");
    const auto tau2_residual = table.column("tau2_residual");
    const auto r2 = table.column("r2");
    const auto single = table.column("single_config_levels");
    std::vector<FitSummary> out;
    for (const auto& row : table.rows) {
        FitSummary f;
        f.feature = row[feature];
        f.moderator = row[moderator];
        f.levels = static_cast<int>(parse_int(row[levels]));
        f.k = static_cast<int>(parse_int(row[k]));
        f.tau2_null = parse_double(row[tau2_null]);
        f.tau2_residual = parse_double(row[tau2_residual]);
        f.r2 = parse_double(row[r2]);
        f.single_config_levels = static_cast<int>(parse_int(row[single]));
        out.push_back(std::move(f));
    }
    return out;
}

CsvTable types_to_csv(std::span<const std::pair<ConfigurationId, TypeAssignment>> assignments) {
    CsvTable table;
    append_config_header(table.header);
    table.header.emplace_back("type");
    table.header.emplace_back("distance");
    for (const auto& [config, assignment] : assignments) {
        std::vector<std::string> row;
        append_config_cells(row, config);
        row.push_back(std::to_string(assignment.type));
        row.push_back(format_double(assignment.distance));
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable sweep_to_csv(std::span<const SweepRow> rows) {
    CsvTable table;
    table.header = {"k", "silhouette"};
    for (const auto& r : rows) {
        table.rows.push_back({std::to_string(r.k), format_double(r.silhouette)});
    }
    return table;
}

}  // namespace trajmeta
