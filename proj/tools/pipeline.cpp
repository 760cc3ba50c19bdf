#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <system_error>
#include <utility>

#include <json.hpp>

#include "trajmeta/annotate.hpp"
#include "trajmeta/cfg.hpp"
#include "trajmeta/errors.hpp"
#include "trajmeta/features.hpp"
#include "trajmeta/ingest.hpp"
#include "trajmeta/json_io.hpp"
#include "trajmeta/patterns.hpp"
#include "trajmeta/robustness.hpp"
#include "trajmeta/synth.hpp"
#include "trajmeta/tables.hpp"
#include "trajmeta/util.hpp"
#include "trajmeta/version.hpp"

namespace trajmeta::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view table_extension(TableFormat format) {
    return format == TableFormat::csv ? ".csv" : ".json";
}

void write_table(const fs::path& path, const CsvTable& table, TableFormat format) {
    if (format == TableFormat::csv) {
        atomic_write(path, to_csv(table));
        return;
    }
    ordered_json rows = ordered_json::array();
    for (const auto& row : table.rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            obj[table.header[c]] = c < row.size() ? row[c] : std::string();
        }
        rows.push_back(std::move(obj));
    }
    atomic_write(path, rows.dump(2) + "\n");
}

CsvTable read_table(const fs::path& path) {
    const std::string content = read_file(path);
    if (path.extension() != ".json") return parse_csv(content);
    ordered_json rows;
    try {
        rows = ordered_json::parse(content);
    } catch (const ordered_json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (!rows.is_array()) throw DataError(path.string() + ": expected a JSON array of objects");
    CsvTable table;
    for (const auto& obj : rows) {
        if (!obj.is_object()) {
            throw DataError(path.string() + ": expected a JSON array of objects");
        }
        if (table.header.empty()) {
            for (const auto& [key, value] : obj.items()) {
                (void)value;
                table.header.push_back(key);
            }
        }
        std::vector<std::string> row;
        row.reserve(table.header.size());
        for (const auto& name : table.header) {
            auto it = obj.find(name);
            if (it == obj.end() || !it->is_string()) {
                throw DataError(path.string() + ": row missing string field '" + name + "'");
            }
            row.push_back(it->get<std::string>());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::vector<AnnotatedTrajectory> load_annotated(const fs::path& path) {
    return parse_annotated_jsonl(read_file(path));
}

std::string sanitize_filename(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        if (!ok) c = '_';
    }
    return out;
}

void make_directories(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

void stage_ingest(const fs::path& in, const fs::path& out,
                  std::span<const std::string> adapter_names,
                  const std::optional<fs::path>& family_map,
                  const std::optional<fs::path>& report_path, int jobs) {
    const std::vector<FormatAdapter> adapters =
        adapter_names.empty() ? default_adapters() : select_adapters(adapter_names);
    FamilyMap family;
    if (family_map) family = family_map_from_json(parse_json_text(read_file(*family_map)));
    IngestResult result = ingest_path(in, adapters, family, jobs);
    atomic_write(out, to_canonical_jsonl(result.trajectories));
    if (report_path) {
        atomic_write(*report_path, ingest_report_to_json(result.report).dump(2) + "\n");
    }
}

void stage_annotate(const fs::path& in, const fs::path& rules_dir, int cascade_min_len,
                    const fs::path& out, int jobs) {
    const ClassifierRules classifier = load_classifier_rules(rules_dir / "classifier_rules.json");
    const ErrorRules errors = load_error_rules(rules_dir / "error_rules.json");
    const std::vector<Trajectory> trajectories = parse_canonical_jsonl(read_file(in));
    std::vector<AnnotatedTrajectory> annotated(trajectories.size());
    parallel_for(trajectories.size(), jobs, [&](std::size_t i) {
        annotated[i] = annotate(trajectories[i], classifier, errors, cascade_min_len);
    });
    atomic_write(out, to_annotated_jsonl(annotated));
}

void stage_features(const fs::path& annotated_path, const fs::path& out,
                    const std::optional<fs::path>& per_trajectory, TableFormat format,
                    int jobs) {
    const std::vector<AnnotatedTrajectory> annotated = load_annotated(annotated_path);
    const std::size_t n = annotated.size();
    std::vector<FeatureVector> vectors(n);
    parallel_for(n, jobs, [&](std::size_t i) { vectors[i] = trajectory_features(annotated[i]); });

    std::vector<TrajFeatureRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = TrajFeatureRow{annotated[i].traj.id, annotated[i].traj.config,
                                 annotated[i].traj.outcome, annotated[i].turn_count(),
                                 vectors[i].as_array()};
    }

    std::map<std::string, std::vector<std::size_t>> groups;
    std::map<std::string, ConfigurationId> configs;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string key = config_key(annotated[i].traj.config);
        groups[key].push_back(i);
        configs.emplace(key, annotated[i].traj.config);
    }
    std::vector<ConfigFeatureSummary> summaries;
    summaries.reserve(groups.size());
    for (const auto& [key, members] : groups) {
        std::vector<FeatureVector> sub;
        std::vector<int> turns;
        sub.reserve(members.size());
        turns.reserve(members.size());
        for (std::size_t i : members) {
            sub.push_back(vectors[i]);
            turns.push_back(rows[i].turns);
        }
        summaries.push_back(summarize_config(configs.at(key), sub, turns));
    }

    write_table(out, config_features_to_csv(summaries), format);
    if (per_trajectory) write_table(*per_trajectory, traj_features_to_csv(rows), format);
}

void stage_cfg(const fs::path& annotated_path, const fs::path& out,
               const std::optional<fs::path>& dot_dir, TableFormat format, int jobs) {
    const std::vector<AnnotatedTrajectory> annotated = load_annotated(annotated_path);
    const std::size_t n = annotated.size();
    std::vector<CfgFeatureRow> rows(n);
    std::vector<std::string> dots(dot_dir ? n : 0);
    parallel_for(n, jobs, [&](std::size_t i) {
        const MotifGraph graph = build_graph(assign_states(annotated[i]));
        rows[i] = CfgFeatureRow{annotated[i].traj.id, annotated[i].traj.config,
                                annotated[i].traj.outcome, cfg_as_array(cfg_features(graph))};
        if (dot_dir) dots[i] = to_dot(graph, annotated[i].traj.id);
    });
    if (dot_dir) {
        make_directories(*dot_dir);
        for (std::size_t i = 0; i < n; ++i) {
            atomic_write(*dot_dir / (sanitize_filename(annotated[i].traj.id) + ".dot"), dots[i]);
        }
    }
    write_table(out, cfg_features_to_csv(rows), format);
}

void stage_calibrate(const fs::path& annotated_path, const fs::path& out) {
    const std::vector<AnnotatedTrajectory> annotated = load_annotated(annotated_path);
    const ThresholdManifest manifest =
        compute_thresholds(annotated, annotated_path.filename().generic_string());
    save_thresholds(out, manifest);
}

void stage_patterns(const fs::path& annotated_path, const fs::path& manifest_path,
                    const fs::path& out, TableFormat format, int jobs) {
    const ThresholdManifest manifest = load_thresholds(manifest_path);
    const std::vector<AnnotatedTrajectory> annotated = load_annotated(annotated_path);
    std::vector<PatternRow> rows(annotated.size());
    parallel_for(annotated.size(), jobs, [&](std::size_t i) {
        rows[i] = PatternRow{annotated[i].traj.id, annotated[i].traj.config,
                             annotated[i].traj.outcome, detect_patterns(annotated[i], manifest)};
    });
    write_table(out, patterns_to_csv(rows), format);
}

void stage_effects(std::span<const fs::path> trajectory_tables, const fs::path& patterns,
                   const std::optional<fs::path>& features_summary, const fs::path& out,
                   const fs::path& skips, VarianceMode variance, std::uint64_t seed,
                   TableFormat format) {
    std::vector<ContinuousTable> parts;
    parts.reserve(trajectory_tables.size());
    for (const fs::path& p : trajectory_tables) {
        parts.push_back(continuous_from_csv(read_table(p)));
    }
    const ContinuousTable continuous = merge_continuous(std::move(parts));
    const PatternTable pattern_table = pattern_table_from_csv(read_table(patterns));

    if (features_summary) {
        const auto summaries = config_features_from_csv(read_table(*features_summary));
        std::set<std::string> known;
        for (const auto& s : summaries) known.insert(config_key(s.config));
        auto check = [&](const ConfigurationId& config) {
            const std::string key = config_key(config);
            if (!known.count(key)) {
                throw DataError("effects: configuration '" + key +
                                "' not in the features summary");
            }
        };
        for (const auto& row : continuous.rows) check(row.config);
        for (const auto& row : pattern_table.rows) check(row.config);
    }

    const EffectsResult result =
        per_config_effects(continuous, pattern_table, FilterPolicy{}, variance, seed);
    write_table(out, effects_to_csv(result.estimates), format);
    write_table(skips, skips_to_csv(result.skips), format);
}

void stage_meta(const fs::path& effects, const fs::path& out, double zero_band,
                TableFormat format) {
    const std::vector<EffectEstimate> estimates = effects_from_csv(read_table(effects));
    write_table(out, meta_to_csv(meta_all(estimates, zero_band)), format);
}

void stage_fits(const fs::path& effects, std::optional<Moderator> which, const fs::path& out,
                TableFormat format) {
    const std::vector<EffectEstimate> estimates = effects_from_csv(read_table(effects));
    std::vector<FitRow> rows;
    const auto append = [&](Moderator m) {
        std::vector<FitRow> block = meta_regress_all(estimates, m);
        rows.insert(rows.end(), std::make_move_iterator(block.begin()),
                    std::make_move_iterator(block.end()));
    };
    if (which) {
        append(*which);
    } else {
        append(Moderator::framework);
        append(Moderator::llm_family);
    }
    write_table(out, fits_to_csv(rows), format);
}

void stage_robust(const fs::path& effects, Moderator which, const std::string& feature,
                  int n_boot, int n_perm, std::uint64_t seed, const fs::path& out) {
    const std::vector<EffectEstimate> estimates = effects_from_csv(read_table(effects));
    const ModeratorData data = moderator_data(estimates, feature, which);
    const RobustnessReport report = robustness(data, n_boot, n_perm, seed);
    atomic_write(out, robustness_to_json(report).dump(2) + "\n");
}

void stage_taxonomy_fit(const fs::path& features, int k, std::uint64_t seed, const fs::path& out) {
    const auto summaries = config_features_from_csv(read_table(features));
    const TaxonomyModel model = fit_taxonomy(summaries, k, seed);
    atomic_write(out, taxonomy_to_json(model).dump(2) + "\n");
}

void stage_taxonomy_assign(const fs::path& model_path, const fs::path& features,
                           const fs::path& out, TableFormat format) {
    const TaxonomyModel model = taxonomy_from_json(parse_json_text(read_file(model_path)));
    const auto summaries = config_features_from_csv(read_table(features));
    std::vector<std::pair<ConfigurationId, TypeAssignment>> assignments;
    assignments.reserve(summaries.size());
    for (const auto& summary : summaries) {
        assignments.emplace_back(summary.config, assign_type(model, summary));
    }
    write_table(out, types_to_csv(assignments), format);
}

std::vector<SweepRow> stage_taxonomy_sweep(const fs::path& features, int k_lo, int k_hi,
                                           std::uint64_t seed) {
    const auto summaries = config_features_from_csv(read_table(features));
    return sweep_taxonomy(summaries, k_lo, k_hi, seed);
}

void stage_synth(const fs::path& spec, std::uint64_t seed, int jobs, const fs::path& out) {
    const auto entries = ecosystem_from_json(parse_json_text(read_file(spec)));
    const std::vector<Trajectory> trajectories = generate_ecosystem(entries, seed, jobs);
    atomic_write(out, to_canonical_jsonl(trajectories));
}

void stage_report(const fs::path& meta, const std::optional<fs::path>& fits,
                  std::span<const fs::path> robust_files, const std::optional<fs::path>& effects,
                  const fs::path& out_dir, TableFormat format) {
    const std::vector<MetaRow> meta_rows = meta_from_csv(read_table(meta));

    std::map<std::pair<std::string, std::string>, double> r2;
    if (fits) {
        for (const FitSummary& fit : fits_from_csv(read_table(*fits))) {
            r2[{fit.feature, fit.moderator}] = fit.r2;
        }
    }

    std::map<std::string, bool> dagger;
    for (const fs::path& p : robust_files) {
        const json j = parse_json_text(read_file(p));
        if (!j.is_object() || !j.contains("feature") || !j.contains("passes_chance_baseline")) {
            throw DataError(p.string() + ": not a robustness report");
        }
        const std::string feature = j.at("feature").get<std::string>();
        const bool passes = j.at("passes_chance_baseline").get<bool>();
        auto [it, inserted] = dagger.emplace(feature, passes);
        if (!inserted) it->second = it->second || passes;
    }

    const auto lookup_r2 = [&](const std::string& feature, const char* moderator) {
        auto it = r2.find({feature, moderator});
        return it == r2.end() ? std::string() : format_double(it->second);
    };

    CsvTable table;
    table.header = {"feature",        "kind",  "k",          "pooled_effect",
                    "n_pos",          "n_neg", "i2",         "classification",
                    "r2_framework",   "r2_llm_family",       "dagger"};
    for (const MetaRow& row : meta_rows) {
        std::string dag;
        if (auto it = dagger.find(row.feature); it != dagger.end()) {
            dag = it->second ? "true" : "false";
        }
        table.rows.push_back({row.feature, std::string(to_string(row.kind)),
                              std::to_string(row.pooled.k), format_double(row.pooled.pooled_effect),
                              std::to_string(row.split.n_pos), std::to_string(row.split.n_neg),
                              format_double(row.pooled.i2), row.classification,
                              lookup_r2(row.feature, "framework"),
                              lookup_r2(row.feature, "llm_family"), dag});
    }
    const std::string ext(table_extension(format));
    write_table(out_dir / ("report_table" + ext), table, format);

    if (effects) {
        const std::vector<EffectEstimate> estimates = effects_from_csv(read_table(*effects));
        CsvTable bees;
        bees.header = {"feature", "framework", "llm", "llm_family", "kind", "effect"};
        for (const EffectEstimate& e : estimates) {
            bees.rows.push_back({e.feature, e.config.framework, e.config.llm, e.config.llm_family,
                                 std::string(to_string(e.kind)), format_double(e.effect)});
        }
        write_table(out_dir / ("beeswarm" + ext), bees, format);
    }
}

namespace {

std::optional<fs::file_time_type> latest_mtime(const fs::path& path) {
    std::error_code ec;
    const fs::file_status status = fs::status(path, ec);
    if (ec || !fs::exists(status)) return std::nullopt;
    if (!fs::is_directory(status)) {
        const auto t = fs::last_write_time(path, ec);
        if (ec) return std::nullopt;
        return t;
    }
    std::optional<fs::file_time_type> best;
    fs::recursive_directory_iterator it(path, ec);
    if (ec) return std::nullopt;
    for (const auto& entry : it) {
        if (!entry.is_regular_file(ec) || ec) continue;
        const auto t = entry.last_write_time(ec);
        if (ec) continue;
        if (!best || t > *best) best = t;
    }
    return best;
}

bool outputs_fresh(std::span<const fs::path> inputs, std::span<const fs::path> outputs) {
    std::optional<fs::file_time_type> oldest_output;
    for (const fs::path& out : outputs) {
        std::error_code ec;
        if (!fs::is_regular_file(out, ec) || ec) return false;
        const auto t = fs::last_write_time(out, ec);
        if (ec) return false;
        if (!oldest_output || t < *oldest_output) oldest_output = t;
    }
    if (!oldest_output) return false;
    for (const fs::path& in : inputs) {
        const auto t = latest_mtime(in);
        if (!t) return false;
        if (*t > *oldest_output) return false;
    }
    return true;
}

// Directory hash: per-file hashes keyed by relative path, combined in
// lexicographic order so the result is independent of traversal order.
std::string tree_hash(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_directory(path, ec) || ec) return file_hash_hex(path);
    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        files.emplace_back(entry.path().lexically_relative(path).generic_string(), entry.path());
    }
    std::sort(files.begin(), files.end());
    std::string combined;
    for (const auto& [rel, file] : files) {
        combined += rel;
        combined += '\x1f';
        combined += file_hash_hex(file);
        combined += '\n';
    }
    return fnv1a64_hex(combined);
}

struct StageRecord {
    std::string name;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
};

}  // namespace

void run_pipeline(const RunOptions& options) {
    const fs::path& out = options.out_dir;
    make_directories(out);
    const std::string ext(table_extension(options.format));

    const fs::path canonical = out / "canonical.jsonl";
    const fs::path ingest_report = out / "ingest_report.json";
    const fs::path annotated = out / "annotated.jsonl";
    const fs::path features = out / ("features" + ext);
    const fs::path traj_features = out / ("traj_features" + ext);
    const fs::path cfg_features = out / ("cfg_features" + ext);
    const fs::path thresholds =
        options.thresholds ? *options.thresholds : out / "thresholds.json";
    const fs::path patterns = out / ("patterns" + ext);
    const fs::path effects = out / ("effects" + ext);
    const fs::path skips = out / ("skips" + ext);
    const fs::path meta = out / ("meta" + ext);
    const fs::path fits = out / ("fits" + ext);
    const fs::path robust_framework = out / "robust_framework.json";
    const fs::path robust_llm_family = out / "robust_llm_family.json";
    const fs::path model = out / "model.json";
    const fs::path types = out / ("types" + ext);
    const fs::path classifier_rules = options.rules_dir / "classifier_rules.json";
    const fs::path error_rules = options.rules_dir / "error_rules.json";

    std::vector<StageRecord> records;
    const auto run_stage = [&](const std::string& name, std::vector<fs::path> inputs,
                               std::vector<fs::path> outputs, const std::function<void()>& body) {
        if (!options.force && outputs_fresh(inputs, outputs)) {
            std::fprintf(stderr, "[run] %s: up to date\n", name.c_str());
        } else {
            std::fprintf(stderr, "[run] %s\n", name.c_str());
            try {
                body();
            } catch (const DataError& e) {
                throw DataError("stage " + name + ": " + e.what());
            }
        }
        records.push_back({name, std::move(inputs), std::move(outputs)});
    };

    {
        std::vector<fs::path> inputs{options.input};
        if (options.family_map) inputs.push_back(*options.family_map);
        run_stage("ingest", std::move(inputs), {canonical, ingest_report}, [&] {
            stage_ingest(options.input, canonical, options.adapters, options.family_map,
                         ingest_report, options.jobs);
        });
    }
    run_stage("annotate", {canonical, classifier_rules, error_rules}, {annotated}, [&] {
        stage_annotate(canonical, options.rules_dir, options.cascade_min_len, annotated,
                       options.jobs);
    });
    run_stage("features", {annotated}, {features, traj_features}, [&] {
        stage_features(annotated, features, traj_features, options.format, options.jobs);
    });
    run_stage("cfg", {annotated}, {cfg_features}, [&] {
        stage_cfg(annotated, cfg_features, std::nullopt, options.format, options.jobs);
    });
    if (!options.thresholds) {
        run_stage("thresholds", {annotated}, {thresholds},
                  [&] { stage_calibrate(annotated, thresholds); });
    }
    run_stage("patterns", {annotated, thresholds}, {patterns}, [&] {
        stage_patterns(annotated, thresholds, patterns, options.format, options.jobs);
    });
    run_stage("effects", {traj_features, cfg_features, patterns, features}, {effects, skips},
              [&] {
                  const std::vector<fs::path> tables{traj_features, cfg_features};
                  stage_effects(tables, patterns, features, effects, skips, options.variance,
                                options.seed, options.format);
              });
    run_stage("meta", {effects}, {meta},
              [&] { stage_meta(effects, meta, options.zero_band, options.format); });
    run_stage("fits", {effects}, {fits},
              [&] { stage_fits(effects, std::nullopt, fits, options.format); });

    // Robustness runs per moderator; an infeasible fit (too few levels, no
    // residual df) is reported and skipped rather than failing the run.
    const auto robust_stage = [&](Moderator which, const fs::path& target) {
        const std::string name = "robust_" + std::string(to_string(which));
        const std::vector<fs::path> stage_in{effects};
        const std::vector<fs::path> stage_out{target};
        if (!options.force && outputs_fresh(stage_in, stage_out)) {
            std::fprintf(stderr, "[run] %s: up to date\n", name.c_str());
            records.push_back({name, {effects}, {target}});
            return;
        }
        std::fprintf(stderr, "[run] %s\n", name.c_str());
        try {
            stage_robust(effects, which, options.robust_feature, options.n_boot, options.n_perm,
                         options.seed, target);
        } catch (const DataError& e) {
            std::fprintf(stderr, "[run] %s: skipped (%s)\n", name.c_str(), e.what());
            return;
        }
        records.push_back({name, {effects}, {target}});
    };
    robust_stage(Moderator::framework, robust_framework);
    robust_stage(Moderator::llm_family, robust_llm_family);

    run_stage("taxonomy", {features}, {model, types}, [&] {
        stage_taxonomy_fit(features, options.k, options.seed, model);
        stage_taxonomy_assign(model, features, types, options.format);
    });

    // Provenance manifest: relative paths for artifacts inside out_dir, the
    // caller's spelling for everything else, FNV-1a content hashes
    // throughout. Reruns over unchanged inputs rewrite it byte-identically.
    const auto manifest_path_string = [&](const fs::path& p) {
        const fs::path rel = p.lexically_relative(out);
        if (!rel.empty() && rel.begin()->string() != "..") return rel.generic_string();
        return p.generic_string();
    };
    json stages = json::array();
    for (const StageRecord& record : records) {
        json entry;
        entry["name"] = record.name;
        json in_list = json::array();
        for (const fs::path& p : record.inputs) {
            in_list.push_back({{"path", manifest_path_string(p)}, {"hash", tree_hash(p)}});
        }
        json out_list = json::array();
        for (const fs::path& p : record.outputs) {
            out_list.push_back({{"path", manifest_path_string(p)}, {"hash", tree_hash(p)}});
        }
        entry["inputs"] = std::move(in_list);
        entry["outputs"] = std::move(out_list);
        stages.push_back(std::move(entry));
    }
    json manifest;
    manifest["tool_version"] = kVersion;
    manifest["seed"] = options.seed;
    manifest["rules"] = {
        {"classifier",
         {{"path", classifier_rules.generic_string()},
          {"version", load_classifier_rules(classifier_rules).version},
          {"hash", file_hash_hex(classifier_rules)}}},
        {"errors",
         {{"path", error_rules.generic_string()},
          {"version", load_error_rules(error_rules).version},
          {"hash", file_hash_hex(error_rules)}}},
    };
    manifest["thresholds"] = {{"path", manifest_path_string(thresholds)},
                              {"hash", file_hash_hex(thresholds)}};
    manifest["stages"] = std::move(stages);
    atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace trajmeta::cli
