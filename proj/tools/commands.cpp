#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pipeline.hpp"
#include "trajmeta/errors.hpp"
#include "trajmeta/meta.hpp"
#include "trajmeta/tables.hpp"
#include "trajmeta/version.hpp"

namespace trajmeta::cli {

namespace fs = std::filesystem;

namespace {

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

// "lo:hi", both bounds inclusive.
std::pair<int, int> parse_k_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("--k-range expects lo:hi");
    try {
        const int lo = std::stoi(text.substr(0, colon));
        const int hi = std::stoi(text.substr(colon + 1));
        return {lo, hi};
    } catch (const std::exception&) {
        throw UsageError("--k-range expects lo:hi");
    }
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"trajectory metadata pipeline"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string format_name = "csv";
    bool force = false;
    int jobs = 1;
    app.add_option("--seed", seed, "Master seed for every randomized step");
    app.add_option("--out-dir", out_dir, "Directory relative output paths resolve under");
    app.add_option("--format", format_name, "Table output format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--force", force, "Rerun stages even when outputs are up to date");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 4096));

    const auto resolve_out = [&](const std::string& p) -> fs::path {
        const fs::path path(p);
        return path.is_absolute() ? path : fs::path(out_dir) / path;
    };

    // ingest
    std::string ingest_in, ingest_out, ingest_family, ingest_report;
    std::vector<std::string> ingest_adapters;
    CLI::App* ingest = app.add_subcommand("ingest", "Convert raw logs to canonical JSONL");
    ingest->fallthrough();
    ingest->add_option("--in", ingest_in, "Log file or directory")->required();
    ingest->add_option("--out", ingest_out, "Canonical JSONL path")->required();
    ingest->add_option("--adapters", ingest_adapters, "Adapter whitelist")->delimiter(',');
    ingest->add_option("--family-map", ingest_family, "JSON object mapping llm to family");
    ingest->add_option("--report", ingest_report, "Ingest report JSON path");

    // annotate
    std::string annotate_in, annotate_rules, annotate_out;
    int cascade_min_len = 1;
    CLI::App* annotate = app.add_subcommand("annotate", "Categories, error types, cascades");
    annotate->fallthrough();
    annotate->add_option("--in", annotate_in, "Canonical JSONL")->required();
    annotate->add_option("--rules", annotate_rules, "Rules directory")->required();
    annotate->add_option("--out", annotate_out, "Annotated JSONL path")->required();
    annotate->add_option("--cascade-min-len", cascade_min_len, "Minimum cascade length")
        ->check(CLI::Range(1, 1 << 20));

    // features
    std::string features_in, features_out, features_per_traj;
    CLI::App* features = app.add_subcommand("features", "Behavioral feature tables");
    features->fallthrough();
    features->add_option("--in", features_in, "Annotated JSONL")->required();
    features->add_option("--out", features_out, "Per-configuration table")->required();
    features->add_option("--per-trajectory", features_per_traj, "Per-trajectory table");

    // cfg
    std::string cfg_in, cfg_out, cfg_dot;
    CLI::App* cfg = app.add_subcommand("cfg", "Motif-graph features");
    cfg->fallthrough();
    cfg->add_option("--in", cfg_in, "Annotated JSONL")->required();
    cfg->add_option("--out", cfg_out, "Per-trajectory table")->required();
    cfg->add_option("--export-dot", cfg_dot, "Directory for one DOT file per trajectory");

    // patterns / patterns calibrate
    std::string patterns_in, patterns_manifest, patterns_out;
    std::string calibrate_in, calibrate_out;
    CLI::App* patterns = app.add_subcommand("patterns", "Binary pattern detection");
    patterns->fallthrough();
    patterns->add_option("--in", patterns_in, "Annotated JSONL");
    patterns->add_option("--manifest", patterns_manifest, "Threshold manifest JSON");
    patterns->add_option("--out", patterns_out, "Per-trajectory pattern table");
    CLI::App* calibrate =
        patterns->add_subcommand("calibrate", "Derive thresholds from a reference corpus");
    calibrate->fallthrough();
    calibrate->add_option("--in", calibrate_in, "Annotated JSONL")->required();
    calibrate->add_option("--out", calibrate_out, "Threshold manifest path")->required();

    // effects
    std::vector<std::string> effects_traj;
    std::string effects_patterns, effects_features, effects_out, effects_skips = "skips.csv";
    std::string variance_name = "normal";
    CLI::App* effects = app.add_subcommand("effects", "Per-configuration effect sizes");
    effects->fallthrough();
    effects->add_option("--traj", effects_traj, "Per-trajectory continuous table (repeatable)")
        ->required();
    effects->add_option("--patterns", effects_patterns, "Per-trajectory pattern table")
        ->required();
    effects->add_option("--features", effects_features,
                        "Per-configuration summary used as a cross-check");
    effects->add_option("--out", effects_out, "Effect table")->required();
    effects->add_option("--skips", effects_skips, "Skip-record table");
    effects->add_option("--variance", variance_name, "Variance estimator")
        ->check(CLI::IsMember({"normal", "bootstrap"}));

    // meta / meta regress
    std::string meta_effects, meta_out;
    double zero_band = 0.0;
    std::string regress_effects, regress_moderator, regress_out;
    CLI::App* meta = app.add_subcommand("meta", "Random-effects pooling");
    meta->fallthrough();
    meta->add_option("--effects", meta_effects, "Effect table");
    meta->add_option("--out", meta_out, "Pooled table");
    meta->add_option("--zero-band", zero_band, "Half-width of the zero direction band")
        ->check(CLI::Range(0.0, 1e9));
    CLI::App* regress = meta->add_subcommand("regress", "Moderator meta-regression");
    regress->fallthrough();
    regress->add_option("--effects", regress_effects, "Effect table")->required();
    regress->add_option("--moderator", regress_moderator, "Moderator")
        ->required()
        ->check(CLI::IsMember({"framework", "llm_family"}));
    regress->add_option("--out", regress_out, "Fit table")->required();

    // robust
    std::string robust_effects, robust_moderator, robust_out;
    std::string robust_feature = "mean_turns";
    int n_boot = 2000, n_perm = 2000;
    CLI::App* robust = app.add_subcommand("robust", "Bootstrap, permutation, leave-one-out");
    robust->fallthrough();
    robust->add_option("--effects", robust_effects, "Effect table")->required();
    robust->add_option("--moderator", robust_moderator, "Moderator")
        ->required()
        ->check(CLI::IsMember({"framework", "llm_family"}));
    robust->add_option("--feature", robust_feature, "Feature whose fit is stress-tested");
    robust->add_option("--n-boot", n_boot, "Bootstrap resamples")->check(CLI::Range(1, 1 << 24));
    robust->add_option("--n-perm", n_perm, "Permutations")->check(CLI::Range(1, 1 << 24));
    robust->add_option("--out", robust_out, "Report JSON path")->required();

    // taxonomy fit / assign / sweep
    std::string fit_features, fit_out;
    int fit_k = 5;
    std::string assign_model, assign_features, assign_out;
    std::string sweep_features, sweep_range = "4:6", sweep_out;
    CLI::App* taxonomy = app.add_subcommand("taxonomy", "Configuration types");
    taxonomy->fallthrough();
    taxonomy->require_subcommand(1);
    CLI::App* fit = taxonomy->add_subcommand("fit", "Fit the type model");
    fit->fallthrough();
    fit->add_option("--features", fit_features, "Per-configuration summary table")->required();
    fit->add_option("--k", fit_k, "Cluster count")->check(CLI::Range(1, 1 << 20));
    fit->add_option("--out", fit_out, "Model JSON path")->required();
    CLI::App* assign = taxonomy->add_subcommand("assign", "Assign configurations to types");
    assign->fallthrough();
    assign->add_option("--model", assign_model, "Model JSON")->required();
    assign->add_option("--features", assign_features, "Per-configuration summary table")
        ->required();
    assign->add_option("--out", assign_out, "Type table")->required();
    CLI::App* sweep = taxonomy->add_subcommand("sweep", "Silhouette across cluster counts");
    sweep->fallthrough();
    sweep->add_option("--features", sweep_features, "Per-configuration summary table")
        ->required();
    sweep->add_option("--k-range", sweep_range, "Inclusive lo:hi cluster counts");
    sweep->add_option("--out", sweep_out, "Sweep table (stdout when omitted)");

    // synth
    std::string synth_spec, synth_out;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth->fallthrough();
    synth->add_option("--spec", synth_spec, "Ecosystem spec JSON")->required();
    synth->add_option("--out", synth_out, "Canonical JSONL path")->required();

    // run
    RunOptions run_options;
    std::string run_in, run_rules, run_family, run_thresholds;
    std::vector<std::string> run_adapters;
    std::string run_variance = "normal";
    CLI::App* run = app.add_subcommand("run", "Full pipeline into --out-dir");
    run->fallthrough();
    run->add_option("--in", run_in, "Log file or directory")->required();
    run->add_option("--rules", run_rules, "Rules directory")->required();
    run->add_option("--adapters", run_adapters, "Adapter whitelist")->delimiter(',');
    run->add_option("--family-map", run_family, "JSON object mapping llm to family");
    run->add_option("--thresholds", run_thresholds, "External threshold manifest");
    run->add_option("--cascade-min-len", run_options.cascade_min_len, "Minimum cascade length")
        ->check(CLI::Range(1, 1 << 20));
    run->add_option("--zero-band", run_options.zero_band, "Half-width of the zero band")
        ->check(CLI::Range(0.0, 1e9));
    run->add_option("--k", run_options.k, "Cluster count")->check(CLI::Range(1, 1 << 20));
    run->add_option("--robust-feature", run_options.robust_feature,
                    "Feature stress-tested by the robustness stage");
    run->add_option("--n-boot", run_options.n_boot, "Bootstrap resamples")
        ->check(CLI::Range(1, 1 << 24));
    run->add_option("--n-perm", run_options.n_perm, "Permutations")
        ->check(CLI::Range(1, 1 << 24));
    run->add_option("--variance", run_variance, "Variance estimator")
        ->check(CLI::IsMember({"normal", "bootstrap"}));

    // report
    std::string report_meta, report_fits, report_effects;
    std::vector<std::string> report_robust;
    CLI::App* report = app.add_subcommand("report", "Summary tables into --out-dir");
    report->fallthrough();
    report->add_option("--meta", report_meta, "Pooled table")->required();
    report->add_option("--fits", report_fits, "Fit table");
    report->add_option("--robust", report_robust, "Robustness report JSON (repeatable)");
    report->add_option("--effects", report_effects, "Effect table for the per-config long table");

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("trajmeta");
    for (auto& a : args) argv_storage.push_back(std::move(a));
    std::vector<char*> argv;
    argv.reserve(argv_storage.size());
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 1;
        }

        {
            std::error_code ec;
            fs::create_directories(out_dir, ec);
            if (ec) throw DataError("cannot create directory '" + out_dir + "': " + ec.message());
        }
        const TableFormat format =
            format_name == "json" ? TableFormat::json : TableFormat::csv;
        const auto variance = [](const std::string& name) {
            return name == "bootstrap" ? VarianceMode::bootstrap : VarianceMode::normal;
        };

        if (app.got_subcommand(ingest)) {
            stage_ingest(ingest_in, resolve_out(ingest_out), ingest_adapters,
                         opt_path(ingest_family),
                         ingest_report.empty()
                             ? std::nullopt
                             : std::optional<fs::path>(resolve_out(ingest_report)),
                         jobs);
        } else if (app.got_subcommand(annotate)) {
            stage_annotate(annotate_in, annotate_rules, cascade_min_len,
                           resolve_out(annotate_out), jobs);
        } else if (app.got_subcommand(features)) {
            stage_features(features_in, resolve_out(features_out),
                           features_per_traj.empty()
                               ? std::nullopt
                               : std::optional<fs::path>(resolve_out(features_per_traj)),
                           format, jobs);
        } else if (app.got_subcommand(cfg)) {
            stage_cfg(cfg_in, resolve_out(cfg_out),
                      cfg_dot.empty() ? std::nullopt
                                      : std::optional<fs::path>(resolve_out(cfg_dot)),
                      format, jobs);
        } else if (app.got_subcommand(patterns)) {
            if (patterns->got_subcommand(calibrate)) {
                stage_calibrate(calibrate_in, resolve_out(calibrate_out));
            } else {
                if (patterns_in.empty() || patterns_manifest.empty() || patterns_out.empty()) {
                    throw UsageError("patterns: --in, --manifest and --out are required");
                }
                stage_patterns(patterns_in, patterns_manifest, resolve_out(patterns_out), format,
                               jobs);
            }
        } else if (app.got_subcommand(effects)) {
            std::vector<fs::path> tables(effects_traj.begin(), effects_traj.end());
            stage_effects(tables, effects_patterns, opt_path(effects_features),
                          resolve_out(effects_out), resolve_out(effects_skips),
                          variance(variance_name), seed, format);
        } else if (app.got_subcommand(meta)) {
            if (meta->got_subcommand(regress)) {
                stage_fits(regress_effects, moderator_from_string(regress_moderator),
                           resolve_out(regress_out), format);
            } else {
                if (meta_effects.empty() || meta_out.empty()) {
                    throw UsageError("meta: --effects and --out are required");
                }
                stage_meta(meta_effects, resolve_out(meta_out), zero_band, format);
            }
        } else if (app.got_subcommand(robust)) {
            stage_robust(robust_effects, moderator_from_string(robust_moderator), robust_feature,
                         n_boot, n_perm, seed, resolve_out(robust_out));
        } else if (app.got_subcommand(taxonomy)) {
            if (taxonomy->got_subcommand(fit)) {
                stage_taxonomy_fit(fit_features, fit_k, seed, resolve_out(fit_out));
            } else if (taxonomy->got_subcommand(assign)) {
                stage_taxonomy_assign(assign_model, assign_features, resolve_out(assign_out),
                                      format);
            } else {
                const auto [lo, hi] = parse_k_range(sweep_range);
                const auto rows = stage_taxonomy_sweep(sweep_features, lo, hi, seed);
                const CsvTable table = sweep_to_csv(rows);
                if (sweep_out.empty()) {
                    std::fputs(to_csv(table).c_str(), stdout);
                } else {
                    write_table(resolve_out(sweep_out), table, format);
                }
            }
        } else if (app.got_subcommand(synth)) {
            stage_synth(synth_spec, seed, jobs, resolve_out(synth_out));
        } else if (app.got_subcommand(run)) {
            run_options.input = run_in;
            run_options.out_dir = out_dir;
            run_options.rules_dir = run_rules;
            run_options.adapters = run_adapters;
            run_options.family_map = opt_path(run_family);
            run_options.thresholds = opt_path(run_thresholds);
            run_options.variance = variance(run_variance);
            run_options.format = format;
            run_options.seed = seed;
            run_options.jobs = jobs;
            run_options.force = force;
            run_pipeline(run_options);
        } else if (app.got_subcommand(report)) {
            std::vector<fs::path> robust_files(report_robust.begin(), report_robust.end());
            stage_report(report_meta, opt_path(report_fits), robust_files,
                         opt_path(report_effects), out_dir, format);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}

}  // namespace trajmeta::cli
