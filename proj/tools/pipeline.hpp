#pragma once
// Stage bodies shared by the standalone subcommands and `run`, plus the
// ordered pipeline with mtime-based skipping and the provenance manifest.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajmeta/csv.hpp"
#include "trajmeta/effects.hpp"
#include "trajmeta/meta.hpp"
#include "trajmeta/taxonomy.hpp"

namespace trajmeta::cli {

enum class TableFormat { csv, json };
std::string_view table_extension(TableFormat);  // ".csv" / ".json"

// Tables serialize as CSV or as a JSON array of objects (all values strings);
// readers pick by file extension.
void write_table(const std::filesystem::path& path, const CsvTable& table, TableFormat format);
CsvTable read_table(const std::filesystem::path& path);

void stage_ingest(const std::filesystem::path& in, const std::filesystem::path& out,
                  std::span<const std::string> adapter_names,
                  const std::optional<std::filesystem::path>& family_map,
                  const std::optional<std::filesystem::path>& report_path, int jobs);

void stage_annotate(const std::filesystem::path& in, const std::filesystem::path& rules_dir,
                    int cascade_min_len, const std::filesystem::path& out, int jobs);

void stage_features(const std::filesystem::path& annotated, const std::filesystem::path& out,
                    const std::optional<std::filesystem::path>& per_trajectory,
                    TableFormat format, int jobs);

void stage_cfg(const std::filesystem::path& annotated, const std::filesystem::path& out,
               const std::optional<std::filesystem::path>& dot_dir, TableFormat format, int jobs);

void stage_calibrate(const std::filesystem::path& annotated, const std::filesystem::path& out);

void stage_patterns(const std::filesystem::path& annotated, const std::filesystem::path& manifest,
                    const std::filesystem::path& out, TableFormat format, int jobs);

void stage_effects(std::span<const std::filesystem::path> trajectory_tables,
                   const std::filesystem::path& patterns,
                   const std::optional<std::filesystem::path>& features_summary,
                   const std::filesystem::path& out, const std::filesystem::path& skips,
                   VarianceMode variance, std::uint64_t seed, TableFormat format);

void stage_meta(const std::filesystem::path& effects, const std::filesystem::path& out,
                double zero_band, TableFormat format);

// which = nullopt fits both moderators.
void stage_fits(const std::filesystem::path& effects, std::optional<Moderator> which,
                const std::filesystem::path& out, TableFormat format);

void stage_robust(const std::filesystem::path& effects, Moderator which,
                  const std::string& feature, int n_boot, int n_perm, std::uint64_t seed,
                  const std::filesystem::path& out);

void stage_taxonomy_fit(const std::filesystem::path& features, int k, std::uint64_t seed,
                        const std::filesystem::path& out);
void stage_taxonomy_assign(const std::filesystem::path& model,
                           const std::filesystem::path& features,
                           const std::filesystem::path& out, TableFormat format);
std::vector<SweepRow> stage_taxonomy_sweep(const std::filesystem::path& features, int k_lo,
                                           int k_hi, std::uint64_t seed);

void stage_synth(const std::filesystem::path& spec, std::uint64_t seed, int jobs,
                 const std::filesystem::path& out);

void stage_report(const std::filesystem::path& meta,
                  const std::optional<std::filesystem::path>& fits,
                  std::span<const std::filesystem::path> robust_files,
                  const std::optional<std::filesystem::path>& effects,
                  const std::filesystem::path& out_dir, TableFormat format);

struct RunOptions {
    std::filesystem::path input;
    std::filesystem::path out_dir = ".";
    std::filesystem::path rules_dir;
    std::vector<std::string> adapters;  // empty = all defaults
    std::optional<std::filesystem::path> family_map;
    std::optional<std::filesystem::path> thresholds;  // external manifest; default: calibrate
    int cascade_min_len = 1;
    double zero_band = 0.0;
    int k = 5;
    std::string robust_feature = "mean_turns";
    int n_boot = 2000;
    int n_perm = 2000;
    VarianceMode variance = VarianceMode::normal;
    TableFormat format = TableFormat::csv;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool force = false;
};

// ingest -> annotate -> features/cfg -> thresholds -> patterns -> effects ->
// meta/fits -> robust -> taxonomy, then manifest.json. Stages whose outputs
// are newer than their inputs are skipped unless force. Failures carry the
// stage name.
void run_pipeline(const RunOptions& options);

}  // namespace trajmeta::cli
