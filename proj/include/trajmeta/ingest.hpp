#pragma once
// Directory ingestion through pluggable format adapters. Three adapters ship
// by default: the canonical JSONL format, a plain-text ReAct log, and a
// nested JSON transcript. Detection is structural and mutually exclusive.

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trajmeta/model.hpp"

namespace trajmeta {

struct FormatAdapter {
    std::string name;
    std::function<bool(std::string_view)> detect;
    // All-or-nothing per file; throws DataError with line context.
    std::function<std::vector<Trajectory>(std::string_view)> parse;
};

const std::vector<FormatAdapter>& default_adapters();
// Subset of the defaults by name; throws UsageError on an unknown name.
std::vector<FormatAdapter> select_adapters(std::span<const std::string> names);

// ReAct text log: TRAJECTORY header lines with key=value pairs, then
// THOUGHT:/ACTION:/ACTION[tool]:/OBSERVATION:/EXIT: markers. See README for
// the grammar.
std::vector<Trajectory> parse_react_text(std::string_view text);
// Nested transcript: one JSON object {"trajectories": [{id, metadata,
// steps}]} per file.
std::vector<Trajectory> parse_nested_json_text(std::string_view text);

// Exact llm -> llm_family mapping, applied when an adapter leaves the family
// empty.
using FamilyMap = std::map<std::string, std::string>;
FamilyMap family_map_from_json(const nlohmann::json& j);

struct IngestReport {
    long files_seen = 0;
    long trajectories_parsed = 0;
    long trajectories_rejected = 0;
    std::vector<std::pair<std::string, std::string>> rejection_reasons;  // (file, reason)
};
nlohmann::json ingest_report_to_json(const IngestReport& report);

struct IngestResult {
    std::vector<Trajectory> trajectories;
    IngestReport report;
};

// root may be a file or a directory (scanned recursively, lexicographic
// order). File-level parse failures and per-trajectory validation failures
// become rejection entries; only an unreadable root throws.
IngestResult ingest_path(const std::filesystem::path& root,
                         std::span<const FormatAdapter> adapters, const FamilyMap& family = {},
                         int jobs = 1);

}  // namespace trajmeta
