#pragma once
// Minimal RFC-4180 CSV. Fields containing comma, quote, or newline are quoted;
// everything is written with '\n' line endings so outputs are byte-stable.

#include <filesystem>
#include <string>
#include <vector>

namespace trajmeta {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws DataError when missing.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

std::string csv_escape(const std::string& field);
std::string to_csv(const CsvTable&);
CsvTable parse_csv(const std::string& content);
CsvTable read_csv(const std::filesystem::path&);
void write_csv(const std::filesystem::path&, const CsvTable&);

}  // namespace trajmeta
