#include "trajmeta/csv.hpp"

#include <algorithm>

#include "trajmeta/errors.hpp"
#include "trajmeta/util.hpp"

namespace trajmeta {

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing CSV column: " + name);
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

static void append_row(std::string& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_escape(row[i]);
    }
    out += '\n';
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    append_row(out, table.header);
    for (const auto& row : table.rows) append_row(out, row);
    return out;
}

CsvTable parse_csv(const std::string& content) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw DataError("unterminated quoted CSV field");
    if (!field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    if (!any || records.empty()) throw DataError("empty CSV");
    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            throw DataError("CSV row " + std::to_string(r + 1) + " has " +
                            std::to_string(records[r].size()) + " fields, expected " +
                            std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    try {
        return parse_csv(read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    atomic_write(path, to_csv(table));
}

}  // namespace trajmeta
