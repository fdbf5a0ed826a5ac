#pragma once

#include <string>
#include <vector>

namespace spcv::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index for a header name, -1 when absent.
    int column(const std::string& name) const;
};

/// Reads a comma-separated file with a mandatory header row. Handles
/// double-quoted fields and CRLF endings; no other dialects.
Table read_file(const std::string& path);

Table parse(const std::string& text);

/// A cell counts as missing when empty or a conventional NA marker.
bool is_missing(const std::string& cell);

std::string escape(const std::string& cell);

}  // namespace spcv::csv
