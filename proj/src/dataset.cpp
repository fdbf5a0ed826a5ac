#include "spatialcv/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "spatialcv/common.hpp"
#include "spatialcv/csv.hpp"

namespace spcv {

Dataset::Dataset(std::vector<Record> records, std::vector<std::string> feature_names)
    : records_(std::move(records)), feature_names_(std::move(feature_names)) {
    by_id_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const Record& r = records_[i];
        require(r.features.size() == feature_names_.size(),
                "dataset: record feature length differs from feature_names length");
        require(r.label == 0 || r.label == 1, "dataset: label must be 0 or 1");
        require(r.lon >= -180.0 && r.lon <= 180.0, "dataset: lon out of [-180, 180]");
        require(r.lat >= -90.0 && r.lat <= 90.0, "dataset: lat out of [-90, 90]");
        auto [it, inserted] = by_id_.emplace(r.id, i);
        (void)it;
        require(inserted, "dataset: duplicate record id " + std::to_string(r.id));
    }
}

std::size_t Dataset::index_of(std::int64_t id) const {
    auto it = by_id_.find(id);
    require(it != by_id_.end(), "dataset: unknown record id " + std::to_string(id));
    return it->second;
}

std::vector<std::int64_t> Dataset::ids() const {
    std::vector<std::int64_t> out;
    out.reserve(records_.size());
    for (const Record& r : records_) out.push_back(r.id);
    return out;
}

Dataset Dataset::subset(const std::vector<std::int64_t>& ids) const {
    std::vector<Record> recs;
    recs.reserve(ids.size());
    for (std::int64_t id : ids) recs.push_back(records_[index_of(id)]);
    return Dataset(std::move(recs), feature_names_);
}

int Dataset::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names_.size(); ++i) {
        if (feature_names_[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::string IngestSummary::to_log_line() const {
    std::ostringstream out;
    out << "ingest rows_read=" << rows_read << " rows_kept=" << rows_kept
        << " rows_dropped=" << rows_dropped;
    for (const auto& [reason, n] : dropped_by_reason) out << " dropped[" << reason << "]=" << n;
    return out.str();
}

namespace {

bool parse_number(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

Dataset load_csv_text(const std::string& text, const CsvSchema& schema, IngestSummary* summary) {
    const csv::Table table = csv::parse(text);

    std::vector<std::string> mapped = {schema.lon_column, schema.lat_column, schema.year_column,
                                       schema.label_column};
    mapped.insert(mapped.end(), schema.feature_columns.begin(), schema.feature_columns.end());
    std::vector<int> cols;
    for (const std::string& name : mapped) {
        const int c = table.column(name);
        require(c >= 0, "load_csv: mapped column not found: " + name);
        cols.push_back(c);
    }
    const int lon_c = cols[0], lat_c = cols[1], year_c = cols[2], label_c = cols[3];

    IngestSummary s;
    std::vector<Record> recs;
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        const auto& cells = table.rows[row];
        ++s.rows_read;
        if (cells.size() != table.header.size()) {
            ++s.rows_dropped;
            ++s.dropped_by_reason["malformed_row"];
            continue;
        }
        bool missing = false;
        for (int c : cols) {
            if (csv::is_missing(cells[c])) {
                missing = true;
                break;
            }
        }
        if (missing) {
            ++s.rows_dropped;
            ++s.dropped_by_reason["missing_value"];
            continue;
        }

        Record r;
        r.id = static_cast<std::int64_t>(row);
        double v = 0.0;
        require(parse_number(cells[lon_c], v), "load_csv: unparseable lon at data row " + std::to_string(row));
        r.lon = v;
        require(parse_number(cells[lat_c], v), "load_csv: unparseable lat at data row " + std::to_string(row));
        r.lat = v;
        require(parse_number(cells[year_c], v), "load_csv: unparseable year at data row " + std::to_string(row));
        r.year = static_cast<int>(v);
        require(parse_number(cells[label_c], v), "load_csv: unparseable label at data row " + std::to_string(row));
        require(v == 0.0 || v == 1.0, "load_csv: non-binary label value '" + cells[label_c] +
                                          "' at data row " + std::to_string(row));
        r.label = static_cast<int>(v);
        if (r.lon < -180.0 || r.lon > 180.0 || r.lat < -90.0 || r.lat > 90.0) {
            ++s.rows_dropped;
            ++s.dropped_by_reason["coordinate_out_of_bounds"];
            continue;
        }
        r.features.reserve(schema.feature_columns.size());
        for (std::size_t f = 0; f < schema.feature_columns.size(); ++f) {
            require(parse_number(cells[cols[4 + f]], v),
                    "load_csv: unparseable feature '" + schema.feature_columns[f] +
                        "' at data row " + std::to_string(row));
            r.features.push_back(v);
        }
        recs.push_back(std::move(r));
    }
    s.rows_kept = recs.size();
    require(!recs.empty(), "load_csv: zero usable rows");
    if (summary) *summary = s;
    return Dataset(std::move(recs), schema.feature_columns);
}

Dataset load_csv(const std::string& path, const CsvSchema& schema, IngestSummary* summary) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_csv: missing file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_csv_text(buf.str(), schema, summary);
}

TemporalSplitResult temporal_split(const Dataset& d, const TemporalSplitSpec& spec) {
    require(spec.train_years.valid() && spec.test_years.valid(),
            "temporal_split: year ranges must be non-empty");
    require(spec.train_years.last < spec.test_years.first || spec.test_years.last < spec.train_years.first,
            "temporal_split: year ranges must be disjoint");

    std::vector<Record> train, test;
    std::size_t dropped = 0;
    for (const Record& r : d.records()) {
        if (spec.train_years.contains(r.year)) train.push_back(r);
        else if (spec.test_years.contains(r.year)) test.push_back(r);
        else ++dropped;
    }
    require(!train.empty(), "temporal_split: empty in-time output");
    require(!test.empty(), "temporal_split: empty out-of-time output");

    TemporalSplitResult out;
    out.in_time = Dataset(std::move(train), d.feature_names());
    out.out_of_time = Dataset(std::move(test), d.feature_names());
    out.dropped = dropped;
    return out;
}

ClassCounts class_counts(const Dataset& d) {
    ClassCounts c;
    for (const Record& r : d.records()) {
        if (r.label == 1) ++c.n_presence;
        else ++c.n_absence;
    }
    return c;
}

void write_dataset_csv(const Dataset& d, const std::string& path, const CsvSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_dataset_csv: cannot open " + path);
    out << "id," << schema.lon_column << ',' << schema.lat_column << ',' << schema.year_column
        << ',' << schema.label_column;
    for (const std::string& f : d.feature_names()) out << ',' << csv::escape(f);
    out << '\n';
    for (const Record& r : d.records()) {
        out << r.id << ',' << fmt_double(r.lon) << ',' << fmt_double(r.lat) << ',' << r.year
            << ',' << r.label;
        for (double v : r.features) out << ',' << fmt_double(v);
        out << '\n';
    }
}

}  // namespace spcv
