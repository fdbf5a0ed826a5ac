#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "spatialcv/common.hpp"

namespace spcv {

/// One presence/absence observation. Coordinates are WGS84 degrees; the
/// feature vector length is fixed dataset-wide.
struct Record {
    std::int64_t id = 0;
    double lon = 0.0;
    double lat = 0.0;
    int year = 0;
    int label = 0;  // 0 = absence, 1 = presence
    std::vector<double> features;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Record> records, std::vector<std::string> feature_names);

    const std::vector<Record>& records() const { return records_; }
    const Record& record(std::size_t i) const { return records_[i]; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const std::vector<std::string>& feature_names() const { return feature_names_; }
    std::size_t n_features() const { return feature_names_.size(); }

    /// Index of the record with this id; throws when unknown.
    std::size_t index_of(std::int64_t id) const;
    bool has_id(std::int64_t id) const { return by_id_.count(id) != 0; }

    std::vector<std::int64_t> ids() const;

    /// New dataset holding the given ids, in the given order.
    Dataset subset(const std::vector<std::int64_t>& ids) const;

    int feature_index(const std::string& name) const;

    static constexpr const char* kCrsNote = "WGS84 geographic coordinates";

private:
    std::vector<Record> records_;
    std::vector<std::string> feature_names_;
    std::unordered_map<std::int64_t, std::size_t> by_id_;
};

/// Maps logical roles onto CSV column names.
struct CsvSchema {
    std::string lon_column;
    std::string lat_column;
    std::string year_column;
    std::string label_column;
    std::vector<std::string> feature_columns;
};

struct IngestSummary {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::size_t rows_dropped = 0;
    std::map<std::string, std::size_t> dropped_by_reason;

    std::string to_log_line() const;
};

/// Loads a comma-separated file. Rows with any missing mapped cell are
/// dropped and counted; out-of-range coordinates are dropped likewise.
/// A present but non-binary label is a hard error.
Dataset load_csv(const std::string& path, const CsvSchema& schema, IngestSummary* summary = nullptr);

/// Same contract as load_csv, for already-read text (used by tests).
Dataset load_csv_text(const std::string& text, const CsvSchema& schema, IngestSummary* summary = nullptr);

/// Inclusive year range.
struct YearRange {
    int first = 0;
    int last = 0;

    bool contains(int year) const { return year >= first && year <= last; }
    bool valid() const { return first <= last; }
};

struct TemporalSplitSpec {
    YearRange train_years;
    YearRange test_years;
};

struct TemporalSplitResult {
    Dataset in_time;
    Dataset out_of_time;
    std::size_t dropped = 0;  // records in neither range
};

/// Partitions by year. Records falling in neither range are dropped with a
/// count; an empty output on either side is an error.
TemporalSplitResult temporal_split(const Dataset& d, const TemporalSplitSpec& spec);

struct ClassCounts {
    std::size_t n_presence = 0;
    std::size_t n_absence = 0;
};

ClassCounts class_counts(const Dataset& d);

/// Writes records back to CSV with the given schema (used by the thin and
/// simulate subcommands).
void write_dataset_csv(const Dataset& d, const std::string& path, const CsvSchema& schema);

}  // namespace spcv
