#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace per {

enum class ColumnKind { Discrete, Real };

struct ColumnInfo {
    std::string name;
    ColumnKind kind = ColumnKind::Real;
    int cardinality = 0; // discrete: number of codes (0 when unknown)
    bool hidden = false; // ground truth carried for oracles; never a model input
};

// Column-major sample matrix. Missing values are NaN.
class Dataset {
public:
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return info_.size(); }

    // Throws InputError on duplicate name or row-count mismatch.
    void add_column(ColumnInfo info, std::vector<double> values);

    bool has(std::string_view name) const;
    std::size_t index(std::string_view name) const; // throws "missing column"
    std::span<const double> column(std::size_t i) const { return data_.at(i); }
    std::span<const double> column(std::string_view name) const { return data_[index(name)]; }
    const ColumnInfo& info(std::size_t i) const { return info_.at(i); }
    const ColumnInfo& info(std::string_view name) const { return info_[index(name)]; }
    const std::vector<ColumnInfo>& schema() const { return info_; }
    std::vector<std::string> names() const;

    Dataset select_rows(std::span<const std::size_t> rows) const;
    Dataset select_columns(std::span<const std::string> names) const;

    // Row indices per distinct value of a column, in ascending value order.
    // Throws InputError if the column has missing values.
    std::map<double, std::vector<std::size_t>> strata(std::string_view name) const;

    // Seeded shuffle split; the first part holds round(train_fraction * rows).
    std::pair<Dataset, Dataset> split(double train_fraction, std::uint64_t seed) const;

private:
    std::size_t rows_ = 0;
    std::vector<ColumnInfo> info_;
    std::vector<std::vector<double>> data_;
};

// Comma-separated with a header row. Empty fields and NA/NaN read as missing.
// A column is Discrete when all present values are integers with at most
// `max_discrete` distinct values.
Dataset read_csv(const std::string& path, int max_discrete = 32);
void write_csv(const Dataset& ds, const std::string& path);

} // namespace per
