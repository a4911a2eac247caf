#include "per/dataset.hpp"

#include "per/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace per {

void Dataset::add_column(ColumnInfo info, std::vector<double> values) {
    if (has(info.name)) throw InputError("duplicate column '" + info.name + "'");
    if (!info_.empty() && values.size() != rows_)
        throw InputError("column '" + info.name + "' has " + std::to_string(values.size()) + " rows, expected " +
                         std::to_string(rows_));
    if (info_.empty()) rows_ = values.size();
    info_.push_back(std::move(info));
    data_.push_back(std::move(values));
}

bool Dataset::has(std::string_view name) const {
    return std::any_of(info_.begin(), info_.end(), [&](const ColumnInfo& c) { return c.name == name; });
}

std::size_t Dataset::index(std::string_view name) const {
    for (std::size_t i = 0; i < info_.size(); ++i)
        if (info_[i].name == name) return i;
    throw InputError("missing column '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::names() const {
    std::vector<std::string> out;
    for (const auto& c : info_) out.push_back(c.name);
    return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    for (std::size_t c = 0; c < cols(); ++c) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (std::size_t r : rows) {
            if (r >= rows_) throw InputError("row index out of range");
            v.push_back(data_[c][r]);
        }
        out.info_.push_back(info_[c]);
        out.data_.push_back(std::move(v));
    }
    out.rows_ = rows.size();
    return out;
}

Dataset Dataset::select_columns(std::span<const std::string> names) const {
    Dataset out;
    for (const auto& n : names) {
        const auto i = index(n);
        out.add_column(info_[i], data_[i]);
    }
    if (names.empty()) out.rows_ = 0;
    return out;
}

std::map<double, std::vector<std::size_t>> Dataset::strata(std::string_view name) const {
    const auto col = column(name);
    std::map<double, std::vector<std::size_t>> out;
    for (std::size_t r = 0; r < col.size(); ++r) {
        if (std::isnan(col[r])) throw InputError("column '" + std::string(name) + "' has missing values");
        out[col[r]].push_back(r);
    }
    return out;
}

std::pair<Dataset, Dataset> Dataset::split(double train_fraction, std::uint64_t seed) const {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InputError("train fraction must be in [0, 1]");
    std::vector<std::size_t> order(rows_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the permutation does not depend on
    // the standard library's shuffle implementation.
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows_)));
    std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {select_rows(a), select_rows(b)};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

double parse_field(const std::string& raw, const std::string& path, std::size_t line_no) {
    std::string s = raw;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric field '" + raw + "'");
    return v;
}

} // namespace

Dataset read_csv(const std::string& path, int max_discrete) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
    const auto header = split_csv_line(line);
    std::vector<std::vector<double>> cols(header.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw InputError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) cols[c].push_back(parse_field(fields[c], path, line_no));
    }
    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c) {
        ColumnInfo info;
        info.name = header[c];
        std::set<double> distinct;
        bool integral = true;
        for (double v : cols[c]) {
            if (std::isnan(v)) continue;
            if (v != std::floor(v)) integral = false;
            if (distinct.size() <= static_cast<std::size_t>(max_discrete)) distinct.insert(v);
        }
        if (integral && !distinct.empty() && distinct.size() <= static_cast<std::size_t>(max_discrete)) {
            info.kind = ColumnKind::Discrete;
            info.cardinality = static_cast<int>(distinct.size());
        }
        ds.add_column(std::move(info), std::move(cols[c]));
    }
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    for (std::size_t c = 0; c < ds.cols(); ++c) out << (c ? "," : "") << ds.info(c).name;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t c = 0; c < ds.cols(); ++c) {
            if (c) out << ',';
            const double v = ds.column(c)[r];
            if (std::isnan(v))
                continue;
            else if (ds.info(c).kind == ColumnKind::Discrete && v == std::floor(v))
                out << static_cast<long long>(v);
            else
                out << v;
        }
        out << '\n';
    }
}

} // namespace per
