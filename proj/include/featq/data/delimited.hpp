#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <featq/data/dataset.hpp>

namespace featq {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, delim)) out.push_back(cell);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

inline bool is_missing_token(const std::string& cell) {
    const std::string t = lower(trim(cell));
    return t.empty() || t == "nan" || t == "na";
}

inline double parse_cell(const std::string& cell, std::size_t lineno) {
    const std::string t = trim(cell);
    double v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ParseError("cannot parse numeric cell '" + cell + "'", lineno);
    return v;
}

} // namespace detail

struct DelimitedOptions {
    char delimiter = ',';
    std::string label_column = "label";
};

/// Cost-schedule file: `feature,cost[,bundle]` rows, optional header.
/// Every dataset feature must appear exactly once. Rows sharing a bundle
/// tag form one acquisition group and must declare the same cost, which is
/// charged once for the whole bundle. Groups are numbered by first
/// appearance; untagged rows form singleton groups.
inline CostSchedule load_costs(const std::string& path,
                               const std::vector<std::string>& feature_names,
                               char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open costs file " + path);
    std::map<std::string, int> feature_index;
    for (std::size_t i = 0; i < feature_names.size(); ++i)
        feature_index[feature_names[i]] = static_cast<int>(i);

    std::vector<std::vector<int>> groups;
    std::vector<double> costs;
    std::map<std::string, int> bundle_group;
    std::vector<std::uint8_t> seen(feature_names.size(), 0);

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_line(line, delimiter);
        if (lineno == 1 && !cells.empty() &&
            detail::lower(detail::trim(cells[0])) == "feature")
            continue; // header
        if (cells.size() < 2 || cells.size() > 3)
            throw ParseError("expected feature,cost[,bundle]", lineno);
        const std::string name = detail::trim(cells[0]);
        const auto it = feature_index.find(name);
        if (it == feature_index.end())
            throw ParseError("unknown feature '" + name + "'", lineno);
        if (seen[static_cast<std::size_t>(it->second)])
            throw ParseError("feature '" + name + "' listed twice", lineno);
        seen[static_cast<std::size_t>(it->second)] = 1;
        const double cost = detail::parse_cell(cells[1], lineno);
        if (!(cost >= 0) || !std::isfinite(cost))
            throw ParseError("cost must be finite and >= 0", lineno);
        const std::string bundle =
            cells.size() == 3 ? detail::trim(cells[2]) : std::string();
        if (bundle.empty()) {
            groups.push_back({it->second});
            costs.push_back(cost);
        } else {
            const auto bit = bundle_group.find(bundle);
            if (bit == bundle_group.end()) {
                bundle_group[bundle] = static_cast<int>(groups.size());
                groups.push_back({it->second});
                costs.push_back(cost);
            } else {
                if (costs[static_cast<std::size_t>(bit->second)] != cost)
                    throw ParseError("bundle '" + bundle +
                                         "' members declare different costs",
                                     lineno);
                groups[static_cast<std::size_t>(bit->second)].push_back(it->second);
            }
        }
    }
    for (std::size_t f = 0; f < feature_names.size(); ++f)
        if (!seen[f])
            throw ParseError("feature '" + feature_names[f] +
                             "' missing from costs file " + path);
    return CostSchedule(std::move(groups), std::move(costs));
}

/// Delimited table loader. The header row names the columns; one of them
/// (default "label") holds integer class labels and the rest are features
/// in header order. Empty cells and "nan"/"na" (any case) are missing and
/// become NaN sentinels; a missing or non-integer label is an error. With
/// an empty costs path features are priced as unit-cost singletons.
inline Dataset load_delimited(const std::string& data_path,
                              const std::string& costs_path = "",
                              DelimitedOptions opts = {}) {
    std::ifstream in(data_path);
    if (!in) throw InputError("cannot open " + data_path);

    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty file " + data_path, 1);
    const auto header = detail::split_line(line, opts.delimiter);
    int label_col = -1;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trim(header[c]);
        if (name == opts.label_column) {
            if (label_col != -1)
                throw ParseError("duplicate label column '" + name + "'", 1);
            label_col = static_cast<int>(c);
        } else {
            names.push_back(name);
        }
    }
    if (label_col == -1)
        throw ParseError("no '" + opts.label_column + "' column in header", 1);
    const std::size_t d = names.size();
    if (d == 0) throw ParseError("no feature columns", 1);

    std::vector<double> flat;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_line(line, opts.delimiter);
        if (cells.size() != header.size())
            throw ParseError("row has " + std::to_string(cells.size()) +
                                 " cells, header has " +
                                 std::to_string(header.size()),
                             lineno);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (static_cast<int>(c) == label_col) {
                if (detail::is_missing_token(cells[c]))
                    throw ParseError("missing label", lineno);
                const double v = detail::parse_cell(cells[c], lineno);
                const int y = static_cast<int>(v);
                if (static_cast<double>(y) != v || y < 0)
                    throw ParseError("label must be a nonnegative integer",
                                     lineno);
                labels.push_back(y);
            } else if (detail::is_missing_token(cells[c])) {
                flat.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                flat.push_back(detail::parse_cell(cells[c], lineno));
            }
        }
    }

    Dataset ds;
    const auto n = labels.size();
    ds.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                flat[i * d + j];
    ds.labels = std::move(labels);
    ds.feature_names = std::move(names);
    int max_label = -1;
    for (int y : ds.labels) max_label = std::max(max_label, y);
    ds.n_classes = max_label + 1;
    ds.costs = costs_path.empty()
                   ? CostSchedule::uniform(static_cast<int>(d))
                   : load_costs(costs_path, ds.feature_names, opts.delimiter);
    ds.validate();
    return ds;
}

} // namespace featq
