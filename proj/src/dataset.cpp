#include "ssddr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ssddr/logging.hpp"

namespace ssddr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& text, const std::filesystem::path& path,
                    std::size_t row, const std::string& column) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        std::ostringstream msg;
        msg << path.string() << " row " << row << ": column '" << column
            << "': cannot parse '" << text << "' as a number";
        throw std::runtime_error(msg.str());
    }
    return value;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

int Dataset::cell_count() const {
    int n = 1;
    for (const auto& col : schema.sensitive) n *= static_cast<int>(col.categories.size());
    return n;
}

int Dataset::cell_index(Eigen::Index row) const {
    int idx = 0;
    int stride = 1;
    for (std::size_t j = 0; j < schema.sensitive.size(); ++j) {
        idx += sensitive_codes[j][static_cast<std::size_t>(row)] * stride;
        stride *= static_cast<int>(schema.sensitive[j].categories.size());
    }
    return idx;
}

std::vector<std::string> Dataset::cell_labels() const {
    std::vector<std::string> labels(static_cast<std::size_t>(cell_count()));
    for (std::size_t idx = 0; idx < labels.size(); ++idx) {
        int rem = static_cast<int>(idx);
        std::string label;
        for (const auto& col : schema.sensitive) {
            const int n = static_cast<int>(col.categories.size());
            if (!label.empty()) label += "-";
            label += col.categories[static_cast<std::size_t>(rem % n)];
            rem /= n;
        }
        labels[idx] = label;
    }
    return labels;
}

std::vector<int> Dataset::cell_indices() const {
    std::vector<int> idx(static_cast<std::size_t>(n_rows()));
    for (Eigen::Index i = 0; i < n_rows(); ++i) idx[static_cast<std::size_t>(i)] = cell_index(i);
    return idx;
}

Eigen::VectorXd Dataset::binary_labels(double threshold) const {
    if (schema.outcome_kind == OutcomeKind::Binary) return outcome;
    Eigen::VectorXd labels(n_rows());
    for (Eigen::Index i = 0; i < n_rows(); ++i)
        labels[i] = outcome[i] >= threshold ? 1.0 : 0.0;
    return labels;
}

Eigen::Index Dataset::feature_index(const std::string& name) const {
    for (std::size_t j = 0; j < schema.features.size(); ++j)
        if (schema.features[j] == name) return static_cast<Eigen::Index>(j);
    throw std::invalid_argument("Dataset: unknown feature '" + name + "'");
}

Dataset load_csv(const std::filesystem::path& path, const DataSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_csv: " + path.string() + " is empty");
    const std::vector<std::string> header = split_line(line);

    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (col_of.count(header[j]))
            throw std::runtime_error("load_csv: " + path.string() + ": duplicate column '" +
                                     header[j] + "'");
        col_of[header[j]] = j;
    }

    auto require = [&](const std::string& name) -> std::size_t {
        auto it = col_of.find(name);
        if (it == col_of.end())
            throw std::runtime_error("load_csv: " + path.string() + ": column '" + name +
                                     "' not found in header");
        return it->second;
    };

    Dataset data;
    data.schema = schema;

    std::vector<std::size_t> sens_cols;
    for (const auto& col : schema.sensitive) sens_cols.push_back(require(col.name));
    const std::size_t outcome_col = require(schema.outcome);

    if (data.schema.features.empty()) {
        // Default: every column that is neither sensitive nor the outcome.
        for (const auto& name : header) {
            bool taken = name == schema.outcome;
            for (const auto& col : schema.sensitive) taken = taken || name == col.name;
            if (!taken) data.schema.features.push_back(name);
        }
    }
    std::vector<std::size_t> feat_cols;
    for (const auto& name : data.schema.features) feat_cols.push_back(require(name));

    // Read all rows first; dimensions are unknown up front.
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    data.sensitive_codes.assign(schema.sensitive.size(), std::vector<int>(rows.size()));
    data.features.resize(n, static_cast<Eigen::Index>(feat_cols.size()));
    data.outcome.resize(n);

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t row_no = i + 1;  // 1-based data row, excluding header
        const auto& fields = rows[i];
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << path.string() << " row " << row_no << ": expected " << header.size()
                << " fields, found " << fields.size();
            throw std::runtime_error(msg.str());
        }
        for (std::size_t j = 0; j < sens_cols.size(); ++j) {
            const auto& col = schema.sensitive[j];
            const std::string& value = fields[sens_cols[j]];
            auto it = std::find(col.categories.begin(), col.categories.end(), value);
            if (it == col.categories.end()) {
                std::ostringstream msg;
                msg << path.string() << " row " << row_no << ": column '" << col.name
                    << "': unknown category '" << value << "'";
                throw std::runtime_error(msg.str());
            }
            data.sensitive_codes[j][i] = static_cast<int>(it - col.categories.begin());
        }
        for (std::size_t j = 0; j < feat_cols.size(); ++j) {
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_double(fields[feat_cols[j]], path, row_no, data.schema.features[j]);
        }
        const double y =
            parse_double(fields[outcome_col], path, row_no, schema.outcome);
        if (schema.outcome_kind == OutcomeKind::Duration) {
            if (!(y > 0.0) || !std::isfinite(y)) {
                std::ostringstream msg;
                msg << path.string() << " row " << row_no << ": column '" << schema.outcome
                    << "': duration outcome must be positive, got " << y;
                throw std::runtime_error(msg.str());
            }
        } else if (y != 0.0 && y != 1.0) {
            std::ostringstream msg;
            msg << path.string() << " row " << row_no << ": column '" << schema.outcome
                << "': binary outcome must be 0 or 1, got " << fields[outcome_col];
            throw std::runtime_error(msg.str());
        }
        data.outcome[static_cast<Eigen::Index>(i)] = y;
    }
    return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path.string() + " for writing");

    for (const auto& col : data.schema.sensitive) out << col.name << ",";
    for (const auto& name : data.schema.features) out << name << ",";
    out << data.schema.outcome << "\n";

    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        for (std::size_t j = 0; j < data.schema.sensitive.size(); ++j) {
            const auto& col = data.schema.sensitive[j];
            out << col.categories[static_cast<std::size_t>(
                       data.sensitive_codes[j][static_cast<std::size_t>(i)])]
                << ",";
        }
        for (Eigen::Index j = 0; j < data.n_features(); ++j)
            out << format_double(data.features(i, j)) << ",";
        out << format_double(data.outcome[i]) << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: failed while writing " + path.string());
}

Dataset select_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
    Dataset out;
    out.schema = data.schema;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    out.sensitive_codes.assign(data.sensitive_codes.size(), std::vector<int>(rows.size()));
    out.features.resize(n, data.n_features());
    out.outcome.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = rows[static_cast<std::size_t>(i)];
        if (src < 0 || src >= data.n_rows())
            throw std::out_of_range("select_rows: row index out of range");
        for (std::size_t j = 0; j < data.sensitive_codes.size(); ++j)
            out.sensitive_codes[j][static_cast<std::size_t>(i)] =
                data.sensitive_codes[j][static_cast<std::size_t>(src)];
        out.features.row(i) = data.features.row(src);
        out.outcome[i] = data.outcome[src];
    }
    return out;
}

std::pair<Dataset, StandardizationStats> standardize(
    const Dataset& data, const std::optional<StandardizationStats>& stats) {
    StandardizationStats st;
    if (stats.has_value()) {
        st = *stats;
        if (st.feature_names != data.schema.features)
            throw std::invalid_argument(
                "standardize: stats were computed for a different feature set");
    } else {
        st.feature_names = data.schema.features;
        if (data.n_rows() == 0)
            throw std::invalid_argument("standardize: cannot compute stats on an empty dataset");
        st.min = data.features.colwise().minCoeff();
        st.max = data.features.colwise().maxCoeff();
    }

    Dataset out = data;
    for (Eigen::Index j = 0; j < data.n_features(); ++j) {
        const double lo = st.min[j];
        const double hi = st.max[j];
        if (hi == lo) {
            if (!stats.has_value())
                log_warn("standardize: feature '" + data.schema.features[static_cast<std::size_t>(j)] +
                         "' is constant; mapping to 0");
            out.features.col(j).setZero();
        } else {
            out.features.col(j) = (data.features.col(j).array() - lo) / (hi - lo);
        }
    }
    return {std::move(out), std::move(st)};
}

}  // namespace ssddr
