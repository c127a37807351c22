#pragma once

// CSV and JSON serialization of results.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmag/fock.hpp"

namespace kmag::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip is not needed; 17 significant digits always round-trips
/// a double and keeps output byte-stable.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<double>& row) {
        if (row.size() != header_.size())
            throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " columns, header has " +
                                        std::to_string(header_.size()));
        rows_.push_back(row);
    }

    /// Column-major convenience: first column plus equally long series.
    static CsvTable from_columns(std::vector<std::string> header, const std::vector<std::vector<double>>& columns) {
        CsvTable t(std::move(header));
        if (columns.size() != t.header_.size()) throw std::invalid_argument("csv: column count does not match header");
        const std::size_t n = columns.empty() ? 0 : columns.front().size();
        for (const auto& c : columns)
            if (c.size() != n) throw std::invalid_argument("csv: columns differ in length");
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row;
            row.reserve(columns.size());
            for (const auto& c : columns) row.push_back(c[i]);
            t.rows_.push_back(std::move(row));
        }
        return t;
    }

    std::string str() const {
        std::string out;
        for (std::size_t k = 0; k < header_.size(); ++k) {
            if (k) out += ',';
            out += header_[k];
        }
        out += '\n';
        for (const auto& r : rows_) {
            for (std::size_t k = 0; k < r.size(); ++k) {
                if (k) out += ',';
                out += format_number(r[k]);
            }
            out += '\n';
        }
        return out;
    }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// JSON value for a double; non-finite values become strings so the file stays valid.
inline json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

/// Operator dump: spec tags plus real and imaginary parts, row-major.
inline json operator_json(const OperatorMatrix& op) {
    json j;
    json parts = json::array();
    for (const auto& p : op.spec.parts()) parts.push_back({{"label", p.label}, {"kind", p.tag()}});
    j["spec"] = parts;
    j["dim"] = op.dim();
    json re = json::array(), im = json::array();
    for (int r = 0; r < op.dim(); ++r) {
        json rr = json::array(), ri = json::array();
        for (int c = 0; c < op.dim(); ++c) {
            rr.push_back(op.mat(r, c).real());
            ri.push_back(op.mat(r, c).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    j["real"] = std::move(re);
    j["imag"] = std::move(im);
    return j;
}

}  // namespace kmag::io
