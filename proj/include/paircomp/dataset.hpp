#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "paircomp/model.hpp"

namespace paircomp {

/// Length-n latent score vector; anchored means u[0] == 0 exactly.
struct ScoreVector {
    std::vector<double> u;
    bool anchored = false;

    std::size_t size() const { return u.size(); }

    /// Shifts all components so the first becomes exactly 0.
    void anchor() {
        if (u.empty()) throw std::invalid_argument("cannot anchor an empty score vector");
        const double shift = u[0];
        for (double& v : u) v -= shift;
        u[0] = 0.0;
        anchored = true;
    }
};

/// Multiplicities n_ij of a comparison graph, stored sparsely for i < j only.
struct ComparisonGraph {
    struct PairCount {
        std::int32_t i = 0;  // 0-based, i < j
        std::int32_t j = 0;
        std::int32_t count = 0;
    };

    std::int32_t n = 0;
    std::int32_t max_per_pair = 1;  // T
    double p_provenance = 0.0;
    std::vector<PairCount> pairs;   // sorted by (i, j)

    std::int64_t total_comparisons() const {
        std::int64_t total = 0;
        for (const auto& pc : pairs) total += pc.count;
        return total;
    }
};

/// One observed comparison: outcome x from subject i's perspective, i < j.
struct ComparisonRecord {
    std::int32_t i = 0;
    std::int32_t j = 0;
    double outcome = 0.0;
};

struct ComparisonDataset {
    std::int32_t n = 0;
    std::vector<ComparisonRecord> records;
    std::optional<ModelSpec> model_provenance;
    std::optional<std::uint64_t> seed_provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

namespace detail {

inline std::string format_outcome(double x) {
    if (x == std::floor(x) && std::fabs(x) < 1e15) {
        return std::to_string(static_cast<long long>(x));
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Writes the dataset CSV: header `i,j,outcome`, 1-based ids, one row per
/// comparison instance.
inline void write_dataset_csv(const ComparisonDataset& dataset, std::ostream& out) {
    out << "i,j,outcome\n";
    for (const auto& rec : dataset.records) {
        out << (rec.i + 1) << ',' << (rec.j + 1) << ','
            << detail::format_outcome(rec.outcome) << '\n';
    }
}

inline void write_dataset_csv(const ComparisonDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_dataset_csv(dataset, out);
}

/// Reads a dataset CSV. Rows with i > j are reflected to the canonical i < j
/// orientation (negating the outcome). Throws with a line number on bad rows.
inline ComparisonDataset read_dataset_csv(std::istream& in) {
    ComparisonDataset dataset;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "i,j,outcome") {
        throw std::runtime_error("dataset CSV: expected header 'i,j,outcome', got '" + line + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
            !std::getline(row, c)) {
            throw std::runtime_error("dataset CSV line " + std::to_string(line_no) +
                                     ": expected 3 comma-separated fields");
        }
        try {
            long i = std::stol(a);
            long j = std::stol(b);
            double x = std::stod(c);
            if (i < 1 || j < 1 || i == j) {
                throw std::runtime_error("subject ids must be distinct and >= 1");
            }
            ComparisonRecord rec;
            if (i < j) {
                rec = {static_cast<std::int32_t>(i - 1), static_cast<std::int32_t>(j - 1), x};
            } else {
                rec = {static_cast<std::int32_t>(j - 1), static_cast<std::int32_t>(i - 1), -x};
            }
            dataset.records.push_back(rec);
            dataset.n = std::max(dataset.n, static_cast<std::int32_t>(std::max(i, j)));
        } catch (const std::exception& e) {
            throw std::runtime_error("dataset CSV line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return dataset;
}

inline ComparisonDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset CSV: " + path);
    return read_dataset_csv(in);
}

}  // namespace paircomp
