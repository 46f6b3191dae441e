#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/dataset.hpp"

namespace paircomp {

/// One best-of-N match row as read from the raw file.
struct RawMatch {
    std::string winner;
    std::string loser;
    int winner_sets = 0;
    int loser_sets = 0;
    std::string meta;  // tournament/date when available
};

enum class MatchFormat { atp_csv, generic_csv };

struct LoadCounts {
    std::int64_t kept = 0;
    std::int64_t dropped_incomplete = 0;  // missing/retired/unparseable results
    std::int64_t dropped_bo5 = 0;         // winner sets = 3 under the BO3 filter
};

struct LoadReport {
    std::vector<RawMatch> matches;
    LoadCounts counts;
    std::vector<std::pair<std::size_t, std::string>> rejected;  // (line, reason)
};

/// Bidirectional name <-> contiguous id map. Id 0 (external id 1, the
/// anchor) is deterministically the lexicographically smallest name.
struct SubjectIndex {
    std::vector<std::string> names;
    std::map<std::string, std::int32_t> ids;

    static SubjectIndex build(const std::vector<RawMatch>& matches) {
        SubjectIndex index;
        for (const auto& m : matches) {
            index.ids.emplace(m.winner, 0);
            index.ids.emplace(m.loser, 0);
        }
        index.names.reserve(index.ids.size());
        for (auto& [name, id] : index.ids) {  // std::map iterates in sorted order
            id = static_cast<std::int32_t>(index.names.size());
            index.names.push_back(name);
        }
        return index;
    }

    std::int32_t id(const std::string& name) const {
        const auto it = ids.find(name);
        if (it == ids.end()) throw std::invalid_argument("unknown subject name: " + name);
        return it->second;
    }

    std::int32_t size() const { return static_cast<std::int32_t>(names.size()); }
};

namespace detail {

// Minimal RFC-4180-ish field splitter: handles quoted fields and embedded
// commas; returns false on unterminated quotes.
inline bool split_csv_fields(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string current;
    bool in_quotes = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (in_quotes) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    current.push_back('"');
                    ++k;
                } else {
                    in_quotes = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return !in_quotes;
}

inline bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        const long v = std::stol(s, &pos);
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        if (pos != s.size()) return false;
        out = static_cast<int>(v);
        return true;
    } catch (...) {
        return false;
    }
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

/// Loads match rows from an ATP-style or generic CSV. Structurally bad rows
/// are rejected with their line number; rows with missing or retired set
/// scores are dropped and counted; BO5 rows (winner sets = 3) are dropped
/// under the BO3 filter. Throws only on an unusable header.
inline LoadReport load_matches(std::istream& in, MatchFormat format,
                               bool filter_bo3 = true) {
    LoadReport report;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("match CSV: empty file");

    std::vector<std::string> header;
    if (!detail::split_csv_fields(line, header)) {
        throw std::runtime_error("match CSV: malformed header (unterminated quote)");
    }
    for (auto& h : header) h = detail::trim(h);

    const std::vector<std::string> wanted =
        format == MatchFormat::atp_csv
            ? std::vector<std::string>{"Winner", "Loser", "Wsets", "Lsets"}
            : std::vector<std::string>{"winner", "loser", "winner_units", "loser_units"};
    std::vector<std::size_t> cols(wanted.size());
    for (std::size_t k = 0; k < wanted.size(); ++k) {
        const auto it = std::find(header.begin(), header.end(), wanted[k]);
        if (it == header.end()) {
            throw std::runtime_error("match CSV: header is missing column '" + wanted[k] + "'");
        }
        cols[k] = static_cast<std::size_t>(it - header.begin());
    }
    std::size_t meta_col = header.size();
    if (format == MatchFormat::atp_csv) {
        const auto it = std::find(header.begin(), header.end(), "Tournament");
        if (it != header.end()) meta_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::string> fields;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!detail::split_csv_fields(line, fields)) {
            report.rejected.emplace_back(line_no, "unterminated quote");
            continue;
        }
        const std::size_t needed =
            1 + std::max({cols[0], cols[1], cols[2], cols[3]});
        if (fields.size() < needed) {
            report.rejected.emplace_back(line_no, "too few fields");
            continue;
        }
        RawMatch match;
        match.winner = detail::trim(fields[cols[0]]);
        match.loser = detail::trim(fields[cols[1]]);
        if (match.winner.empty() || match.loser.empty()) {
            report.rejected.emplace_back(line_no, "empty subject name");
            continue;
        }
        if (match.winner == match.loser) {
            report.rejected.emplace_back(line_no, "winner equals loser");
            continue;
        }
        int wsets = 0;
        int lsets = 0;
        if (!detail::parse_int(detail::trim(fields[cols[2]]), wsets) ||
            !detail::parse_int(detail::trim(fields[cols[3]]), lsets)) {
            report.counts.dropped_incomplete++;  // retired/missing result
            continue;
        }
        if (filter_bo3 && wsets == 3) {
            report.counts.dropped_bo5++;
            continue;
        }
        if (wsets != 2 || lsets < 0 || lsets > 1) {
            report.counts.dropped_incomplete++;  // not a completed BO3
            continue;
        }
        match.winner_sets = wsets;
        match.loser_sets = lsets;
        if (meta_col < fields.size()) match.meta = detail::trim(fields[meta_col]);
        report.counts.kept++;
        report.matches.push_back(std::move(match));
    }
    return report;
}

inline LoadReport load_matches(const std::string& path, MatchFormat format,
                               bool filter_bo3 = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open match CSV: " + path);
    return load_matches(in, format, filter_bo3);
}

/// Converts matches to the A = {-2,-1,1,2} dataset: 2:0 maps to magnitude 2,
/// 2:1 to magnitude 1, oriented to the stored i < j pair order.
inline ComparisonDataset to_dataset(const std::vector<RawMatch>& matches,
                                    const SubjectIndex& index) {
    ComparisonDataset dataset;
    dataset.n = index.size();
    dataset.records.reserve(matches.size());
    for (const auto& m : matches) {
        const std::int32_t w = index.id(m.winner);
        const std::int32_t l = index.id(m.loser);
        const double magnitude = (m.loser_sets == 0) ? 2.0 : 1.0;
        if (w < l) {
            dataset.records.push_back({w, l, magnitude});
        } else {
            dataset.records.push_back({l, w, -magnitude});
        }
    }
    return dataset;
}

struct CleanResult {
    ComparisonDataset dataset;
    std::vector<std::int32_t> removed;     // original ids, ascending
    std::vector<std::int32_t> old_to_new;  // -1 for removed subjects
};

/// Repeatedly removes subjects that never win or never lose (ties count as
/// neither) together with their records, until a fixpoint, then reindexes
/// the survivors contiguously. Removals can create new never-winners, so a
/// single pass is not enough.
inline CleanResult clean_never_win_lose(const ComparisonDataset& dataset) {
    const auto n = static_cast<std::size_t>(dataset.n);
    std::vector<bool> alive(n, true);
    std::vector<std::int64_t> wins(n), losses(n);

    bool changed = true;
    while (changed) {
        changed = false;
        std::fill(wins.begin(), wins.end(), 0);
        std::fill(losses.begin(), losses.end(), 0);
        for (const auto& rec : dataset.records) {
            const auto i = static_cast<std::size_t>(rec.i);
            const auto j = static_cast<std::size_t>(rec.j);
            if (!alive[i] || !alive[j]) continue;
            if (rec.outcome > 0.0) {
                wins[i]++;
                losses[j]++;
            } else if (rec.outcome < 0.0) {
                wins[j]++;
                losses[i]++;
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (alive[v] && (wins[v] == 0 || losses[v] == 0)) {
                alive[v] = false;
                changed = true;
            }
        }
    }

    CleanResult result;
    result.old_to_new.assign(n, -1);
    std::int32_t next_id = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (alive[v]) {
            result.old_to_new[v] = next_id++;
        } else {
            result.removed.push_back(static_cast<std::int32_t>(v));
        }
    }
    result.dataset.n = next_id;
    for (const auto& rec : dataset.records) {
        const std::int32_t ni = result.old_to_new[static_cast<std::size_t>(rec.i)];
        const std::int32_t nj = result.old_to_new[static_cast<std::size_t>(rec.j)];
        if (ni >= 0 && nj >= 0) result.dataset.records.push_back({ni, nj, rec.outcome});
    }
    result.dataset.model_provenance = dataset.model_provenance;
    return result;
}

}  // namespace paircomp
