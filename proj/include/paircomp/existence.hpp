#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "paircomp/dataset.hpp"

namespace paircomp {

/// How tie outcomes (x = 0) enter the defeat digraph. Bidirectional is sound
/// for the built-in tie-supporting models because their tie mass f(0; y)
/// vanishes as |y| grows, which is what the existence argument needs.
enum class TiePolicy { bidirectional, ignore };

/// Directed edges i -> j meaning "i defeated j at least once"; deduplicated.
struct DefeatDigraph {
    std::int32_t n = 0;
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // sorted, unique
};

struct ExistenceVerdict {
    bool holds = false;
    std::vector<std::int32_t> witness;  // a set S never defeated from outside
    std::int32_t component_count = 0;   // SCCs of the defeat digraph
    TiePolicy tie_policy = TiePolicy::bidirectional;
};

inline DefeatDigraph defeat_digraph(const ComparisonDataset& dataset,
                                    TiePolicy ties = TiePolicy::bidirectional) {
    DefeatDigraph dg;
    dg.n = dataset.n;
    dg.edges.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) {
        if (rec.outcome > 0.0) {
            dg.edges.emplace_back(rec.i, rec.j);
        } else if (rec.outcome < 0.0) {
            dg.edges.emplace_back(rec.j, rec.i);
        } else if (ties == TiePolicy::bidirectional) {
            dg.edges.emplace_back(rec.i, rec.j);
            dg.edges.emplace_back(rec.j, rec.i);
        }
    }
    std::sort(dg.edges.begin(), dg.edges.end());
    dg.edges.erase(std::unique(dg.edges.begin(), dg.edges.end()), dg.edges.end());
    return dg;
}

namespace detail {

struct SccResult {
    std::int32_t count = 0;
    std::vector<std::int32_t> comp;  // component id per vertex, emission order
};

// Iterative Tarjan; components are emitted in reverse topological order of
// the condensation.
inline SccResult tarjan_scc(const DefeatDigraph& dg) {
    const auto n = static_cast<std::size_t>(dg.n);
    std::vector<std::int32_t> head(n + 1, 0);
    for (const auto& e : dg.edges) head[static_cast<std::size_t>(e.first) + 1]++;
    for (std::size_t v = 0; v < n; ++v) head[v + 1] += head[v];
    std::vector<std::int32_t> adj(dg.edges.size());
    {
        std::vector<std::int32_t> cursor(head.begin(), head.end() - 1);
        for (const auto& e : dg.edges) {
            adj[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.first)]++)] = e.second;
        }
    }

    SccResult res;
    res.comp.assign(n, -1);
    std::vector<std::int32_t> index(n, -1);
    std::vector<std::int32_t> lowlink(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::int32_t> stack;
    std::vector<std::pair<std::int32_t, std::int32_t>> frames;  // (vertex, edge cursor)
    std::int32_t next_index = 0;

    for (std::int32_t root = 0; root < dg.n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        frames.emplace_back(root, head[static_cast<std::size_t>(root)]);
        index[static_cast<std::size_t>(root)] = lowlink[static_cast<std::size_t>(root)] = next_index++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = true;
        while (!frames.empty()) {
            auto& [v, cursor] = frames.back();
            const auto vu = static_cast<std::size_t>(v);
            if (cursor < head[vu + 1]) {
                const std::int32_t w = adj[static_cast<std::size_t>(cursor++)];
                const auto wu = static_cast<std::size_t>(w);
                if (index[wu] == -1) {
                    frames.emplace_back(w, head[wu]);
                    index[wu] = lowlink[wu] = next_index++;
                    stack.push_back(w);
                    on_stack[wu] = true;
                } else if (on_stack[wu]) {
                    lowlink[vu] = std::min(lowlink[vu], index[wu]);
                }
                continue;
            }
            if (lowlink[vu] == index[vu]) {
                std::int32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = false;
                    res.comp[static_cast<std::size_t>(w)] = res.count;
                } while (w != v);
                res.count++;
            }
            frames.pop_back();
            if (!frames.empty()) {
                const auto pu = static_cast<std::size_t>(frames.back().first);
                lowlink[pu] = std::min(lowlink[pu], lowlink[vu]);
            }
        }
    }
    return res;
}

}  // namespace detail

/// Condition 1 holds iff the defeat digraph is strongly connected. When it
/// fails, the witness is the first source component of the condensation in
/// topological order: a nonempty S that no outside subject ever defeated.
inline ExistenceVerdict check_condition1(const DefeatDigraph& dg,
                                         TiePolicy ties = TiePolicy::bidirectional) {
    if (dg.n < 2) throw std::invalid_argument("check_condition1: n must be >= 2");
    ExistenceVerdict verdict;
    verdict.tie_policy = ties;
    const detail::SccResult scc = detail::tarjan_scc(dg);
    verdict.component_count = scc.count;
    verdict.holds = (scc.count == 1);
    if (verdict.holds) return verdict;

    std::vector<bool> has_incoming(static_cast<std::size_t>(scc.count), false);
    for (const auto& e : dg.edges) {
        const std::int32_t cu = scc.comp[static_cast<std::size_t>(e.first)];
        const std::int32_t cv = scc.comp[static_cast<std::size_t>(e.second)];
        if (cu != cv) has_incoming[static_cast<std::size_t>(cv)] = true;
    }
    // reverse emission order is a topological order; scan it for a source
    std::int32_t source = -1;
    for (std::int32_t c = scc.count - 1; c >= 0; --c) {
        if (!has_incoming[static_cast<std::size_t>(c)]) {
            source = c;
            break;
        }
    }
    for (std::int32_t v = 0; v < dg.n; ++v) {
        if (scc.comp[static_cast<std::size_t>(v)] == source) verdict.witness.push_back(v);
    }
    return verdict;
}

inline ExistenceVerdict check_condition1(const ComparisonDataset& dataset,
                                         TiePolicy ties = TiePolicy::bidirectional) {
    return check_condition1(defeat_digraph(dataset, ties), ties);
}

/// Test oracle: enumerates all 2^n - 2 ordered partitions and demands a
/// crossing defeat for each. Refuses n > 20.
inline bool brute_force_condition1(const ComparisonDataset& dataset,
                                   TiePolicy ties = TiePolicy::bidirectional) {
    if (dataset.n > 20) {
        throw std::invalid_argument("brute_force_condition1: n must be <= 20");
    }
    if (dataset.n < 2) throw std::invalid_argument("brute_force_condition1: n must be >= 2");
    const DefeatDigraph dg = defeat_digraph(dataset, ties);
    const auto n = static_cast<std::uint32_t>(dg.n);
    std::vector<std::uint32_t> out_mask(n, 0);
    for (const auto& e : dg.edges) {
        out_mask[static_cast<std::size_t>(e.first)] |= (1u << e.second);
    }
    const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1u);
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        std::uint32_t reach = 0;
        for (std::uint32_t v = 0; v < n; ++v) {
            if (mask & (1u << v)) reach |= out_mask[v];
        }
        if ((reach & (full & ~mask)) == 0) return false;  // no defeat crosses out of S
    }
    return true;
}

}  // namespace paircomp
