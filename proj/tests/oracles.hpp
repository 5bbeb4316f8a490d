#pragma once

// Independent reference computations used to freeze expected values.
// Deliberately naive: evidence-space fusion and O(n^2) pair enumeration.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "socsit/metrics.hpp"
#include "socsit/opinion.hpp"

namespace oracle {

struct Evidence {
    double r;
    double s;
};

inline Evidence to_evidence(const socsit::Opinion& op) {
    return {2.0 * op.belief / op.uncertainty, 2.0 * op.disbelief / op.uncertainty};
}

inline socsit::Opinion from_evidence(Evidence e, double a) {
    const double k = e.r + e.s + 2.0;
    return {e.r / k, e.s / k, 2.0 / k, a};
}

// Cumulative fusion: evidence adds.
inline socsit::Opinion cumulative(const socsit::Opinion& x, const socsit::Opinion& y) {
    const auto ex = to_evidence(x);
    const auto ey = to_evidence(y);
    return from_evidence({ex.r + ey.r, ex.s + ey.s}, x.base_rate);
}

// Averaging fusion: evidence is averaged.
inline socsit::Opinion averaging(const std::vector<socsit::Opinion>& ops) {
    Evidence sum{0.0, 0.0};
    for (const auto& op : ops) {
        const auto e = to_evidence(op);
        sum.r += e.r;
        sum.s += e.s;
    }
    const double n = static_cast<double>(ops.size());
    return from_evidence({sum.r / n, sum.s / n}, ops.front().base_rate);
}

inline socsit::Opinion random_opinion(std::mt19937_64& rng, double a = 0.5, double u_lo = 1e-3) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = u_lo + (1.0 - u_lo) * unit(rng);
    const double b = (1.0 - u) * unit(rng);
    return {b, 1.0 - u - b, u, a};
}

struct Pairs {
    std::uint64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
};

// Label of each element: index of its block.
inline std::map<std::uint64_t, std::size_t> labels(const socsit::Partition& p) {
    std::map<std::uint64_t, std::size_t> out;
    for (std::size_t b = 0; b < p.blocks().size(); ++b) {
        for (auto id : p.blocks()[b]) out[id.value] = b;
    }
    return out;
}

inline Pairs enumerate_pairs(const socsit::Partition& p, const socsit::Partition& q) {
    const auto lp = labels(p);
    const auto lq = labels(q);
    std::vector<std::uint64_t> ids;
    for (const auto& [id, _] : lp) ids.push_back(id);
    Pairs out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const bool a = lp.at(ids[i]) == lp.at(ids[j]);
            const bool b = lq.at(ids[i]) == lq.at(ids[j]);
            if (a && b) ++out.n11;
            else if (a) ++out.n10;
            else if (b) ++out.n01;
            else ++out.n00;
        }
    }
    return out;
}

// Hubert-Arabie ARI straight from its definition.
inline double ari(const socsit::Partition& p, const socsit::Partition& q) {
    const auto lp = labels(p);
    const auto lq = labels(q);
    std::map<std::pair<std::size_t, std::size_t>, double> cells;
    std::map<std::size_t, double> rows, cols;
    for (const auto& [id, a] : lp) {
        const auto b = lq.at(id);
        cells[{a, b}] += 1;
        rows[a] += 1;
        cols[b] += 1;
    }
    auto c2 = [](double n) { return n * (n - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [_, n] : cells) index += c2(n);
    for (const auto& [_, n] : rows) sa += c2(n);
    for (const auto& [_, n] : cols) sb += c2(n);
    const double total = c2(static_cast<double>(lp.size()));
    const double expected = total > 0 ? sa * sb / total : 0;
    const double max_index = 0.5 * (sa + sb);
    if (std::abs(max_index - expected) < 1e-12) return 1.0;
    return (index - expected) / (max_index - expected);
}

inline socsit::Partition random_partition(std::mt19937_64& rng, std::size_t n, std::size_t max_blocks) {
    std::uniform_int_distribution<std::size_t> pick(0, max_blocks - 1);
    std::map<std::size_t, std::vector<socsit::AgentId>> blocks;
    for (std::size_t i = 1; i <= n; ++i) blocks[pick(rng)].push_back(socsit::AgentId{i});
    std::vector<std::vector<socsit::AgentId>> out;
    for (auto& [_, b] : blocks) out.push_back(std::move(b));
    return socsit::Partition(std::move(out));
}

}  // namespace oracle
