#include "socsit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace socsit {

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }
std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

// Block sizes of p, of q, and the contingency table of overlaps.
struct Contingency {
    std::vector<std::uint64_t> row;
    std::vector<std::uint64_t> col;
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> cells;
    std::uint64_t n = 0;
};

Contingency contingency(const Partition& p, const Partition& q) {
    if (p.universe() != q.universe()) {
        throw MetricsError("partitions cover different agent sets");
    }
    std::map<AgentId, std::size_t> q_block;
    for (std::size_t j = 0; j < q.blocks().size(); ++j) {
        for (AgentId id : q.blocks()[j]) q_block[id] = j;
    }
    Contingency c;
    c.col.assign(q.blocks().size(), 0);
    for (std::size_t i = 0; i < p.blocks().size(); ++i) {
        c.row.push_back(p.blocks()[i].size());
        for (AgentId id : p.blocks()[i]) {
            const std::size_t j = q_block.at(id);
            ++c.cells[{i, j}];
            ++c.col[j];
            ++c.n;
        }
    }
    return c;
}

}  // namespace

Partition::Partition(std::vector<std::vector<AgentId>> blocks) {
    std::set<AgentId> seen;
    for (auto& block : blocks) {
        if (block.empty()) throw MetricsError("partition block is empty");
        std::sort(block.begin(), block.end());
        for (AgentId id : block) {
            if (!seen.insert(id).second) {
                throw MetricsError("agent " + to_string(id) + " appears in two blocks");
            }
        }
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    blocks_ = std::move(blocks);
}

Partition Partition::singletons(std::span<const AgentId> universe) {
    std::vector<std::vector<AgentId>> blocks;
    for (AgentId id : universe) blocks.push_back({id});
    return Partition(std::move(blocks));
}

std::vector<AgentId> Partition::universe() const {
    std::vector<AgentId> ids;
    for (const auto& block : blocks_) ids.insert(ids.end(), block.begin(), block.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t Partition::element_count() const {
    std::size_t n = 0;
    for (const auto& block : blocks_) n += block.size();
    return n;
}

std::size_t Partition::situation_count() const {
    return static_cast<std::size_t>(std::count_if(
        blocks_.begin(), blocks_.end(), [](const auto& b) { return b.size() >= 2; }));
}

bool Partition::together(AgentId a, AgentId b) const {
    for (const auto& block : blocks_) {
        const bool has_a = std::binary_search(block.begin(), block.end(), a);
        const bool has_b = std::binary_search(block.begin(), block.end(), b);
        if (has_a || has_b) return has_a && has_b;
    }
    return false;
}

PairCounts pair_counts(const Partition& p, const Partition& q) {
    const Contingency c = contingency(p, q);
    std::uint64_t both = 0;
    for (const auto& [cell, count] : c.cells) both += choose2(count);
    std::uint64_t in_p = 0;
    for (auto a : c.row) in_p += choose2(a);
    std::uint64_t in_q = 0;
    for (auto b : c.col) in_q += choose2(b);
    PairCounts pc;
    pc.together_both = both;
    pc.only_first = in_p - both;
    pc.only_second = in_q - both;
    pc.neither = choose2(c.n) - in_p - in_q + both;
    return pc;
}

double rand_index(const Partition& p, const Partition& q) {
    const PairCounts pc = pair_counts(p, q);
    if (pc.total() == 0) return 1.0;
    return static_cast<double>(pc.together_both + pc.neither) / static_cast<double>(pc.total());
}

double adjusted_rand_index(const Partition& p, const Partition& q) {
    const Contingency c = contingency(p, q);
    if (c.n < 2) return 1.0;
    double index = 0.0;
    for (const auto& [cell, count] : c.cells) index += choose2(static_cast<double>(count));
    double sum_rows = 0.0;
    for (auto a : c.row) sum_rows += choose2(static_cast<double>(a));
    double sum_cols = 0.0;
    for (auto b : c.col) sum_cols += choose2(static_cast<double>(b));
    const double expected = sum_rows * sum_cols / choose2(static_cast<double>(c.n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    const double denom = max_index - expected;
    if (std::abs(denom) <= 1e-12 * std::max(1.0, max_index)) {
        // Both partitions all-singletons or both a single block.
        return 1.0;
    }
    return (index - expected) / denom;
}

double jaccard_index(const Partition& p, const Partition& q) {
    const PairCounts pc = pair_counts(p, q);
    const std::uint64_t denom = pc.together_both + pc.only_first + pc.only_second;
    if (denom == 0) return 1.0;
    return static_cast<double>(pc.together_both) / static_cast<double>(denom);
}

SeriesSummary series_summary(std::span<const double> values) {
    if (values.empty()) throw MetricsError("summary of an empty series");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace socsit
