#pragma once

// Pair-counting agreement between two partitions of the same agent set.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "socsit/types.hpp"

namespace socsit {

class MetricsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Disjoint, covering grouping of agent ids. Blocks are kept sorted, and
/// sorted among themselves by their smallest element.
class Partition {
public:
    Partition() = default;
    /// Throws MetricsError on empty or overlapping blocks.
    explicit Partition(std::vector<std::vector<AgentId>> blocks);

    static Partition singletons(std::span<const AgentId> universe);

    const std::vector<std::vector<AgentId>>& blocks() const { return blocks_; }
    std::vector<AgentId> universe() const;
    std::size_t element_count() const;
    /// Number of blocks with at least two members.
    std::size_t situation_count() const;
    bool together(AgentId a, AgentId b) const;

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<std::vector<AgentId>> blocks_;
};

struct PairCounts {
    std::uint64_t together_both = 0;  // n11
    std::uint64_t only_first = 0;     // n10
    std::uint64_t only_second = 0;    // n01
    std::uint64_t neither = 0;        // n00

    std::uint64_t total() const { return together_both + only_first + only_second + neither; }
    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

PairCounts pair_counts(const Partition& p, const Partition& q);

double rand_index(const Partition& p, const Partition& q);
double adjusted_rand_index(const Partition& p, const Partition& q);
double jaccard_index(const Partition& p, const Partition& q);

struct SeriesSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

SeriesSummary series_summary(std::span<const double> values);

}  // namespace socsit
