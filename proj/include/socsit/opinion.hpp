#pragma once

// Binomial Subjective Logic opinions and the fusion operators used by the
// consensus protocol.

#include <span>
#include <stdexcept>
#include <string>

namespace socsit {

class OpinionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Binomial opinion (belief, disbelief, uncertainty, base rate) about a
/// binary proposition. belief + disbelief + uncertainty == 1.
struct Opinion {
    double belief = 0.0;
    double disbelief = 0.0;
    double uncertainty = 1.0;
    double base_rate = 0.5;

    static constexpr double kTolerance = 1e-9;

    /// Validating constructor; throws OpinionError on out-of-range fields.
    static Opinion make(double b, double d, double u, double a);
    static Opinion vacuous(double base_rate) { return Opinion{0.0, 0.0, 1.0, base_rate}; }

    bool valid() const;
    bool dogmatic() const { return uncertainty <= 0.0; }

    friend bool operator==(const Opinion&, const Opinion&) = default;
};

/// Non-informative prior weight W for binomial opinions.
inline constexpr double kPriorWeight = 2.0;

/// Evidence representation (r, s) of an opinion with u > 0.
struct EvidenceCounts {
    double positive = 0.0;
    double negative = 0.0;
    double prior_weight = kPriorWeight;

    static EvidenceCounts from_opinion(const Opinion& op);
    Opinion to_opinion(double base_rate) const;
};

/// Probability expectation b + a*u.
double expectation(const Opinion& op);

/// Cumulative fusion of independent opinions.
Opinion fuse_cumulative(const Opinion& a, const Opinion& b);

/// Averaging fusion of dependent opinions.
Opinion fuse_averaging(const Opinion& a, const Opinion& b);

/// n-ary averaging fusion. Dogmatic inputs dominate: when any input has
/// u == 0 the result is the mean of the dogmatic inputs.
Opinion fuse_averaging_multi(std::span<const Opinion> ops);

/// Raises uncertainty to u_min, rescaling belief and disbelief
/// proportionally. Opinions already at or above the floor pass through.
Opinion floor_uncertainty(const Opinion& op, double u_min);

/// Decision function: expectation(op) >= threshold.
bool decide(const Opinion& op, double threshold);

/// "b,d,u,a" with 12 significant digits.
std::string format_opinion(const Opinion& op);
Opinion parse_opinion(const std::string& text);

}  // namespace socsit
