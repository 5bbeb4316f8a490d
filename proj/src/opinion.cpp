#include "socsit/opinion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace socsit {

namespace {

bool in_unit(double x) { return x >= -Opinion::kTolerance && x <= 1.0 + Opinion::kTolerance; }

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

// Builds an opinion from belief and uncertainty, deriving disbelief so the
// additivity constraint holds exactly up to rounding.
Opinion from_belief_uncertainty(double b, double u, double a) {
    b = clamp_unit(b);
    u = clamp_unit(u);
    double d = 1.0 - b - u;
    if (d < 0.0) {
        // Rounding only; renormalize belief.
        b = 1.0 - u;
        d = 0.0;
    }
    return Opinion{b, d, u, a};
}

double common_base_rate(const Opinion& a, const Opinion& b) {
    if (std::abs(a.base_rate - b.base_rate) > Opinion::kTolerance) {
        throw OpinionError("fusion requires equal base rates");
    }
    return a.base_rate;
}

Opinion dogmatic_mean(double b_sum, double d_sum, std::size_t n, double a) {
    const double b = b_sum / static_cast<double>(n);
    const double d = d_sum / static_cast<double>(n);
    const double total = b + d;
    return Opinion{b / total, d / total, 0.0, a};
}

}  // namespace

Opinion Opinion::make(double b, double d, double u, double a) {
    Opinion op{b, d, u, a};
    if (!op.valid()) {
        throw OpinionError("invalid opinion (" + format_opinion(op) + ")");
    }
    return op;
}

bool Opinion::valid() const {
    return in_unit(belief) && in_unit(disbelief) && in_unit(uncertainty) && in_unit(base_rate) &&
           std::abs(belief + disbelief + uncertainty - 1.0) <= kTolerance;
}

EvidenceCounts EvidenceCounts::from_opinion(const Opinion& op) {
    if (op.dogmatic()) {
        throw OpinionError("dogmatic opinion has unbounded evidence");
    }
    return EvidenceCounts{kPriorWeight * op.belief / op.uncertainty,
                          kPriorWeight * op.disbelief / op.uncertainty, kPriorWeight};
}

Opinion EvidenceCounts::to_opinion(double base_rate) const {
    const double total = positive + negative + prior_weight;
    return from_belief_uncertainty(positive / total, prior_weight / total, base_rate);
}

double expectation(const Opinion& op) {
    return clamp_unit(op.belief + op.base_rate * op.uncertainty);
}

Opinion fuse_cumulative(const Opinion& a, const Opinion& b) {
    const double base = common_base_rate(a, b);
    if (a.dogmatic() && b.dogmatic()) {
        return dogmatic_mean(a.belief + b.belief, a.disbelief + b.disbelief, 2, base);
    }
    const double kappa = a.uncertainty + b.uncertainty - a.uncertainty * b.uncertainty;
    const double belief = (a.belief * b.uncertainty + b.belief * a.uncertainty) / kappa;
    const double uncertainty = (a.uncertainty * b.uncertainty) / kappa;
    return from_belief_uncertainty(belief, uncertainty, base);
}

Opinion fuse_averaging(const Opinion& a, const Opinion& b) {
    const double base = common_base_rate(a, b);
    if (a.dogmatic() && b.dogmatic()) {
        return dogmatic_mean(a.belief + b.belief, a.disbelief + b.disbelief, 2, base);
    }
    const double kappa = a.uncertainty + b.uncertainty;
    const double belief = (a.belief * b.uncertainty + b.belief * a.uncertainty) / kappa;
    const double uncertainty = (2.0 * a.uncertainty * b.uncertainty) / kappa;
    return from_belief_uncertainty(belief, uncertainty, base);
}

Opinion fuse_averaging_multi(std::span<const Opinion> ops) {
    if (ops.empty()) {
        throw OpinionError("averaging fusion of an empty opinion list");
    }
    if (ops.size() == 1) {
        return ops.front();
    }
    const double base = ops.front().base_rate;
    for (const auto& op : ops) {
        common_base_rate(ops.front(), op);
    }

    std::size_t n_dogmatic = 0;
    double dog_b = 0.0;
    double dog_d = 0.0;
    for (const auto& op : ops) {
        if (op.dogmatic()) {
            ++n_dogmatic;
            dog_b += op.belief;
            dog_d += op.disbelief;
        }
    }
    if (n_dogmatic > 0) {
        return dogmatic_mean(dog_b, dog_d, n_dogmatic, base);
    }

    // Divided form of the n-ary rule: b = sum(b_i/u_i) / sum(1/u_i),
    // u = n / sum(1/u_i). Avoids the underflowing product of uncertainties.
    double inv_u_sum = 0.0;
    double b_over_u_sum = 0.0;
    for (const auto& op : ops) {
        inv_u_sum += 1.0 / op.uncertainty;
        b_over_u_sum += op.belief / op.uncertainty;
    }
    return from_belief_uncertainty(b_over_u_sum / inv_u_sum,
                                   static_cast<double>(ops.size()) / inv_u_sum, base);
}

Opinion floor_uncertainty(const Opinion& op, double u_min) {
    if (op.uncertainty >= u_min) {
        return op;
    }
    const double mass = op.belief + op.disbelief;
    const double scale = (1.0 - u_min) / mass;
    return from_belief_uncertainty(op.belief * scale, u_min, op.base_rate);
}

bool decide(const Opinion& op, double threshold) { return expectation(op) >= threshold; }

std::string format_opinion(const Opinion& op) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", op.belief, op.disbelief,
                  op.uncertainty, op.base_rate);
    return buf;
}

Opinion parse_opinion(const std::string& text) {
    std::istringstream in(text);
    Opinion op;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(in >> op.belief >> c1 >> op.disbelief >> c2 >> op.uncertainty >> c3 >> op.base_rate) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
        throw OpinionError("malformed opinion '" + text + "'");
    }
    return Opinion::make(op.belief, op.disbelief, op.uncertainty, op.base_rate);
}

}  // namespace socsit
