#pragma once

// Logical sensor: pairwise geometry (distance, shoulder orientation) to
// Subjective Logic opinions about pairwise social interaction.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "socsit/mobility.hpp"
#include "socsit/opinion.hpp"
#include "socsit/protocol.hpp"

namespace socsit {

class DegenerateData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GmmComponent {
    double weight = 1.0;
    std::array<double, 2> mean{};
    std::array<double, 4> covariance{1.0, 0.0, 0.0, 1.0};  // row-major 2x2

    double density(double d, double phi) const;
};

/// Two class-conditional mixtures over (distance, facing); index 1 is the
/// interacting class.
struct GmmModel {
    std::array<std::vector<GmmComponent>, 2> classes;
    std::array<double, 2> priors{0.5, 0.5};

    /// P(interacting | d, phi).
    double posterior(double d, double phi) const;
    void validate() const;

    std::string to_json() const;
    static GmmModel from_json(const std::string& text);
};

enum class PerceptModel { Parametric, GaussianMixture };

struct PerceptConfig {
    PerceptModel model = PerceptModel::Parametric;
    double distance_midpoint = 1.5;   // m
    double distance_steepness = 3.0;  // 1/m
    double facing_weight = 0.5;
    double base_uncertainty = 0.1;  // u0
    double base_rate = 0.5;
    double noise_sigma_pos = 0.0;    // m
    double noise_sigma_angle = 0.0;  // rad
    double observation_radius = 10.0;
    std::optional<GmmModel> gmm;

    void validate() const;
};

/// (cos a_ij + cos a_ji + 2) / 4 where a_ij is the angle between i's
/// shoulder normal and the direction from i to j. 1 = mutually facing.
double facing_feature(const AgentPose& a, const AgentPose& b);

/// Interaction likelihood in [0,1] under the configured model.
double interaction_likelihood(double distance, double facing, const PerceptConfig& config);

/// b = L(1-u0), d = (1-L)(1-u0), u = u0.
Opinion opinion_from_likelihood(double likelihood, const PerceptConfig& config);

/// Opinions of `observer` about every unordered pair of individuals within
/// observation_radius of it (itself included), pair ids ascending.
std::vector<PairOpinion> observe(const TraceFrame& frame, AgentId observer,
                                 const PerceptConfig& config, std::mt19937_64& rng);

struct LabeledSample {
    double distance = 0.0;
    double facing = 0.0;
    bool interacting = false;
};

/// EM fit of `components` full-covariance Gaussians per class. Throws
/// DegenerateData with fewer than 10 samples in either class or a singular
/// covariance after 1e-6 regularization.
GmmModel fit_gmm(std::span<const LabeledSample> samples, std::size_t components = 2,
                 std::uint64_t seed = 1);

}  // namespace socsit
