#include <doctest.h>

#include <cmath>
#include <random>

#include "socsit/percept.hpp"

using namespace socsit;

namespace {

AgentId id(std::uint64_t v) { return AgentId{v}; }

// Two poses `d` apart on the x axis, each turned by `turn` away from the other.
std::pair<AgentPose, AgentPose> facing_pair(double d, double turn = 0.0) {
    return {AgentPose{id(1), 0.0, 0.0, normalize_angle(turn)},
            AgentPose{id(2), d, 0.0, normalize_angle(M_PI + turn)}};
}

Opinion pair_opinion(double d, double turn, const PerceptConfig& cfg) {
    const auto [a, b] = facing_pair(d, turn);
    return opinion_from_likelihood(interaction_likelihood(d, facing_feature(a, b), cfg), cfg);
}

std::vector<LabeledSample> blobs(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<LabeledSample> out;
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back({0.9 + 0.2 * g(rng), 0.9 + 0.05 * g(rng), true});
        out.push_back({4.0 + 0.8 * g(rng), 0.4 + 0.1 * g(rng), false});
    }
    return out;
}

}  // namespace

TEST_CASE("close facing pair is confident, far pair is not") {
    const PerceptConfig cfg;
    CHECK(expectation(pair_opinion(0.8, 0.0, cfg)) >= 0.8);
    CHECK(expectation(pair_opinion(10.0, 0.0, cfg)) <= 0.2);
}

TEST_CASE("facing feature") {
    const auto [a, b] = facing_pair(1.0);
    CHECK(facing_feature(a, b) == doctest::Approx(1.0));
    CHECK(facing_feature(a, b) == doctest::Approx(facing_feature(b, a)));
    const auto [c, d] = facing_pair(1.0, M_PI);  // back to back
    CHECK(facing_feature(c, d) == doctest::Approx(0.0).epsilon(1e-12));
    const auto [e, f] = facing_pair(1.0, M_PI / 2);
    CHECK(facing_feature(e, f) == doctest::Approx(0.5));
}

TEST_CASE("likelihood is monotone in distance and facing") {
    const PerceptConfig cfg;
    double prev = 2.0;
    for (double d = 0.1; d < 12.0; d += 0.1) {
        const double l = interaction_likelihood(d, 0.8, cfg);
        CHECK(l <= prev);
        CHECK(l >= 0.0);
        prev = l;
    }
    prev = -1.0;
    for (double phi = 0.0; phi <= 1.0; phi += 0.05) {
        const double l = interaction_likelihood(1.0, phi, cfg);
        CHECK(l >= prev);
        prev = l;
    }
}

TEST_CASE("opinions carry the base uncertainty") {
    PerceptConfig cfg;
    cfg.base_uncertainty = 0.2;
    for (double l : {0.0, 0.3, 1.0}) {
        const auto op = opinion_from_likelihood(l, cfg);
        CHECK(op.uncertainty == doctest::Approx(0.2));
        CHECK(op.belief == doctest::Approx(l * 0.8));
        CHECK(op.valid());
    }
}

TEST_CASE("observe") {
    PerceptConfig cfg;
    cfg.observation_radius = 5.0;
    TraceFrame f{std::chrono::milliseconds(0),
                 {{id(1), 0, 0, 0}, {id(2), 1, 0, M_PI}, {id(3), 3, 0, 0}, {id(4), 20, 0, 0}}};
    std::mt19937_64 rng(1);
    const auto ops = observe(f, id(2), cfg, rng);
    // 1, 2 and 3 are visible from 2; 4 is not
    REQUIRE(ops.size() == 3);
    for (const auto& p : ops) {
        CHECK(p.i < p.j);
        CHECK(p.j != id(4));
    }
    CHECK(observe(f, id(9), cfg, rng).empty());

    SUBCASE("symmetric in the observer when noiseless") {
        const auto from1 = observe(f, id(1), cfg, rng);
        REQUIRE(from1.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) CHECK(from1[k] == ops[k]);
    }
    SUBCASE("noise is seeded") {
        cfg.noise_sigma_pos = 0.3;
        cfg.noise_sigma_angle = 0.2;
        std::mt19937_64 r1(5), r2(5);
        const auto a = observe(f, id(2), cfg, r1);
        const auto b = observe(f, id(2), cfg, r2);
        CHECK(a == b);
    }
}

TEST_CASE("config validation") {
    PerceptConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.base_uncertainty = 1.5;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.model = PerceptModel::GaussianMixture;
    CHECK_THROWS(cfg.validate());  // no model loaded
}

TEST_CASE("mixture separates two blobs") {
    std::mt19937_64 rng(2);
    const auto train = blobs(rng, 200);
    const auto model = fit_gmm(train);
    const auto test = blobs(rng, 500);
    std::size_t correct = 0;
    for (const auto& s : test) correct += (model.posterior(s.distance, s.facing) >= 0.5) == s.interacting;
    CHECK(static_cast<double>(correct) / static_cast<double>(test.size()) >= 0.95);

    PerceptConfig cfg;
    cfg.model = PerceptModel::GaussianMixture;
    cfg.gmm = model;
    CHECK_NOTHROW(cfg.validate());
    CHECK(interaction_likelihood(0.9, 0.9, cfg) > 0.9);
    CHECK(interaction_likelihood(4.0, 0.4, cfg) < 0.1);
}

TEST_CASE("indistinguishable classes give back the prior") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<LabeledSample> s;
    for (int k = 0; k < 100; ++k) {
        const double d = 2.0 + g(rng), phi = 0.5 + 0.1 * g(rng);
        s.push_back({d, phi, true});
        s.push_back({d, phi, false});
    }
    const auto model = fit_gmm(s);
    for (double d : {1.0, 2.0, 3.5}) CHECK(model.posterior(d, 0.5) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("too few samples") {
    std::mt19937_64 rng(6);
    auto s = blobs(rng, 9);
    CHECK_THROWS_AS(fit_gmm(s), DegenerateData);
}

TEST_CASE("model JSON round trip") {
    std::mt19937_64 rng(8);
    const auto model = fit_gmm(blobs(rng, 100));
    const auto back = GmmModel::from_json(model.to_json());
    for (double d = 0.2; d < 6.0; d += 0.7) {
        for (double phi = 0.0; phi <= 1.0; phi += 0.25) {
            CHECK(back.posterior(d, phi) == doctest::Approx(model.posterior(d, phi)).epsilon(1e-12));
        }
    }
    CHECK_THROWS(GmmModel::from_json("{\"classes\": 3}"));
}
