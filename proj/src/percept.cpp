#include "socsit/percept.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>

namespace socsit {

namespace {

constexpr double kRegularization = 1e-6;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double det2(const std::array<double, 4>& c) { return c[0] * c[3] - c[1] * c[2]; }

}  // namespace

double GmmComponent::density(double d, double phi) const {
    const double det = det2(covariance);
    const double dx = d - mean[0];
    const double dy = phi - mean[1];
    // inverse of [[a b][c d]] is [[d -b][-c a]] / det
    const double q = (covariance[3] * dx * dx - (covariance[1] + covariance[2]) * dx * dy +
                      covariance[0] * dy * dy) /
                     det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double GmmModel::posterior(double d, double phi) const {
    std::array<double, 2> joint{};
    for (std::size_t c = 0; c < 2; ++c) {
        double lik = 0.0;
        for (const auto& comp : classes[c]) lik += comp.weight * comp.density(d, phi);
        joint[c] = priors[c] * lik;
    }
    const double total = joint[0] + joint[1];
    if (!(total > 0.0) || !std::isfinite(total)) {
        // Far outside both mixtures: fall back to the prior.
        return priors[1];
    }
    return joint[1] / total;
}

void GmmModel::validate() const {
    if (std::abs(priors[0] + priors[1] - 1.0) > 1e-9 || priors[0] < 0.0 || priors[1] < 0.0) {
        throw DegenerateData("class priors must sum to 1");
    }
    for (const auto& comps : classes) {
        if (comps.empty()) throw DegenerateData("mixture without components");
        double w = 0.0;
        for (const auto& c : comps) {
            w += c.weight;
            if (!(c.covariance[0] > 0.0) || !(det2(c.covariance) > 0.0) ||
                std::abs(c.covariance[1] - c.covariance[2]) > 1e-12) {
                throw DegenerateData("covariance is not symmetric positive definite");
            }
        }
        if (std::abs(w - 1.0) > 1e-6) throw DegenerateData("mixture weights must sum to 1");
    }
}

std::string GmmModel::to_json() const {
    nlohmann::json j;
    j["priors"] = priors;
    const char* labels[2] = {"no_interaction", "interaction"};
    for (std::size_t c = 0; c < 2; ++c) {
        nlohmann::json cls;
        cls["label"] = labels[c];
        for (const auto& comp : classes[c]) {
            cls["components"].push_back({
                {"weight", comp.weight},
                {"mean", comp.mean},
                {"covariance",
                 {{comp.covariance[0], comp.covariance[1]}, {comp.covariance[2], comp.covariance[3]}}},
            });
        }
        j["classes"].push_back(cls);
    }
    return j.dump(2);
}

GmmModel GmmModel::from_json(const std::string& text) {
    GmmModel m;
    try {
        const auto j = nlohmann::json::parse(text);
        m.priors = j.at("priors").get<std::array<double, 2>>();
        const auto& classes = j.at("classes");
        if (classes.size() != 2) throw DegenerateData("GMM model needs exactly two classes");
        for (std::size_t c = 0; c < 2; ++c) {
            for (const auto& comp : classes[c].at("components")) {
                GmmComponent g;
                g.weight = comp.at("weight").get<double>();
                g.mean = comp.at("mean").get<std::array<double, 2>>();
                const auto cov = comp.at("covariance").get<std::array<std::array<double, 2>, 2>>();
                g.covariance = {cov[0][0], cov[0][1], cov[1][0], cov[1][1]};
                m.classes[c].push_back(g);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DegenerateData(std::string("malformed GMM json: ") + e.what());
    }
    m.validate();
    return m;
}

void PerceptConfig::validate() const {
    if (!(base_uncertainty > 0.0) || base_uncertainty > 1.0) {
        throw std::invalid_argument("base uncertainty must lie in (0,1]");
    }
    if (base_rate < 0.0 || base_rate > 1.0) throw std::invalid_argument("base rate must lie in [0,1]");
    if (noise_sigma_pos < 0.0 || noise_sigma_angle < 0.0) {
        throw std::invalid_argument("sensor noise must be non-negative");
    }
    if (!(observation_radius > 0.0)) throw std::invalid_argument("observation_radius must be positive");
    if (facing_weight < 0.0) throw std::invalid_argument("facing_weight must be non-negative");
    if (model == PerceptModel::GaussianMixture) {
        if (!gmm) throw std::invalid_argument("GaussianMixture percept needs a model");
        gmm->validate();
    }
}

double facing_feature(const AgentPose& a, const AgentPose& b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double d = std::hypot(dx, dy);
    if (d <= 0.0) return 1.0;
    const double cos_a = (std::cos(a.shoulder_angle) * dx + std::sin(a.shoulder_angle) * dy) / d;
    const double cos_b = (std::cos(b.shoulder_angle) * -dx + std::sin(b.shoulder_angle) * -dy) / d;
    return std::clamp((cos_a + cos_b + 2.0) / 4.0, 0.0, 1.0);
}

double interaction_likelihood(double distance, double facing, const PerceptConfig& config) {
    if (config.model == PerceptModel::GaussianMixture) {
        return std::clamp(config.gmm->posterior(distance, facing), 0.0, 1.0);
    }
    const double near = sigmoid(config.distance_steepness * (config.distance_midpoint - distance));
    return std::clamp(near * std::pow(facing, config.facing_weight), 0.0, 1.0);
}

Opinion opinion_from_likelihood(double likelihood, const PerceptConfig& config) {
    const double u = config.base_uncertainty;
    const double b = likelihood * (1.0 - u);
    return Opinion{b, std::max(0.0, 1.0 - u - b), u, config.base_rate};
}

std::vector<PairOpinion> observe(const TraceFrame& frame, AgentId observer,
                                 const PerceptConfig& config, std::mt19937_64& rng) {
    const auto self = std::find_if(frame.agents.begin(), frame.agents.end(),
                                   [&](const AgentPose& p) { return p.id == observer; });
    if (self == frame.agents.end()) return {};

    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<AgentPose> seen;
    for (const auto& p : frame.agents) {
        if (std::hypot(p.x - self->x, p.y - self->y) > config.observation_radius) continue;
        AgentPose q = p;
        if (config.noise_sigma_pos > 0.0) {
            q.x += config.noise_sigma_pos * noise(rng);
            q.y += config.noise_sigma_pos * noise(rng);
        }
        if (config.noise_sigma_angle > 0.0) {
            q.shoulder_angle += config.noise_sigma_angle * noise(rng);
        }
        seen.push_back(q);
    }
    std::sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    std::vector<PairOpinion> out;
    for (std::size_t a = 0; a < seen.size(); ++a) {
        for (std::size_t b = a + 1; b < seen.size(); ++b) {
            const double d = std::hypot(seen[a].x - seen[b].x, seen[a].y - seen[b].y);
            const double phi = facing_feature(seen[a], seen[b]);
            out.push_back(PairOpinion{seen[a].id, seen[b].id,
                                      opinion_from_likelihood(interaction_likelihood(d, phi, config), config)});
        }
    }
    return out;
}

namespace {

struct Sample2 {
    double x;
    double y;
};

std::array<double, 4> sample_covariance(const std::vector<Sample2>& pts, const std::vector<double>& w,
                                        const std::array<double, 2>& mean) {
    std::array<double, 4> c{};
    double total = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double dx = pts[k].x - mean[0];
        const double dy = pts[k].y - mean[1];
        c[0] += w[k] * dx * dx;
        c[1] += w[k] * dx * dy;
        c[3] += w[k] * dy * dy;
        total += w[k];
    }
    for (double& v : c) v /= std::max(total, std::numeric_limits<double>::min());
    c[2] = c[1];
    c[0] += kRegularization;
    c[3] += kRegularization;
    if (!(det2(c) > 0.0) || !std::isfinite(det2(c))) {
        throw DegenerateData("singular covariance after regularization");
    }
    return c;
}

std::vector<GmmComponent> fit_mixture(const std::vector<Sample2>& pts, std::size_t k_comp,
                                      std::mt19937_64& rng) {
    const std::size_t n = pts.size();
    k_comp = std::min(k_comp, n);
    // k-means++ style seeding of the means
    std::vector<GmmComponent> comps;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::vector<double> ones(n, 1.0);
    const std::size_t first = pick(rng);
    GmmComponent seed_comp;
    seed_comp.mean = {pts[first].x, pts[first].y};
    comps.push_back(seed_comp);
    while (comps.size() < k_comp) {
        std::vector<double> d2(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : comps) {
                const double dx = pts[i].x - c.mean[0];
                const double dy = pts[i].y - c.mean[1];
                best = std::min(best, dx * dx + dy * dy);
            }
            d2[i] = best;
            total += best;
        }
        std::size_t chosen = pick(rng);
        if (total > 0.0) {
            double u = unit(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                u -= d2[i];
                if (u <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        GmmComponent c;
        c.mean = {pts[chosen].x, pts[chosen].y};
        comps.push_back(c);
    }
    std::array<double, 2> overall{};
    for (const auto& p : pts) {
        overall[0] += p.x / static_cast<double>(n);
        overall[1] += p.y / static_cast<double>(n);
    }
    const auto base_cov = sample_covariance(pts, ones, overall);
    for (auto& c : comps) {
        c.weight = 1.0 / static_cast<double>(comps.size());
        c.covariance = base_cov;
    }

    std::vector<std::vector<double>> resp(comps.size(), std::vector<double>(n));
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 300; ++iter) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (std::size_t k = 0; k < comps.size(); ++k) {
                resp[k][i] = comps[k].weight * comps[k].density(pts[i].x, pts[i].y);
                total += resp[k][i];
            }
            if (!(total > 0.0)) {
                for (std::size_t k = 0; k < comps.size(); ++k) {
                    resp[k][i] = 1.0 / static_cast<double>(comps.size());
                }
                total = std::numeric_limits<double>::min();
            } else {
                for (std::size_t k = 0; k < comps.size(); ++k) resp[k][i] /= total;
            }
            ll += std::log(total);
        }
        for (std::size_t k = 0; k < comps.size(); ++k) {
            double nk = 0.0;
            std::array<double, 2> mean{};
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[k][i];
                mean[0] += resp[k][i] * pts[i].x;
                mean[1] += resp[k][i] * pts[i].y;
            }
            if (nk <= 1e-12) continue;  // starved component keeps its parameters
            mean[0] /= nk;
            mean[1] /= nk;
            comps[k].mean = mean;
            comps[k].covariance = sample_covariance(pts, resp[k], mean);
            comps[k].weight = nk / static_cast<double>(n);
        }
        double wsum = 0.0;
        for (const auto& c : comps) wsum += c.weight;
        for (auto& c : comps) c.weight /= wsum;
        if (std::abs(ll - prev_ll) < 1e-9 * std::max(1.0, std::abs(ll))) break;
        prev_ll = ll;
    }
    return comps;
}

}  // namespace

GmmModel fit_gmm(std::span<const LabeledSample> samples, std::size_t components, std::uint64_t seed) {
    if (components == 0) throw DegenerateData("need at least one component per class");
    std::array<std::vector<Sample2>, 2> by_class;
    for (const auto& s : samples) {
        by_class[s.interacting ? 1 : 0].push_back({s.distance, s.facing});
    }
    for (const auto& pts : by_class) {
        if (pts.size() < 10) throw DegenerateData("each class needs at least 10 samples");
    }
    GmmModel model;
    const double n = static_cast<double>(samples.size());
    model.priors = {static_cast<double>(by_class[0].size()) / n,
                    static_cast<double>(by_class[1].size()) / n};
    for (std::size_t c = 0; c < 2; ++c) {
        std::mt19937_64 rng(seed);
        model.classes[c] = fit_mixture(by_class[c], components, rng);
    }
    return model;
}

}  // namespace socsit
