#include "socsit/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

namespace socsit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMeetingMargin = 2.0;  // meters from the area border
constexpr double kEdgeZone = 5.0;       // walkers near the border turn inward

enum class Mode { Walking, Approaching, Arrived, Resting, Moving };

struct Walker {
    Point pos;
    double heading = 0.0;
    double mean_heading = 0.0;
    double speed = 0.0;
    std::size_t speed_state = 0;
    double shoulder = 0.0;
    double jitter = 0.0;  // fixed per group membership
    Mode mode = Mode::Walking;
    std::optional<std::size_t> group;
};

struct Group {
    std::vector<std::size_t> members;
    Point center;
    bool moving = false;
    double duration = 0.0;
    std::optional<double> formed_at;
    double heading = 0.0;
    std::vector<Point> offsets;  // moving formation
    bool done = false;
};

bool probabilities_sum_to_one(const std::vector<double>& p) {
    double sum = 0.0;
    for (double x : p) {
        if (x < 0.0) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) < 1e-9;
}

class Generator {
public:
    Generator(const MobilityConfig& cfg, double dt) : cfg_(cfg), dt_(dt), rng_(cfg.seed) {
        alpha_ = std::pow(cfg.gauss_markov_alpha, dt);
        noise_scale_ = std::sqrt(std::max(0.0, 1.0 - alpha_ * alpha_));
        walkers_.resize(cfg.n_agents);
        std::uniform_real_distribution<double> ux(0.0, cfg.width);
        std::uniform_real_distribution<double> uy(0.0, cfg.height);
        std::uniform_real_distribution<double> ua(0.0, kTwoPi);
        std::uniform_int_distribution<std::size_t> us(0, cfg.speed_chain.speeds.size() - 1);
        for (auto& w : walkers_) {
            w.pos = {ux(rng_), uy(rng_)};
            w.heading = ua(rng_);
            w.mean_heading = w.heading;
            w.shoulder = w.heading;
            w.speed_state = us(rng_);
            w.speed = cfg.speed_chain.speeds[w.speed_state];
        }
    }

    Trace run(double duration) {
        Trace trace;
        const auto n_frames = static_cast<std::size_t>(std::llround(duration / dt_));
        double next_speed_update = 1.0;
        for (std::size_t f = 0; f < n_frames; ++f) {
            const double t = static_cast<double>(f) * dt_;
            if (f > 0) {
                if (t + 1e-9 >= next_speed_update) {
                    update_speed_states();
                    next_speed_update += 1.0;
                }
                maybe_form_group();
                advance(t);
            }
            trace.frames.push_back(frame(t));
            trace.truth.push_back(truth());
        }
        return trace;
    }

private:
    double gauss() { return normal_(rng_); }
    double uniform() { return uniform_(rng_); }

    void update_speed_states() {
        const auto& chain = cfg_.speed_chain;
        for (auto& w : walkers_) {
            const double u = uniform();
            double acc = 0.0;
            const auto& row = chain.transition[w.speed_state];
            for (std::size_t k = 0; k < row.size(); ++k) {
                acc += row[k];
                if (u < acc) {
                    w.speed_state = k;
                    break;
                }
            }
        }
    }

    void maybe_form_group() {
        const double p_event = 1.0 - std::exp(-cfg_.group_formation_rate * dt_);
        if (uniform() >= p_event) return;

        // group size
        const double u = uniform();
        double acc = 0.0;
        std::size_t size = cfg_.group_size_distribution.back().first;
        for (const auto& [s, p] : cfg_.group_size_distribution) {
            acc += p;
            if (u < acc) {
                size = s;
                break;
            }
        }
        std::vector<std::size_t> idle;
        for (std::size_t i = 0; i < walkers_.size(); ++i) {
            if (walkers_[i].mode == Mode::Walking) idle.push_back(i);
        }
        if (size < 2 || idle.size() < size) return;

        const std::size_t seed_index =
            idle[std::min(idle.size() - 1, static_cast<std::size_t>(uniform() * idle.size()))];
        const Point origin = walkers_[seed_index].pos;
        std::stable_sort(idle.begin(), idle.end(), [&](std::size_t a, std::size_t b) {
            return dist2(walkers_[a].pos, origin) < dist2(walkers_[b].pos, origin);
        });

        Group g;
        g.members.assign(idle.begin(), idle.begin() + static_cast<std::ptrdiff_t>(size));
        Point c{0.0, 0.0};
        for (std::size_t m : g.members) {
            c.x += walkers_[m].pos.x;
            c.y += walkers_[m].pos.y;
        }
        c.x /= static_cast<double>(size);
        c.y /= static_cast<double>(size);
        c.x = std::clamp(c.x, kMeetingMargin, cfg_.width - kMeetingMargin);
        c.y = std::clamp(c.y, kMeetingMargin, cfg_.height - kMeetingMargin);
        g.center = c;
        g.moving = uniform() < cfg_.moving_group_ratio;
        g.duration = cfg_.resting_duration_min +
                     uniform() * (cfg_.resting_duration_max - cfg_.resting_duration_min);
        const std::size_t gi = groups_.size();
        for (std::size_t m : g.members) {
            walkers_[m].mode = Mode::Approaching;
            walkers_[m].group = gi;
            walkers_[m].jitter = cfg_.angle_jitter_sigma * gauss();
        }
        groups_.push_back(std::move(g));
    }

    static double dist2(const Point& a, const Point& b) {
        return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
    }

    void walk(Walker& w) {
        const double target_speed = cfg_.speed_chain.speeds[w.speed_state];
        w.speed = alpha_ * w.speed + (1.0 - alpha_) * target_speed +
                  noise_scale_ * cfg_.speed_sigma * gauss();
        w.speed = std::clamp(w.speed, 0.0, cfg_.walk_speed());

        const bool near_edge = w.pos.x < kEdgeZone || w.pos.y < kEdgeZone ||
                               w.pos.x > cfg_.width - kEdgeZone ||
                               w.pos.y > cfg_.height - kEdgeZone;
        if (near_edge) {
            w.mean_heading = std::atan2(cfg_.height / 2 - w.pos.y, cfg_.width / 2 - w.pos.x);
            // unwrap toward current heading so the average turns the short way
            while (w.mean_heading - w.heading > std::numbers::pi) w.mean_heading -= kTwoPi;
            while (w.mean_heading - w.heading < -std::numbers::pi) w.mean_heading += kTwoPi;
        }
        w.heading = alpha_ * w.heading + (1.0 - alpha_) * w.mean_heading +
                    noise_scale_ * cfg_.heading_sigma * gauss();
        w.pos.x += w.speed * std::cos(w.heading) * dt_;
        w.pos.y += w.speed * std::sin(w.heading) * dt_;
        reflect(w);
        if (w.speed > 0.05) w.shoulder = w.heading;
    }

    void reflect(Walker& w) {
        if (w.pos.x < 0.0) {
            w.pos.x = -w.pos.x;
            w.heading = std::numbers::pi - w.heading;
        } else if (w.pos.x > cfg_.width) {
            w.pos.x = 2 * cfg_.width - w.pos.x;
            w.heading = std::numbers::pi - w.heading;
        }
        if (w.pos.y < 0.0) {
            w.pos.y = -w.pos.y;
            w.heading = -w.heading;
        } else if (w.pos.y > cfg_.height) {
            w.pos.y = 2 * cfg_.height - w.pos.y;
            w.heading = -w.heading;
        }
        w.pos.x = std::clamp(w.pos.x, 0.0, cfg_.width);
        w.pos.y = std::clamp(w.pos.y, 0.0, cfg_.height);
    }

    void approach(Walker& w, const Group& g) {
        const double dx = g.center.x - w.pos.x;
        const double dy = g.center.y - w.pos.y;
        const double d = std::hypot(dx, dy);
        if (d <= cfg_.interaction_distance) {
            w.mode = Mode::Arrived;
            return;
        }
        const double step = std::min(cfg_.walk_speed() * dt_, d - 0.5 * cfg_.interaction_distance);
        w.heading = std::atan2(dy, dx);
        w.shoulder = w.heading;
        w.pos.x += step * dx / d;
        w.pos.y += step * dy / d;
        if (d - step <= cfg_.interaction_distance) w.mode = Mode::Arrived;
    }

    void arrange(const Group& g, const std::vector<std::size_t>& who) {
        if (who.empty()) return;
        std::vector<Point> pts;
        for (std::size_t m : who) pts.push_back(walkers_[m].pos);
        if (pts.size() >= 2) {
            ForceParams fp{cfg_.force_k_center, cfg_.force_k_repel, dt_, cfg_.walk_speed() * dt_};
            pts = force_step(pts, g.center, fp);
        }
        for (std::size_t k = 0; k < who.size(); ++k) {
            auto& w = walkers_[who[k]];
            w.pos = {std::clamp(pts[k].x, 0.0, cfg_.width), std::clamp(pts[k].y, 0.0, cfg_.height)};
            w.shoulder = std::atan2(g.center.y - w.pos.y, g.center.x - w.pos.x) + w.jitter;
        }
    }

    void move_group(Group& g) {
        g.heading += std::sqrt(dt_) * 0.1 * gauss();
        double nx = g.center.x + cfg_.group_speed * std::cos(g.heading) * dt_;
        double ny = g.center.y + cfg_.group_speed * std::sin(g.heading) * dt_;
        if (nx < kMeetingMargin || nx > cfg_.width - kMeetingMargin) {
            g.heading = std::numbers::pi - g.heading;
            nx = g.center.x;
        }
        if (ny < kMeetingMargin || ny > cfg_.height - kMeetingMargin) {
            g.heading = -g.heading;
            ny = g.center.y;
        }
        g.center = {nx, ny};
        for (std::size_t k = 0; k < g.members.size(); ++k) {
            auto& w = walkers_[g.members[k]];
            w.pos = {std::clamp(g.center.x + g.offsets[k].x, 0.0, cfg_.width),
                     std::clamp(g.center.y + g.offsets[k].y, 0.0, cfg_.height)};
            w.shoulder = g.heading + w.jitter;
        }
    }

    void dissolve(Group& g) {
        g.done = true;
        for (std::size_t m : g.members) {
            auto& w = walkers_[m];
            w.mode = Mode::Walking;
            w.group.reset();
            w.heading = uniform() * kTwoPi;
            w.mean_heading = w.heading;
            w.speed = 0.0;
        }
    }

    void advance(double t) {
        for (auto& w : walkers_) {
            if (w.mode == Mode::Walking) walk(w);
        }
        for (auto& g : groups_) {
            if (g.done) continue;
            if (!g.formed_at) {
                std::vector<std::size_t> arrived;
                for (std::size_t m : g.members) {
                    auto& w = walkers_[m];
                    if (w.mode == Mode::Approaching) approach(w, g);
                    if (w.mode == Mode::Arrived) arrived.push_back(m);
                }
                arrange(g, arrived);
                if (arrived.size() == g.members.size()) {
                    g.formed_at = t;
                    for (std::size_t m : g.members) {
                        walkers_[m].mode = g.moving ? Mode::Moving : Mode::Resting;
                    }
                    if (g.moving) {
                        g.heading = uniform() * kTwoPi;
                        for (std::size_t m : g.members) {
                            g.offsets.push_back({walkers_[m].pos.x - g.center.x,
                                                 walkers_[m].pos.y - g.center.y});
                        }
                    }
                }
                continue;
            }
            if (t - *g.formed_at >= g.duration) {
                dissolve(g);
                continue;
            }
            if (g.moving) {
                move_group(g);
            } else {
                arrange(g, g.members);
            }
        }
    }

    TraceFrame frame(double t) const {
        TraceFrame f;
        f.time = seconds_to_duration(t);
        for (std::size_t i = 0; i < walkers_.size(); ++i) {
            const auto& w = walkers_[i];
            f.agents.push_back(AgentPose{AgentId{i + 1}, w.pos.x, w.pos.y, normalize_angle(w.shoulder)});
        }
        return f;
    }

    Partition truth() const {
        std::vector<std::vector<AgentId>> blocks;
        std::vector<bool> placed(walkers_.size(), false);
        for (const auto& g : groups_) {
            if (g.done) continue;
            std::vector<AgentId> block;
            for (std::size_t m : g.members) {
                const bool labeled =
                    g.formed_at || (cfg_.label_waiting_phase && walkers_[m].mode == Mode::Arrived);
                if (labeled) block.push_back(AgentId{m + 1});
            }
            if (block.size() < 2) continue;
            for (AgentId id : block) placed[id.value - 1] = true;
            blocks.push_back(std::move(block));
        }
        for (std::size_t i = 0; i < walkers_.size(); ++i) {
            if (!placed[i]) blocks.push_back({AgentId{i + 1}});
        }
        return Partition(std::move(blocks));
    }

    const MobilityConfig& cfg_;
    double dt_;
    double alpha_ = 0.0;
    double noise_scale_ = 0.0;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::vector<Walker> walkers_;
    std::vector<Group> groups_;
};

}  // namespace

void MobilityConfig::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw InvalidConfig("area must be positive");
    const auto& chain = speed_chain;
    if (chain.speeds.empty() || chain.transition.size() != chain.speeds.size()) {
        throw InvalidConfig("speed chain needs one transition row per speed level");
    }
    for (const auto& row : chain.transition) {
        if (row.size() != chain.speeds.size() || !probabilities_sum_to_one(row)) {
            throw InvalidConfig("speed transition rows must be probability vectors");
        }
    }
    for (double s : chain.speeds) {
        if (s < 0.0) throw InvalidConfig("speeds must be non-negative");
    }
    if (gauss_markov_alpha < 0.0 || gauss_markov_alpha > 1.0) {
        throw InvalidConfig("gauss_markov_alpha must lie in [0,1]");
    }
    if (group_formation_rate < 0.0) throw InvalidConfig("group_formation_rate must be >= 0");
    std::vector<double> sizes;
    for (const auto& [size, p] : group_size_distribution) {
        if (size < 2) throw InvalidConfig("group sizes must be >= 2");
        sizes.push_back(p);
    }
    if (sizes.empty() || !probabilities_sum_to_one(sizes)) {
        throw InvalidConfig("group size probabilities must sum to 1");
    }
    if (resting_duration_min < 0.0 || resting_duration_max < resting_duration_min) {
        throw InvalidConfig("resting duration range is invalid");
    }
    if (moving_group_ratio < 0.0 || moving_group_ratio > 1.0) {
        throw InvalidConfig("moving_group_ratio must lie in [0,1]");
    }
    if (!(force_k_center > 0.0) || !(force_k_repel > 0.0)) {
        throw InvalidConfig("force gains must be positive");
    }
    if (!(interaction_distance > 0.0)) throw InvalidConfig("interaction_distance must be positive");
    if (angle_jitter_sigma < 0.0 || heading_sigma < 0.0 || speed_sigma < 0.0) {
        throw InvalidConfig("noise scales must be non-negative");
    }
}

double MobilityConfig::walk_speed() const {
    const double top = *std::max_element(speed_chain.speeds.begin(), speed_chain.speeds.end());
    return top > 0.0 ? top : 1.4;
}

Trace generate(const MobilityConfig& config, double duration, double dt) {
    config.validate();
    if (!(duration > 0.0) || !(dt > 0.0)) throw InvalidConfig("duration and dt must be positive");
    Generator gen(config, dt);
    return gen.run(duration);
}

std::vector<Point> force_step(std::span<const Point> members, Point center, const ForceParams& params) {
    const std::size_t n = members.size();
    std::vector<Point> out(members.begin(), members.end());
    for (std::size_t i = 0; i < n; ++i) {
        const Point& x = members[i];
        double fx = params.k_center * (center.x - x.x);
        double fy = params.k_center * (center.y - x.y);

        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) others.push_back(j);
        }
        auto d2 = [&](std::size_t j) {
            return (members[j].x - x.x) * (members[j].x - x.x) +
                   (members[j].y - x.y) * (members[j].y - x.y);
        };
        std::stable_sort(others.begin(), others.end(),
                         [&](std::size_t a, std::size_t b) { return d2(a) < d2(b); });
        if (others.size() > 2) others.resize(2);
        for (std::size_t j : others) {
            const double rx = x.x - members[j].x;
            const double ry = x.y - members[j].y;
            const double r = std::max(std::hypot(rx, ry), kRepelClamp);
            fx += params.k_repel * rx / (r * r);
            fy += params.k_repel * ry / (r * r);
        }

        double sx = fx * params.dt;
        double sy = fy * params.dt;
        const double len = std::hypot(sx, sy);
        if (len > params.max_step && len > 0.0) {
            sx *= params.max_step / len;
            sy *= params.max_step / len;
        }
        out[i] = {x.x + sx, x.y + sy};
    }
    return out;
}

double normalize_angle(double radians) {
    double a = std::fmod(radians, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

}  // namespace socsit
