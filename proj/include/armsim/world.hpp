#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "armsim/geometry_sets.hpp"
#include "armsim/rng.hpp"

namespace armsim {

// A moving vertical cylinder on a straight constant-velocity path.
struct Obstacle {
    Eigen::Vector2d p0{0.0, 0.0};
    double speed = 0.0;    // m/s, >= 0
    double heading = 0.0;  // rad
    double height = 1.0;   // m, > 0
    double radius = 0.3;   // footprint radius, m
    double spawn_time = 0.0;
};

struct Measurement {
    int id = 0;
    Eigen::Vector2d position{0.0, 0.0};  // exact; only speed and height are noisy
    double speed = 0.0;
    double heading = 0.0;
    double height = 0.0;
    double radius = 0.3;
    double stamp = 0.0;
};

// Constant-velocity extrapolation of a measurement. positions[i-1] holds the
// prediction for t + i*dt (i = 1..Np); origin is the measured position at the
// stamp itself.
struct PredictedPath {
    Eigen::Vector2d origin{0.0, 0.0};
    std::vector<Eigen::Vector2d> positions;
    double height = 0.0;
    double radius = 0.3;
    std::vector<double> stamps;
};

struct SpawnConfig {
    double r_detect = 8.0;
    double rate = 0.0;  // Poisson arrivals per second; 0 disables spawning
    double speed_min = 0.3;
    double speed_max = 1.0;
    double height_min = 2.8;
    double height_max = 4.4;
    double radius = 0.3;
};

// Draw order: boundary angle, heading offset, speed, height. The obstacle
// starts on the detectable circle heading inward within +-pi/4 of the inward
// normal.
inline Obstacle spawn_obstacle(SplitMix64& rng, const SpawnConfig& cfg, double t) {
    Obstacle o;
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double offset = rng.uniform(-M_PI_4, M_PI_4);
    o.p0 = {cfg.r_detect * std::cos(angle), cfg.r_detect * std::sin(angle)};
    o.heading = angle + M_PI + offset;
    o.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    o.height = rng.uniform(cfg.height_min, cfg.height_max);
    o.radius = cfg.radius;
    o.spawn_time = t;
    return o;
}

inline Eigen::Vector2d true_position(const Obstacle& o, double t) {
    const double dt = t - o.spawn_time;
    return o.p0 + o.speed * dt * Eigen::Vector2d{std::cos(o.heading), std::sin(o.heading)};
}

// Position is measured exactly; speed and height carry bounded uniform noise.
// Measured speed is clamped at zero (it cannot be negative), which can only
// shrink the deviation from truth, so the bound still holds.
inline Measurement measure(const Obstacle& o, int id, double t, SplitMix64& rng,
                           const DisturbanceBounds& b) {
    Measurement m;
    m.id = id;
    m.position = true_position(o, t);
    m.speed = std::max(0.0, o.speed + rng.uniform(-b.delta_v, b.delta_v));
    m.heading = o.heading;
    m.height = o.height + rng.uniform(-b.delta_z, b.delta_z);
    m.radius = o.radius;
    m.stamp = t;
    return m;
}

inline PredictedPath predict_path(const Measurement& m, int np, double dt) {
    PredictedPath p;
    p.origin = m.position;
    p.height = m.height;
    p.radius = m.radius;
    p.positions.resize(static_cast<std::size_t>(np));
    p.stamps.resize(static_cast<std::size_t>(np));
    const Eigen::Vector2d v = m.speed * Eigen::Vector2d{std::cos(m.heading), std::sin(m.heading)};
    for (int i = 1; i <= np; ++i) {
        p.positions[static_cast<std::size_t>(i - 1)] = m.position + v * (i * dt);
        p.stamps[static_cast<std::size_t>(i - 1)] = m.stamp + i * dt;
    }
    return p;
}

// Per-step dynamic z floor: at prediction step k the floor is the maximum
// measured height over obstacles whose position at t + k*dt (origin for
// k = 0) lies within r_arm + radius of the base, or z_min when none does.
inline std::vector<double> interfering_floor(const std::vector<PredictedPath>& paths,
                                             double r_arm, double z_min, int np) {
    std::vector<double> floor(static_cast<std::size_t>(np), z_min);
    for (const auto& p : paths) {
        for (int k = 0; k < np; ++k) {
            const Eigen::Vector2d& pos =
                k == 0 ? p.origin : p.positions[static_cast<std::size_t>(k - 1)];
            if (pos.norm() <= r_arm + p.radius)
                floor[static_cast<std::size_t>(k)] =
                    std::max(floor[static_cast<std::size_t>(k)], p.height);
        }
    }
    return floor;
}

// World state: the fixed obstacle list plus any Poisson arrivals. Advancing
// and measuring consume the run's random stream in a fixed order, so a seed
// fully determines every observation.
class World {
public:
    World(std::vector<Obstacle> fixed, const SpawnConfig& spawn, double dt)
        : obstacles_(std::move(fixed)), spawn_(spawn), dt_(dt) {}

    // Poisson arrivals via Knuth's product method on the per-step budget.
    void advance(double t, SplitMix64& rng) {
        if (spawn_.rate <= 0.0) return;
        const double l = std::exp(-spawn_.rate * dt_);
        int k = 0;
        double prod = 1.0;
        while (true) {
            prod *= rng.uniform01();
            if (prod <= l) break;
            ++k;
        }
        for (int i = 0; i < k; ++i) obstacles_.push_back(spawn_obstacle(rng, spawn_, t));
    }

    // Obstacles currently inside the detectable circle, in id order.
    std::vector<Measurement> measure_all(double t, SplitMix64& rng,
                                         const DisturbanceBounds& b) const {
        std::vector<Measurement> out;
        for (std::size_t i = 0; i < obstacles_.size(); ++i) {
            const Obstacle& o = obstacles_[i];
            if (t < o.spawn_time) continue;
            if (true_position(o, t).norm() > spawn_.r_detect) continue;
            out.push_back(measure(o, static_cast<int>(i), t, rng, b));
        }
        return out;
    }

    const std::vector<Obstacle>& obstacles() const { return obstacles_; }
    double r_detect() const { return spawn_.r_detect; }

private:
    std::vector<Obstacle> obstacles_;
    SpawnConfig spawn_;
    double dt_;
};

}  // namespace armsim
