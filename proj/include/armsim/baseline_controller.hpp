#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "armsim/nominal_planner.hpp"
#include "armsim/world.hpp"

namespace armsim {

enum class SafetyRegion { kSafe, kActive, kCritical };

inline const char* to_string(SafetyRegion r) {
    switch (r) {
        case SafetyRegion::kSafe: return "safe";
        case SafetyRegion::kActive: return "active";
        case SafetyRegion::kCritical: return "critical";
    }
    return "safe";
}

// Distance-region comparison controller: nominal speed when clear, linear
// speed reduction plus a repulsive steering bias in the active band, full
// stop inside the critical radius.
struct BaselineConfig {
    double r2 = 3.0;         // active-region outer radius
    double r3 = 1.5;         // critical radius
    double k = 1.0;          // repulsion gain
    double v_nominal = 1.0;  // nominal speed scale in (0, 1]

    bool valid() const {
        return r2 > r3 && r3 > 0.0 && k > 0.0 && v_nominal > 0.0 && v_nominal <= 1.0;
    }
};

inline SafetyRegion region(double d, const BaselineConfig& cfg) {
    if (d > cfg.r2) return SafetyRegion::kSafe;
    if (d < cfg.r3) return SafetyRegion::kCritical;
    return SafetyRegion::kActive;
}

// Inverse-square repulsion -k*(p_r - p_h)/|p_r - p_h|^3. Coincident points
// are degenerate (no direction); the caller treats that as a critical stop.
inline std::optional<Eigen::Vector2d> repulsive_force(const Eigen::Vector2d& p_r,
                                                      const Eigen::Vector2d& p_h,
                                                      double k) {
    const Eigen::Vector2d diff = p_r - p_h;
    const double d = diff.norm();
    if (d <= 0.0) return std::nullopt;
    return Eigen::Vector2d(-k * diff / (d * d * d));
}

struct BaselineDiagnostics {
    double d_min = std::numeric_limits<double>::infinity();
    SafetyRegion region = SafetyRegion::kSafe;
    std::string switch_event;
};

class BaselineController {
public:
    BaselineController(const ArmGeometry& geom, const InputLimits& il,
                       const PhasePlan& plan, const BaselineConfig& cfg)
        : geom_(geom), il_(il), plan_(plan), cfg_(cfg) {}

    ControlInput control_step(const JointState& q, PhaseProgress& progress,
                              const std::vector<Measurement>& measurements,
                              double dt, BaselineDiagnostics& diag) {
        const CartesianPoints pts = fk_points(q, geom_);
        const Eigen::Vector2d p_r{pts.p4.x(), pts.p4.y()};

        // Center distance to the nearest measured object.
        double d = std::numeric_limits<double>::infinity();
        const Measurement* nearest = nullptr;
        for (const auto& m : measurements) {
            const double dm = (m.position - p_r).norm();
            if (dm < d) {
                d = dm;
                nearest = &m;
            }
        }
        diag.d_min = d;
        const SafetyRegion r = region(d, cfg_);
        if (r != last_region_) {
            diag.switch_event =
                std::string(to_string(last_region_)) + "->" + to_string(r);
            last_region_ = r;
        }
        diag.region = r;

        auto [u_nom, next_progress] = nominal_control(q, progress, plan_, il_, dt);
        progress = next_progress;

        switch (r) {
            case SafetyRegion::kSafe: {
                const auto a = u_nom.to_array();
                std::array<double, 4> u{};
                for (int i = 0; i < 4; ++i) u[i] = a[i] * cfg_.v_nominal;
                return ControlInput::from_array(u);
            }
            case SafetyRegion::kCritical:
                return ControlInput{};
            case SafetyRegion::kActive: {
                const double scale = (d - cfg_.r3) / (cfg_.r2 - cfg_.r3);
                const auto a = u_nom.to_array();
                std::array<double, 4> u{};
                for (int i = 0; i < 4; ++i) u[i] = a[i] * cfg_.v_nominal * scale;
                // Map the repulsion's azimuthal component into a base-rotation
                // bias: theta_dot = F . dp/dtheta / |dp/dtheta|^2 with
                // dp/dtheta = (-y4, x4).
                if (nearest != nullptr) {
                    const auto f = repulsive_force(p_r, nearest->position, cfg_.k);
                    const double rr = p_r.squaredNorm();
                    if (f && rr > 1e-12) {
                        const Eigen::Vector2d jtheta{-p_r.y(), p_r.x()};
                        u[3] += f->dot(jtheta) / rr;
                    }
                }
                return clamp_input(ControlInput::from_array(u), il_);
            }
        }
        return ControlInput{};
    }

private:
    ArmGeometry geom_;
    InputLimits il_;
    PhasePlan plan_;
    BaselineConfig cfg_;
    SafetyRegion last_region_ = SafetyRegion::kSafe;
};

}  // namespace armsim
