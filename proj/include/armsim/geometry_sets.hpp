#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "armsim/arm_model.hpp"

namespace armsim {

// Cylindrical workspace bound for the end-effector: x^2 + y^2 <= R_arm^2,
// z_min <= z <= z_max. R_arm is the turning-radius bound including safety
// margin.
struct WorkspaceSet {
    double r_arm = 5.0;
    double z_min = 0.0;
    double z_max = 6.0;

    bool valid() const { return r_arm > 0.0 && z_min < z_max; }

    bool contains(double rho, double z) const {
        return rho * rho <= r_arm * r_arm && z_min <= z && z <= z_max;
    }
};

// Bounds on obstacle measurement uncertainty: velocity (m/s) and height (m).
struct DisturbanceBounds {
    double delta_v = 0.5;
    double delta_z = 0.1;

    bool valid() const { return delta_v >= 0.0 && delta_z >= 0.0; }
};

// Velocity uncertainty accumulated over one step becomes a radial
// displacement bound.
inline double radial_displacement(double delta_v, double dt) { return delta_v * dt; }

// Product disturbance set in R^3: |w_r| <= delta_r, |w_v| <= delta_v,
// |w_z| <= delta_z. delta_r is derived from delta_v (delta_r = delta_v*dt);
// both are kept because the radial and velocity components are used by
// different consumers.
struct DisturbanceBounds3 {
    double delta_r = 0.0;
    double delta_v = 0.0;
    double delta_z = 0.0;

    static DisturbanceBounds3 from_bounds(const DisturbanceBounds& b, double dt) {
        return {radial_displacement(b.delta_v, dt), b.delta_v, b.delta_z};
    }

    bool valid() const { return delta_r >= 0.0 && delta_v >= 0.0 && delta_z >= 0.0; }
};

// Closed interval with a distinct empty state (the Pontryagin difference of
// boxes can erode to nothing).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool is_empty = false;

    static Interval make(double lo, double hi) { return {lo, hi, !(lo <= hi)}; }
    static Interval empty() { return {0.0, 0.0, true}; }

    bool contains(double x) const { return !is_empty && lo <= x && x <= hi; }
    double width() const { return is_empty ? 0.0 : hi - lo; }
};

// a (-) b = {x : x + w in a for all w in b}. For intervals this is
// [a.lo - b.lo, a.hi - b.hi], empty when that collapses.
inline Interval pontryagin_diff_interval(const Interval& a, const Interval& b) {
    if (a.is_empty || b.is_empty) return Interval::empty();
    return Interval::make(a.lo - b.lo, a.hi - b.hi);
}

enum class TighteningMode {
    kConstant,  // R_k = R_arm - delta_r at every step (the literal one-step erosion)
    kGrowing,   // R_k = R_arm - k*delta_r (covers k accumulated velocity errors)
};

// Per-prediction-step eroded workspace. The z floor carries the dynamic
// obstacle heights plus the height uncertainty; the slack variable of the
// optimizer is *not* baked in here.
struct TightenedWorkspace {
    std::vector<double> radial_bound;  // R_k, k = 0..Np-1
    std::vector<double> z_floor;       // floor_k, k = 0..Np-1
    double z_max = 0.0;
    bool feasible = true;              // false when some step eroded to empty
    int first_empty_step = -1;

    int steps() const { return static_cast<int>(radial_bound.size()); }
};

// Erode the nominal workspace by the disturbance bounds over Np steps.
// zfloor_dynamic must hold Np entries, each >= nominal.z_min (the predicted
// interfering-object height, never below the static floor). A step whose
// radial bound reaches 0 or whose floor reaches z_max marks the result
// infeasible; the caller refuses to run rather than silently clamping.
inline TightenedWorkspace tighten_workspace(const WorkspaceSet& nominal,
                                            const DisturbanceBounds3& dist,
                                            const std::vector<double>& zfloor_dynamic,
                                            int np,
                                            TighteningMode mode = TighteningMode::kGrowing) {
    TightenedWorkspace out;
    out.z_max = nominal.z_max;
    out.radial_bound.resize(np);
    out.z_floor.resize(np);
    for (int k = 0; k < np; ++k) {
        const double shrink = (mode == TighteningMode::kGrowing)
                                  ? static_cast<double>(k) * dist.delta_r
                                  : dist.delta_r;
        const double rk = nominal.r_arm - shrink;
        out.radial_bound[k] = std::max(rk, 0.0);
        out.z_floor[k] = zfloor_dynamic[static_cast<std::size_t>(k)] + dist.delta_z;
        if (rk <= 0.0 || out.z_floor[k] >= nominal.z_max) {
            out.feasible = false;
            if (out.first_empty_step < 0) out.first_empty_step = k;
        }
    }
    return out;
}

}  // namespace armsim
