#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "armsim/arm_model.hpp"
#include "armsim/invariant_set.hpp"

namespace armsim {

struct Phase {
    std::string name;
    JointState target;
    double dwell = 0.0;       // seconds to hold at the target before advancing
    double rate_scale = 1.0;  // in (0, 1]
};

struct PhasePlan {
    std::vector<Phase> phases;
    double gain = 2.0;        // proportional tracking gain, 1/s
    double tolerance = 0.02;  // per-joint convergence tolerance, rad

    bool valid() const {
        if (phases.empty() || gain <= 0.0 || tolerance <= 0.0) return false;
        for (const auto& ph : phases)
            if (!(ph.dwell >= 0.0) || !(ph.rate_scale > 0.0 && ph.rate_scale <= 1.0))
                return false;
        return true;
    }
};

struct PhaseProgress {
    int index = 0;
    double dwell_remaining = 0.0;
    int cycles = 0;

    static PhaseProgress start_of(const PhasePlan& plan) {
        return {0, plan.phases.front().dwell, 0};
    }
};

// Proportional rate command toward the current phase target, saturated and
// then scaled by the phase's rate factor. When every joint error is inside
// the tolerance and the dwell has elapsed, the phase advances (wrapping
// cyclically and counting cycles); the input for the already-converged phase
// is the zero command.
inline std::pair<ControlInput, PhaseProgress> nominal_control(const JointState& q,
                                                              PhaseProgress progress,
                                                              const PhasePlan& plan,
                                                              const InputLimits& lim,
                                                              double dt) {
    const Phase& ph = plan.phases[static_cast<std::size_t>(progress.index)];
    const auto qa = q.to_array();
    const auto ta = ph.target.to_array();

    bool converged = true;
    std::array<double, 4> rate{};
    for (int i = 0; i < 4; ++i) {
        const double err = ta[i] - qa[i];
        if (std::fabs(err) >= plan.tolerance) converged = false;
        rate[i] = plan.gain * err;
    }
    ControlInput u = clamp_input(ControlInput::from_array(rate), lim);
    u = {u.d_alpha * ph.rate_scale, u.d_beta * ph.rate_scale, u.d_gamma * ph.rate_scale,
         u.d_theta * ph.rate_scale};

    if (converged) {
        progress.dwell_remaining -= dt;
        if (progress.dwell_remaining <= 0.0) {
            progress.index += 1;
            if (progress.index >= static_cast<int>(plan.phases.size())) {
                progress.index = 0;
                progress.cycles += 1;
            }
            progress.dwell_remaining =
                plan.phases[static_cast<std::size_t>(progress.index)].dwell;
        }
    }
    return {u, progress};
}

struct PlanViolation {
    int phase = 0;        // segment start phase
    int sample = 0;       // sample index along the segment (0 = the target itself)
    JointState state;
    Membership status = Membership::kNotMember;
};

struct PlanReport {
    std::vector<PlanViolation> violations;
    bool ok() const { return violations.empty(); }
};

// Checks every phase target and a dense joint-space interpolation between
// consecutive targets (wrapping) against the invariant grid: all of them must
// snap to member cells.
inline PlanReport validate_plan(const PhasePlan& plan, const InvariantGrid& grid,
                                int samples_per_segment = 20) {
    PlanReport report;
    const int n = static_cast<int>(plan.phases.size());
    for (int p = 0; p < n; ++p) {
        const auto a = plan.phases[static_cast<std::size_t>(p)].target.to_array();
        const auto b = plan.phases[static_cast<std::size_t>((p + 1) % n)].target.to_array();
        for (int s = 0; s <= samples_per_segment; ++s) {
            const double t = static_cast<double>(s) / samples_per_segment;
            std::array<double, 4> v{};
            for (int i = 0; i < 4; ++i) v[i] = a[i] + t * (b[i] - a[i]);
            const JointState q = JointState::from_array(v);
            const Membership m = grid.nearest(q);
            if (m != Membership::kMember) report.violations.push_back({p, s, q, m});
        }
    }
    return report;
}

}  // namespace armsim
