#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "armsim/nominal_planner.hpp"
#include "armsim/rmpc_controller.hpp"
#include "armsim/world.hpp"

namespace armsim {

enum class Mode { kNominal, kRmpc, kBlending };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::kNominal: return "nominal";
        case Mode::kRmpc: return "rmpc";
        case Mode::kBlending: return "blending";
    }
    return "nominal";
}

struct SupervisorConfig {
    double d_act = 1.5;    // activate RMPC below this predicted distance
    double d_deact = 2.5;  // deactivation threshold (hysteresis band)
    int n_safe = 10;       // consecutive safe steps before leaving RMPC
    double t_blend = 0.5;  // seconds of linear blending back to nominal

    bool valid() const { return d_deact > d_act && d_act > 0.0 && n_safe >= 1 && t_blend >= 0.0; }
};

// Minimum over all obstacles and horizon steps of the planar surface distance
// between the predicted obstacle position and the end-effector's current
// planar position (center distance minus footprint radius, clamped at 0).
// +infinity when there is nothing to avoid.
inline double min_predicted_distance(const std::vector<PredictedPath>& paths,
                                     const Eigen::Vector3d& p4) {
    double d = std::numeric_limits<double>::infinity();
    const Eigen::Vector2d pe{p4.x(), p4.y()};
    for (const auto& p : paths)
        for (const auto& pos : p.positions)
            d = std::min(d, std::max(0.0, (pos - pe).norm() - p.radius));
    return d;
}

struct ModeState {
    Mode mode = Mode::kNominal;
    int safe_streak = 0;
    double blend_progress = 0.0;  // in [0, 1], meaningful in kBlending
};

// Hysteresis switching: activation on d_min < d_act, deactivation only after
// n_safe consecutive steps above d_deact, then a timed blend back. Returns
// the transition tag ("" when the mode is unchanged).
inline std::string decide_mode(ModeState& s, double d_min, const SupervisorConfig& cfg,
                               double dt) {
    switch (s.mode) {
        case Mode::kNominal:
            if (d_min < cfg.d_act) {
                s.mode = Mode::kRmpc;
                s.safe_streak = 0;
                return "nominal->rmpc";
            }
            return "";
        case Mode::kRmpc:
            if (d_min > cfg.d_deact) {
                if (++s.safe_streak >= cfg.n_safe) {
                    s.mode = Mode::kBlending;
                    s.blend_progress = 0.0;
                    s.safe_streak = 0;
                    return "rmpc->blending";
                }
            } else {
                s.safe_streak = 0;
            }
            return "";
        case Mode::kBlending:
            if (d_min < cfg.d_act) {
                s.mode = Mode::kRmpc;
                s.safe_streak = 0;
                return "blending->rmpc";
            }
            s.blend_progress = cfg.t_blend <= 0.0
                                   ? 1.0
                                   : std::min(1.0, s.blend_progress + dt / cfg.t_blend);
            if (s.blend_progress >= 1.0) {
                s.mode = Mode::kNominal;
                return "blending->nominal";
            }
            return "";
    }
    return "";
}

// Convex combination used while easing back to the nominal controller:
// lambda = 1 restores nominal authority completely.
inline ControlInput blend_inputs(const ControlInput& u_nominal, const ControlInput& u_rmpc,
                                 double lambda) {
    const auto a = u_nominal.to_array();
    const auto b = u_rmpc.to_array();
    std::array<double, 4> mix{};
    for (int i = 0; i < 4; ++i) mix[i] = lambda * a[i] + (1.0 - lambda) * b[i];
    return ControlInput::from_array(mix);
}

struct SupervisorDiagnostics {
    double d_min = std::numeric_limits<double>::infinity();
    Mode mode = Mode::kNominal;
    std::string switch_event;
    bool solved = false;  // an RMPC solve ran this step
    SolveStatus solve_status = SolveStatus::kConverged;
    bool fallback = false;  // infeasible solve, max-rate ascent applied
    double slack0 = 0.0;
    double slack_max = 0.0;
    double solve_time_s = 0.0;
    int iterations = 0;
    double z_floor0 = 0.0;  // step-0 tightened floor in effect
    double radial_bound0 = 0.0;
};

struct SupervisorSetup {
    ArmGeometry geom;
    JointLimits joint_limits;
    InputLimits input_limits;
    WorkspaceSet workspace;
    DisturbanceBounds disturbance;
    PhasePlan plan;
    SupervisorConfig cfg;
    int np = 10;
    double dt = 0.1;
    CostWeights weights;
    double eps_max = 3.0;
    double track_weight = 12.0;
    TighteningMode tightening = TighteningMode::kGrowing;
    SolverConfig solver;
};

// Per-step mode supervision: measurement prediction, collision-imminence
// detection, constraint tightening and RMPC dispatch, and the blended return
// to the nominal phase controller. Owns the mode state and warm starts; one
// control_step at a time.
class Supervisor {
public:
    explicit Supervisor(const SupervisorSetup& s) : s_(s) {}

    ControlInput control_step(const JointState& q, PhaseProgress& progress,
                              const std::vector<Measurement>& measurements,
                              SupervisorDiagnostics& diag) {
        std::vector<PredictedPath> paths;
        paths.reserve(measurements.size());
        for (const auto& m : measurements) paths.push_back(predict_path(m, s_.np, s_.dt));

        const CartesianPoints pts = fk_points(q, s_.geom);
        diag.d_min = min_predicted_distance(paths, pts.p4);
        diag.switch_event = decide_mode(mode_, diag.d_min, s_.cfg, s_.dt);
        diag.mode = mode_.mode;
        diag.z_floor0 = s_.workspace.z_min;
        diag.radial_bound0 = s_.workspace.r_arm;

        // The phase machine keeps running in every mode; its target is what
        // the RMPC tracks, and dwell/advance bookkeeping must not stall
        // while avoidance is active.
        auto [u_nom, next_progress] = nominal_control(q, progress, s_.plan,
                                                      s_.input_limits, s_.dt);
        progress = next_progress;

        ControlInput u = u_nom;
        switch (mode_.mode) {
            case Mode::kNominal:
                warm_.reset();
                break;
            case Mode::kRmpc:
                u = rmpc_step(q, u_nom, paths, diag);
                u_rmpc_last_ = u;
                break;
            case Mode::kBlending:
                u = blend_inputs(u_nom, u_rmpc_last_, mode_.blend_progress);
                warm_.reset();
                break;
        }
        return clamp_input(u, s_.input_limits);
    }

    Mode mode() const { return mode_.mode; }
    const ModeState& mode_state() const { return mode_; }

private:
    ControlInput rmpc_step(const JointState& q, const ControlInput& u_nom,
                           const std::vector<PredictedPath>& paths,
                           SupervisorDiagnostics& diag) {
        const DisturbanceBounds3 w3 = DisturbanceBounds3::from_bounds(s_.disturbance, s_.dt);
        const std::vector<double> floors =
            interfering_floor(paths, s_.workspace.r_arm, s_.workspace.z_min, s_.np);
        const TightenedWorkspace xr =
            tighten_workspace(s_.workspace, w3, floors, s_.np, s_.tightening);

        RmpcProblem prob;
        prob.x0 = q;
        prob.np = s_.np;
        prob.dt = s_.dt;
        prob.geom = s_.geom;
        prob.joint_limits = s_.joint_limits;
        prob.input_limits = s_.input_limits;
        prob.workspace = xr;
        prob.weights = s_.weights;
        prob.eps_max = s_.eps_max;
        prob.solver = s_.solver;
        // Track the nominal controller's one-step reference: the safety mode
        // keeps the task moving at the nominal pace and deviates only where
        // the tightened constraints demand it.
        prob.target = TrackingTarget{step(q, u_nom, s_.dt), s_.track_weight};

        const RmpcSolution sol = solve_rmpc(prob, warm_);
        diag.solved = true;
        diag.solve_status = sol.status;
        diag.solve_time_s = sol.solve_time_s;
        diag.iterations = sol.iterations;
        diag.slack0 = sol.slacks.empty() ? 0.0 : sol.slacks[0];
        diag.slack_max = sol.max_slack();
        diag.z_floor0 = xr.steps() > 0 ? xr.z_floor[0] : s_.workspace.z_min;
        diag.radial_bound0 = xr.steps() > 0 ? xr.radial_bound[0] : s_.workspace.r_arm;

        if (sol.status == SolveStatus::kInfeasible) {
            // Safest fallback: climb at the maximum rate the input box allows.
            diag.fallback = true;
            warm_.reset();
            const PlanarFk f = planar_fk(q, s_.geom);
            std::array<double, 4> u{};
            for (int i = 0; i < 3; ++i) {
                if (f.dz[i] > 0.0)
                    u[i] = s_.input_limits.hi[i];
                else if (f.dz[i] < 0.0)
                    u[i] = s_.input_limits.lo[i];
            }
            return ControlInput::from_array(u);
        }
        warm_ = sol;
        return sol.controls.front();
    }

    SupervisorSetup s_;
    ModeState mode_;
    ControlInput u_rmpc_last_{};
    std::optional<RmpcSolution> warm_;
};

}  // namespace armsim
