#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "armsim/geometry_sets.hpp"
#include "armsim/rmpc_solver.hpp"

namespace armsim {

// Weights of the L1 stage cost. c4 penalizes the state-constraint slack and
// should dominate the input weights; c_theta covers the base-rotation input,
// which the original cost leaves unpenalized (default 0 keeps it that way).
struct CostWeights {
    double c1 = 1.0;
    double c2 = 3.0;
    double c3 = 5.0;
    double c4 = 100.0;
    double c_theta = 0.0;

    bool valid() const {
        return c1 >= 0 && c2 >= 0 && c3 >= 0 && c4 >= 0 && c_theta >= 0;
    }
    bool slack_weight_dominates() const {
        return c4 > std::max(c1, std::max(c2, c3));
    }
    std::array<double, 4> input_weights() const { return {c1, c2, c3, c_theta}; }
};

// Optional pull toward a reference configuration, applied as an L1 penalty on
// the deviation of every predicted state. The receding-horizon effect is that
// progress toward the target happens in the applied (early) inputs while the
// hard and slack-penalized safety constraints keep right of way; weight is
// sized well below c4 so the pull can never buy constraint violation cheaply.
struct TrackingTarget {
    JointState target;
    double weight = 12.0;
};

struct RmpcProblem {
    JointState x0;
    int np = 10;
    double dt = 0.1;
    ArmGeometry geom;
    JointLimits joint_limits;
    InputLimits input_limits;
    TightenedWorkspace workspace;
    CostWeights weights;
    double eps_max = 3.0;
    std::optional<TrackingTarget> target;
    SolverConfig solver;
};

struct RmpcSolution {
    std::vector<ControlInput> controls;   // np entries
    std::vector<double> slacks;           // np entries, in [0, eps_max]
    std::vector<JointState> states;       // np+1 entries, exact Euler rollout
    double objective = 0.0;               // input + slack cost of the solution
    double tracking_cost = 0.0;           // L1 tracking part, 0 without target
    SolveStatus status = SolveStatus::kMaxIterations;
    int iterations = 0;
    double solve_time_s = 0.0;
    double kkt_stat = 0.0;
    double kkt_feas = 0.0;

    double max_slack() const {
        double m = 0.0;
        for (double s : slacks) m = std::max(m, s);
        return m;
    }
};

inline double rmpc_cost(const std::vector<ControlInput>& controls,
                        const std::vector<double>& slacks, const CostWeights& w) {
    double j = 0.0;
    for (std::size_t k = 0; k < controls.size(); ++k) {
        const auto u = controls[k].to_array();
        j += w.c1 * std::fabs(u[0]) + w.c2 * std::fabs(u[1]) + w.c3 * std::fabs(u[2]) +
             w.c_theta * std::fabs(u[3]);
        j += w.c4 * slacks[k];
    }
    return j;
}

// The |u| <= s epigraph values: at the optimum of the bound variables each
// equals the absolute control component, making the smooth reformulated
// objective equal to rmpc_cost.
inline std::vector<std::array<double, 4>> epigraph_bounds(
    const std::vector<ControlInput>& controls) {
    std::vector<std::array<double, 4>> s(controls.size());
    for (std::size_t k = 0; k < controls.size(); ++k) {
        const auto u = controls[k].to_array();
        for (int i = 0; i < 4; ++i) s[k][i] = std::fabs(u[i]);
    }
    return s;
}

namespace detail {

struct RmpcLayout {
    int np = 0;
    std::vector<int> s_axes;  // axes carrying an epigraph variable
    int n_u = 0, n_s = 0, n_eps = 0, n_tau = 0;

    int u(int k, int axis) const { return 4 * k + axis; }
    int s(int k, int pos) const { return n_u + static_cast<int>(s_axes.size()) * k + pos; }
    int eps(int k) const { return n_u + n_s + k; }
    int tau(int k, int axis) const { return n_u + n_s + n_eps + 4 * (k - 1) + axis; }
    int n() const { return n_u + n_s + n_eps + n_tau; }
};

inline RmpcLayout make_layout(const RmpcProblem& p) {
    RmpcLayout l;
    l.np = p.np;
    const auto w = p.weights.input_weights();
    for (int i = 0; i < 4; ++i)
        if (w[i] > 0.0) l.s_axes.push_back(i);
    l.n_u = 4 * p.np;
    l.n_s = static_cast<int>(l.s_axes.size()) * p.np;
    l.n_eps = p.np;
    l.n_tau = p.target ? 4 * p.np : 0;
    return l;
}

inline StackedNlp assemble_rmpc(const RmpcProblem& p, const RmpcLayout& l,
                                double eps0_lb) {
    StackedNlp nlp;
    nlp.np = p.np;
    nlp.dt = p.dt;
    nlp.geom = p.geom;
    nlp.x0 = p.x0;
    const int n = l.n();
    nlp.lb.setZero(n);
    nlp.ub.setZero(n);
    nlp.cost_lin.setZero(n);
    nlp.cost_quad.setZero(n);

    const auto w = p.weights.input_weights();
    const auto x0 = p.x0.to_array();

    for (int k = 0; k < p.np; ++k)
        for (int i = 0; i < 4; ++i) {
            nlp.lb[l.u(k, i)] = p.input_limits.lo[i];
            nlp.ub[l.u(k, i)] = p.input_limits.hi[i];
        }
    for (int k = 0; k < p.np; ++k)
        for (std::size_t pos = 0; pos < l.s_axes.size(); ++pos) {
            const int axis = l.s_axes[pos];
            const int idx = l.s(k, static_cast<int>(pos));
            nlp.ub[idx] = std::max(std::fabs(p.input_limits.lo[axis]),
                                   std::fabs(p.input_limits.hi[axis]));
            nlp.cost_lin[idx] = w[axis];
        }
    for (int k = 0; k < p.np; ++k) {
        const int idx = l.eps(k);
        nlp.lb[idx] = k == 0 ? eps0_lb : 0.0;
        nlp.ub[idx] = p.eps_max;
        nlp.cost_lin[idx] = p.weights.c4;
    }
    if (p.target) {
        const auto tgt = p.target->target.to_array();
        const double horizon = p.np * p.dt;
        for (int k = 1; k <= p.np; ++k)
            for (int i = 0; i < 4; ++i) {
                const int idx = l.tau(k, i);
                const double rate =
                    std::max(std::fabs(p.input_limits.lo[i]), std::fabs(p.input_limits.hi[i]));
                nlp.ub[idx] = std::fabs(x0[i] - tgt[i]) + horizon * rate + 1.0;
                nlp.cost_lin[idx] = p.target->weight;
            }
    }

    // |u| <= s epigraph rows.
    for (int k = 0; k < p.np; ++k)
        for (std::size_t pos = 0; pos < l.s_axes.size(); ++pos) {
            const int axis = l.s_axes[pos];
            const int si = l.s(k, static_cast<int>(pos));
            nlp.lin.push_back({{{l.u(k, axis), 1.0}, {si, -1.0}}, 0.0});
            nlp.lin.push_back({{{l.u(k, axis), -1.0}, {si, -1.0}}, 0.0});
        }
    // Joint limits on the predicted states x_1 .. x_{Np-1}.
    for (int k = 1; k < p.np; ++k)
        for (int i = 0; i < 4; ++i) {
            LinearConstraint up, dn;
            for (int j = 0; j < k; ++j) {
                up.terms.push_back({l.u(j, i), p.dt});
                dn.terms.push_back({l.u(j, i), -p.dt});
            }
            up.b = p.joint_limits.hi[i] - x0[i];
            dn.b = x0[i] - p.joint_limits.lo[i];
            nlp.lin.push_back(std::move(up));
            nlp.lin.push_back(std::move(dn));
        }
    // Tracking deviation epigraph |x_k,i - tgt_i| <= tau_k,i for k = 1..Np.
    if (p.target) {
        const auto tgt = p.target->target.to_array();
        for (int k = 1; k <= p.np; ++k)
            for (int i = 0; i < 4; ++i) {
                LinearConstraint up, dn;
                for (int j = 0; j < k; ++j) {
                    up.terms.push_back({l.u(j, i), p.dt});
                    dn.terms.push_back({l.u(j, i), -p.dt});
                }
                up.terms.push_back({l.tau(k, i), -1.0});
                dn.terms.push_back({l.tau(k, i), -1.0});
                up.b = tgt[i] - x0[i];
                dn.b = x0[i] - tgt[i];
                nlp.lin.push_back(std::move(up));
                nlp.lin.push_back(std::move(dn));
            }
    }
    // Workspace constraints on x_1 .. x_{Np-1}; step 0 is the fixed initial
    // state, handled by the caller's prechecks and the eps_0 lower bound.
    for (int k = 1; k < p.np; ++k) {
        nlp.ws.push_back({StepConstraintKind::kRadial, k, p.workspace.radial_bound[k], -1});
        nlp.ws.push_back({StepConstraintKind::kCeiling, k, p.workspace.z_max, -1});
        nlp.ws.push_back({StepConstraintKind::kFloor, k, p.workspace.z_floor[k], l.eps(k)});
    }
    return nlp;
}

}  // namespace detail

inline RmpcSolution solve_rmpc(const RmpcProblem& p,
                               const std::optional<RmpcSolution>& warm = std::nullopt) {
    const auto t_start = std::chrono::steady_clock::now();
    RmpcSolution sol;
    sol.controls.assign(p.np, ControlInput{});
    sol.slacks.assign(p.np, 0.0);

    const PlanarFk f0 = planar_fk(p.x0, p.geom);
    const double floor0_gap =
        p.workspace.steps() > 0 ? p.workspace.z_floor[0] - f0.z : 0.0;

    auto finish = [&](SolveStatus status) {
        sol.status = status;
        sol.states.resize(p.np + 1);
        sol.states[0] = p.x0;
        for (int k = 0; k < p.np; ++k)
            sol.states[k + 1] = step(sol.states[k], sol.controls[k], p.dt);
        sol.objective = rmpc_cost(sol.controls, sol.slacks, p.weights);
        if (p.target) {
            const auto tgt = p.target->target.to_array();
            for (int k = 1; k <= p.np; ++k) {
                const auto xk = sol.states[k].to_array();
                for (int i = 0; i < 4; ++i)
                    sol.tracking_cost += p.target->weight * std::fabs(xk[i] - tgt[i]);
            }
        }
        sol.solve_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        return sol;
    };

    // Emptiness of the tightened set and step-0 feasibility are decided
    // before any solve: the fixed initial state either satisfies them or the
    // problem is infeasible no matter what the controls do.
    const double tol = 1e-9;
    if (!p.workspace.feasible || p.workspace.steps() != p.np) return finish(SolveStatus::kInfeasible);
    if (f0.rho * f0.rho > p.workspace.radial_bound[0] * p.workspace.radial_bound[0] + tol)
        return finish(SolveStatus::kInfeasible);
    if (f0.z > p.workspace.z_max + tol) return finish(SolveStatus::kInfeasible);
    if (floor0_gap > p.eps_max + tol) return finish(SolveStatus::kInfeasible);
    const double eps0_lb = std::clamp(floor0_gap, 0.0, p.eps_max);
    sol.slacks[0] = eps0_lb;

    const detail::RmpcLayout l = detail::make_layout(p);
    const StackedNlp nlp = detail::assemble_rmpc(p, l, eps0_lb);

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(l.n());
    if (warm && static_cast<int>(warm->controls.size()) == p.np) {
        // Shift the previous solution one step and repeat the last input.
        for (int k = 0; k < p.np; ++k) {
            const auto u = warm->controls[std::min(k + 1, p.np - 1)].to_array();
            for (int i = 0; i < 4; ++i) z0[l.u(k, i)] = u[i];
            for (std::size_t pos = 0; pos < l.s_axes.size(); ++pos)
                z0[l.s(k, static_cast<int>(pos))] = std::fabs(u[l.s_axes[pos]]);
            z0[l.eps(k)] = warm->slacks[std::min(k + 1, p.np - 1)];
        }
    }

    NlpResult r = solve_stacked_nlp(nlp, std::move(z0), p.solver);
    for (int k = 0; k < p.np; ++k) {
        sol.controls[k] = ControlInput{r.z[l.u(k, 0)], r.z[l.u(k, 1)], r.z[l.u(k, 2)],
                                       r.z[l.u(k, 3)]};
        sol.slacks[k] = r.z[l.eps(k)];
    }
    sol.iterations = r.iterations;
    sol.kkt_stat = r.kkt_stat;
    sol.kkt_feas = r.kkt_feas;
    return finish(r.status);
}

}  // namespace armsim
