#pragma once

#include <array>
#include <cmath>
#include <future>
#include <ostream>
#include <thread>
#include <vector>

#include "armsim/rmpc_controller.hpp"

namespace armsim {

enum class Membership { kMember, kNotMember, kUnknown };

inline const char* to_string(Membership m) {
    switch (m) {
        case Membership::kMember: return "1";
        case Membership::kNotMember: return "0";
        case Membership::kUnknown: return "unknown";
    }
    return "unknown";
}

struct MembershipResult {
    Membership status = Membership::kUnknown;
    std::vector<ControlInput> witness;  // populated when status == kMember
};

// Decides whether some admissible input sequence keeps every predicted
// end-effector position inside the tightened workspace across the horizon,
// which by the erosion construction keeps the true disturbed states inside
// the nominal set. The initial state must lie in the nominal set itself.
// Feasibility is solved with hard constraints and a small quadratic pull
// toward zero input, so the witness is the minimum-effort one. Solver
// non-convergence maps to kUnknown; a stationary point of positive violation
// maps to kNotMember (local certificates only, exact backward reachability of
// the nonlinear 4-DOF system is out of reach).
inline MembershipResult robust_feasible_membership(
    const JointState& x, int np, double dt, const ArmGeometry& geom,
    const JointLimits& jl, const InputLimits& il, const WorkspaceSet& nominal,
    const TightenedWorkspace& xr, const SolverConfig& cfg = {}) {
    MembershipResult out;
    if (!xr.feasible || xr.steps() < 1) {
        out.status = Membership::kNotMember;
        return out;
    }
    if (!check_limits(x, jl).ok()) {
        out.status = Membership::kNotMember;
        return out;
    }
    const PlanarFk f0 = planar_fk(x, geom);
    if (!nominal.contains(f0.rho, f0.z)) {
        out.status = Membership::kNotMember;
        return out;
    }

    const int last = xr.steps() - 1;
    StackedNlp nlp;
    nlp.np = np;
    nlp.dt = dt;
    nlp.geom = geom;
    nlp.x0 = x;
    nlp.lb.resize(4 * np);
    nlp.ub.resize(4 * np);
    nlp.cost_lin = Eigen::VectorXd::Zero(4 * np);
    nlp.cost_quad = Eigen::VectorXd::Constant(4 * np, 2e-6);
    for (int k = 0; k < np; ++k)
        for (int i = 0; i < 4; ++i) {
            nlp.lb[nlp.u_index(k, i)] = il.lo[i];
            nlp.ub[nlp.u_index(k, i)] = il.hi[i];
        }
    const auto x0 = x.to_array();
    for (int k = 1; k <= np; ++k) {
        for (int i = 0; i < 4; ++i) {
            LinearConstraint up, dn;
            for (int j = 0; j < k; ++j) {
                up.terms.push_back({nlp.u_index(j, i), dt});
                dn.terms.push_back({nlp.u_index(j, i), -dt});
            }
            up.b = jl.hi[i] - x0[i];
            dn.b = x0[i] - jl.lo[i];
            nlp.lin.push_back(std::move(up));
            nlp.lin.push_back(std::move(dn));
        }
        const int step_idx = std::min(k, last);
        nlp.ws.push_back({StepConstraintKind::kRadial, k, xr.radial_bound[step_idx], -1});
        nlp.ws.push_back({StepConstraintKind::kFloor, k, xr.z_floor[step_idx], -1});
        nlp.ws.push_back({StepConstraintKind::kCeiling, k, xr.z_max, -1});
    }

    NlpResult r = solve_stacked_nlp(nlp, Eigen::VectorXd::Zero(4 * np), cfg);
    switch (r.status) {
        case SolveStatus::kConverged: {
            out.status = Membership::kMember;
            out.witness.resize(np);
            for (int k = 0; k < np; ++k)
                out.witness[k] = ControlInput{r.z[nlp.u_index(k, 0)], r.z[nlp.u_index(k, 1)],
                                              r.z[nlp.u_index(k, 2)], r.z[nlp.u_index(k, 3)]};
            break;
        }
        case SolveStatus::kInfeasible:
            out.status = Membership::kNotMember;
            break;
        case SolveStatus::kMaxIterations:
            out.status = Membership::kUnknown;
            break;
    }
    return out;
}

// Membership sampled over a regular joint-space grid, for offline validation
// of nominal trajectories.
struct InvariantGrid {
    int resolution = 0;
    std::array<std::vector<double>, 4> axes;
    std::vector<Membership> cells;  // layout: (((ia)*r + ib)*r + ig)*r + it

    int index(int ia, int ib, int ig, int it) const {
        return ((ia * resolution + ib) * resolution + ig) * resolution + it;
    }

    Membership at(int ia, int ib, int ig, int it) const {
        return cells[static_cast<std::size_t>(index(ia, ib, ig, it))];
    }

    // Snap a state to the nearest grid node.
    Membership nearest(const JointState& q) const {
        const auto v = q.to_array();
        std::array<int, 4> idx{};
        for (int ax = 0; ax < 4; ++ax) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int i = 0; i < resolution; ++i) {
                const double d = std::fabs(axes[ax][i] - v[ax]);
                if (d < bd) {
                    bd = d;
                    best = i;
                }
            }
            idx[ax] = best;
        }
        return at(idx[0], idx[1], idx[2], idx[3]);
    }

    double member_fraction() const {
        if (cells.empty()) return 0.0;
        std::size_t n = 0;
        for (Membership m : cells)
            if (m == Membership::kMember) ++n;
        return static_cast<double>(n) / static_cast<double>(cells.size());
    }

    std::size_t count(Membership m) const {
        std::size_t n = 0;
        for (Membership c : cells)
            if (c == m) ++n;
        return n;
    }
};

// Evaluates membership at every node of a joint-limit-aligned grid. Queries
// are independent; they run concurrently across a small pool, each with its
// own solver workspace.
inline InvariantGrid invariant_grid(int resolution, int np, double dt,
                                    const ArmGeometry& geom, const JointLimits& jl,
                                    const InputLimits& il, const WorkspaceSet& nominal,
                                    const TightenedWorkspace& xr,
                                    const SolverConfig& cfg = {},
                                    unsigned threads = std::thread::hardware_concurrency()) {
    InvariantGrid grid;
    grid.resolution = resolution;
    for (int ax = 0; ax < 4; ++ax) {
        grid.axes[ax].resize(resolution);
        for (int i = 0; i < resolution; ++i) {
            const double t = resolution == 1 ? 0.5
                                             : static_cast<double>(i) /
                                                   static_cast<double>(resolution - 1);
            grid.axes[ax][i] = jl.lo[ax] + t * (jl.hi[ax] - jl.lo[ax]);
        }
    }
    const std::size_t total = static_cast<std::size_t>(resolution) * resolution *
                              resolution * resolution;
    grid.cells.assign(total, Membership::kUnknown);

    auto node_state = [&](std::size_t flat) {
        const int it = static_cast<int>(flat % resolution);
        flat /= resolution;
        const int ig = static_cast<int>(flat % resolution);
        flat /= resolution;
        const int ib = static_cast<int>(flat % resolution);
        const int ia = static_cast<int>(flat / resolution);
        return JointState{grid.axes[0][ia], grid.axes[1][ib], grid.axes[2][ig],
                          grid.axes[3][it]};
    };

    const unsigned pool = std::max(1u, threads);
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < pool; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < total; i += pool) {
                const MembershipResult r = robust_feasible_membership(
                    node_state(i), np, dt, geom, jl, il, nominal, xr, cfg);
                grid.cells[i] = r.status;
            }
        }));
    }
    for (auto& j : jobs) j.get();
    return grid;
}

inline void write_invariant_grid_csv(const InvariantGrid& g, std::ostream& os) {
    os << "alpha,beta,gamma,theta,member\n";
    char buf[128];
    for (int ia = 0; ia < g.resolution; ++ia)
        for (int ib = 0; ib < g.resolution; ++ib)
            for (int ig = 0; ig < g.resolution; ++ig)
                for (int it = 0; it < g.resolution; ++it) {
                    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%s\n",
                                  g.axes[0][ia], g.axes[1][ib], g.axes[2][ig],
                                  g.axes[3][it], to_string(g.at(ia, ib, ig, it)));
                    os << buf;
                }
}

}  // namespace armsim
