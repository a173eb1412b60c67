#include <catch2/catch_amalgamated.hpp>

#include "armsim/nominal_planner.hpp"

using namespace armsim;

namespace {

PhasePlan small_plan() {
    PhasePlan plan;
    plan.phases = {
        {"home", {0.0, 0.4, 0.3, 0.0}, 0.0, 1.0},
        {"pick", {-0.3, -0.2, 0.6, 0.0}, 0.0, 1.0},
        {"grasp", {-0.3, -0.2, 0.6, 0.0}, 0.3, 1.0},
        {"lift", {0.0, 0.4, 0.3, 0.0}, 0.0, 1.0},
        {"place", {-0.3, -0.2, 0.6, 1.2}, 0.0, 1.0},
        {"release", {-0.3, -0.2, 0.6, 1.2}, 0.3, 1.0},
    };
    return plan;
}

}  // namespace

TEST_CASE("converged phase emits zero input and advances", "[nominal_planner]") {
    PhasePlan plan = small_plan();
    const InputLimits lim;
    PhaseProgress prog;  // index 0, no dwell
    const JointState at_target = plan.phases[0].target;
    auto [u, next] = nominal_control(at_target, prog, plan, lim, 0.1);
    CHECK(u.max_abs() == 0.0);
    CHECK(next.index == 1);
    CHECK(next.cycles == 0);
}

TEST_CASE("proportional command saturates at the input limit", "[nominal_planner]") {
    PhasePlan plan;
    plan.gain = 2.0;
    plan.phases = {{"goto", {0.5, 0.0, 0.0, 0.0}, 0.0, 1.0}};
    const InputLimits lim;  // +-1 rad/s
    PhaseProgress prog;
    const JointState q{0.0, 0.0, 0.0, 0.0};  // error 0.5, gain 2 -> raw rate 1.0
    auto [u, next] = nominal_control(q, prog, plan, lim, 0.1);
    CHECK(u.d_alpha == Catch::Approx(1.0));
    CHECK(next.index == 0);
}

TEST_CASE("rate scale slows the saturated command", "[nominal_planner]") {
    PhasePlan plan;
    plan.phases = {{"slow", {2.0, 0.0, 0.0, 0.0}, 0.0, 0.25}};
    const InputLimits lim;
    PhaseProgress prog;
    auto [u, _] = nominal_control({0, 0, 0, 0}, prog, plan, lim, 0.1);
    CHECK(u.d_alpha == Catch::Approx(0.25));
}

TEST_CASE("dwell holds the phase before advancing", "[nominal_planner]") {
    PhasePlan plan = small_plan();
    const InputLimits lim;
    PhaseProgress prog{2, plan.phases[2].dwell, 0};  // grasp with 0.3 s dwell
    const JointState at_target = plan.phases[2].target;
    auto [u1, p1] = nominal_control(at_target, prog, plan, lim, 0.1);
    CHECK(p1.index == 2);
    auto [u2, p2] = nominal_control(at_target, p1, plan, lim, 0.1);
    CHECK(p2.index == 2);
    auto [u3, p3] = nominal_control(at_target, p2, plan, lim, 0.1);
    CHECK(p3.index == 3);  // 0.3 s elapsed
    CHECK(u1.max_abs() == 0.0);
    CHECK(u2.max_abs() == 0.0);
    CHECK(u3.max_abs() == 0.0);
}

TEST_CASE("a full closed-loop cycle increments the counter exactly once", "[nominal_planner]") {
    const PhasePlan plan = small_plan();
    const InputLimits lim;
    const double dt = 0.1;
    JointState q{0.1, 0.1, 0.1, 0.1};
    PhaseProgress prog = PhaseProgress::start_of(plan);

    // Conservative time bound: per phase, saturated travel plus the
    // exponential tail to tolerance, plus dwells.
    double bound = 0.0;
    for (std::size_t i = 0; i < plan.phases.size(); ++i) {
        bound += plan.phases[i].dwell;
        bound += 4.0;  // max joint distance ~2.4 rad at >= min rate, plus tail
    }

    double t = 0.0;
    int steps_in_cycle0 = 0;
    int last_index = 0;
    bool cycle_done = false;
    while (t < bound && !cycle_done) {
        auto [u, next] = nominal_control(q, prog, plan, lim, dt);
        CHECK(clamp_input(u, lim).to_array() == u.to_array());  // within limits
        if (next.cycles == 0) CHECK(next.index >= last_index);  // monotone within a cycle
        last_index = next.index;
        prog = next;
        q = step(q, u, dt);
        t += dt;
        ++steps_in_cycle0;
        if (prog.cycles == 1) cycle_done = true;
    }
    CHECK(cycle_done);
    CHECK(prog.cycles == 1);
    CHECK(steps_in_cycle0 * dt < bound);

    // The loop stopped exactly when the counter first hit 1.
    CHECK(prog.index == 0);
}

TEST_CASE("validate_plan flags targets outside the member region", "[nominal_planner]") {
    // A tiny synthetic grid: members only where |alpha| <= 0.5.
    InvariantGrid grid;
    grid.resolution = 5;
    for (int ax = 0; ax < 4; ++ax) {
        grid.axes[ax].resize(5);
        for (int i = 0; i < 5; ++i) grid.axes[ax][i] = -1.0 + 0.5 * i;
    }
    grid.cells.assign(5 * 5 * 5 * 5, Membership::kNotMember);
    for (int ia = 1; ia <= 3; ++ia)
        for (int ib = 0; ib < 5; ++ib)
            for (int ig = 0; ig < 5; ++ig)
                for (int it = 0; it < 5; ++it)
                    grid.cells[static_cast<std::size_t>(grid.index(ia, ib, ig, it))] =
                        Membership::kMember;

    PhasePlan good;
    good.phases = {{"a", {0.0, 0.0, 0.0, 0.0}, 0.0, 1.0},
                   {"b", {0.3, 0.5, 0.0, 0.0}, 0.0, 1.0}};
    CHECK(validate_plan(good, grid).ok());

    PhasePlan bad;
    bad.phases = {{"a", {0.0, 0.0, 0.0, 0.0}, 0.0, 1.0},
                  {"b", {1.0, 0.0, 0.0, 0.0}, 0.0, 1.0}};  // snaps to |alpha| = 1
    const auto report = validate_plan(bad, grid);
    CHECK_FALSE(report.ok());
    CHECK(report.violations.front().status == Membership::kNotMember);
}
