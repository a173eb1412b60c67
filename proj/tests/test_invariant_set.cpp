#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "armsim/invariant_set.hpp"

using namespace armsim;

namespace {

struct SetFixture {
    ArmGeometry geom{2.0, 2.0, 1.0};
    JointLimits jl;
    InputLimits il;
    WorkspaceSet nominal{5.0, 0.0, 6.0};
    double dt = 0.1;
};

}  // namespace

TEST_CASE("interior state is a member with the zero witness", "[invariant_set]") {
    SetFixture f;
    const int np = 6;
    const std::vector<double> floors(np, f.nominal.z_min);
    const auto xr = tighten_workspace(f.nominal, {0.0, 0.0, 0.0}, floors, np);
    const JointState x{0.1, 0.3, 0.4, 0.5};
    const MembershipResult r =
        robust_feasible_membership(x, np, f.dt, f.geom, f.jl, f.il, f.nominal, xr);
    REQUIRE(r.status == Membership::kMember);
    REQUIRE(r.witness.size() == np);
    for (const auto& u : r.witness) CHECK(u.max_abs() < 1e-4);
}

TEST_CASE("empty tightened set short-circuits to non-member", "[invariant_set]") {
    SetFixture f;
    const std::vector<double> floors(4, 0.0);
    const auto xr = tighten_workspace(f.nominal, {2.0, 20.0, 0.0}, floors, 4);
    REQUIRE_FALSE(xr.feasible);
    const MembershipResult r = robust_feasible_membership(
        {0, 0, 0, 0}, 4, f.dt, f.geom, f.jl, f.il, f.nominal, xr);
    CHECK(r.status == Membership::kNotMember);
    CHECK(r.witness.empty());
}

TEST_CASE("joint-limit violations are non-members up front", "[invariant_set]") {
    SetFixture f;
    const std::vector<double> floors(4, 0.0);
    const auto xr = tighten_workspace(f.nominal, {0.0, 0.0, 0.0}, floors, 4);
    const JointState x{f.jl.hi[0] + 0.2, 0, 0, 0};
    const MembershipResult r =
        robust_feasible_membership(x, 4, f.dt, f.geom, f.jl, f.il, f.nominal, xr);
    CHECK(r.status == Membership::kNotMember);
}

TEST_CASE("max extension cannot retract inside a shrunken radius in one step",
          "[invariant_set]") {
    // At full extension rho is stationary in every joint, so a single step
    // changes it only to second order; the constant-mode erosion exceeds that.
    const ArmGeometry geom{1.0, 1.0, 1.0};
    const WorkspaceSet nominal{3.0, -2.0, 3.0};
    const JointLimits jl;
    const InputLimits il;
    const double dt = 0.1;
    const JointState x{-M_PI_2, 0.0, M_PI_2, 0.0};
    REQUIRE(planar_fk(x, geom).rho == Catch::Approx(3.0));

    const std::vector<double> floors(1, nominal.z_min);
    const auto xr = tighten_workspace(nominal, {0.05, 0.5, 0.0}, floors, 1,
                                      TighteningMode::kConstant);
    REQUIRE(xr.radial_bound[0] == Catch::Approx(2.95));

    // Brute-force certificate over the one-step input grid: the best radial
    // contraction falls short of the eroded bound.
    double min_rho = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= 20; ++b)
            for (int g = 0; g <= 20; ++g) {
                const ControlInput u{-1.0 + 0.1 * a, -1.0 + 0.1 * b, -1.0 + 0.1 * g, 0.0};
                min_rho = std::min(min_rho, planar_fk(step(x, u, dt), geom).rho);
            }
    CHECK(min_rho > xr.radial_bound[0]);

    const MembershipResult r =
        robust_feasible_membership(x, 1, dt, geom, jl, il, nominal, xr);
    CHECK(r.status == Membership::kNotMember);
}

TEST_CASE("starved solver budget reports unknown", "[invariant_set]") {
    SetFixture f;
    const int np = 8;
    const std::vector<double> floors(np, 2.5);  // forces a real climb
    const auto xr = tighten_workspace(f.nominal, {0.02, 0.2, 0.1}, floors, np);
    SolverConfig cfg;
    cfg.max_outer = 1;
    cfg.max_inner = 1;
    const MembershipResult r = robust_feasible_membership(
        {0.0, 0.0, 0.0, 0.0}, np, f.dt, f.geom, f.jl, f.il, f.nominal, xr, cfg);
    CHECK(r.status == Membership::kUnknown);
}

TEST_CASE("member witnesses survive disturbance-vertex replay", "[invariant_set]") {
    SetFixture f;
    const int np = 5;
    const DisturbanceBounds3 w3{0.05, 0.5, 0.1};
    std::vector<double> dyn(np, 1.2);
    const auto xr = tighten_workspace(f.nominal, w3, dyn, np, TighteningMode::kGrowing);
    const JointState x{0.0, 0.4, 0.6, -0.3};
    const MembershipResult r =
        robust_feasible_membership(x, np, f.dt, f.geom, f.jl, f.il, f.nominal, xr);
    REQUIRE(r.status == Membership::kMember);

    JointState q = x;
    for (int k = 1; k <= np; ++k) {
        q = step(q, r.witness[static_cast<std::size_t>(k - 1)], f.dt);
        const PlanarFk fk = planar_fk(q, f.geom);
        const int idx = std::min(k, np - 1);
        for (const double wr : {-w3.delta_r, w3.delta_r})
            CHECK(std::fabs(fk.rho) + idx * std::fabs(wr) <= f.nominal.r_arm + 1e-7);
        for (const double wz : {-w3.delta_z, w3.delta_z})
            CHECK(fk.z >= dyn[static_cast<std::size_t>(idx)] + wz - 1e-7);
        CHECK(fk.z <= f.nominal.z_max + 1e-7);
    }
}

TEST_CASE("zero-disturbance grid marks exactly the admissible in-set nodes",
          "[invariant_set]") {
    ArmGeometry geom{2.0, 2.0, 1.0};
    JointLimits jl;
    jl.lo = {-1.0, -1.0, -1.0, -M_PI};
    jl.hi = {1.0, 1.0, 1.0, M_PI};
    InputLimits il;
    const WorkspaceSet nominal{5.0, 0.0, 6.0};
    const int np = 4;
    const std::vector<double> floors(np, nominal.z_min);
    const auto xr = tighten_workspace(nominal, {0.0, 0.0, 0.0}, floors, np);

    const InvariantGrid grid =
        invariant_grid(3, np, 0.1, geom, jl, il, nominal, xr, {}, 2);
    REQUIRE(grid.cells.size() == 81);
    CHECK(grid.count(Membership::kUnknown) == 0);

    for (int ia = 0; ia < 3; ++ia)
        for (int ib = 0; ib < 3; ++ib)
            for (int ig = 0; ig < 3; ++ig)
                for (int it = 0; it < 3; ++it) {
                    const JointState q{grid.axes[0][ia], grid.axes[1][ib],
                                       grid.axes[2][ig], grid.axes[3][it]};
                    const PlanarFk f = planar_fk(q, geom);
                    const bool expect =
                        check_limits(q, jl).ok() && nominal.contains(f.rho, f.z);
                    CHECK((grid.at(ia, ib, ig, it) == Membership::kMember) == expect);
                }
}

TEST_CASE("default-scenario grid member fraction is pinned", "[invariant_set][regression]") {
    // Frozen output of the first run of this grid; guards the membership
    // pipeline against drift.
    ArmGeometry geom{2.0, 2.0, 1.0};
    JointLimits jl;
    jl.lo = {-1.0, -1.0, -1.0, -M_PI};
    jl.hi = {1.0, 1.0, 1.0, M_PI};
    InputLimits il;
    const WorkspaceSet nominal{5.0, 0.0, 6.0};
    const int np = 4;
    const DisturbanceBounds3 w3{0.05, 0.5, 0.1};
    std::vector<double> floors(np, nominal.z_min);
    const auto xr = tighten_workspace(nominal, w3, floors, np);

    const InvariantGrid grid = invariant_grid(3, np, 0.1, geom, jl, il, nominal, xr, {}, 2);
    CHECK(grid.count(Membership::kUnknown) == 0);
    CHECK(grid.member_fraction() == Catch::Approx(54.0 / 81.0).margin(1e-9));
}

TEST_CASE("grid CSV carries the documented schema", "[invariant_set]") {
    InvariantGrid grid;
    grid.resolution = 2;
    for (int ax = 0; ax < 4; ++ax) grid.axes[ax] = {0.0, 1.0};
    grid.cells.assign(16, Membership::kMember);
    grid.cells[3] = Membership::kUnknown;
    std::ostringstream os;
    write_invariant_grid_csv(grid, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "alpha,beta,gamma,theta,member");
    std::getline(is, line);
    CHECK(line == "0,0,0,0,1");
    std::getline(is, line);
    CHECK(line == "0,0,0,1,1");
    std::getline(is, line);
    std::getline(is, line);
    CHECK(line == "0,0,1,1,unknown");
}
