#include <catch2/catch_amalgamated.hpp>

#include "armsim/baseline_controller.hpp"
#include "armsim/rng.hpp"

using namespace armsim;

TEST_CASE("safety regions with inclusive active band", "[baseline]") {
    const BaselineConfig cfg;  // r2 = 3, r3 = 1.5
    CHECK(region(cfg.r2, cfg) == SafetyRegion::kActive);
    CHECK(region(cfg.r2 + 1e-9, cfg) == SafetyRegion::kSafe);
    CHECK(region(std::numeric_limits<double>::infinity(), cfg) == SafetyRegion::kSafe);
    CHECK(region(cfg.r3, cfg) == SafetyRegion::kActive);
    CHECK(region(cfg.r3 - 1e-9, cfg) == SafetyRegion::kCritical);
}

TEST_CASE("repulsive force direction and magnitude", "[baseline]") {
    SECTION("unit separation along x") {
        const auto f = repulsive_force({1, 0}, {0, 0}, 1.0);
        REQUIRE(f.has_value());
        CHECK(f->x() == Catch::Approx(-1.0));
        CHECK(f->y() == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("separation along +y pushes along -y") {
        const auto f = repulsive_force({0, 2}, {0, 0}, 1.0);
        REQUIRE(f.has_value());
        CHECK(f->x() == Catch::Approx(0.0).margin(1e-15));
        CHECK(f->y() < 0.0);
    }
    SECTION("inverse-square law") {
        SplitMix64 rng(5);
        for (int i = 0; i < 200; ++i) {
            const Eigen::Vector2d pr{rng.uniform(-4, 4), rng.uniform(-4, 4)};
            const Eigen::Vector2d ph{rng.uniform(-4, 4), rng.uniform(-4, 4)};
            const double d = (pr - ph).norm();
            if (d < 1e-3) continue;
            const double k = rng.uniform(0.1, 3.0);
            const auto f = repulsive_force(pr, ph, k);
            REQUIRE(f.has_value());
            CHECK(std::fabs(f->norm() * d * d - k) / k < 1e-12);
        }
    }
    SECTION("coincident points are degenerate") {
        CHECK_FALSE(repulsive_force({1, 1}, {1, 1}, 1.0).has_value());
    }
}

namespace {

struct BaselineFixture {
    ArmGeometry geom{2.0, 2.0, 1.0};
    InputLimits il;
    PhasePlan plan;
    BaselineConfig cfg;

    BaselineFixture() {
        plan.phases = {{"go", {0.5, 0.5, 0.5, 0.5}, 0.0, 1.0}};
    }

    Measurement obstacle_at_distance(const JointState& q, double d,
                                     double bearing = 0.5) const {
        const CartesianPoints pts = fk_points(q, geom);
        Measurement m;
        m.position = {pts.p4.x() + d * std::cos(bearing),
                      pts.p4.y() + d * std::sin(bearing)};
        m.height = 2.5;
        m.radius = 0.3;
        return m;
    }
};

}  // namespace

TEST_CASE("baseline regions shape the commanded input", "[baseline]") {
    BaselineFixture f;
    const JointState q{0.0, 0.2, 0.3, 0.0};
    PhaseProgress prog;

    SECTION("safe region equals the nominal command") {
        BaselineController c(f.geom, f.il, f.plan, f.cfg);
        PhaseProgress p1 = prog, p2 = prog;
        auto [u_ref, _] = nominal_control(q, p2, f.plan, f.il, 0.1);
        BaselineDiagnostics d;
        const ControlInput u = c.control_step(q, p1, {f.obstacle_at_distance(q, 5.0)}, 0.1, d);
        CHECK(d.region == SafetyRegion::kSafe);
        const auto a = u.to_array(), b = u_ref.to_array();
        for (int i = 0; i < 4; ++i) CHECK(a[i] == Catch::Approx(b[i]));
    }
    SECTION("critical region stops exactly") {
        BaselineController c(f.geom, f.il, f.plan, f.cfg);
        BaselineDiagnostics d;
        const ControlInput u = c.control_step(q, prog, {f.obstacle_at_distance(q, 1.0)}, 0.1, d);
        CHECK(d.region == SafetyRegion::kCritical);
        CHECK(u.max_abs() == 0.0);
    }
    SECTION("mid-band speed factor is one half") {
        BaselineController c(f.geom, f.il, f.plan, f.cfg);
        PhaseProgress p1 = prog, p2 = prog;
        auto [u_ref, _] = nominal_control(q, p2, f.plan, f.il, 0.1);
        BaselineDiagnostics d;
        const double mid = 0.5 * (f.cfg.r2 + f.cfg.r3);
        const ControlInput u = c.control_step(q, p1, {f.obstacle_at_distance(q, mid)}, 0.1, d);
        CHECK(d.region == SafetyRegion::kActive);
        const auto a = u.to_array(), b = u_ref.to_array();
        for (int i = 0; i < 3; ++i) CHECK(a[i] == Catch::Approx(0.5 * b[i]));
        // theta carries the repulsive steering bias on top of the scaling
        CHECK(a[3] != Catch::Approx(0.5 * b[3]).margin(1e-12));
    }
    SECTION("input norm grows with distance inside the band") {
        BaselineController c1(f.geom, f.il, f.plan, f.cfg);
        BaselineController c2(f.geom, f.il, f.plan, f.cfg);
        PhaseProgress p1 = prog, p2 = prog;
        BaselineDiagnostics d1, d2;
        const ControlInput ua =
            c1.control_step(q, p1, {f.obstacle_at_distance(q, 1.8)}, 0.1, d1);
        const ControlInput ub =
            c2.control_step(q, p2, {f.obstacle_at_distance(q, 2.6)}, 0.1, d2);
        auto norm3 = [](const ControlInput& u) {
            const auto a = u.to_array();
            return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        };
        CHECK(norm3(ua) <= norm3(ub) + 1e-12);
    }
    SECTION("region transitions are reported as events") {
        BaselineController c(f.geom, f.il, f.plan, f.cfg);
        PhaseProgress p = prog;
        BaselineDiagnostics d1, d2, d3;
        c.control_step(q, p, {f.obstacle_at_distance(q, 5.0)}, 0.1, d1);
        CHECK(d1.switch_event.empty());
        c.control_step(q, p, {f.obstacle_at_distance(q, 2.0)}, 0.1, d2);
        CHECK(d2.switch_event == "safe->active");
        c.control_step(q, p, {f.obstacle_at_distance(q, 1.0)}, 0.1, d3);
        CHECK(d3.switch_event == "active->critical");
    }
}
