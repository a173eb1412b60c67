#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Core>

namespace armsim {

// Link lengths of the 4-DOF arm (three serial links on a rotating base).
struct ArmGeometry {
    double l1 = 2.0;
    double l2 = 2.0;
    double l3 = 1.0;

    bool valid() const { return l1 > 0.0 && l2 > 0.0 && l3 > 0.0; }
    double reach() const { return l1 + l2 + l3; }
};

// Configuration: three link angles plus the base rotation about z.
// Angles are plain radians and are never wrapped; admissibility against
// JointLimits is a separate predicate, not a construction invariant.
struct JointState {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double theta = 0.0;

    std::array<double, 4> to_array() const { return {alpha, beta, gamma, theta}; }
    static JointState from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }
};

// Commanded angular rates (rad/s) for the four axes.
struct ControlInput {
    double d_alpha = 0.0;
    double d_beta = 0.0;
    double d_gamma = 0.0;
    double d_theta = 0.0;

    std::array<double, 4> to_array() const { return {d_alpha, d_beta, d_gamma, d_theta}; }
    static ControlInput from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }
    double max_abs() const {
        return std::max(std::max(std::fabs(d_alpha), std::fabs(d_beta)),
                        std::max(std::fabs(d_gamma), std::fabs(d_theta)));
    }
};

// Componentwise box bounds; order is (alpha, beta, gamma, theta).
struct JointLimits {
    std::array<double, 4> lo{-M_PI_2, -M_PI_2, -M_PI_2, -M_PI};
    std::array<double, 4> hi{M_PI_2, M_PI_2, M_PI_2, M_PI};

    bool valid() const {
        for (int i = 0; i < 4; ++i)
            if (!(lo[i] <= hi[i])) return false;
        return true;
    }
};

// Box bounds on the rates. Intervals must contain 0 so the arm can hold
// still.
struct InputLimits {
    std::array<double, 4> lo{-1.0, -1.0, -1.0, -1.0};
    std::array<double, 4> hi{1.0, 1.0, 1.0, 1.0};

    bool valid() const {
        for (int i = 0; i < 4; ++i)
            if (!(lo[i] <= 0.0 && 0.0 <= hi[i])) return false;
        return true;
    }
};

// Key points along the arm: end of L1 (p2), end of L2 (p3), end-effector (p4).
struct CartesianPoints {
    Eigen::Vector3d p2;
    Eigen::Vector3d p3;
    Eigen::Vector3d p4;
};

inline CartesianPoints fk_points(const JointState& q, const ArmGeometry& g) {
    const double sa = std::sin(q.alpha), ca = std::cos(q.alpha);
    const double sb = std::sin(q.beta), cb = std::cos(q.beta);
    const double sg = std::sin(q.gamma), cg = std::cos(q.gamma);
    const double st = std::sin(q.theta), ct = std::cos(q.theta);

    CartesianPoints p;
    p.p2 = {-g.l1 * sa * ct, -g.l1 * sa * st, g.l1 * ca};
    p.p3 = {p.p2.x() + g.l2 * cb * ct, p.p2.y() + g.l2 * cb * st, p.p2.z() + g.l2 * sb};
    p.p4 = {p.p3.x() + g.l3 * sg * ct, p.p3.y() + g.l3 * sg * st, p.p3.z() - g.l3 * cg};
    return p;
}

// The end-effector position factors as p4 = (rho cos(theta), rho sin(theta), z)
// with rho and z functions of (alpha, beta, gamma) only. The workspace
// constraints depend on exactly these two scalars, so the controller works
// with them directly.
struct PlanarFk {
    double rho;                 // signed radial extension of p4
    double z;                   // height of p4
    Eigen::Vector3d drho;       // d/d(alpha,beta,gamma)
    Eigen::Vector3d dz;
    Eigen::Vector3d d2rho_diag; // second derivatives are diagonal
    Eigen::Vector3d d2z_diag;
};

inline PlanarFk planar_fk(const JointState& q, const ArmGeometry& g) {
    const double sa = std::sin(q.alpha), ca = std::cos(q.alpha);
    const double sb = std::sin(q.beta), cb = std::cos(q.beta);
    const double sg = std::sin(q.gamma), cg = std::cos(q.gamma);

    PlanarFk f;
    f.rho = -g.l1 * sa + g.l2 * cb + g.l3 * sg;
    f.z = g.l1 * ca + g.l2 * sb - g.l3 * cg;
    f.drho = {-g.l1 * ca, -g.l2 * sb, g.l3 * cg};
    f.dz = {-g.l1 * sa, g.l2 * cb, g.l3 * sg};
    f.d2rho_diag = {g.l1 * sa, -g.l2 * cb, -g.l3 * sg};
    f.d2z_diag = {-g.l1 * ca, -g.l2 * sb, g.l3 * cg};
    return f;
}

// Forward Euler update; no clamping here, constraint enforcement belongs to
// the controllers.
inline JointState step(const JointState& q, const ControlInput& u, double dt) {
    return {q.alpha + u.d_alpha * dt, q.beta + u.d_beta * dt,
            q.gamma + u.d_gamma * dt, q.theta + u.d_theta * dt};
}

// Per-axis signed excess beyond the limits: positive above the upper bound,
// negative below the lower bound, zero when satisfied (bounds inclusive).
struct LimitExcess {
    std::array<double, 4> excess{0.0, 0.0, 0.0, 0.0};

    bool ok() const {
        for (double e : excess)
            if (e != 0.0) return false;
        return true;
    }
};

inline LimitExcess check_limits(const JointState& q, const JointLimits& lim) {
    LimitExcess r;
    const auto v = q.to_array();
    for (int i = 0; i < 4; ++i) {
        if (v[i] > lim.hi[i])
            r.excess[i] = v[i] - lim.hi[i];
        else if (v[i] < lim.lo[i])
            r.excess[i] = v[i] - lim.lo[i];
    }
    return r;
}

// Componentwise projection onto the input box; idempotent.
inline ControlInput clamp_input(const ControlInput& u, const InputLimits& lim) {
    auto v = u.to_array();
    for (int i = 0; i < 4; ++i) v[i] = std::clamp(v[i], lim.lo[i], lim.hi[i]);
    return ControlInput::from_array(v);
}

}  // namespace armsim
