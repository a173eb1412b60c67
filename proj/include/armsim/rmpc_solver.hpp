#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "armsim/arm_model.hpp"

namespace armsim {

enum class SolveStatus { kConverged, kMaxIterations, kInfeasible };

struct SolverConfig {
    double feas_tol = 1e-8;  // max constraint violation accepted as feasible
    double stat_tol = 1e-7;  // projected stationarity target
    int max_outer = 40;      // multiplier updates
    int max_inner = 80;      // Newton iterations per outer round
    double rho0 = 10.0;
    double rho_max = 1e9;
};

// Sparse linear inequality: sum_i a_i z_i - b <= 0.
struct LinearConstraint {
    std::vector<std::pair<int, double>> terms;
    double b = 0.0;
};

enum class StepConstraintKind { kRadial, kFloor, kCeiling };

// Workspace constraint attached to prediction step k >= 1, evaluated through
// the rollout x_k = x0 + dt * sum_{j<k} u_j.
//   radial : rho(x_k)^2 - bound^2          <= 0
//   floor  : bound - z(x_k) - z[eps_var]   <= 0   (eps_var = -1 for hard floor)
//   ceiling: z(x_k) - bound                <= 0
struct StepConstraint {
    StepConstraintKind kind = StepConstraintKind::kRadial;
    int k = 1;
    double bound = 0.0;
    int eps_var = -1;
};

// Dense stacked NLP over z = [u_0 .. u_{Np-1} | auxiliaries]: box bounds on
// every variable, sparse linear inequalities, and the nonlinear workspace
// constraints. The first 4*Np entries of z are the controls in step-major
// order (alpha, beta, gamma, theta).
struct StackedNlp {
    int np = 0;
    double dt = 0.0;
    ArmGeometry geom;
    JointState x0;
    Eigen::VectorXd lb, ub;
    Eigen::VectorXd cost_lin;
    Eigen::VectorXd cost_quad;  // diagonal quadratic term, objective += 0.5*q_i*z_i^2
    std::vector<LinearConstraint> lin;
    std::vector<StepConstraint> ws;

    int n() const { return static_cast<int>(lb.size()); }
    int m() const { return static_cast<int>(lin.size() + ws.size()); }
    int u_index(int k, int axis) const { return 4 * k + axis; }
};

struct NlpResult {
    Eigen::VectorXd z;
    Eigen::VectorXd lambda;
    SolveStatus status = SolveStatus::kMaxIterations;
    int iterations = 0;
    double kkt_stat = std::numeric_limits<double>::infinity();
    double kkt_feas = std::numeric_limits<double>::infinity();
};

namespace detail {

struct NlpWork {
    std::vector<PlanarFk> fk;       // per prediction step 1..np (index k-1)
    Eigen::VectorXd g;              // constraint values, lin first then ws
    Eigen::VectorXd lambda_hat;     // max(0, lambda + rho*g)
};

inline void eval_rollout(const StackedNlp& p, const Eigen::VectorXd& z, NlpWork& w) {
    w.fk.resize(p.np);
    JointState x = p.x0;
    for (int k = 1; k <= p.np; ++k) {
        const int b = p.u_index(k - 1, 0);
        x = step(x, ControlInput{z[b], z[b + 1], z[b + 2], z[b + 3]}, p.dt);
        w.fk[k - 1] = planar_fk(x, p.geom);
    }
}

inline void eval_constraints(const StackedNlp& p, const Eigen::VectorXd& z, NlpWork& w) {
    eval_rollout(p, z, w);
    w.g.resize(p.m());
    int j = 0;
    for (const auto& c : p.lin) {
        double v = -c.b;
        for (const auto& [idx, a] : c.terms) v += a * z[idx];
        w.g[j++] = v;
    }
    for (const auto& c : p.ws) {
        const PlanarFk& f = w.fk[c.k - 1];
        double v = 0.0;
        switch (c.kind) {
            case StepConstraintKind::kRadial:
                v = f.rho * f.rho - c.bound * c.bound;
                break;
            case StepConstraintKind::kFloor:
                v = c.bound - f.z;
                if (c.eps_var >= 0) v -= z[c.eps_var];
                break;
            case StepConstraintKind::kCeiling:
                v = f.z - c.bound;
                break;
        }
        w.g[j++] = v;
    }
}

inline double objective(const StackedNlp& p, const Eigen::VectorXd& z) {
    double v = p.cost_lin.dot(z);
    for (int i = 0; i < p.n(); ++i) v += 0.5 * p.cost_quad[i] * z[i] * z[i];
    return v;
}

// Augmented Lagrangian value for inequality constraints:
//   psi(g) = (max(0, lambda + rho*g)^2 - lambda^2) / (2*rho).
inline double al_value(const StackedNlp& p, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& lambda, double rho, NlpWork& w) {
    eval_constraints(p, z, w);
    double v = objective(p, z);
    for (int j = 0; j < p.m(); ++j) {
        const double t = std::max(0.0, lambda[j] + rho * w.g[j]);
        v += (t * t - lambda[j] * lambda[j]) / (2.0 * rho);
    }
    return v;
}

// In-plane gradient of a workspace constraint w.r.t. x_k (alpha,beta,gamma).
inline Eigen::Vector3d ws_grad_x(const StepConstraint& c, const PlanarFk& f) {
    switch (c.kind) {
        case StepConstraintKind::kRadial:
            return 2.0 * f.rho * f.drho;
        case StepConstraintKind::kFloor:
            return -f.dz;
        case StepConstraintKind::kCeiling:
            return f.dz;
    }
    return Eigen::Vector3d::Zero();
}

inline Eigen::Matrix3d ws_hess_x(const StepConstraint& c, const PlanarFk& f) {
    switch (c.kind) {
        case StepConstraintKind::kRadial: {
            Eigen::Matrix3d h = 2.0 * (f.drho * f.drho.transpose());
            h.diagonal() += 2.0 * f.rho * f.d2rho_diag;
            return h;
        }
        case StepConstraintKind::kFloor: {
            Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
            h.diagonal() = -f.d2z_diag;
            return h;
        }
        case StepConstraintKind::kCeiling: {
            Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
            h.diagonal() = f.d2z_diag;
            return h;
        }
    }
    return Eigen::Matrix3d::Zero();
}

// Gradient of the augmented Lagrangian; lambda_hat of the given work buffer
// must already be populated against (lambda, rho).
inline void al_gradient(const StackedNlp& p, const Eigen::VectorXd& z, const NlpWork& w,
                        Eigen::VectorXd& grad) {
    grad = p.cost_lin;
    for (int i = 0; i < p.n(); ++i) grad[i] += p.cost_quad[i] * z[i];
    int j = 0;
    for (const auto& c : p.lin) {
        const double lh = w.lambda_hat[j++];
        if (lh == 0.0) continue;
        for (const auto& [idx, a] : c.terms) grad[idx] += lh * a;
    }
    for (const auto& c : p.ws) {
        const double lh = w.lambda_hat[j++];
        if (lh == 0.0) continue;
        const Eigen::Vector3d gx = ws_grad_x(c, w.fk[c.k - 1]);
        for (int s = 0; s < c.k; ++s)
            for (int i = 0; i < 3; ++i) grad[p.u_index(s, i)] += lh * p.dt * gx[i];
        if (c.kind == StepConstraintKind::kFloor && c.eps_var >= 0) grad[c.eps_var] -= lh;
    }
}

// Generalized Hessian of the augmented Lagrangian (piecewise quadratic).
inline void al_hessian(const StackedNlp& p, const NlpWork& w, double rho,
                       Eigen::MatrixXd& h) {
    h.setZero(p.n(), p.n());
    h.diagonal() = p.cost_quad;
    int j = 0;
    for (const auto& c : p.lin) {
        const bool active = w.lambda_hat[j++] > 0.0;
        if (!active) continue;
        for (const auto& [i1, a1] : c.terms)
            for (const auto& [i2, a2] : c.terms) h(i1, i2) += rho * a1 * a2;
    }
    for (const auto& c : p.ws) {
        const double lh = w.lambda_hat[j++];
        if (lh == 0.0) continue;
        const PlanarFk& f = w.fk[c.k - 1];
        const Eigen::Vector3d gx = ws_grad_x(c, f);
        const Eigen::Matrix3d hx = ws_hess_x(c, f);
        // chain through x_k = x0 + dt * sum_{s<k} u_s
        for (int s1 = 0; s1 < c.k; ++s1)
            for (int s2 = 0; s2 < c.k; ++s2)
                for (int i1 = 0; i1 < 3; ++i1)
                    for (int i2 = 0; i2 < 3; ++i2)
                        h(p.u_index(s1, i1), p.u_index(s2, i2)) +=
                            rho * p.dt * gx[i1] * p.dt * gx[i2] +
                            lh * p.dt * p.dt * hx(i1, i2);
        if (c.kind == StepConstraintKind::kFloor && c.eps_var >= 0) {
            for (int s = 0; s < c.k; ++s)
                for (int i = 0; i < 3; ++i) {
                    h(c.eps_var, p.u_index(s, i)) += rho * (-1.0) * p.dt * gx[i];
                    h(p.u_index(s, i), c.eps_var) += rho * p.dt * gx[i] * (-1.0);
                }
            h(c.eps_var, c.eps_var) += rho;
        }
    }
}

inline Eigen::VectorXd clamp_box(const StackedNlp& p, Eigen::VectorXd z) {
    for (int i = 0; i < p.n(); ++i) z[i] = std::clamp(z[i], p.lb[i], p.ub[i]);
    return z;
}

// Infinity norm of the projected gradient, the box-constrained stationarity
// measure.
inline double projected_residual(const StackedNlp& p, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& grad) {
    double r = 0.0;
    for (int i = 0; i < p.n(); ++i) {
        const double step = std::clamp(z[i] - grad[i], p.lb[i], p.ub[i]) - z[i];
        r = std::max(r, std::fabs(step));
    }
    return r;
}

// Projected-Newton minimization of the augmented Lagrangian over the box.
// Returns the number of iterations used.
inline int minimize_al(const StackedNlp& p, const Eigen::VectorXd& lambda, double rho,
                       double tol, int max_iter, Eigen::VectorXd& z, NlpWork& w) {
    const int n = p.n();
    Eigen::VectorXd grad(n);
    Eigen::MatrixXd hess(n, n);
    double fz = al_value(p, z, lambda, rho, w);

    int it = 0;
    for (; it < max_iter; ++it) {
        w.lambda_hat = (lambda + rho * w.g).cwiseMax(0.0);
        al_gradient(p, z, w, grad);
        if (projected_residual(p, z, grad) <= tol) break;

        // Active bounds with inward-pointing gradient stay fixed this round.
        std::vector<int> free;
        free.reserve(n);
        for (int i = 0; i < n; ++i) {
            const bool at_lo = z[i] <= p.lb[i] && grad[i] > 0.0;
            const bool at_hi = z[i] >= p.ub[i] && grad[i] < 0.0;
            if (!at_lo && !at_hi) free.push_back(i);
        }

        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        if (!free.empty()) {
            al_hessian(p, w, rho, hess);
            const int nf = static_cast<int>(free.size());
            Eigen::MatrixXd hff(nf, nf);
            Eigen::VectorXd gf(nf);
            for (int a = 0; a < nf; ++a) {
                gf[a] = grad[free[a]];
                for (int b = 0; b < nf; ++b) hff(a, b) = hess(free[a], free[b]);
            }
            double sigma = 1e-10 * (1.0 + hff.diagonal().cwiseAbs().maxCoeff());
            Eigen::VectorXd df;
            bool ok = false;
            for (int attempt = 0; attempt < 12 && !ok; ++attempt) {
                Eigen::MatrixXd hreg = hff;
                hreg.diagonal().array() += sigma;
                Eigen::LLT<Eigen::MatrixXd> llt(hreg);
                if (llt.info() == Eigen::Success) {
                    df = llt.solve(-gf);
                    if (df.dot(gf) < 0.0) ok = true;
                }
                sigma *= 100.0;
            }
            if (!ok) df = -gf;  // steepest descent fallback
            for (int a = 0; a < nf; ++a) d[free[a]] = df[a];
        }
        if (d.lpNorm<Eigen::Infinity>() == 0.0) break;

        // Armijo backtracking along the projection arc. The merit value is
        // non-increasing by construction.
        double alpha = 1.0;
        bool accepted = false;
        NlpWork wtrial;
        while (alpha >= 1e-14) {
            Eigen::VectorXd zt = clamp_box(p, z + alpha * d);
            const double ft = al_value(p, zt, lambda, rho, wtrial);
            const double pred = grad.dot(zt - z);
            if (ft <= fz + 1e-4 * std::min(0.0, pred) && ft <= fz + 1e-16 * std::fabs(fz)) {
                assert(ft <= fz + 1e-12 * (1.0 + std::fabs(fz)));
                z = std::move(zt);
                fz = ft;
                w = wtrial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // no progress possible at this tolerance
    }
    // Leave w consistent with the final iterate.
    eval_constraints(p, z, w);
    w.lambda_hat = (lambda + rho * w.g).cwiseMax(0.0);
    return it;
}

}  // namespace detail

// Augmented-Lagrangian solve of the stacked NLP: sequential quadratic local
// models on the penalized objective with a monotone line search, multiplier
// updates between rounds. Deterministic for fixed inputs.
inline NlpResult solve_stacked_nlp(const StackedNlp& p, Eigen::VectorXd z0,
                                   const SolverConfig& cfg = {}) {
    NlpResult res;
    detail::NlpWork w;
    Eigen::VectorXd z = detail::clamp_box(p, std::move(z0));
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p.m());
    double rho = cfg.rho0;
    double inner_tol = 1e-2;
    double v_best = std::numeric_limits<double>::infinity();
    int stalled = 0;

    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        res.iterations += detail::minimize_al(p, lambda, rho, inner_tol, cfg.max_inner, z, w);

        const double viol = p.m() == 0 ? 0.0 : w.g.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
        Eigen::VectorXd grad;
        detail::al_gradient(p, z, w, grad);
        const double stat = detail::projected_residual(p, z, grad);

        if (viol <= cfg.feas_tol && stat <= cfg.stat_tol) {
            res.status = SolveStatus::kConverged;
            res.kkt_stat = stat;
            res.kkt_feas = viol;
            res.z = z;
            res.lambda = w.lambda_hat;
            return res;
        }

        if (viol <= std::max(cfg.feas_tol, 0.3 * v_best)) {
            lambda = w.lambda_hat;
            v_best = std::min(v_best, viol);
            stalled = 0;
        } else {
            if (rho >= cfg.rho_max) {
                ++stalled;
                if (stalled >= 3 && viol > 100.0 * cfg.feas_tol) {
                    res.status = SolveStatus::kInfeasible;
                    res.kkt_stat = stat;
                    res.kkt_feas = viol;
                    res.z = z;
                    res.lambda = w.lambda_hat;
                    return res;
                }
            }
            rho = std::min(rho * 5.0, cfg.rho_max);
            lambda = w.lambda_hat;
        }
        inner_tol = std::max(inner_tol * 0.2, 0.5 * cfg.stat_tol);
    }

    detail::eval_constraints(p, z, w);
    w.lambda_hat = (lambda + rho * w.g).cwiseMax(0.0);
    Eigen::VectorXd grad;
    detail::al_gradient(p, z, w, grad);
    res.kkt_stat = detail::projected_residual(p, z, grad);
    res.kkt_feas = p.m() == 0 ? 0.0 : w.g.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    res.status = SolveStatus::kMaxIterations;
    res.z = z;
    res.lambda = w.lambda_hat;
    return res;
}

}  // namespace armsim
