#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "armsim/baseline_controller.hpp"
#include "armsim/supervisor.hpp"

namespace armsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double max_time = 180.0;
    int cycles = 3;
};

// The whole experiment description: arm, workspace, disturbance bounds,
// controller parameters, world, phase plan, and run length. Loaded from a
// single versioned JSON document; unknown keys are rejected.
struct Scenario {
    int schema = 1;
    double dt = 0.1;
    RunConfig run;
    ArmGeometry geom;
    JointLimits joint_limits;
    InputLimits input_limits;
    WorkspaceSet workspace;
    DisturbanceBounds disturbance;
    int np = 10;
    CostWeights weights;
    double eps_max = 3.0;
    double track_weight = 12.0;
    TighteningMode tightening = TighteningMode::kGrowing;
    SolverConfig solver;
    SupervisorConfig supervisor;
    BaselineConfig baseline;
    SpawnConfig spawn;
    std::vector<Obstacle> obstacles;
    PhasePlan plan;
    JointState initial_state;

    SupervisorSetup supervisor_setup() const {
        return {geom,   joint_limits, input_limits, workspace, disturbance, plan,
                supervisor, np,       dt,           weights,   eps_max,
                track_weight, tightening, solver};
    }
};

namespace detail {

using json = nlohmann::json;

inline void require_keys(const json& j, const std::string& path,
                         const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (allowed.find(key) == allowed.end())
            throw ConfigError(path + ": unknown key '" + key + "'");
}

inline double get_num(const json& j, const std::string& path, const char* key,
                      double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return j[key].get<double>();
}

inline int get_int(const json& j, const std::string& path, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
        throw ConfigError(path + "." + key + ": expected an integer");
    return j[key].get<int>();
}

inline std::array<double, 4> get_vec4(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4)
        throw ConfigError(path + ": expected an array of 4 numbers");
    std::array<double, 4> v{};
    for (int i = 0; i < 4; ++i) v[static_cast<std::size_t>(i)] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

inline Eigen::Vector2d get_vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(path + ": expected an array of 2 numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline void parse_limits4(const json& j, const std::string& path,
                          std::array<double, 4>& lo, std::array<double, 4>& hi) {
    require_keys(j, path, {"alpha", "beta", "gamma", "theta"});
    const char* names[4] = {"alpha", "beta", "gamma", "theta"};
    for (int i = 0; i < 4; ++i) {
        if (!j.contains(names[i])) continue;
        const json& b = j[names[i]];
        if (!b.is_array() || b.size() != 2)
            throw ConfigError(path + "." + names[i] + ": expected [lo, hi]");
        lo[static_cast<std::size_t>(i)] = b[0].get<double>();
        hi[static_cast<std::size_t>(i)] = b[1].get<double>();
    }
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    using detail::get_int;
    using detail::get_num;
    using detail::require_keys;

    Scenario s;
    require_keys(j, "$",
                 {"schema", "dt", "run", "arm", "workspace", "disturbance", "rmpc",
                  "supervisor", "baseline", "world", "plan", "initial_state"});
    if (!j.contains("schema") || !j["schema"].is_number_integer() ||
        j["schema"].get<int>() != 1)
        throw ConfigError("$.schema: required and must be 1");
    s.dt = get_num(j, "$", "dt", s.dt);
    if (!(s.dt > 0.0)) throw ConfigError("$.dt: must be > 0");

    if (j.contains("run")) {
        const auto& r = j["run"];
        require_keys(r, "$.run", {"max_time", "cycles"});
        s.run.max_time = get_num(r, "$.run", "max_time", s.run.max_time);
        s.run.cycles = get_int(r, "$.run", "cycles", s.run.cycles);
        if (s.run.max_time <= 0.0 || s.run.cycles < 1)
            throw ConfigError("$.run: max_time must be > 0 and cycles >= 1");
    }

    if (j.contains("arm")) {
        const auto& a = j["arm"];
        require_keys(a, "$.arm", {"geometry", "joint_limits", "input_limits"});
        if (a.contains("geometry")) {
            const auto& g = a["geometry"];
            require_keys(g, "$.arm.geometry", {"l1", "l2", "l3"});
            s.geom.l1 = get_num(g, "$.arm.geometry", "l1", s.geom.l1);
            s.geom.l2 = get_num(g, "$.arm.geometry", "l2", s.geom.l2);
            s.geom.l3 = get_num(g, "$.arm.geometry", "l3", s.geom.l3);
        }
        if (a.contains("joint_limits"))
            detail::parse_limits4(a["joint_limits"], "$.arm.joint_limits",
                                  s.joint_limits.lo, s.joint_limits.hi);
        if (a.contains("input_limits"))
            detail::parse_limits4(a["input_limits"], "$.arm.input_limits",
                                  s.input_limits.lo, s.input_limits.hi);
    }

    if (j.contains("workspace")) {
        const auto& w = j["workspace"];
        require_keys(w, "$.workspace", {"r_arm", "z_min", "z_max"});
        s.workspace.r_arm = get_num(w, "$.workspace", "r_arm", s.workspace.r_arm);
        s.workspace.z_min = get_num(w, "$.workspace", "z_min", s.workspace.z_min);
        s.workspace.z_max = get_num(w, "$.workspace", "z_max", s.workspace.z_max);
    }

    if (j.contains("disturbance")) {
        const auto& d = j["disturbance"];
        require_keys(d, "$.disturbance", {"delta_v", "delta_z"});
        s.disturbance.delta_v = get_num(d, "$.disturbance", "delta_v", s.disturbance.delta_v);
        s.disturbance.delta_z = get_num(d, "$.disturbance", "delta_z", s.disturbance.delta_z);
    }

    if (j.contains("rmpc")) {
        const auto& r = j["rmpc"];
        require_keys(r, "$.rmpc",
                     {"np", "weights", "eps_max", "track_weight", "tightening_mode",
                      "solver"});
        s.np = get_int(r, "$.rmpc", "np", s.np);
        if (s.np < 1) throw ConfigError("$.rmpc.np: must be >= 1");
        if (r.contains("weights")) {
            const auto& w = r["weights"];
            require_keys(w, "$.rmpc.weights", {"c1", "c2", "c3", "c4", "c_theta"});
            s.weights.c1 = get_num(w, "$.rmpc.weights", "c1", s.weights.c1);
            s.weights.c2 = get_num(w, "$.rmpc.weights", "c2", s.weights.c2);
            s.weights.c3 = get_num(w, "$.rmpc.weights", "c3", s.weights.c3);
            s.weights.c4 = get_num(w, "$.rmpc.weights", "c4", s.weights.c4);
            s.weights.c_theta = get_num(w, "$.rmpc.weights", "c_theta", s.weights.c_theta);
        }
        s.eps_max = get_num(r, "$.rmpc", "eps_max", s.eps_max);
        if (!(s.eps_max > 0.0)) throw ConfigError("$.rmpc.eps_max: must be > 0");
        s.track_weight = get_num(r, "$.rmpc", "track_weight", s.track_weight);
        if (r.contains("tightening_mode")) {
            const std::string m = r["tightening_mode"].get<std::string>();
            if (m == "growing")
                s.tightening = TighteningMode::kGrowing;
            else if (m == "constant")
                s.tightening = TighteningMode::kConstant;
            else
                throw ConfigError("$.rmpc.tightening_mode: 'constant' or 'growing'");
        }
        if (r.contains("solver")) {
            const auto& so = r["solver"];
            require_keys(so, "$.rmpc.solver",
                         {"feas_tol", "stat_tol", "max_outer", "max_inner"});
            s.solver.feas_tol = get_num(so, "$.rmpc.solver", "feas_tol", s.solver.feas_tol);
            s.solver.stat_tol = get_num(so, "$.rmpc.solver", "stat_tol", s.solver.stat_tol);
            s.solver.max_outer = get_int(so, "$.rmpc.solver", "max_outer", s.solver.max_outer);
            s.solver.max_inner = get_int(so, "$.rmpc.solver", "max_inner", s.solver.max_inner);
        }
    }

    if (j.contains("supervisor")) {
        const auto& v = j["supervisor"];
        require_keys(v, "$.supervisor", {"d_act", "d_deact", "n_safe", "t_blend"});
        s.supervisor.d_act = get_num(v, "$.supervisor", "d_act", s.supervisor.d_act);
        s.supervisor.d_deact = get_num(v, "$.supervisor", "d_deact", s.supervisor.d_deact);
        s.supervisor.n_safe = get_int(v, "$.supervisor", "n_safe", s.supervisor.n_safe);
        s.supervisor.t_blend = get_num(v, "$.supervisor", "t_blend", s.supervisor.t_blend);
    }

    if (j.contains("baseline")) {
        const auto& b = j["baseline"];
        require_keys(b, "$.baseline", {"r2", "r3", "k", "v_nominal"});
        s.baseline.r2 = get_num(b, "$.baseline", "r2", s.baseline.r2);
        s.baseline.r3 = get_num(b, "$.baseline", "r3", s.baseline.r3);
        s.baseline.k = get_num(b, "$.baseline", "k", s.baseline.k);
        s.baseline.v_nominal = get_num(b, "$.baseline", "v_nominal", s.baseline.v_nominal);
    }

    if (j.contains("world")) {
        const auto& w = j["world"];
        require_keys(w, "$.world", {"r_detect", "obstacle_radius", "obstacles", "spawn"});
        s.spawn.r_detect = get_num(w, "$.world", "r_detect", s.spawn.r_detect);
        s.spawn.radius = get_num(w, "$.world", "obstacle_radius", s.spawn.radius);
        if (w.contains("spawn")) {
            const auto& sp = w["spawn"];
            require_keys(sp, "$.world.spawn", {"rate", "speed_range", "height_range"});
            s.spawn.rate = get_num(sp, "$.world.spawn", "rate", s.spawn.rate);
            if (sp.contains("speed_range")) {
                const auto v = detail::get_vec2(sp["speed_range"], "$.world.spawn.speed_range");
                s.spawn.speed_min = v[0];
                s.spawn.speed_max = v[1];
            }
            if (sp.contains("height_range")) {
                const auto v = detail::get_vec2(sp["height_range"], "$.world.spawn.height_range");
                s.spawn.height_min = v[0];
                s.spawn.height_max = v[1];
            }
        }
        if (w.contains("obstacles")) {
            if (!w["obstacles"].is_array())
                throw ConfigError("$.world.obstacles: expected an array");
            int i = 0;
            for (const auto& o : w["obstacles"]) {
                const std::string path = "$.world.obstacles[" + std::to_string(i++) + "]";
                require_keys(o, path,
                             {"p0", "speed", "heading", "height", "radius", "spawn_time"});
                Obstacle ob;
                if (!o.contains("p0")) throw ConfigError(path + ".p0: required");
                ob.p0 = detail::get_vec2(o["p0"], path + ".p0");
                ob.speed = get_num(o, path, "speed", 0.0);
                ob.heading = get_num(o, path, "heading", 0.0);
                ob.height = get_num(o, path, "height", 1.0);
                ob.radius = get_num(o, path, "radius", s.spawn.radius);
                ob.spawn_time = get_num(o, path, "spawn_time", 0.0);
                s.obstacles.push_back(ob);
            }
        }
    }

    if (j.contains("plan")) {
        const auto& p = j["plan"];
        require_keys(p, "$.plan", {"gain", "tolerance", "phases"});
        s.plan.gain = get_num(p, "$.plan", "gain", s.plan.gain);
        s.plan.tolerance = get_num(p, "$.plan", "tolerance", s.plan.tolerance);
        if (p.contains("phases")) {
            if (!p["phases"].is_array() || p["phases"].empty())
                throw ConfigError("$.plan.phases: expected a non-empty array");
            s.plan.phases.clear();
            int i = 0;
            for (const auto& ph : p["phases"]) {
                const std::string path = "$.plan.phases[" + std::to_string(i++) + "]";
                require_keys(ph, path, {"name", "target", "dwell", "rate_scale"});
                Phase out;
                out.name = ph.contains("name") ? ph["name"].get<std::string>()
                                               : ("phase" + std::to_string(i));
                if (!ph.contains("target")) throw ConfigError(path + ".target: required");
                out.target =
                    JointState::from_array(detail::get_vec4(ph["target"], path + ".target"));
                out.dwell = get_num(ph, path, "dwell", 0.0);
                out.rate_scale = get_num(ph, path, "rate_scale", 1.0);
                s.plan.phases.push_back(out);
            }
        }
    }
    if (s.plan.phases.empty()) throw ConfigError("$.plan.phases: required");

    if (j.contains("initial_state"))
        s.initial_state =
            JointState::from_array(detail::get_vec4(j["initial_state"], "$.initial_state"));

    return s;
}

// Cross-field validation; throws ConfigError with the first failure.
inline void validate_scenario(const Scenario& s) {
    if (!s.geom.valid()) throw ConfigError("arm geometry: link lengths must be positive");
    if (!s.workspace.valid()) throw ConfigError("workspace: r_arm > 0 and z_min < z_max");
    if (s.geom.reach() > s.workspace.r_arm)
        throw ConfigError("arm reach exceeds the workspace radial bound");
    if (!s.joint_limits.valid()) throw ConfigError("joint_limits: lower bound above upper");
    if (!s.input_limits.valid())
        throw ConfigError("input_limits: each interval must contain 0");
    if (!s.disturbance.valid()) throw ConfigError("disturbance bounds must be >= 0");
    if (!s.weights.valid()) throw ConfigError("rmpc weights must be >= 0");
    if (!s.supervisor.valid())
        throw ConfigError("supervisor: need d_deact > d_act > 0, n_safe >= 1, t_blend >= 0");
    if (s.supervisor.d_deact >= s.spawn.r_detect)
        throw ConfigError("supervisor.d_deact must be below the detectable radius");
    if (!s.baseline.valid()) throw ConfigError("baseline: need r2 > r3 > 0, k > 0");
    if (!s.plan.valid()) throw ConfigError("plan: invalid phases, gain, or tolerance");
    for (std::size_t i = 0; i < s.plan.phases.size(); ++i)
        if (!check_limits(s.plan.phases[i].target, s.joint_limits).ok())
            throw ConfigError("plan phase '" + s.plan.phases[i].name +
                              "' target violates the joint limits");
    if (!check_limits(s.initial_state, s.joint_limits).ok())
        throw ConfigError("initial_state violates the joint limits");
    for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
        const Obstacle& o = s.obstacles[i];
        if (!(o.height > 0.0) || !(o.speed >= 0.0) || !(o.radius > 0.0))
            throw ConfigError("obstacle " + std::to_string(i) +
                              ": need height > 0, speed >= 0, radius > 0");
        if (o.p0.norm() > s.spawn.r_detect + 1e-9)
            throw ConfigError("obstacle " + std::to_string(i) +
                              " spawns outside the detectable circle");
    }
    if (s.spawn.rate > 0.0 &&
        (s.spawn.speed_min > s.spawn.speed_max || s.spawn.height_min > s.spawn.height_max))
        throw ConfigError("world.spawn ranges must be ordered");
}

inline Scenario load_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    Scenario s = scenario_from_json(j);
    validate_scenario(s);
    return s;
}

}  // namespace armsim
