#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "armsim/baseline_controller.hpp"
#include "armsim/scenario.hpp"
#include "armsim/supervisor.hpp"

namespace armsim {

enum class ControllerKind { kRmpc, kBaseline };

inline const char* to_string(ControllerKind c) {
    return c == ControllerKind::kRmpc ? "rmpc" : "baseline";
}

// One simulation step as logged. The CSV schema is the fixed column set; the
// trailing fields are in-memory diagnostics only.
struct TrajectoryRow {
    double t = 0.0;
    std::string mode;
    JointState q;
    ControlInput u;
    Eigen::Vector3d p4{0, 0, 0};
    double d_min = std::numeric_limits<double>::infinity();
    double z_floor = 0.0;
    double eps_max_step = 0.0;
    double solve_time_s = 0.0;
    std::string switch_event;
    // diagnostics outside the CSV schema
    bool solved = false;
    SolveStatus solve_status = SolveStatus::kConverged;
    bool fallback = false;
    double slack0 = 0.0;
    double radial_bound0 = 0.0;
};

struct ObstacleRow {
    double t = 0.0;
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double height = 0.0;
};

struct RunMetrics {
    double completion_time = 0.0;  // elapsed time; equals the time limit if incomplete
    int cycles_completed = 0;
    int collision_count = 0;
    double min_separation = std::numeric_limits<double>::infinity();
    int stop_steps = 0;
    int mode_switches = 0;
    double mean_solve_time = 0.0;
    double max_solve_time = 0.0;
    double mean_slack = 0.0;
    double max_slack = 0.0;
    bool completed = false;
};

struct RunResult {
    RunMetrics metrics;
    std::vector<TrajectoryRow> log;
    std::vector<ObstacleRow> obstacle_log;
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Distance from a point to the solid cylinder (footprint disc extruded up to
// its height): zero exactly on contact or overlap.
inline double cylinder_separation(const Eigen::Vector3d& p, const Eigen::Vector2d& center,
                                  double radius, double height) {
    const double planar = (Eigen::Vector2d{p.x(), p.y()} - center).norm() - radius;
    const double dxy = std::max(planar, 0.0);
    const double dz = std::max(p.z() - height, 0.0);
    return std::hypot(dxy, dz);
}

inline bool cylinder_collision(const Eigen::Vector3d& p, const Eigen::Vector2d& center,
                               double radius, double height) {
    const double planar = (Eigen::Vector2d{p.x(), p.y()} - center).norm() - radius;
    return planar < 0.0 && p.z() < height;
}

}  // namespace detail

// Deterministic fixed-step simulation of one controller on one scenario.
// The random stream is consumed in a fixed per-step order (spawns, then
// measurements in id order), so (scenario, seed, controller) determines every
// output value.
inline RunResult run(const Scenario& s, ControllerKind controller, std::uint64_t seed) {
    RunResult out;
    SplitMix64 rng(seed);
    World world(s.obstacles, s.spawn, s.dt);
    JointState q = s.initial_state;
    PhaseProgress progress = PhaseProgress::start_of(s.plan);

    Supervisor supervisor(s.supervisor_setup());
    BaselineController baseline(s.geom, s.input_limits, s.plan, s.baseline);

    RunMetrics& m = out.metrics;
    double solve_time_sum = 0.0, slack_sum = 0.0;
    int solved_steps = 0;

    const int max_steps = static_cast<int>(std::ceil(s.run.max_time / s.dt));
    double elapsed = 0.0;

    auto update_safety = [&](const Eigen::Vector3d& p4, double t) {
        for (const Obstacle& o : world.obstacles()) {
            if (t < o.spawn_time) continue;
            const Eigen::Vector2d pos = true_position(o, t);
            m.min_separation = std::min(
                m.min_separation, detail::cylinder_separation(p4, pos, o.radius, o.height));
        }
    };

    for (int k = 0; k < max_steps; ++k) {
        const double t = k * s.dt;
        world.advance(t, rng);

        const CartesianPoints pts = fk_points(q, s.geom);
        update_safety(pts.p4, t);
        bool collided = false;
        for (const Obstacle& o : world.obstacles()) {
            if (t < o.spawn_time) continue;
            if (detail::cylinder_collision(pts.p4, true_position(o, t), o.radius, o.height))
                collided = true;
        }
        if (collided) ++m.collision_count;

        const std::vector<Measurement> ms = world.measure_all(t, rng, s.disturbance);
        for (std::size_t i = 0; i < world.obstacles().size(); ++i) {
            const Obstacle& o = world.obstacles()[i];
            if (t < o.spawn_time) continue;
            const Eigen::Vector2d pos = true_position(o, t);
            out.obstacle_log.push_back({t, static_cast<int>(i), pos.x(), pos.y(), o.height});
        }

        TrajectoryRow row;
        row.t = t;
        row.q = q;
        row.p4 = pts.p4;
        row.z_floor = s.workspace.z_min;

        if (controller == ControllerKind::kRmpc) {
            SupervisorDiagnostics d;
            row.u = supervisor.control_step(q, progress, ms, d);
            row.mode = to_string(d.mode);
            row.d_min = d.d_min;
            row.z_floor = d.z_floor0;
            row.eps_max_step = d.slack_max;
            row.solve_time_s = d.solve_time_s;
            row.switch_event = d.switch_event;
            row.solved = d.solved;
            row.solve_status = d.solve_status;
            row.fallback = d.fallback;
            row.slack0 = d.slack0;
            row.radial_bound0 = d.radial_bound0;
            if (d.solved) {
                ++solved_steps;
                solve_time_sum += d.solve_time_s;
                slack_sum += d.slack_max;
                m.max_solve_time = std::max(m.max_solve_time, d.solve_time_s);
                m.max_slack = std::max(m.max_slack, d.slack_max);
            }
        } else {
            BaselineDiagnostics d;
            row.u = baseline.control_step(q, progress, ms, s.dt, d);
            row.mode = to_string(d.region);
            row.d_min = d.d_min;
            row.switch_event = d.switch_event;
        }

        if (!row.switch_event.empty()) ++m.mode_switches;
        if (row.u.max_abs() < 1e-9) ++m.stop_steps;
        out.log.push_back(row);

        q = step(q, row.u, s.dt);
        elapsed = (k + 1) * s.dt;

        if (progress.cycles >= s.run.cycles) {
            m.completed = true;
            const CartesianPoints end_pts = fk_points(q, s.geom);
            update_safety(end_pts.p4, elapsed);
            break;
        }
    }

    m.completion_time = m.completed ? elapsed : s.run.max_time;
    m.cycles_completed = progress.cycles;
    if (solved_steps > 0) {
        m.mean_solve_time = solve_time_sum / solved_steps;
        m.mean_slack = slack_sum / solved_steps;
    }
    return out;
}

// --- serialization ---------------------------------------------------------

inline const char* trajectory_csv_header() {
    return "t,mode,alpha,beta,gamma,theta,u1,u2,u3,u4,x4,y4,z4,d_min,z_floor,"
           "eps_max_step,solve_time_s,switch_event";
}

inline void write_trajectory_csv(const std::vector<TrajectoryRow>& log, std::ostream& os) {
    using detail::fmt_g;
    os << trajectory_csv_header() << "\n";
    for (const auto& r : log) {
        const auto qa = r.q.to_array();
        const auto ua = r.u.to_array();
        os << fmt_g(r.t) << ',' << r.mode;
        for (double v : qa) os << ',' << fmt_g(v);
        for (double v : ua) os << ',' << fmt_g(v);
        os << ',' << fmt_g(r.p4.x()) << ',' << fmt_g(r.p4.y()) << ',' << fmt_g(r.p4.z());
        os << ',' << fmt_g(r.d_min) << ',' << fmt_g(r.z_floor) << ','
           << fmt_g(r.eps_max_step) << ',' << fmt_g(r.solve_time_s) << ','
           << r.switch_event << "\n";
    }
}

inline void write_obstacle_csv(const std::vector<ObstacleRow>& rows, std::ostream& os) {
    using detail::fmt_g;
    os << "t,id,x,y,height\n";
    for (const auto& r : rows)
        os << fmt_g(r.t) << ',' << r.id << ',' << fmt_g(r.x) << ',' << fmt_g(r.y) << ','
           << fmt_g(r.height) << "\n";
}

inline nlohmann::json metrics_to_json(const RunMetrics& m) {
    nlohmann::json j;
    j["completion_time"] = m.completion_time;
    j["cycles_completed"] = m.cycles_completed;
    j["collision_count"] = m.collision_count;
    if (std::isfinite(m.min_separation))
        j["min_separation"] = m.min_separation;
    else
        j["min_separation"] = "inf";
    j["stop_steps"] = m.stop_steps;
    j["mode_switches"] = m.mode_switches;
    j["mean_solve_time"] = m.mean_solve_time;
    j["max_solve_time"] = m.max_solve_time;
    j["mean_slack"] = m.mean_slack;
    j["max_slack"] = m.max_slack;
    j["completed"] = m.completed;
    return j;
}

// Minimal CSV reading for the plot/emission paths and tests; fields never
// contain commas.
inline std::vector<std::vector<std::string>> read_csv(std::istream& is) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

// --- plot data -------------------------------------------------------------

// z4_vs_t.csv carries the vertical trace against the active floor;
// xy_topdown.csv aligns the end-effector planar track with every obstacle's
// true position, one column pair per obstacle id.
inline void emit_plots(const std::vector<std::vector<std::string>>& trajectory,
                       const std::vector<std::vector<std::string>>& obstacles,
                       std::ostream& z4_os, std::ostream& xy_os) {
    if (trajectory.empty()) throw std::runtime_error("emit_plots: empty trajectory log");
    z4_os << "t,z4,z_floor,mode\n";
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        const auto& r = trajectory[i];
        z4_os << r[0] << ',' << r[12] << ',' << r[14] << ',' << r[1] << "\n";
    }

    std::vector<int> ids;
    std::map<std::pair<std::string, int>, std::pair<std::string, std::string>> by_step;
    for (std::size_t i = 1; i < obstacles.size(); ++i) {
        const auto& r = obstacles[i];
        const int id = std::stoi(r[1]);
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        by_step[{r[0], id}] = {r[2], r[3]};
    }
    std::sort(ids.begin(), ids.end());

    xy_os << "t,x4,y4";
    for (int id : ids) xy_os << ",obs" << id << "_x,obs" << id << "_y";
    xy_os << "\n";
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        const auto& r = trajectory[i];
        xy_os << r[0] << ',' << r[10] << ',' << r[11];
        for (int id : ids) {
            const auto it = by_step.find({r[0], id});
            if (it == by_step.end())
                xy_os << ",,";
            else
                xy_os << ',' << it->second.first << ',' << it->second.second;
        }
        xy_os << "\n";
    }
}

// --- batch -----------------------------------------------------------------

struct BatchEntry {
    ControllerKind controller = ControllerKind::kRmpc;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    RunMetrics metrics;
};

struct BatchStats {
    double mean = 0.0, median = 0.0, min = 0.0, max = 0.0;
};

struct BatchResult {
    std::vector<BatchEntry> entries;  // sorted by (controller, seed)
    double rmpc_win_rate = 0.0;       // fraction of seeds where RMPC finished faster
    int seeds = 0;
};

inline BatchStats batch_stats(std::vector<double> v) {
    BatchStats s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    const std::size_t n = v.size();
    s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return s;
}

// Runs are independent; they execute concurrently across a small pool with
// isolated world/controller state and are assembled in deterministic order.
inline BatchResult batch(const Scenario& s, const std::vector<ControllerKind>& controllers,
                         std::uint64_t seed_begin, std::uint64_t seed_end,
                         unsigned threads = std::thread::hardware_concurrency()) {
    BatchResult out;
    std::vector<std::pair<ControllerKind, std::uint64_t>> jobs;
    for (ControllerKind c : controllers)
        for (std::uint64_t seed = seed_begin; seed <= seed_end; ++seed)
            jobs.push_back({c, seed});
    out.entries.resize(jobs.size());
    out.seeds = static_cast<int>(seed_end - seed_begin + 1);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            BatchEntry& e = out.entries[i];
            e.controller = jobs[i].first;
            e.seed = jobs[i].second;
            try {
                e.metrics = run(s, e.controller, e.seed).metrics;
            } catch (const std::exception& ex) {
                e.failed = true;
                e.error = ex.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, jobs.size()));
    for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // Win rate on completion time, counted over seeds present for both.
    std::map<std::uint64_t, double> rmpc_time, base_time;
    for (const auto& e : out.entries) {
        if (e.failed) continue;
        (e.controller == ControllerKind::kRmpc ? rmpc_time : base_time)[e.seed] =
            e.metrics.completion_time;
    }
    int wins = 0, comparisons = 0;
    for (const auto& [seed, tr] : rmpc_time) {
        const auto it = base_time.find(seed);
        if (it == base_time.end()) continue;
        ++comparisons;
        if (tr < it->second) ++wins;
    }
    out.rmpc_win_rate = comparisons > 0 ? static_cast<double>(wins) / comparisons : 0.0;
    return out;
}

inline nlohmann::json batch_to_json(const BatchResult& b) {
    nlohmann::json j;
    j["seeds"] = b.seeds;
    j["rmpc_win_rate"] = b.rmpc_win_rate;
    for (const char* name : {"rmpc", "baseline"}) {
        const ControllerKind kind =
            std::string(name) == "rmpc" ? ControllerKind::kRmpc : ControllerKind::kBaseline;
        std::vector<double> completion, stops, switches, min_sep, mean_solve, max_slack;
        int collisions = 0, present = 0, failures = 0;
        for (const auto& e : b.entries) {
            if (e.controller != kind) continue;
            ++present;
            if (e.failed) {
                ++failures;
                continue;
            }
            completion.push_back(e.metrics.completion_time);
            stops.push_back(e.metrics.stop_steps);
            switches.push_back(e.metrics.mode_switches);
            if (std::isfinite(e.metrics.min_separation))
                min_sep.push_back(e.metrics.min_separation);
            mean_solve.push_back(e.metrics.mean_solve_time);
            max_slack.push_back(e.metrics.max_slack);
            collisions += e.metrics.collision_count;
        }
        if (present == 0) continue;
        nlohmann::json c;
        auto stats_json = [](const BatchStats& s) {
            return nlohmann::json{{"mean", s.mean}, {"median", s.median}, {"min", s.min},
                                  {"max", s.max}};
        };
        c["runs"] = present;
        c["failures"] = failures;
        c["completion_time"] = stats_json(batch_stats(completion));
        c["stop_steps"] = stats_json(batch_stats(stops));
        c["mode_switches"] = stats_json(batch_stats(switches));
        c["min_separation"] = stats_json(batch_stats(min_sep));
        c["mean_solve_time"] = stats_json(batch_stats(mean_solve));
        c["max_slack"] = stats_json(batch_stats(max_slack));
        c["total_collisions"] = collisions;
        j[name] = c;
    }
    return j;
}

inline void write_batch_csv(const BatchResult& b, std::ostream& os) {
    using detail::fmt_g;
    os << "controller,seed,failed,completion_time,cycles_completed,collision_count,"
          "min_separation,stop_steps,mode_switches,mean_solve_time,max_solve_time,"
          "mean_slack,max_slack\n";
    for (const auto& e : b.entries) {
        os << to_string(e.controller) << ',' << e.seed << ',' << (e.failed ? 1 : 0) << ','
           << fmt_g(e.metrics.completion_time) << ',' << e.metrics.cycles_completed << ','
           << e.metrics.collision_count << ',' << fmt_g(e.metrics.min_separation) << ','
           << e.metrics.stop_steps << ',' << e.metrics.mode_switches << ','
           << fmt_g(e.metrics.mean_solve_time) << ',' << fmt_g(e.metrics.max_solve_time)
           << ',' << fmt_g(e.metrics.mean_slack) << ',' << fmt_g(e.metrics.max_slack)
           << "\n";
    }
}

}  // namespace armsim
