#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "armsim/invariant_set.hpp"
#include "armsim/sim_harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw armsim::ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

armsim::Scenario load(const std::string& path) {
    armsim::Scenario s = armsim::load_scenario(slurp(path));
    if (!s.weights.slack_weight_dominates())
        std::cerr << "warning: slack weight c4 does not dominate the input weights; "
                     "soft constraints may be traded away cheaply\n";
    return s;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

armsim::ControllerKind parse_controller(const std::string& name) {
    if (name == "rmpc") return armsim::ControllerKind::kRmpc;
    if (name == "baseline") return armsim::ControllerKind::kBaseline;
    throw armsim::ConfigError("unknown controller '" + name + "' (rmpc|baseline)");
}

int cmd_run(const std::string& scenario_path, const std::string& controller,
            std::uint64_t seed, const std::string& out_dir) {
    const armsim::Scenario s = load(scenario_path);
    const armsim::ControllerKind kind = parse_controller(controller);
    const armsim::RunResult r = armsim::run(s, kind, seed);

    fs::create_directories(out_dir);
    {
        auto f = open_out(fs::path(out_dir) / "trajectory.csv");
        armsim::write_trajectory_csv(r.log, f);
    }
    {
        auto f = open_out(fs::path(out_dir) / "obstacles.csv");
        armsim::write_obstacle_csv(r.obstacle_log, f);
    }
    {
        auto f = open_out(fs::path(out_dir) / "metrics.json");
        f << armsim::metrics_to_json(r.metrics).dump(2) << "\n";
    }
    std::cout << controller << " seed " << seed << ": "
              << (r.metrics.completed ? "completed " : "timed out after ")
              << r.metrics.completion_time << " s, cycles " << r.metrics.cycles_completed
              << ", collisions " << r.metrics.collision_count << ", stops "
              << r.metrics.stop_steps << "\n";
    return 0;
}

int cmd_batch(const std::string& scenario_path, const std::string& controllers_arg,
              const std::string& seeds_arg, const std::string& out_dir) {
    const armsim::Scenario s = load(scenario_path);

    std::vector<armsim::ControllerKind> controllers;
    std::stringstream cs(controllers_arg);
    std::string tok;
    while (std::getline(cs, tok, ',')) controllers.push_back(parse_controller(tok));
    if (controllers.empty()) throw armsim::ConfigError("--controllers: none given");

    const auto sep = seeds_arg.find("..");
    if (sep == std::string::npos)
        throw armsim::ConfigError("--seeds: expected '<a>..<b>'");
    const std::uint64_t a = std::stoull(seeds_arg.substr(0, sep));
    const std::uint64_t b = std::stoull(seeds_arg.substr(sep + 2));
    if (b < a) throw armsim::ConfigError("--seeds: empty range");

    const armsim::BatchResult r = armsim::batch(s, controllers, a, b);
    fs::create_directories(out_dir);
    {
        auto f = open_out(fs::path(out_dir) / "batch_summary.json");
        f << armsim::batch_to_json(r).dump(2) << "\n";
    }
    {
        auto f = open_out(fs::path(out_dir) / "batch_runs.csv");
        armsim::write_batch_csv(r, f);
    }
    std::cout << armsim::batch_to_json(r).dump(2) << "\n";
    return 0;
}

int cmd_verify_invariant(const std::string& scenario_path, int grid_n,
                         const std::string& out_file) {
    const armsim::Scenario s = load(scenario_path);
    const armsim::DisturbanceBounds3 w3 =
        armsim::DisturbanceBounds3::from_bounds(s.disturbance, s.dt);
    const std::vector<double> floors(static_cast<std::size_t>(s.np), s.workspace.z_min);
    const armsim::TightenedWorkspace xr =
        armsim::tighten_workspace(s.workspace, w3, floors, s.np, s.tightening);
    if (!xr.feasible)
        throw std::runtime_error("tightened workspace is empty at step " +
                                 std::to_string(xr.first_empty_step));

    const armsim::InvariantGrid grid =
        armsim::invariant_grid(grid_n, s.np, s.dt, s.geom, s.joint_limits, s.input_limits,
                               s.workspace, xr, s.solver);
    auto f = open_out(out_file);
    armsim::write_invariant_grid_csv(grid, f);
    std::cout << "grid " << grid_n << "^4: member fraction " << grid.member_fraction()
              << ", unknown " << grid.count(armsim::Membership::kUnknown) << "\n";
    return 0;
}

int cmd_emit_plots(const std::string& log_path, const std::string& obstacles_path,
                   const std::string& out_dir) {
    std::ifstream lf(log_path);
    if (!lf) throw std::runtime_error("cannot open '" + log_path + "'");
    const auto trajectory = armsim::read_csv(lf);

    std::vector<std::vector<std::string>> obstacles;
    if (!obstacles_path.empty()) {
        std::ifstream of(obstacles_path);
        if (!of) throw std::runtime_error("cannot open '" + obstacles_path + "'");
        obstacles = armsim::read_csv(of);
    }

    fs::create_directories(out_dir);
    auto z4 = open_out(fs::path(out_dir) / "z4_vs_t.csv");
    auto xy = open_out(fs::path(out_dir) / "xy_topdown.csv");
    armsim::emit_plots(trajectory, obstacles, z4, xy);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"4-DOF arm pick-and-place simulator with robust MPC obstacle avoidance"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", controller = "rmpc";
    std::uint64_t seed = 0;

    auto* run_cmd = app.add_subcommand("run", "simulate one controller on one seed");
    run_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required();
    run_cmd->add_option("--controller", controller, "rmpc|baseline");
    run_cmd->add_option("--seed", seed, "random seed");
    run_cmd->add_option("--out", out_dir, "output directory");

    std::string controllers_arg = "rmpc,baseline", seeds_arg = "0..0";
    auto* batch_cmd = app.add_subcommand("batch", "seed sweep over one or two controllers");
    batch_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required();
    batch_cmd->add_option("--controllers", controllers_arg, "comma list: rmpc,baseline");
    batch_cmd->add_option("--seeds", seeds_arg, "inclusive range '<a>..<b>'");
    batch_cmd->add_option("--out", out_dir, "output directory");

    int grid_n = 9;
    std::string grid_out = "invariant_grid.csv";
    auto* verify_cmd =
        app.add_subcommand("verify-invariant", "sample robust-set membership on a joint grid");
    verify_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required();
    verify_cmd->add_option("--grid", grid_n, "nodes per axis");
    verify_cmd->add_option("--out", grid_out, "output CSV file");

    std::string log_path, obstacles_path;
    auto* plots_cmd = app.add_subcommand("emit-plots", "derive plot data from a trajectory log");
    plots_cmd->add_option("--log", log_path, "trajectory CSV")->required();
    plots_cmd->add_option("--obstacles", obstacles_path, "obstacle truth CSV (optional)");
    plots_cmd->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(scenario_path, controller, seed, out_dir);
        if (batch_cmd->parsed())
            return cmd_batch(scenario_path, controllers_arg, seeds_arg, out_dir);
        if (verify_cmd->parsed()) return cmd_verify_invariant(scenario_path, grid_n, grid_out);
        if (plots_cmd->parsed()) return cmd_emit_plots(log_path, obstacles_path, out_dir);
    } catch (const armsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
