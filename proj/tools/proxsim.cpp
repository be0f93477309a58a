#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "prox/harness.hpp"

namespace fs = std::filesystem;
using namespace prox;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

fs::path output_dir(const std::string& flag) {
    fs::path dir;
    if (!flag.empty())
        dir = flag;
    else if (const char* env = std::getenv("PROXSIM_OUT_DIR"); env && *env)
        dir = env;
    else
        dir = "proxsim-out";
    fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

int cmd_run(const std::string& config, std::uint64_t seed, const std::string& out_flag) {
    const ScenarioConfig cfg = load_scenario(config);
    const RunLog log = run_scenario(cfg, seed);
    const fs::path dir = output_dir(out_flag);
    const std::string stem = "run_" + std::to_string(seed);
    {
        std::ofstream csv(dir / (stem + ".csv"));
        write_run_csv(csv, log);
    }
    write_json(dir / (stem + ".json"), run_meta_to_json(log));
    const Metrics m = compute_metrics(log);
    std::cout << "status " << to_string(log.status) << "  rows " << log.rows.size() << "  r2 " << log.r_2 << "  r1 "
              << log.r_1 << '\n';
    if (m.docking_time)
        std::cout << "docking time " << *m.docking_time << " s  position error " << *m.position_error_cm
                  << " cm  attitude error " << *m.attitude_error_rad << " rad\n";
    std::cout << "total impulse " << m.total_impulse << " N s\n";
    std::cout << "wrote " << (dir / (stem + ".csv")).string() << '\n';
    if (log.status == RunStatus::Diverged) {
        std::cerr << "run diverged: " << log.message << '\n';
        return kExitDiverged;
    }
    return 0;
}

void print_summary(const MetricsSummary& s) {
    std::cout << to_string(s.policy) << ": " << s.docked << "/" << s.runs << " docked, time "
              << s.docking_time.mean << " s, impulse " << s.total_impulse.mean << " N s, position error "
              << s.position_error_cm.mean << " cm, attitude error " << s.attitude_error_rad.mean << " rad\n";
}

bool any_diverged(const MetricsSummary& s) {
    for (const RunSummary& r : s.per_run)
        if (r.status == RunStatus::Diverged) return true;
    return false;
}

int cmd_mc(const std::string& config, std::size_t runs, std::uint64_t seed, const std::string& mode,
           const std::string& out_flag, unsigned threads) {
    const ScenarioConfig cfg = load_scenario(config);
    const fs::path dir = output_dir(out_flag);
    bool diverged = false;
    if (mode == "both") {
        const ComparisonReport c = compare_fixed_adaptive(cfg, runs, seed, threads);
        print_summary(c.baseline);
        print_summary(c.candidate);
        std::cout << "time reduction " << c.time_reduction_pct << " %, impulse reduction " << c.impulse_reduction_pct
                  << " %\n";
        write_json(dir / "comparison.json", comparison_to_json(c));
        diverged = any_diverged(c.baseline) || any_diverged(c.candidate);
    } else {
        const MetricsSummary s = monte_carlo(cfg, runs, seed, policy_from_string(mode), threads);
        print_summary(s);
        write_json(dir / ("summary_" + mode + ".json"), summary_to_json(s));
        diverged = any_diverged(s);
    }
    return diverged ? kExitDiverged : 0;
}

int cmd_placement(const std::string& config, const std::string& layouts, const std::string& out_flag) {
    const ScenarioConfig cfg = load_scenario(config);
    const PlacementInput input = load_placement_input(layouts);
    const PlacementReport r = placement_study(cfg, input.layouts, input.probe_points, input.options);
    for (const LayoutReport& l : r.layouts)
        std::cout << l.name << ": sigma_pos " << l.best_sigma_pos << " .. " << l.worst_sigma_pos << " m, pi2 "
                  << l.best_pi2 << " .. " << l.worst_pi2 << '\n';
    write_json(output_dir(out_flag) / "placement.json", placement_to_json(r));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proximity-operations docking simulator"};
    app.require_subcommand(1);

    std::string config, out, layouts, mode = "both";
    std::uint64_t seed = 1;
    std::size_t runs = 200;
    unsigned threads = 0;

    CLI::App* run = app.add_subcommand("run", "Simulate one scenario");
    run->add_option("--config", config, "Scenario JSON")->required();
    run->add_option("--seed", seed, "Run seed");
    run->add_option("--out", out, "Output directory (default $PROXSIM_OUT_DIR or ./proxsim-out)");

    CLI::App* mc = app.add_subcommand("mc", "Monte-Carlo campaign");
    mc->add_option("--config", config, "Scenario JSON")->required();
    mc->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
    mc->add_option("--seed", seed, "Base seed");
    mc->add_option("--mode", mode, "fixed, adaptive or both")->check(CLI::IsMember({"fixed", "adaptive", "both"}));
    mc->add_option("--out", out, "Output directory (default $PROXSIM_OUT_DIR or ./proxsim-out)");
    mc->add_option("--threads", threads, "Worker threads (0 = all cores)");

    CLI::App* placement = app.add_subcommand("placement", "Anchor placement study");
    placement->add_option("--config", config, "Scenario JSON")->required();
    placement->add_option("--layouts", layouts, "Layouts JSON")->required();
    placement->add_option("--out", out, "Output directory (default $PROXSIM_OUT_DIR or ./proxsim-out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config, seed, out);
        if (*mc) return cmd_mc(config, runs, seed, mode, out, threads);
        return cmd_placement(config, layouts, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DesignError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
