#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prox/scenario.hpp"

namespace prox {

enum class RunStatus { Docked, Timeout, Diverged };

std::string_view to_string(RunStatus s);
RunStatus status_from_string(std::string_view s);

enum class UpdateFlag : int { None = 0, Accepted = 1, Rejected = 2, Skipped = 3 };

struct LogRow {
    double t{0.0};
    Vec3 truth_position{Vec3::Zero()};
    Vec3 truth_velocity{Vec3::Zero()};
    Quaternion truth_q{};
    Vec3 truth_omega{Vec3::Zero()};
    Vec3 est_position{Vec3::Zero()};
    Vec3 est_velocity{Vec3::Zero()};
    Quaternion est_q{};
    Vec3 sigma_pos{Vec3::Zero()};
    GuidanceMode mode{GuidanceMode::LOS};
    Vec3 reference{Vec3::Zero()};
    Vec3 force{Vec3::Zero()};
    Vec3 torque{Vec3::Zero()};
    UpdateFlag range_flag{UpdateFlag::None};
    double range_d2{0.0};
    UpdateFlag feature_flag{UpdateFlag::None};
    double feature_d2{0.0};
    double d{0.0};
    double nees{0.0};  // translational filter, tag-point state

    bool operator==(const LogRow&) const;
};

struct MeasurementStats {
    long ranges{0};
    long ranges_rejected{0};
    long outliers_injected{0};
    long outliers_rejected{0};
    long clean_rejected{0};
    long ranges_underweighted{0};
    long feature_frames{0};
    long features_accepted{0};
    long reacquisitions{0};

    bool operator==(const MeasurementStats&) const = default;
};

struct RunLog {
    std::uint64_t seed{0};
    GuidancePolicy policy{GuidancePolicy::Adaptive};
    RunStatus status{RunStatus::Timeout};
    std::string message;
    Vec3 dock_point{Vec3::Zero()};
    Quaternion dock_attitude{};
    double r_1{0.0};
    double r_2{0.0};
    std::vector<LogRow> rows;
    std::vector<SwitchEvent> events;
    MeasurementStats stats;
};

bool operator==(const RunLog& a, const RunLog& b);

struct Metrics {
    std::optional<double> position_error_cm;
    std::optional<double> attitude_error_rad;
    std::optional<double> docking_time;
    double total_impulse{0.0};  // N s, per-axis magnitudes summed
};

/// Scenario with the controller design solved once; reusable across runs.
class PreparedScenario {
public:
    explicit PreparedScenario(ScenarioConfig cfg);
    const ScenarioConfig& config() const { return cfg_; }
    const LqrDesign& design() const { return design_; }
    RunLog run(std::uint64_t seed) const;

private:
    ScenarioConfig cfg_;
    LqrDesign design_;
};

LqrDesign design_translational_controller(const ScenarioConfig& cfg);

RunLog run_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

Metrics compute_metrics(const RunLog& log);

struct Statistic {
    double mean{0.0};
    double std{0.0};
    std::size_t count{0};
};

Statistic summarize(const std::vector<double>& values);

struct RunSummary {
    std::size_t index{0};
    std::uint64_t seed{0};
    RunStatus status{RunStatus::Timeout};
    Metrics metrics;
    double r_1{0.0};
    double r_2{0.0};
    MeasurementStats stats;
};

struct MetricsSummary {
    GuidancePolicy policy{GuidancePolicy::Adaptive};
    std::size_t runs{0};
    std::size_t docked{0};
    double success_rate{0.0};
    Statistic position_error_cm;
    Statistic attitude_error_rad;
    Statistic docking_time;
    Statistic total_impulse;
    std::vector<RunSummary> per_run;  // ordered by run index
};

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t index);

/// Summary over a set of runs. Means cover docked runs only.
MetricsSummary summarize_runs(GuidancePolicy policy, std::vector<RunSummary> runs);

MetricsSummary monte_carlo(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t base_seed,
                           GuidancePolicy policy, unsigned threads = 0);

struct ComparisonReport {
    MetricsSummary baseline;   // fixed radii
    MetricsSummary candidate;  // adaptive
    double time_reduction_pct{0.0};
    double impulse_reduction_pct{0.0};
};

ComparisonReport compare_summaries(MetricsSummary baseline, MetricsSummary candidate);

/// Paired campaign: both arms use the same per-run seeds.
ComparisonReport compare_fixed_adaptive(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t base_seed,
                                        unsigned threads = 0);

struct AnchorLayout {
    std::string name;
    std::vector<Vec3> anchors;
};

struct PlacementOptions {
    double duration{30.0};  // s of UWB-only filtering per probe point
    std::vector<double> representative_d{0.5, 1.0};
    std::vector<double> representative_fractions{0.25, 0.5, 0.75};  // r = r_d + f (r_2 - r_d)
    std::uint64_t seed{1};
};

struct ProbeResult {
    Vec3 point{Vec3::Zero()};
    double max_sigma_pos{0.0};
    double pi2_min{1.0};
    double pi2_max{0.0};
};

struct LayoutReport {
    std::string name;
    std::vector<ProbeResult> probes;
    double best_sigma_pos{0.0};
    double worst_sigma_pos{0.0};
    double best_pi2{0.0};
    double worst_pi2{1.0};
};

struct PlacementReport {
    std::vector<LayoutReport> layouts;
};

/// Steady-state UWB-only accuracy per layout/probe, mapped through the
/// reorientation probability rules. r_2 is taken from the fixed baseline radii.
PlacementReport placement_study(const ScenarioConfig& cfg, const std::vector<AnchorLayout>& layouts,
                                const std::vector<Vec3>& probe_points, const PlacementOptions& opts = {});

struct PlacementInput {
    std::vector<AnchorLayout> layouts;
    std::vector<Vec3> probe_points;
    PlacementOptions options;
};

PlacementInput load_placement_input(const std::filesystem::path& path);

// Serialisation of run products.
void write_run_csv(std::ostream& os, const RunLog& log);
std::vector<LogRow> read_run_csv(std::istream& is);
nlohmann::json run_meta_to_json(const RunLog& log);
/// Rebuilds a log from its metadata document and CSV rows.
RunLog run_log_from_parts(const nlohmann::json& meta, std::vector<LogRow> rows);
nlohmann::json metrics_to_json(const Metrics& m);
nlohmann::json summary_to_json(const MetricsSummary& s);
nlohmann::json comparison_to_json(const ComparisonReport& c);
nlohmann::json placement_to_json(const PlacementReport& r);

}  // namespace prox
