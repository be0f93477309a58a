#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "prox/control.hpp"
#include "prox/estimator.hpp"
#include "prox/guidance.hpp"
#include "prox/sensors.hpp"

namespace prox {

inline constexpr const char* kScenarioSchema = "proxsim-scenario/1";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GuidancePolicy { Adaptive, Fixed, Hold };

std::string_view to_string(GuidancePolicy p);
GuidancePolicy policy_from_string(std::string_view s);

struct TimingConfig {
    double dt{0.01};           // truth, gyro and filter prediction step
    int control_divider{2};    // 50 Hz
    int uwb_divider{2};        // 50 Hz, one anchor per tick
    int camera_divider{5};     // 20 Hz
    int guidance_divider{20};  // 5 Hz
    double max_duration{400.0};
};

struct ChaserConfig {
    Vec3 position{0.0, 1.0, 0.0};
    Vec3 velocity{Vec3::Zero()};
    Vec3 attitude_euler_deg{Vec3::Zero()};
    Vec3 omega_b{Vec3::Zero()};
    double position_sigma{0.05};  // truth dispersion about the nominal start, m
};

struct ControlConfig {
    double q_position{100.0};
    double q_velocity{10.0};
    double r_force{50.0};
    double q_integral{1.0};
    double force_limit{0.2};
    double integral_band{0.05};  // m
    AttitudeGains attitude{};
};

struct GuidanceConfig {
    GuidancePolicy policy{GuidancePolicy::Adaptive};
    SwitchingState switching{};
    GuidanceParams params{};
    FixedRadii fixed{};
    double ready_sigma{0.05};  // start moving once max sigma_pos drops below this, m
};

struct ScenarioConfig {
    std::string name{"face-docking"};
    TimingConfig timing{};
    RigidBodyParams body{};
    ChaserConfig chaser{};
    TargetPose target{};
    Vec3 target_euler_deg{-90.0, 0.0, -90.0};
    UwbAnchorSet uwb{};
    GyroSpec gyro{};
    CameraSpec camera{};
    bool vision_enabled{true};
    EstimatorTuning filter{};
    double truth_accel_noise_density{1e-4};  // m^2/s^3, unmodelled acceleration on the truth
    bool sensor_noise{true};  // false: noise-free sensors, truth and initial estimate (filters keep their tuning)
    ControlConfig control{};
    GuidanceConfig guidance{};

    void validate() const;
};

/// Default docking scenario with all values resolved.
ScenarioConfig default_scenario();

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace prox
