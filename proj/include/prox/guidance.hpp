#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "prox/control.hpp"
#include "prox/estimator.hpp"
#include "prox/sensors.hpp"

namespace prox {

enum class GuidanceMode { LOS, Reorient, Align, TerminalDock, Complete };

std::string_view to_string(GuidanceMode m);
GuidanceMode mode_from_string(std::string_view s);

/// Adaptive switching radii (m) and decision thresholds.
struct SwitchingState {
    double r_t{1.0};
    double r_2{0.3};
    double r_1{0.1};
    double r_d{0.08};
    double a11_threshold{0.4};
    double pi2_threshold{0.6};
    bool r2_selected{false};
    bool r1_selected{false};

    void validate() const;
};

/// Row-stochastic 2x2 chain over {Reorient, Align}.
struct TransitionMatrix {
    double a22{1.0}, a23{0.0}, a32{0.0}, a33{1.0};

    Eigen::Matrix2d matrix() const;
};

struct StationaryDistribution {
    double pi1{1.0};
    double pi2{0.0};
    bool degenerate{false};
};

struct GuidanceDecisionInputs {
    double r{0.0};              // estimated range to target centre, m
    double d{0.0};              // smoothed Mahalanobis distance
    double q_e_vec_norm{0.0};   // |vec(q_err)| between chaser and target attitude
    double max_sigma_pos{0.0};  // m
    double sigma_uwb{0.02};     // m

    // Terminal-phase bookkeeping (not part of the probability rules).
    double vision_streak{0.0};      // s of uninterrupted accepted vision
    double alignment_error{1e9};    // |est - alignment point|, m
    double dock_error{1e9};         // |est - docking point|, m
    double speed{0.0};              // |estimated velocity|, m/s
    double attitude_error{0.0};     // rotation angle to docking attitude, rad
    bool reference_arrived{false};  // carrot has reached the active goal
};

struct GuidanceParams {
    double cruise_speed{0.02};
    double align_speed{0.01};
    double terminal_speed{0.01};
    double align_tolerance{0.02};
    double dock_position_tolerance{0.01};
    double dock_attitude_tolerance{0.05};
    double dock_speed_tolerance{0.01};
    double skip_align_vision_time{1.0};
    Quaternion initial_attitude{};
};

struct FixedRadii {
    double r_2{0.8};
    double r_1{0.3};
};

struct SwitchEvent {
    double t{0.0};
    GuidanceMode from{GuidanceMode::LOS};
    GuidanceMode to{GuidanceMode::LOS};
    double r{0.0};
    std::string trigger;        // "A11", "pi2", "r<=r2", "r<=r1", "vision", "aligned", "docked"
    double trigger_value{0.0};
    std::string radius;         // "r2", "r1" or empty
    double radius_value{0.0};
};

struct SwitchingResult {
    GuidanceMode mode{GuidanceMode::LOS};
    SwitchingState state{};
    std::optional<SwitchEvent> event;
    std::optional<double> a11;
    std::optional<TransitionMatrix> matrix;
    std::optional<StationaryDistribution> pi;
};

double compute_A11(double r, double r_t, double d, double q_e_vec_norm);

TransitionMatrix compute_reorient_matrix(const GuidanceDecisionInputs& in, const SwitchingState& s);

StationaryDistribution stationary_distribution(const TransitionMatrix& a);

/// One decision tick of the adaptive (MDP) policy.
SwitchingResult switching_step(GuidanceMode mode, const GuidanceDecisionInputs& in, const SwitchingState& s,
                               const GuidanceParams& params, double t = 0.0);

/// Baseline policy with preset radii.
SwitchingResult fixed_switching_step(GuidanceMode mode, const GuidanceDecisionInputs& in, const FixedRadii& fixed,
                                     const SwitchingState& s, const GuidanceParams& params, double t = 0.0);

Vec3 alignment_point(const TargetPose& target, double standoff);

struct ModeSetpoint {
    Vec3 position{Vec3::Zero()};  // goal
    Vec3 velocity{Vec3::Zero()};
    Quaternion attitude{};
    double speed{0.0};
};

Quaternion docking_attitude(const TargetPose& target);

ModeSetpoint mode_setpoint(GuidanceMode mode, const EstimateReport& est, const TargetPose& target,
                           const SwitchingState& s, const GuidanceParams& params);

/// Rate-limited reference point that walks toward the active goal.
class CarrotReference {
public:
    CarrotReference() = default;
    explicit CarrotReference(const Vec3& start) : position_(start) {}

    TranslationalSetpoint advance(const Vec3& goal, double speed, double dt);
    const Vec3& position() const { return position_; }
    bool arrived() const { return arrived_; }

private:
    Vec3 position_{Vec3::Zero()};
    bool arrived_{false};
};

}  // namespace prox
