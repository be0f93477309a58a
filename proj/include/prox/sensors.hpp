#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "prox/dynamics.hpp"
#include "prox/rng.hpp"

namespace prox {

struct UwbAnchorSet {
    std::vector<Vec3> anchors;
    double sigma{0.02};
    double outlier_probability{0.0};
    double outlier_bias_min{0.2};
    double outlier_bias_max{1.0};

    void validate() const;
};

struct GyroSpec {
    double noise_density{3.5e-4};  // rad/s/sqrt(Hz)
    double sample_rate{100.0};     // Hz

    double sigma() const;
    void validate() const;
};

struct TargetPose {
    Vec3 position{Vec3::Zero()};
    Quaternion q{};
    Vec3 face_normal{Vec3::UnitZ()};  // docking face, target body frame
};

using MarkerPattern = std::array<Vec3, 6>;

struct CameraSpec {
    Mat3 mount{Mat3::Identity()};  // body -> camera frame; camera +z is the boresight
    Vec3 lever_arm{Vec3::Zero()};  // body frame, m
    double half_angle{deg2rad(30.0)};
    double max_range{1.0};
    double sigma{1e-3};
    MarkerPattern markers{};  // target body frame, m

    void validate() const;
    Vec3 position(const TrueState& s) const;
};

struct GyroMeasurement {
    double t{0.0};
    Vec3 rate{Vec3::Zero()};
};

struct RangeMeasurement {
    double t{0.0};
    std::size_t anchor{0};
    double range{0.0};
    bool injected_outlier{false};  // simulation bookkeeping only; filters never read it
};

struct FeatureMeasurement {
    double t{0.0};
    std::vector<Vec3> points;  // camera frame, m
};

using Measurement = std::variant<GyroMeasurement, RangeMeasurement, FeatureMeasurement>;

GyroMeasurement measure_gyro(const TrueState& state, const GyroSpec& spec, RandomStream& rng, double t = 0.0);

RangeMeasurement measure_range(const TrueState& state, const UwbAnchorSet& anchors, std::size_t anchor_id,
                               const RigidBodyParams& p, RandomStream& rng, double t = 0.0);

bool check_fov(const TrueState& state, const CameraSpec& cam, const TargetPose& target);

/// Marker positions in the camera frame for a given chaser pose (noise free).
std::vector<Vec3> project_markers(const Vec3& cam_position, const Mat3& body_to_ref, const CameraSpec& cam,
                                  const TargetPose& target);

std::optional<FeatureMeasurement> measure_features(const TrueState& state, const CameraSpec& cam,
                                                   const TargetPose& target, RandomStream& rng, double t = 0.0);

/// Default pattern: 4 cm square of corner LEDs plus two raised edge markers.
MarkerPattern default_marker_pattern();

}  // namespace prox
