#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "prox/dynamics.hpp"
#include "prox/sensors.hpp"

namespace prox {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inverse CDF of the chi-square distribution.
double chi_square_quantile(double probability, int dof);

/// Innovation gate plus under-weighting band. Thresholds are cached for the
/// two measurement sizes the filter uses (scalar range, 18-vector features).
class GateConfig {
public:
    static constexpr int kFeatureDof = 18;

    GateConfig() : GateConfig(0.9999, 0.95, 2.0) {}
    GateConfig(double gate_probability, double underweight_probability, double beta);

    double gate_probability() const { return gate_probability_; }
    double underweight_probability() const { return underweight_probability_; }
    double beta() const { return beta_; }

    double gate_threshold(int dof) const;
    double underweight_threshold(int dof) const;

private:
    double gate_probability_;
    double underweight_probability_;
    double beta_;
    std::array<double, 2> gate_{};         // [range, features]
    std::array<double, 2> underweight_{};
};

/// Six-state filter on the UWB tag point: (position, velocity) in the mother-ship frame.
struct TranslationalFilter {
    Vec6 x{Vec6::Zero()};
    Mat6 P{Mat6::Identity()};
    double accel_noise_density{1e-4};  // m^2/s^3
};

/// Three-state attitude error about a reference quaternion. The error is
/// expressed in the mother-ship frame: q = exp(dtheta) (x) q_ref.
struct AttitudeFilter {
    Quaternion q_ref{};
    Vec3 dtheta{Vec3::Zero()};
    Mat3 P{Mat3::Identity()};
    double gyro_noise_density{3.5e-4};  // rad/s/sqrt(Hz)

    Quaternion estimate() const;
};

struct EstimateReport {
    Vec3 tag_position{Vec3::Zero()};
    Vec3 tag_velocity{Vec3::Zero()};
    Vec3 position{Vec3::Zero()};  // centre of mass
    Vec3 velocity{Vec3::Zero()};
    Quaternion q{};
    Vec3 omega_b{Vec3::Zero()};
    Vec3 sigma_pos{Vec3::Zero()};
    double d{0.0};

    double max_sigma_pos() const { return sigma_pos.maxCoeff(); }
};

/// Exponentially smoothed Mahalanobis distance over accepted range updates.
class MahalanobisSmoother {
public:
    explicit MahalanobisSmoother(double alpha = 0.3) : alpha_(alpha) {}
    void add(double d2);
    double value() const { return value_; }
    bool primed() const { return primed_; }

private:
    double alpha_;
    double value_{0.0};
    bool primed_{false};
};

struct RangeUpdateResult {
    bool accepted{false};
    bool skipped{false};
    bool underweighted{false};
    double d2{0.0};
};

struct FeatureUpdateResult {
    bool accepted{false};
    bool underweighted{false};
    double d2{0.0};
};

Mat6 translational_transition(double dt);
Mat6 translational_process_noise(double accel_noise_density, double dt);

/// Mean propagation of the tag point under a known acceleration.
Vec6 propagate_translational_mean(const Vec6& x, const Vec3& accel, double dt);

/// Predicted tag acceleration from the estimated attitude, gyro rates and the
/// commanded wrench.
Vec3 predicted_tag_accel(const Quaternion& q_hat, const Vec3& omega_hat, const ControlInput& u,
                         const RigidBodyParams& p);

void predict(TranslationalFilter& tf, AttitudeFilter& af, const GyroMeasurement& gyro, const ControlInput& u,
             const RigidBodyParams& p, double dt);

RangeUpdateResult update_range(TranslationalFilter& tf, const RangeMeasurement& z, const UwbAnchorSet& anchors,
                               const GateConfig& gate);

/// Joint update of both filters from a full marker set; cross-covariance is dropped.
FeatureUpdateResult update_features(TranslationalFilter& tf, AttitudeFilter& af, const FeatureMeasurement& z,
                                    const CameraSpec& cam, const TargetPose& target, const RigidBodyParams& p,
                                    const GateConfig& gate);

void quaternion_reset(AttitudeFilter& af);

EstimateReport report(const TranslationalFilter& tf, const AttitudeFilter& af, const RigidBodyParams& p,
                      const MahalanobisSmoother& d_smoother, const Vec3& omega_hat = Vec3::Zero());

/// Gauss-Newton multilateration of the tag position from one range per anchor.
Vec3 multilaterate(const std::vector<RangeMeasurement>& ranges, const UwbAnchorSet& anchors, const Vec3& guess,
                   int iterations = 20);

struct EstimatorTuning {
    double accel_noise_density{1e-4};
    double init_position_sigma{0.1};
    double init_velocity_sigma{0.05};
    double init_attitude_sigma{deg2rad(10.0) / 3.0};
    double gate_probability{0.9999};
    double underweight_probability{0.95};
    double underweight_beta{2.0};
    double d_smoothing{0.3};
    int gn_iterations{20};
    int reacquire_rejections{8};  // consecutive rejections on one anchor before re-multilaterating; 0 disables
};

/// Run-loop facing wrapper that owns both filters and the gating state.
class TandemEstimator {
public:
    TandemEstimator(const EstimatorTuning& tuning, const RigidBodyParams& body, const UwbAnchorSet& anchors,
                    const GyroSpec& gyro, const CameraSpec& camera, const TargetPose& target);

    void initialize(const std::vector<RangeMeasurement>& ranges, const Vec3& guess, const Quaternion& q0);

    void predict(const GyroMeasurement& gyro, const ControlInput& u, double dt);
    /// Range update. `reacquire_rejections` consecutive rejections on any one anchor
    /// re-initialise the translational filter from the median of the recent ranges
    /// per anchor, provided that fix is self-consistent.
    RangeUpdateResult update_range(const RangeMeasurement& z);
    int reacquisitions() const { return reacquisitions_; }
    FeatureUpdateResult update_features(const FeatureMeasurement& z);

    EstimateReport report() const;

    const TranslationalFilter& translational() const { return tf_; }
    const AttitudeFilter& attitude() const { return af_; }
    const GateConfig& gate() const { return gate_; }

private:
    void reset_translational_covariance();
    bool try_reacquire();

    static constexpr std::size_t kRangeHistory = 3;

    RigidBodyParams body_;
    UwbAnchorSet anchors_;
    CameraSpec camera_;
    TargetPose target_;
    EstimatorTuning tuning_;
    GateConfig gate_;
    TranslationalFilter tf_;
    AttitudeFilter af_;
    MahalanobisSmoother smoother_;
    Vec3 omega_hat_{Vec3::Zero()};
    std::vector<std::vector<RangeMeasurement>> recent_;  // newest last
    std::vector<int> consecutive_rejections_;
    int reacquisitions_{0};
};

}  // namespace prox
