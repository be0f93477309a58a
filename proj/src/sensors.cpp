#include "prox/sensors.hpp"

#include <algorithm>
#include <cmath>

namespace prox {

void UwbAnchorSet::validate() const {
    if (anchors.empty()) throw DomainError("uwb: at least one anchor required");
    if (!(sigma > 0.0)) throw DomainError("uwb: sigma must be positive");
    if (!(outlier_probability >= 0.0 && outlier_probability < 1.0))
        throw DomainError("uwb: outlier probability must lie in [0, 1)");
    if (outlier_bias_max < outlier_bias_min) throw DomainError("uwb: outlier bias range inverted");
}

double GyroSpec::sigma() const { return noise_density * std::sqrt(sample_rate); }

void GyroSpec::validate() const {
    if (!(noise_density >= 0.0) || !(sample_rate > 0.0)) throw DomainError("gyro: invalid noise spec");
}

void CameraSpec::validate() const {
    if (!(half_angle > 0.0 && half_angle < M_PI / 2)) throw DomainError("camera: half-angle must lie in (0, pi/2)");
    if (!(max_range > 0.0)) throw DomainError("camera: max range must be positive");
    if (!(sigma >= 0.0)) throw DomainError("camera: sigma must be non-negative");
    if (!(mount.transpose() * mount).isIdentity(1e-9) || std::abs(mount.determinant() - 1.0) > 1e-9)
        throw DomainError("camera: mount must be a proper rotation");
    // The pattern must not collapse onto a line.
    const Vec3 a = markers[1] - markers[0];
    double best = 0.0;
    for (std::size_t k = 2; k < markers.size(); ++k) best = std::max(best, a.cross(markers[k] - markers[0]).norm());
    if (best < 1e-6) throw DomainError("camera: degenerate marker pattern");
}

Vec3 CameraSpec::position(const TrueState& s) const { return s.rho + rotate(s.q, lever_arm); }

GyroMeasurement measure_gyro(const TrueState& state, const GyroSpec& spec, RandomStream& rng, double t) {
    return {t, state.omega_b + rng.normal3(spec.sigma())};
}

RangeMeasurement measure_range(const TrueState& state, const UwbAnchorSet& anchors, std::size_t anchor_id,
                               const RigidBodyParams& p, RandomStream& rng, double t) {
    if (anchor_id >= anchors.anchors.size()) throw DomainError("measure_range: anchor id out of range");
    const Vec3 tag = sensor_point_state(state, p).first;
    double range = (tag - anchors.anchors[anchor_id]).norm() + rng.normal(anchors.sigma);
    // Outlier draws are always consumed so the noise stream does not depend on p_out.
    const bool outlier = rng.bernoulli(anchors.outlier_probability);
    const double bias = rng.uniform(anchors.outlier_bias_min, std::nextafter(anchors.outlier_bias_max, 1e300));
    if (outlier) range += bias;
    return {t, anchor_id, std::max(range, 0.0), outlier};
}

bool check_fov(const TrueState& state, const CameraSpec& cam, const TargetPose& target) {
    const Vec3 los = target.position - cam.position(state);
    const double range = los.norm();
    if (range > cam.max_range) return false;
    if (range == 0.0) return true;
    const Vec3 los_cam = cam.mount * rotate(quat_inverse(state.q), los);
    // closed cone, with a little slack for rounding on the boundary
    return los_cam.z() >= range * std::cos(cam.half_angle) - 1e-12 * range;
}

std::vector<Vec3> project_markers(const Vec3& cam_position, const Mat3& body_to_ref, const CameraSpec& cam,
                                  const TargetPose& target) {
    const Mat3 target_dcm = quat_to_dcm(target.q);
    const Mat3 ref_to_cam = cam.mount * body_to_ref.transpose();
    std::vector<Vec3> out;
    out.reserve(cam.markers.size());
    for (const Vec3& m : cam.markers) out.push_back(ref_to_cam * (target.position + target_dcm * m - cam_position));
    return out;
}

std::optional<FeatureMeasurement> measure_features(const TrueState& state, const CameraSpec& cam,
                                                   const TargetPose& target, RandomStream& rng, double t) {
    if (!check_fov(state, cam, target)) return std::nullopt;
    FeatureMeasurement z{t, project_markers(cam.position(state), quat_to_dcm(state.q), cam, target)};
    for (Vec3& pt : z.points) pt += rng.normal3(cam.sigma);
    return z;
}

MarkerPattern default_marker_pattern() {
    return {Vec3(0.02, 0.02, 0.0), Vec3(-0.02, 0.02, 0.0), Vec3(-0.02, -0.02, 0.0),
            Vec3(0.02, -0.02, 0.0), Vec3(0.0, 0.02, 0.005), Vec3(0.02, 0.0, 0.01)};
}

}  // namespace prox
