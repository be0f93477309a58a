#include "prox/estimator.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

namespace prox {

namespace {

using Mat18 = Eigen::Matrix<double, 18, 18>;
using Vec18 = Eigen::Matrix<double, 18, 1>;
using Mat18x6 = Eigen::Matrix<double, 18, 6>;
using Mat18x3 = Eigen::Matrix<double, 18, 3>;

template <typename M>
void symmetrize_and_check(M& P, const char* what) {
    P = 0.5 * (P + P.transpose()).eval();
    if (!P.allFinite() || Eigen::LLT<M>(P).info() != Eigen::Success)
        throw NumericalError(std::string(what) + ": covariance lost positive definiteness");
}

int slot(int dof) {
    if (dof == 1) return 0;
    if (dof == GateConfig::kFeatureDof) return 1;
    return -1;
}

}  // namespace

double chi_square_quantile(double probability, int dof) {
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), probability);
}

GateConfig::GateConfig(double gate_probability, double underweight_probability, double beta)
    : gate_probability_(gate_probability), underweight_probability_(underweight_probability), beta_(beta) {
    if (!(gate_probability > 0.0 && gate_probability < 1.0) ||
        !(underweight_probability > 0.0 && underweight_probability < 1.0))
        throw DomainError("gate: probabilities must lie in (0, 1)");
    if (!(beta >= 1.0)) throw DomainError("gate: under-weighting factor must be >= 1");
    for (int dof : {1, kFeatureDof}) {
        gate_[slot(dof)] = chi_square_quantile(gate_probability, dof);
        underweight_[slot(dof)] = chi_square_quantile(underweight_probability, dof);
    }
}

double GateConfig::gate_threshold(int dof) const {
    const int s = slot(dof);
    return s >= 0 ? gate_[s] : chi_square_quantile(gate_probability_, dof);
}

double GateConfig::underweight_threshold(int dof) const {
    const int s = slot(dof);
    return s >= 0 ? underweight_[s] : chi_square_quantile(underweight_probability_, dof);
}

Quaternion AttitudeFilter::estimate() const {
    if (dtheta.isZero(0.0)) return q_ref;
    return quat_multiply(small_angle_to_quat(dtheta), q_ref);
}

void MahalanobisSmoother::add(double d2) {
    const double d = std::sqrt(std::max(d2, 0.0));
    if (!primed_) {
        value_ = d;
        primed_ = true;
    } else {
        value_ = alpha_ * d + (1.0 - alpha_) * value_;
    }
}

Mat6 translational_transition(double dt) {
    Mat6 phi = Mat6::Identity();
    phi.topRightCorner<3, 3>() = dt * Mat3::Identity();
    return phi;
}

Mat6 translational_process_noise(double q, double dt) {
    Mat6 qd;
    const Mat3 i3 = Mat3::Identity();
    qd << (dt * dt * dt / 3.0) * i3, (dt * dt / 2.0) * i3, (dt * dt / 2.0) * i3, dt * i3;
    return q * qd;
}

Vec6 propagate_translational_mean(const Vec6& x, const Vec3& accel, double dt) {
    Vec6 out;
    out.head<3>() = x.head<3>() + dt * x.tail<3>() + 0.5 * dt * dt * accel;
    out.tail<3>() = x.tail<3>() + dt * accel;
    return out;
}

Vec3 predicted_tag_accel(const Quaternion& q_hat, const Vec3& omega_hat, const ControlInput& u,
                         const RigidBodyParams& p) {
    TrueState s;
    s.q = q_hat;
    s.omega_b = omega_hat;
    return relative_accel(s, u, p);
}

void predict(TranslationalFilter& tf, AttitudeFilter& af, const GyroMeasurement& gyro, const ControlInput& u,
             const RigidBodyParams& p, double dt) {
    if (!(dt > 0.0)) throw DomainError("predict: dt must be positive");
    const Quaternion q_hat = af.estimate();
    const Vec3 accel = predicted_tag_accel(q_hat, gyro.rate, u, p);
    tf.x = propagate_translational_mean(tf.x, accel, dt);
    const Mat6 phi = translational_transition(dt);
    tf.P = phi * tf.P * phi.transpose() + translational_process_noise(tf.accel_noise_density, dt);
    symmetrize_and_check(tf.P, "translational predict");

    // Reference follows the gyro; the error state in the reference frame has
    // identity transition and picks up rotated rate noise.
    af.q_ref = quat_multiply(af.q_ref, small_angle_to_quat(gyro.rate * dt));
    const Mat3 d = quat_to_dcm(q_hat);
    const double var = af.gyro_noise_density * af.gyro_noise_density * dt;
    af.P += d * (var * Mat3::Identity()) * d.transpose();
    symmetrize_and_check(af.P, "attitude predict");
}

RangeUpdateResult update_range(TranslationalFilter& tf, const RangeMeasurement& z, const UwbAnchorSet& anchors,
                               const GateConfig& gate) {
    RangeUpdateResult res;
    if (z.anchor >= anchors.anchors.size()) throw DomainError("update_range: anchor id out of range");
    const Vec3 diff = tf.x.head<3>() - anchors.anchors[z.anchor];
    const double h = diff.norm();
    if (h < 1e-6) {
        res.skipped = true;
        return res;
    }
    Eigen::Matrix<double, 1, 6> H = Eigen::Matrix<double, 1, 6>::Zero();
    H.head<3>() = (diff / h).transpose();
    const Vec6 pht = tf.P * H.transpose();
    const double hph = H * pht;
    const double r = anchors.sigma * anchors.sigma;
    const double s = hph + r;
    const double nu = z.range - h;
    res.d2 = nu * nu / s;
    if (res.d2 > gate.gate_threshold(1)) return res;

    double s_gain = s;
    if (res.d2 > gate.underweight_threshold(1)) {
        s_gain = gate.beta() * hph + r;
        res.underweighted = true;
    }
    const Vec6 k = pht / s_gain;
    tf.x += k * nu;
    const Mat6 ikh = Mat6::Identity() - k * H;
    tf.P = ikh * tf.P * ikh.transpose() + (k * r) * k.transpose();
    symmetrize_and_check(tf.P, "range update");
    res.accepted = true;
    return res;
}

FeatureUpdateResult update_features(TranslationalFilter& tf, AttitudeFilter& af, const FeatureMeasurement& z,
                                    const CameraSpec& cam, const TargetPose& target, const RigidBodyParams& p,
                                    const GateConfig& gate) {
    if (z.points.size() != cam.markers.size() || z.points.size() != 6)
        throw DomainError("update_features: expected exactly 6 marker points");
    FeatureUpdateResult res;

    const Mat3 d_hat = quat_to_dcm(af.estimate());
    const Mat3 d_t = quat_to_dcm(target.q);
    const Mat3 ref_to_cam = cam.mount * d_hat.transpose();
    const Vec3 offset = cam.mount * (p.tag_lever_arm - cam.lever_arm);
    const Vec3 tag = tf.x.head<3>();

    Vec18 nu;
    Mat18x6 ht = Mat18x6::Zero();
    Mat18x3 ha;
    for (int k = 0; k < 6; ++k) {
        const Vec3 w = target.position + d_t * cam.markers[k] - tag;
        nu.segment<3>(3 * k) = z.points[k] - (ref_to_cam * w + offset);
        ht.block<3, 3>(3 * k, 0) = -ref_to_cam;
        ha.block<3, 3>(3 * k, 0) = ref_to_cam * skew(w);
    }
    const double r = cam.sigma * cam.sigma;
    const Mat18 hph_t = ht * tf.P * ht.transpose();
    const Mat18 hph_a = ha * af.P * ha.transpose();
    const Mat18 s = hph_t + hph_a + r * Mat18::Identity();
    const Eigen::LLT<Mat18> llt(s);
    if (llt.info() != Eigen::Success) throw NumericalError("feature update: singular innovation covariance");
    res.d2 = nu.dot(llt.solve(nu));
    if (res.d2 > gate.gate_threshold(GateConfig::kFeatureDof)) return res;

    Mat18 s_gain = s;
    if (res.d2 > gate.underweight_threshold(GateConfig::kFeatureDof)) {
        s_gain = gate.beta() * (hph_t + hph_a) + r * Mat18::Identity();
        res.underweighted = true;
    }
    const Eigen::LLT<Mat18> gain_llt(s_gain);
    // K = P H^T S^-1, formed as (S^-1 H P)^T since S and P are symmetric
    const Eigen::Matrix<double, 6, 18> kt = gain_llt.solve(ht * tf.P).transpose();
    const Eigen::Matrix<double, 3, 18> ka = gain_llt.solve(ha * af.P).transpose();

    tf.x += kt * nu;
    af.dtheta += ka * nu;

    // Joseph form per block; the other block's projected covariance acts as extra noise.
    const Mat18 r_t = hph_a + r * Mat18::Identity();
    const Mat18 r_a = hph_t + r * Mat18::Identity();
    const Mat6 ikh_t = Mat6::Identity() - kt * ht;
    const Mat3 ikh_a = Mat3::Identity() - ka * ha;
    tf.P = ikh_t * tf.P * ikh_t.transpose() + kt * r_t * kt.transpose();
    af.P = ikh_a * af.P * ikh_a.transpose() + ka * r_a * ka.transpose();
    symmetrize_and_check(tf.P, "feature update (translation)");
    symmetrize_and_check(af.P, "feature update (attitude)");
    res.accepted = true;
    return res;
}

void quaternion_reset(AttitudeFilter& af) {
    if (!af.dtheta.isZero(0.0)) af.q_ref = quat_multiply(small_angle_to_quat(af.dtheta), af.q_ref);
    af.dtheta.setZero();
}

EstimateReport report(const TranslationalFilter& tf, const AttitudeFilter& af, const RigidBodyParams& p,
                      const MahalanobisSmoother& d_smoother, const Vec3& omega_hat) {
    EstimateReport out;
    out.q = af.estimate();
    const Mat3 d = quat_to_dcm(out.q);
    const Vec3 arm = d * p.tag_lever_arm;
    out.tag_position = tf.x.head<3>();
    out.tag_velocity = tf.x.tail<3>();
    out.position = out.tag_position - arm;
    out.velocity = out.tag_velocity - (d * omega_hat).cross(arm);
    out.omega_b = omega_hat;
    out.sigma_pos = tf.P.diagonal().head<3>().cwiseSqrt();
    out.d = d_smoother.value();
    return out;
}

Vec3 multilaterate(const std::vector<RangeMeasurement>& ranges, const UwbAnchorSet& anchors, const Vec3& guess,
                   int iterations) {
    if (ranges.size() < 3) throw DomainError("multilaterate: need at least three ranges");
    Vec3 x = guess;
    const auto n = static_cast<Eigen::Index>(ranges.size());
    Eigen::MatrixXd J(n, 3);
    Eigen::VectorXd res(n);
    for (int it = 0; it < iterations; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3 diff = x - anchors.anchors.at(ranges[i].anchor);
            const double h = std::max(diff.norm(), 1e-9);
            J.row(i) = (diff / h).transpose();
            res(i) = ranges[i].range - h;
        }
        const Vec3 step = (J.transpose() * J).ldlt().solve(J.transpose() * res);
        x += step;
        if (step.norm() < 1e-12) break;
    }
    return x;
}

TandemEstimator::TandemEstimator(const EstimatorTuning& tuning, const RigidBodyParams& body,
                                 const UwbAnchorSet& anchors, const GyroSpec& gyro, const CameraSpec& camera,
                                 const TargetPose& target)
    : body_(body),
      anchors_(anchors),
      camera_(camera),
      target_(target),
      tuning_(tuning),
      gate_(tuning.gate_probability, tuning.underweight_probability, tuning.underweight_beta),
      smoother_(tuning.d_smoothing) {
    tf_.accel_noise_density = tuning.accel_noise_density;
    af_.gyro_noise_density = gyro.noise_density;
}

void TandemEstimator::initialize(const std::vector<RangeMeasurement>& ranges, const Vec3& guess,
                                 const Quaternion& q0) {
    tf_.x.setZero();
    tf_.x.head<3>() = multilaterate(ranges, anchors_, guess, tuning_.gn_iterations);
    reset_translational_covariance();
    recent_.assign(anchors_.anchors.size(), {});
    consecutive_rejections_.assign(anchors_.anchors.size(), 0);
    af_.q_ref = q0.normalized();
    af_.dtheta.setZero();
    af_.P = Mat3::Identity() * tuning_.init_attitude_sigma * tuning_.init_attitude_sigma;
}

void TandemEstimator::predict(const GyroMeasurement& gyro, const ControlInput& u, double dt) {
    omega_hat_ = gyro.rate;
    prox::predict(tf_, af_, gyro, u, body_, dt);
}

void TandemEstimator::reset_translational_covariance() {
    tf_.P.setZero();
    tf_.P.diagonal() << Vec3::Constant(tuning_.init_position_sigma * tuning_.init_position_sigma),
        Vec3::Constant(tuning_.init_velocity_sigma * tuning_.init_velocity_sigma);
}

bool TandemEstimator::try_reacquire() {
    std::vector<RangeMeasurement> ranges;
    for (const auto& hist : recent_) {
        if (hist.empty()) continue;
        std::vector<double> r;
        for (const RangeMeasurement& z : hist) r.push_back(z.range);
        std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
        RangeMeasurement m = hist.back();
        m.range = r[r.size() / 2];
        ranges.push_back(m);
    }
    if (ranges.size() < 3) return false;
    const Vec3 fix = multilaterate(ranges, anchors_, tf_.x.head<3>(), tuning_.gn_iterations);
    if (!fix.allFinite()) return false;
    // an outlier that survived the median shows up as a large residual; 1 cm covers motion over the history
    const double tolerance = std::sqrt(gate_.gate_threshold(1)) * anchors_.sigma + 0.01;
    for (const RangeMeasurement& z : ranges)
        if (std::abs((fix - anchors_.anchors[z.anchor]).norm() - z.range) > tolerance) return false;
    tf_.x.head<3>() = fix;
    reset_translational_covariance();
    ++reacquisitions_;
    return true;
}

RangeUpdateResult TandemEstimator::update_range(const RangeMeasurement& z) {
    const RangeUpdateResult res = prox::update_range(tf_, z, anchors_, gate_);
    if (z.anchor >= recent_.size()) return res;  // not initialised
    auto& hist = recent_[z.anchor];
    hist.push_back(z);
    if (hist.size() > kRangeHistory) hist.erase(hist.begin());
    int& streak = consecutive_rejections_[z.anchor];
    if (res.accepted) {
        smoother_.add(res.d2);
        streak = 0;
    } else if (!res.skipped && tuning_.reacquire_rejections > 0 && ++streak >= tuning_.reacquire_rejections) {
        // persistent rejection means the track itself is wrong, not the ranges
        if (try_reacquire()) std::fill(consecutive_rejections_.begin(), consecutive_rejections_.end(), 0);
    }
    return res;
}

FeatureUpdateResult TandemEstimator::update_features(const FeatureMeasurement& z) {
    const FeatureUpdateResult res = prox::update_features(tf_, af_, z, camera_, target_, body_, gate_);
    if (res.accepted) quaternion_reset(af_);
    return res;
}

EstimateReport TandemEstimator::report() const { return prox::report(tf_, af_, body_, smoother_, omega_hat_); }

}  // namespace prox
