#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "prox/control.hpp"

using namespace prox;

namespace {

LqrDesign default_design(double dt = 0.02) {
    const auto [A, B] = translational_plant(1.0, dt);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(6, 6);
    Q.topLeftCorner(3, 3) = 100.0 * Eigen::MatrixXd::Identity(3, 3);
    Q.bottomRightCorner(3, 3) = 10.0 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd R = 50.0 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd Qi = Eigen::MatrixXd::Identity(3, 3);
    LqrDesign d = lqr_design(A, B, Q, R, Qi, dt);
    d.force_limit = 0.2;
    return d;
}

struct Trace {
    double final_error{0.0};
    double max_error_after{0.0};  // worst |x| over the last portion
    double peak_overshoot{0.0};   // most negative excursion along the initial offset axis
    bool finite{true};
};

// Exact discrete double integrator driven by the controller; `clamp` false
// integrates the error even while saturated.
Trace simulate(const LqrDesign& d, const Vec3& x0, const Vec3& disturbance, double duration, bool clamp = true,
               double tail_from = 0.0) {
    Eigen::Matrix<double, 6, 1> x;
    x << x0, Vec3::Zero();
    IntegralState integ;
    Trace tr;
    const int steps = static_cast<int>(std::lround(duration / d.dt));
    for (int k = 0; k < steps; ++k) {
        EstimateReport est;
        est.position = x.head<3>();
        est.velocity = x.tail<3>();
        auto [force, next] = translational_control(est, {}, d, integ);
        if (!clamp) {
            next = integ;
            next.value += d.dt * est.position;
        }
        integ = next;
        x = d.A_d * x + d.B_d * (force + disturbance);
        tr.finite = tr.finite && x.allFinite();
        const double t = (k + 1) * d.dt;
        if (t >= tail_from) tr.max_error_after = std::max(tr.max_error_after, x.head<3>().norm());
        tr.peak_overshoot = std::min(tr.peak_overshoot, x(0));
    }
    tr.final_error = x.head<3>().norm();
    return tr;
}

}  // namespace

TEST_CASE("attitude control examples") {
    AttitudeGains g;
    g.kp = 0.01;
    const Quaternion q_des = Quaternion::identity();

    CHECK(attitude_control(q_des, q_des, Vec3::Zero(), g).isZero(0.0));

    const Quaternion q_hat = small_angle_to_quat(Vec3(0, 0, 0.1));
    const Vec3 tau = attitude_control(q_hat, q_des, Vec3::Zero(), g);
    CHECK(tau.x() == doctest::Approx(0.0));
    CHECK(tau.y() == doctest::Approx(0.0));
    CHECK(tau.z() == doctest::Approx(-0.01 * std::sin(0.05) * 2.0).epsilon(1e-12));

    // damping opposes the rate
    const Vec3 damp = attitude_control(q_des, q_des, Vec3(0.1, -0.1, 0.0), g);
    CHECK(damp.x() < 0.0);
    CHECK(damp.y() > 0.0);
}

TEST_CASE("attitude control is invariant under quaternion sign flips") {
    const AttitudeGains g;
    const Quaternion q_des = euler_xyz_to_quat(Vec3(0.2, -0.4, 1.0));
    const Vec3 w(0.01, 0.02, -0.03);
    for (double angle : {0.1, 1.0, 2.5, 3.1}) {
        const Quaternion q_hat = quat_multiply(q_des, small_angle_to_quat(Vec3(0.3, -0.5, 0.8).normalized() * angle));
        const Vec3 ref = attitude_control(q_hat, q_des, w, g);
        CHECK((attitude_control(-q_hat, q_des, w, g) - ref).norm() < 1e-15);
        CHECK((attitude_control(q_hat, -q_des, w, g) - ref).norm() < 1e-15);
        CHECK((attitude_control(-q_hat, -q_des, w, g) - ref).norm() < 1e-15);
    }
}

TEST_CASE("attitude torque saturates per axis") {
    AttitudeGains g;
    g.kp = 10.0;
    g.torque_limit = 0.01;
    const Quaternion q_hat = small_angle_to_quat(Vec3(1.0, -1.0, 0.001));
    const Vec3 tau = attitude_control(q_hat, Quaternion::identity(), Vec3(0, 0, 5.0), g);
    CHECK(tau.x() == -0.01);
    CHECK(tau.y() == 0.01);
    CHECK(tau.z() == -0.01);
}

TEST_CASE("scalar double integrator LQR") {
    const double dt = 0.02;
    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 1, dt, 0, 1;
    B << 0.5 * dt * dt, dt;
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2), R = Eigen::MatrixXd::Identity(1, 1);
    const LqrDesign d = lqr_design(A, B, Q, R, Eigen::MatrixXd(0, 0), dt);
    CHECK(riccati_residual(A, B, Q, R, d.P) < 1e-9);
    CHECK(d.Ki.size() == 0);
    const Eigen::MatrixXd cl = A - B * d.K;
    CHECK(cl.eigenvalues().cwiseAbs().maxCoeff() < 1.0);

    const LqrDesign lazy = lqr_design(A, B, Q, 1e9 * R, Eigen::MatrixXd(0, 0), dt, 200000);
    CHECK(lazy.K.norm() < 1e-2 * d.K.norm());
    // gains shrink like R^(-1/4) for the double integrator
    const LqrDesign lazier = lqr_design(A, B, Q, 1e13 * R, Eigen::MatrixXd(0, 0), dt, 2000000);
    CHECK(lazier.K.norm() < 0.2 * lazy.K.norm());
}

TEST_CASE("translational design with integral action") {
    const LqrDesign d = default_design();
    Eigen::MatrixXd q_aug = Eigen::MatrixXd::Zero(9, 9);
    q_aug.topLeftCorner(3, 3).setIdentity();
    q_aug.block(3, 3, 3, 3) = 100.0 * Eigen::MatrixXd::Identity(3, 3);
    q_aug.bottomRightCorner(3, 3) = 10.0 * Eigen::MatrixXd::Identity(3, 3);
    const double res = riccati_residual(d.A_aug, d.B_aug, q_aug, 50.0 * Eigen::MatrixXd::Identity(3, 3), d.P);
    CHECK(res < 1e-9 * std::max(1.0, d.P.cwiseAbs().maxCoeff()));
    CHECK(d.spectral_radius() < 1.0);
    const Eigen::MatrixXd cl = d.A_d - d.B_d * d.K;
    CHECK(cl.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("design errors") {
    const auto [A, B] = translational_plant(1.0, 0.02);
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(6, 6);
    CHECK_THROWS_AS(lqr_design(A, B, Q, -Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd(0, 0), 0.02), DesignError);
    CHECK_THROWS_AS(lqr_design(A, B, Q.topLeftCorner(3, 3), Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd(0, 0),
                               0.02),
                    DesignError);
    // uncontrollable unstable plant never reaches a fixed point
    Eigen::MatrixXd Au(1, 1), Bu(1, 1);
    Au << 2.0;
    Bu << 0.0;
    CHECK_THROWS_AS(lqr_design(Au, Bu, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                               Eigen::MatrixXd(0, 0), 0.02, 100),
                    DesignError);
}

TEST_CASE("translational control at the setpoint") {
    const LqrDesign d = default_design();
    EstimateReport est;
    est.position = Vec3(0.3, 1.2, -0.4);
    const TranslationalSetpoint sp{est.position, Vec3::Zero()};
    const auto [force, integ] = translational_control(est, sp, d, IntegralState{});
    CHECK(force.isZero(0.0));
    CHECK(integ.value.isZero(0.0));
}

TEST_CASE("force respects the saturation bound exactly") {
    const LqrDesign d = default_design();
    EstimateReport est;
    est.position = Vec3(5.0, -5.0, 0.001);
    IntegralState integ;
    integ.value = Vec3(0.0, 0.0, 0.5);
    const auto [force, next] = translational_control(est, {}, d, integ);
    CHECK(force.x() == -0.2);
    CHECK(force.y() == 0.2);
    CHECK(std::abs(force.z()) <= 0.2);
    // saturated axes do not integrate
    CHECK(next.value.x() == 0.0);
    CHECK(next.value.y() == 0.0);
}

TEST_CASE("regulation from half a metre") {
    const LqrDesign d = default_design();
    const Trace tr = simulate(d, Vec3(0.5, 0.0, 0.0), Vec3::Zero(), 300.0, true, 30.0);
    CHECK(tr.finite);
    CHECK(tr.max_error_after < 1e-3);
    CHECK(tr.final_error < 1e-6);
}

TEST_CASE("integral action removes a constant disturbance") {
    const LqrDesign d = default_design();
    const Vec3 dist(0.01, -0.005, 0.002);
    const Trace tr = simulate(d, Vec3::Zero(), dist, 60.0);
    CHECK(tr.final_error < 1e-4);

    LqrDesign no_integral = d;
    no_integral.Ki.setZero();
    const Trace biased = simulate(no_integral, Vec3::Zero(), dist, 60.0);
    CHECK(biased.final_error > 10 * tr.final_error);
}

TEST_CASE("anti-windup limits overshoot") {
    const LqrDesign d = default_design();
    const Trace clamped = simulate(d, Vec3(2.0, 0, 0), Vec3::Zero(), 200.0, true);
    const Trace wound = simulate(d, Vec3(2.0, 0, 0), Vec3::Zero(), 200.0, false);
    CHECK(clamped.finite);
    CHECK(std::abs(clamped.peak_overshoot) < std::abs(wound.peak_overshoot));
}

TEST_CASE("integral only accumulates inside its band") {
    LqrDesign d = default_design();
    d.integral_band = 0.05;
    EstimateReport est;
    est.position = Vec3(0.06, 0.04, 0.0);
    const auto [force, next] = translational_control(est, {}, d, IntegralState{});
    CHECK(std::abs(force.x()) < d.force_limit);
    CHECK(next.value.x() == 0.0);
    CHECK(next.value.y() == doctest::Approx(d.dt * 0.04));
}
