#include <doctest.h>

#include "prox/dynamics.hpp"

using namespace prox;

namespace {

RigidBodyParams params(const Vec3& inertia_diag, const Vec3& lever = Vec3::Zero()) {
    RigidBodyParams p;
    p.inertia = inertia_diag.asDiagonal();
    p.mothership_inertia = Vec3(40, 45, 50).asDiagonal();
    p.mass = 1.0;
    p.tag_lever_arm = lever;
    return p;
}

Vec3 angular_momentum_body(const TrueState& s, const RigidBodyParams& p) { return p.inertia * s.omega_b; }

// Reference-frame form of the rotational equation: the mother-ship inertia multiplies
// both sides and cancels, leaving d/dt(I_c w_c) = N_c with I_c = D I D^T.
struct RefFrameState {
    Quaternion q;
    Vec3 w_c;
};

RefFrameState ref_frame_step(const RefFrameState& s, const RigidBodyParams& p, double dt) {
    using V7 = Eigen::Matrix<double, 7, 1>;
    auto f = [&](const V7& x) {
        const Quaternion q = Quaternion(x(0), x.segment<3>(1)).normalized();
        const Vec3 w = x.segment<3>(4);
        const Mat3 d = quat_to_dcm(q);
        const Mat3 i_c = d * p.inertia * d.transpose();
        V7 dx;
        // q_dot = 1/2 [0, w_c] (x) q
        dx(0) = -0.5 * w.dot(x.segment<3>(1));
        dx.segment<3>(1) = 0.5 * (x(0) * w + w.cross(x.segment<3>(1)));
        dx.segment<3>(4) = i_c.ldlt().solve(-w.cross(i_c * w));
        return dx;
    };
    V7 x;
    x << s.q.w, s.q.v, s.w_c;
    const V7 y = rk4_step(f, x, dt);
    return {Quaternion(y(0), y.segment<3>(1)).normalized(), y.segment<3>(4)};
}

}  // namespace

TEST_CASE("angular_accel") {
    const RigidBodyParams p = params(Vec3(1, 2, 3));
    TrueState s;
    CHECK(angular_accel(s, Vec3::Zero(), p).isZero());
    s.omega_b = Vec3(0, 0.7, 0);
    CHECK(angular_accel(s, Vec3::Zero(), p).norm() < 1e-15);
    s.omega_b = Vec3(1, 1, 1);
    const Vec3 a = angular_accel(s, Vec3::Zero(), p);
    CHECK(a.x() == doctest::Approx(-1.0));
    CHECK(a.y() == doctest::Approx(1.0));
    CHECK(a.z() == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("relative_accel") {
    RigidBodyParams p = params(Vec3(1.6e-3, 1.8e-3, 2e-3), Vec3(0.05, 0.05, 0));
    TrueState s;
    ControlInput u;
    u.force = Vec3(0.1, -0.2, 0.05);
    CHECK((relative_accel(s, u, p) - u.force / p.mass).norm() < 1e-15);

    // constant spin about z with the arm perpendicular: centripetal term only
    s.omega_b = Vec3(0, 0, 2.0);
    s.q = euler_xyz_to_quat(Vec3(0, 0, 0.3));
    const Vec3 arm = quat_to_dcm(s.q) * p.tag_lever_arm;
    CHECK((relative_accel(s, ControlInput{}, p) - (-4.0 * arm)).norm() < 1e-12);

    p.tag_lever_arm.setZero();
    s.omega_b = Vec3(0.3, -0.1, 0.2);
    CHECK((relative_accel(s, u, p) - u.force).norm() < 1e-15);
}

TEST_CASE("sensor_point_state") {
    RigidBodyParams p = params(Vec3(1, 1, 1));
    TrueState s;
    s.rho = Vec3(0.3, 1.0, -0.2);
    s.rho_dot = Vec3(0.01, 0.0, 0.02);
    auto [pos0, vel0] = sensor_point_state(s, p);
    CHECK(pos0 == s.rho);
    CHECK(vel0 == s.rho_dot);

    p.tag_lever_arm = Vec3(0.05, 0.05, 0);
    auto [pos1, vel1] = sensor_point_state(s, p);
    CHECK((pos1 - (s.rho + Vec3(0.05, 0.05, 0))).norm() < 1e-15);

    s.rho_dot.setZero();
    s.omega_b = Vec3(0, 0, 1);
    auto [pos2, vel2] = sensor_point_state(s, p);
    CHECK((vel2 - Vec3(-0.05, 0.05, 0)).norm() < 1e-15);
}

TEST_CASE("propagate_truth basics") {
    const RigidBodyParams p = params(Vec3(1.6e-3, 1.8e-3, 2e-3));
    TrueState s;
    s.rho_dot = Vec3(0.1, 0, 0);
    const TrueState n = propagate_truth(s, ControlInput{}, p, 0.1);
    CHECK((n.rho - Vec3(0.01, 0, 0)).norm() < 1e-15);
    CHECK_THROWS_AS(propagate_truth(s, ControlInput{}, p, 0.0), DomainError);
    CHECK_THROWS_AS(propagate_truth(s, ControlInput{}, p, 0.2), DomainError);
    ControlInput bad;
    bad.force.x() = std::nan("");
    CHECK_THROWS_AS(propagate_truth(s, bad, p, 0.01), PropagationError);

    // a held disturbance acts like extra force per unit mass
    ControlInput u;
    u.force = Vec3(0.02, 0, 0);
    const TrueState a = propagate_truth(s, u, p, 0.01);
    const TrueState b = propagate_truth(s, ControlInput{}, p, 0.01, Vec3(0.02, 0, 0));
    CHECK((a.rho - b.rho).norm() < 1e-15);
}

TEST_CASE("torque-free principal spin keeps its rate") {
    const RigidBodyParams p = params(Vec3(1.6e-3, 1.8e-3, 2e-3));
    TrueState s;
    s.omega_b = Vec3(0, 0, 0.8);
    for (int i = 0; i < 1000; ++i) s = propagate_truth(s, ControlInput{}, p, 0.01);
    CHECK(std::abs(s.omega_b.norm() - 0.8) < 1e-9);
    CHECK(std::abs(s.q.norm() - 1.0) < 1e-12);
}

TEST_CASE("torque-free asymmetric body conserves energy and momentum") {
    const RigidBodyParams p = params(Vec3(1.0, 2.0, 3.0));
    TrueState s;
    s.omega_b = Vec3(0.4, 0.3, -0.5);
    s.q = euler_xyz_to_quat(Vec3(0.2, -0.1, 0.4));
    const double e0 = rotational_kinetic_energy(s, p);
    const double h0 = angular_momentum_body(s, p).norm();
    const Vec3 h_ref0 = quat_to_dcm(s.q) * angular_momentum_body(s, p);
    for (int i = 0; i < 1000; ++i) s = propagate_truth(s, ControlInput{}, p, 0.01);
    CHECK(std::abs(rotational_kinetic_energy(s, p) - e0) < 1e-6);
    CHECK(std::abs(angular_momentum_body(s, p).norm() - h0) < 1e-6);
    // inertial angular momentum vector is fixed too
    CHECK((quat_to_dcm(s.q) * angular_momentum_body(s, p) - h_ref0).norm() < 1e-6);
}

TEST_CASE("reference-frame and body-frame rotational forms agree") {
    const RigidBodyParams p = params(Vec3(1.6e-3, 1.8e-3, 2e-3));
    TrueState s;
    s.omega_b = Vec3(0.3, -0.6, 0.2);
    s.q = euler_xyz_to_quat(Vec3(-0.5, 0.2, 1.0));
    RefFrameState r{s.q, quat_to_dcm(s.q) * s.omega_b};
    for (int i = 0; i < 1000; ++i) {
        s = propagate_truth(s, ControlInput{}, p, 0.01);
        r = ref_frame_step(r, p, 0.01);
    }
    CHECK((quat_to_dcm(s.q) * s.omega_b - r.w_c).norm() < 1e-6);
    CHECK((quat_to_dcm(s.q) - quat_to_dcm(r.q)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("step halving converges at fourth order") {
    const RigidBodyParams p = params(Vec3(1.0, 2.0, 3.0), Vec3(0.05, 0.05, 0));
    TrueState s0;
    s0.omega_b = Vec3(1.0, 0.5, -0.8);
    ControlInput u;
    u.torque = Vec3(0.1, -0.05, 0.02);
    auto diff = [&](double dt) {
        const TrueState one = propagate_truth(s0, u, p, dt);
        const TrueState two = propagate_truth(propagate_truth(s0, u, p, dt / 2), u, p, dt / 2);
        return (one.omega_b - two.omega_b).norm();
    };
    const double ratio = diff(0.1) / diff(0.05);
    CHECK(ratio > 16.0);
}

TEST_CASE("parameter validation") {
    RigidBodyParams p = params(Vec3(1, 1, 1));
    CHECK_NOTHROW(p.validate());
    p.mass = 0.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = params(Vec3(1, -1, 1));
    CHECK_THROWS_AS(p.validate(), DomainError);
}
