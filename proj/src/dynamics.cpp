#include "prox/dynamics.hpp"

#include <Eigen/Eigenvalues>

namespace prox {

namespace {

bool is_spd(const Mat3& m) {
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    return es.eigenvalues().minCoeff() > 0.0;
}

using JointState = Eigen::Matrix<double, 13, 1>;

JointState pack(const TrueState& s) {
    JointState x;
    x << s.rho, s.rho_dot, s.q.w, s.q.v, s.omega_b;
    return x;
}

TrueState unpack(const JointState& x) {
    TrueState s;
    s.rho = x.segment<3>(0);
    s.rho_dot = x.segment<3>(3);
    s.q = Quaternion(x(6), x.segment<3>(7));
    s.omega_b = x.segment<3>(10);
    return s;
}

}  // namespace

void RigidBodyParams::validate() const {
    if (!(mass > 0.0)) throw DomainError("rigid body: mass must be positive");
    if (!is_spd(inertia)) throw DomainError("rigid body: chaser inertia must be SPD");
    if (!is_spd(mothership_inertia)) throw DomainError("rigid body: mother-ship inertia must be SPD");
}

Vec3 angular_accel(const TrueState& state, const Vec3& torque, const RigidBodyParams& p) {
    const Vec3& w = state.omega_b;
    return p.inertia.ldlt().solve(torque - w.cross(p.inertia * w));
}

Vec3 relative_accel(const TrueState& state, const ControlInput& u, const RigidBodyParams& p) {
    const Mat3 d = quat_to_dcm(state.q);
    const Vec3 arm = d * p.tag_lever_arm;
    const Vec3 w = d * state.omega_b;
    const Vec3 w_dot = d * angular_accel(state, u.torque, p);
    return u.force / p.mass + w_dot.cross(arm) + w.cross(w.cross(arm));
}

std::pair<Vec3, Vec3> sensor_point_state(const TrueState& state, const RigidBodyParams& p) {
    const Mat3 d = quat_to_dcm(state.q);
    const Vec3 arm = d * p.tag_lever_arm;
    return {state.rho + arm, state.rho_dot + (d * state.omega_b).cross(arm)};
}

TrueState propagate_truth(const TrueState& state, const ControlInput& u, const RigidBodyParams& p, double dt,
                          const Vec3& disturbance_accel) {
    if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("propagate_truth: dt must lie in (0, 0.1]");
    const Vec3 lin_acc = u.force / p.mass + disturbance_accel;
    const Mat3 i_inv = p.inertia.inverse();
    auto f = [&](const JointState& x) {
        JointState dx;
        const Quaternion q(x(6), x.segment<3>(7));
        const Vec3 w = x.segment<3>(10);
        dx.segment<3>(0) = x.segment<3>(3);
        dx.segment<3>(3) = lin_acc;
        // q_dot = 1/2 q (x) [0, w], left unnormalised inside the stages
        dx(6) = -0.5 * q.v.dot(w);
        dx.segment<3>(7) = 0.5 * (q.w * w + q.v.cross(w));
        dx.segment<3>(10) = i_inv * (u.torque - w.cross(p.inertia * w));
        return dx;
    };
    TrueState out = unpack(rk4_step(f, pack(state), dt));
    out.q = out.q.normalized();
    if (!out.finite()) throw PropagationError("propagate_truth: non-finite state");
    return out;
}

double rotational_kinetic_energy(const TrueState& state, const RigidBodyParams& p) {
    return 0.5 * state.omega_b.dot(p.inertia * state.omega_b);
}

}  // namespace prox
