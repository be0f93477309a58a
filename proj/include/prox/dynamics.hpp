#pragma once

#include <utility>

#include "prox/core_math.hpp"

namespace prox {

struct RigidBodyParams {
    Mat3 mothership_inertia{Mat3::Identity() * 100.0};  // kg m^2; cancels out of the motion
    Mat3 inertia{Mat3::Identity()};                     // chaser, kg m^2
    double mass{1.0};                                   // kg
    Vec3 tag_lever_arm{Vec3::Zero()};                   // UWB tag in body frame, m

    /// Throws DomainError unless both inertias are SPD and mass > 0.
    void validate() const;
    Mat3 inertia_inverse() const { return inertia.inverse(); }
};

/// Ground truth. Position/velocity of the centre of mass in the mother-ship
/// frame, attitude body->mother-ship, body rates in the body frame.
struct TrueState {
    Vec3 rho{Vec3::Zero()};
    Vec3 rho_dot{Vec3::Zero()};
    Quaternion q{};
    Vec3 omega_b{Vec3::Zero()};

    bool finite() const {
        return rho.allFinite() && rho_dot.allFinite() && q.v.allFinite() && std::isfinite(q.w) &&
               omega_b.allFinite();
    }
};

struct ControlInput {
    Vec3 force{Vec3::Zero()};   // mother-ship frame, N
    Vec3 torque{Vec3::Zero()};  // body frame, N m
};

/// Body-frame Euler equation.
Vec3 angular_accel(const TrueState& state, const Vec3& torque, const RigidBodyParams& p);

/// Acceleration of the UWB tag point in the mother-ship frame.
Vec3 relative_accel(const TrueState& state, const ControlInput& u, const RigidBodyParams& p);

/// (position, velocity) of the UWB tag point in the mother-ship frame.
std::pair<Vec3, Vec3> sensor_point_state(const TrueState& state, const RigidBodyParams& p);

/// RK4 on the joint translational/rotational state; dt in (0, 0.1].
/// `disturbance_accel` is an extra centre-of-mass acceleration held over the step.
TrueState propagate_truth(const TrueState& state, const ControlInput& u, const RigidBodyParams& p, double dt,
                          const Vec3& disturbance_accel = Vec3::Zero());

double rotational_kinetic_energy(const TrueState& state, const RigidBodyParams& p);

}  // namespace prox
