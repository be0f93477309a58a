#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace prox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct PropagationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Hamilton quaternion, scalar first. Attitude quaternions map body vectors
/// into the reference frame: v_ref = q * v_body * q^-1.
struct Quaternion {
    double w{1.0};
    Vec3 v{Vec3::Zero()};

    Quaternion() = default;
    Quaternion(double w_, double x, double y, double z) : w(w_), v(x, y, z) {}
    Quaternion(double w_, const Vec3& v_) : w(w_), v(v_) {}

    static Quaternion identity() { return {}; }

    double norm() const { return std::sqrt(w * w + v.squaredNorm()); }
    Quaternion normalized() const;
    Quaternion operator-() const { return {-w, -v}; }
};

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);
Quaternion quat_inverse(const Quaternion& q);
Mat3 quat_to_dcm(const Quaternion& q);
Quaternion dcm_to_quat(const Mat3& d);

/// q * q_ref^-1 with the scalar part forced non-negative.
Quaternion error_quat(const Quaternion& q, const Quaternion& q_ref);

/// Exponential map of a rotation vector. Throws DomainError for |dv| >= pi.
Quaternion small_angle_to_quat(const Vec3& dv);

/// Rotation angle of q in [0, pi].
double rotation_angle(const Quaternion& q);

Vec3 rotate(const Quaternion& q, const Vec3& v);

Mat3 skew(const Vec3& v);

/// D = Rz(z) * Ry(y) * Rx(x), angles in radians.
Mat3 euler_xyz_to_dcm(const Vec3& angles);
Quaternion euler_xyz_to_quat(const Vec3& angles);

constexpr double deg2rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }

/// Classical fourth-order Runge-Kutta step. `State` needs vector-space
/// arithmetic and `allFinite()`.
template <typename State, typename Deriv>
State rk4_step(Deriv&& f, const State& x, double dt) {
    if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
    const State k1 = f(x);
    const State k2 = f(State(x + 0.5 * dt * k1));
    const State k3 = f(State(x + 0.5 * dt * k2));
    const State k4 = f(State(x + dt * k3));
    if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite())
        throw PropagationError("rk4_step: non-finite derivative");
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace prox
