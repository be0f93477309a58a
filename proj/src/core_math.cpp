#include "prox/core_math.hpp"

namespace prox {

Quaternion Quaternion::normalized() const {
    const double n = norm();
    return {w / n, v / n};
}

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
    Quaternion r(a.w * b.w - a.v.dot(b.v), a.w * b.v + b.w * a.v + a.v.cross(b.v));
    return r.normalized();
}

Quaternion quat_inverse(const Quaternion& q) { return {q.w, -q.v}; }

Mat3 quat_to_dcm(const Quaternion& q) {
    const double w = q.w, x = q.v.x(), y = q.v.y(), z = q.v.z();
    Mat3 d;
    d << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return d;
}

Quaternion dcm_to_quat(const Mat3& d) {
    // Shepperd's method: pivot on the largest of (trace, diagonal).
    const double tr = d.trace();
    Quaternion q;
    if (tr >= d(0, 0) && tr >= d(1, 1) && tr >= d(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + tr);
        q = {0.25 * s, (d(2, 1) - d(1, 2)) / s, (d(0, 2) - d(2, 0)) / s, (d(1, 0) - d(0, 1)) / s};
    } else if (d(0, 0) >= d(1, 1) && d(0, 0) >= d(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + d(0, 0) - d(1, 1) - d(2, 2));
        q = {(d(2, 1) - d(1, 2)) / s, 0.25 * s, (d(0, 1) + d(1, 0)) / s, (d(0, 2) + d(2, 0)) / s};
    } else if (d(1, 1) >= d(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + d(1, 1) - d(0, 0) - d(2, 2));
        q = {(d(0, 2) - d(2, 0)) / s, (d(0, 1) + d(1, 0)) / s, 0.25 * s, (d(1, 2) + d(2, 1)) / s};
    } else {
        const double s = 2.0 * std::sqrt(1.0 + d(2, 2) - d(0, 0) - d(1, 1));
        q = {(d(1, 0) - d(0, 1)) / s, (d(0, 2) + d(2, 0)) / s, (d(1, 2) + d(2, 1)) / s, 0.25 * s};
    }
    if (q.w < 0) q = -q;
    return q.normalized();
}

Quaternion error_quat(const Quaternion& q, const Quaternion& q_ref) {
    Quaternion e = quat_multiply(q, quat_inverse(q_ref));
    if (e.w < 0) e = -e;
    return e;
}

Quaternion small_angle_to_quat(const Vec3& dv) {
    const double angle = dv.norm();
    if (!(angle < M_PI)) throw DomainError("small_angle_to_quat: |dv| must be below pi");
    if (angle < 1e-12) return Quaternion(1.0, 0.5 * dv).normalized();
    const double half = 0.5 * angle;
    return {std::cos(half), (std::sin(half) / angle) * dv};
}

double rotation_angle(const Quaternion& q) {
    return 2.0 * std::atan2(q.v.norm(), std::abs(q.w));
}

Vec3 rotate(const Quaternion& q, const Vec3& v) {
    // v + 2w (u x v) + 2 u x (u x v)
    const Vec3 t = 2.0 * q.v.cross(v);
    return v + q.w * t + q.v.cross(t);
}

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return s;
}

Mat3 euler_xyz_to_dcm(const Vec3& a) {
    const Mat3 rx = Eigen::AngleAxisd(a.x(), Vec3::UnitX()).toRotationMatrix();
    const Mat3 ry = Eigen::AngleAxisd(a.y(), Vec3::UnitY()).toRotationMatrix();
    const Mat3 rz = Eigen::AngleAxisd(a.z(), Vec3::UnitZ()).toRotationMatrix();
    return rz * ry * rx;
}

Quaternion euler_xyz_to_quat(const Vec3& angles) { return dcm_to_quat(euler_xyz_to_dcm(angles)); }

}  // namespace prox
