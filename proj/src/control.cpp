#include "prox/control.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>

namespace prox {

Vec3 attitude_control(const Quaternion& q_hat, const Quaternion& q_des, const Vec3& omega_hat,
                      const AttitudeGains& g) {
    const Quaternion e = error_quat(q_hat, q_des);
    const Vec3 e_body = rotate(quat_inverse(q_hat), e.v);
    const Vec3 tau = -2.0 * g.kp * e_body - g.kd * omega_hat;
    return tau.cwiseMax(-g.torque_limit).cwiseMin(g.torque_limit);
}

Eigen::MatrixXd LqrDesign::closed_loop() const {
    Eigen::MatrixXd k_aug(K.rows(), Ki.cols() + K.cols());
    k_aug << Ki, K;
    return A_aug - B_aug * k_aug;
}

double LqrDesign::spectral_radius() const {
    return closed_loop().eigenvalues().cwiseAbs().maxCoeff();
}

double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd btpa = B.transpose() * P * A;
    const Eigen::MatrixXd next =
        Q + A.transpose() * P * A - btpa.transpose() * (R + B.transpose() * P * B).ldlt().solve(btpa);
    return (next - P).cwiseAbs().maxCoeff();
}

LqrDesign lqr_design(const Eigen::MatrixXd& A_d, const Eigen::MatrixXd& B_d, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qi, double dt, int max_iterations,
                     double tolerance) {
    const Eigen::Index n = A_d.rows(), m = B_d.cols(), p = Qi.rows();
    if (A_d.cols() != n || B_d.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m ||
        Qi.cols() != p || p > n)
        throw DesignError("lqr_design: inconsistent matrix dimensions");
    if (p > 0 && !(dt > 0.0)) throw DesignError("lqr_design: integral action needs dt > 0");
    if (R.ldlt().vectorD().minCoeff() <= 0.0) throw DesignError("lqr_design: R must be positive definite");

    LqrDesign d;
    d.A_d = A_d;
    d.B_d = B_d;
    d.dt = dt;
    d.B_pinv = B_d.completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::Index na = n + p;
    d.A_aug = Eigen::MatrixXd::Zero(na, na);
    d.A_aug.topLeftCorner(p, p).setIdentity();
    d.A_aug.block(0, p, p, p) = dt * Eigen::MatrixXd::Identity(p, p);
    d.A_aug.bottomRightCorner(n, n) = A_d;
    d.B_aug = Eigen::MatrixXd::Zero(na, m);
    d.B_aug.bottomRows(n) = B_d;
    Eigen::MatrixXd q_aug = Eigen::MatrixXd::Zero(na, na);
    q_aug.topLeftCorner(p, p) = Qi;
    q_aug.bottomRightCorner(n, n) = Q;

    const Eigen::MatrixXd& A = d.A_aug;
    const Eigen::MatrixXd& B = d.B_aug;
    Eigen::MatrixXd P = q_aug;
    double delta = 0.0;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const Eigen::MatrixXd btpa = B.transpose() * P * A;
        Eigen::MatrixXd next =
            q_aug + A.transpose() * P * A - btpa.transpose() * (R + B.transpose() * P * B).ldlt().solve(btpa);
        next = 0.5 * (next + next.transpose());
        delta = (next - P).cwiseAbs().maxCoeff();
        P = std::move(next);
        // absolute test, scaled so that large cost weights do not sit below double precision
        if (delta < tolerance * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
    }
    if (it == max_iterations || !P.allFinite()) {
        std::ostringstream msg;
        msg << "lqr_design: Riccati recursion did not converge after " << it << " iterations (last step " << delta
            << ")";
        throw DesignError(msg.str());
    }
    d.P = P;
    d.iterations = it + 1;
    const Eigen::MatrixXd k_aug = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    d.Ki = k_aug.leftCols(p);
    d.K = k_aug.rightCols(n);
    return d;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> translational_plant(double mass, double dt) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(6, 6);
    A.topRightCorner(3, 3) = dt * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd B(6, 3);
    B << (0.5 * dt * dt / mass) * Eigen::MatrixXd::Identity(3, 3), (dt / mass) * Eigen::MatrixXd::Identity(3, 3);
    return {A, B};
}

std::pair<Vec3, IntegralState> translational_control(const EstimateReport& est, const TranslationalSetpoint& sp,
                                                     const LqrDesign& design, const IntegralState& integ) {
    Eigen::Matrix<double, 6, 1> e;
    e << est.position - sp.position, est.velocity - sp.velocity;

    // Feed-forward: the input that carries the reference one step along the plant.
    Eigen::Matrix<double, 6, 1> x_ref, x_ref_next;
    x_ref << sp.position, sp.velocity;
    x_ref_next << sp.position + design.dt * sp.velocity, sp.velocity;
    const Eigen::VectorXd u_ff = design.B_pinv * (x_ref_next - design.A_d * x_ref);

    const Vec3 raw = -design.K * e - design.Ki * integ.value + u_ff;
    const Vec3 force = raw.cwiseMax(-design.force_limit).cwiseMin(design.force_limit);

    IntegralState next = integ;
    for (int i = 0; i < 3; ++i)
        if (raw(i) == force(i) && std::abs(e(i)) <= design.integral_band) next.value(i) += design.dt * e(i);
    return {force, next};
}

}  // namespace prox
