#pragma once

#include <utility>

#include "prox/core_math.hpp"
#include "prox/estimator.hpp"

namespace prox {

struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AttitudeGains {
    double kp{0.02};           // N m per rad of small-angle error
    double kd{0.05};           // N m s / rad
    double torque_limit{0.01}; // N m per axis
};

/// Quaternion-error PD law, torque in the body frame, saturated per axis.
Vec3 attitude_control(const Quaternion& q_hat, const Quaternion& q_des, const Vec3& omega_hat,
                      const AttitudeGains& g);

struct LqrDesign {
    Eigen::MatrixXd A_d, B_d;  // plant, n x n and n x m
    Eigen::MatrixXd K;         // m x n state feedback
    Eigen::MatrixXd Ki;        // m x p integral feedback (p may be 0)
    Eigen::MatrixXd P;         // Riccati solution on the augmented plant
    Eigen::MatrixXd A_aug, B_aug;
    Eigen::MatrixXd B_pinv;    // feed-forward solve
    double dt{0.0};
    int iterations{0};
    double force_limit{0.2};
    double integral_band{0.05};  // m; an axis integrates only while unsaturated and inside this band

    /// Closed-loop matrix of the augmented plant.
    Eigen::MatrixXd closed_loop() const;
    double spectral_radius() const;
};

/// Steady-state discrete LQR with integral action on the first `Qi.rows()`
/// states. The Riccati recursion is iterated to a fixed point.
LqrDesign lqr_design(const Eigen::MatrixXd& A_d, const Eigen::MatrixXd& B_d, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qi, double dt, int max_iterations = 10000,
                     double tolerance = 1e-12);

/// Residual of the discrete algebraic Riccati equation at P (infinity norm).
double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

/// Zero-order-hold double integrator for a point mass, state [p; v] per axis block.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> translational_plant(double mass, double dt);

struct TranslationalSetpoint {
    Vec3 position{Vec3::Zero()};
    Vec3 velocity{Vec3::Zero()};
};

struct IntegralState {
    Vec3 value{Vec3::Zero()};
};

/// Force command in the mother-ship frame and the updated integral state.
/// Integration is frozen on any saturated axis and outside the integral band.and outside the integral band.
std::pair<Vec3, IntegralState> translational_control(const EstimateReport& est, const TranslationalSetpoint& sp,
                                                     const LqrDesign& design, const IntegralState& integ);

}  // namespace prox
